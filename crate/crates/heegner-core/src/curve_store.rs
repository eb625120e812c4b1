//! Curve-record ingestion and cached L-series coefficient tables.
//!
//! Curve files are whitespace-separated text, one record per line:
//! `label a1 a2 a3 a4 a6 conductor rank (x:y:z)|- torsion_order sha|-`
//! with `-` marking absent fields. Lines that are blank or start with `#`
//! are skipped.

use std::fs;
use std::path::Path;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::ec_arith::{self, RationalPoint};
use crate::error::Error;
use crate::Result;

/// Minimal Weierstrass model `y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6`
/// with its arithmetic metadata.
#[derive(Debug, Clone)]
pub struct CurveRecord {
    pub label: String,
    a: [i64; 5],
    pub conductor: u64,
    pub rank: u32,
    pub generator: Option<RationalPoint>,
    pub torsion_order: u32,
    pub sha_analytic: Option<u64>,
    b: [i128; 4],
    c4: i128,
    c6: i128,
    disc: i128,
}

impl CurveRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: &str,
        a: [i64; 5],
        conductor: u64,
        rank: u32,
        generator: Option<RationalPoint>,
        torsion_order: u32,
        sha_analytic: Option<u64>,
    ) -> Result<Self> {
        let [a1, a2, a3, a4, a6] = a.map(i128::from);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = (b2 * b6 - b4 * b4) / 4;
        let c4 = b2 * b2 - 24 * b4;
        let c6 = -b2.pow(3) + 36 * b2 * b4 - 216 * b6;
        let disc = -b2 * b2 * b8 - 8 * b4.pow(3) - 27 * b6 * b6 + 9 * b2 * b4 * b6;
        debug_assert_eq!(1728 * disc, c4.pow(3) - c6 * c6);
        if disc == 0 {
            return Err(Error::Validation(format!(
                "{label}: singular model, discriminant is zero"
            )));
        }
        if conductor == 0 {
            return Err(Error::Validation(format!("{label}: conductor must be positive")));
        }
        if torsion_order == 0 {
            return Err(Error::Validation(format!("{label}: torsion order must be positive")));
        }
        if sha_analytic == Some(0) {
            return Err(Error::Validation(format!("{label}: analytic Sha must be positive")));
        }
        let rec = CurveRecord {
            label: label.to_string(),
            a,
            conductor,
            rank,
            generator,
            torsion_order,
            sha_analytic,
            b: [b2, b4, b6, b8],
            c4,
            c6,
            disc,
        };
        if let Some(g) = &rec.generator {
            if !ec_arith::is_on_curve(g, &rec) {
                return Err(Error::Validation(format!(
                    "{label}: generator does not satisfy the curve equation"
                )));
            }
            if g.is_infinity() || ec_arith::has_finite_order(g, &rec) {
                return Err(Error::Validation(format!(
                    "{label}: generator is a torsion point"
                )));
            }
        }
        Ok(rec)
    }

    pub fn a1(&self) -> i64 { self.a[0] }
    pub fn a2(&self) -> i64 { self.a[1] }
    pub fn a3(&self) -> i64 { self.a[2] }
    pub fn a4(&self) -> i64 { self.a[3] }
    pub fn a6(&self) -> i64 { self.a[4] }
    pub fn b2(&self) -> i128 { self.b[0] }
    pub fn b4(&self) -> i128 { self.b[1] }
    pub fn b6(&self) -> i128 { self.b[2] }
    pub fn b8(&self) -> i128 { self.b[3] }
    pub fn c4(&self) -> i128 { self.c4 }
    pub fn c6(&self) -> i128 { self.c6 }

    /// Discriminant of the stored model.
    pub fn discriminant(&self) -> i128 {
        self.disc
    }

    /// Coefficients as exact rationals (a1, a2, a3, a4, a6).
    pub fn a_rationals(&self) -> [Rational; 5] {
        self.a.map(Rational::from)
    }
}

/// Truncated L-series coefficient table a_E(1..M) for one curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientCache {
    pub label: String,
    an: Vec<i64>,
}

impl CoefficientCache {
    /// Wrap coefficients a(1..=M); index 0 of `an_one_based` is ignored.
    pub fn from_one_based(label: &str, an_one_based: Vec<i64>) -> Result<Self> {
        if an_one_based.len() < 2 || an_one_based[1] != 1 {
            return Err(Error::Validation(format!(
                "{label}: coefficient table must start with a(1) = 1"
            )));
        }
        Ok(CoefficientCache { label: label.to_string(), an: an_one_based })
    }

    /// Truncation length M.
    pub fn m(&self) -> u64 {
        (self.an.len() - 1) as u64
    }

    /// a_E(n) for 1 ≤ n ≤ M.
    pub fn get(&self, n: u64) -> i64 {
        self.an[n as usize]
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.an[1..]
    }
}

fn parse_int<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse::<T>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what}: {tok:?}"),
    })
}

fn parse_point(tok: &str, line: usize) -> Result<Option<RationalPoint>> {
    if tok == "-" {
        return Ok(None);
    }
    let inner = tok
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("point must look like (x:y:z), got {tok:?}"),
        })?;
    let parts: Vec<&str> = inner.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse {
            line,
            msg: format!("point needs three coordinates, got {tok:?}"),
        });
    }
    let coords: Vec<Integer> = parts
        .iter()
        .map(|s| {
            s.parse::<Integer>().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid point coordinate {s:?}"),
            })
        })
        .collect::<Result<_>>()?;
    let (x, y, z) = (&coords[0], &coords[1], &coords[2]);
    if *z == 0 {
        if *x == 0 && *y != 0 {
            return Ok(Some(RationalPoint::Infinity));
        }
        return Err(Error::Parse {
            line,
            msg: "point at infinity must be (0:y:0) with y nonzero".into(),
        });
    }
    Ok(Some(RationalPoint::affine(
        Rational::from((x.clone(), z.clone())),
        Rational::from((y.clone(), z.clone())),
    )))
}

/// Parse and validate a curve file; every record passes the CurveRecord
/// invariants and labels are unique.
pub fn parse_curve_file(path: &Path) -> Result<Vec<CurveRecord>> {
    let text = fs::read_to_string(path)?;
    let mut out: Vec<CurveRecord> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = trimmed.split_whitespace().collect();
        if tok.len() != 11 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 11 fields, got {}", tok.len()),
            });
        }
        let label = tok[0];
        if out.iter().any(|r| r.label == label) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate label {label:?}"),
            });
        }
        let mut a = [0i64; 5];
        for (slot, (t, name)) in a.iter_mut().zip(
            tok[1..6]
                .iter()
                .zip(["a1", "a2", "a3", "a4", "a6"]),
        ) {
            *slot = parse_int(t, line, name)?;
        }
        let conductor: u64 = parse_int(tok[6], line, "conductor")?;
        let rank: u32 = parse_int(tok[7], line, "rank")?;
        let generator = parse_point(tok[8], line)?;
        let torsion: u32 = parse_int(tok[9], line, "torsion order")?;
        let sha = if tok[10] == "-" {
            None
        } else {
            Some(parse_int::<u64>(tok[10], line, "sha")?)
        };
        out.push(CurveRecord::new(
            label, a, conductor, rank, generator, torsion, sha,
        )?);
    }
    Ok(out)
}

const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    label: String,
    m: u64,
    checksum: u64,
    coefficients: Vec<i64>,
}

fn fnv1a(label: &str, coeffs: &[i64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    };
    for b in label.bytes() {
        eat(b);
    }
    for c in coeffs {
        for b in c.to_le_bytes() {
            eat(b);
        }
    }
    h
}

fn cache_path(dir: &Path, label: &str) -> std::path::PathBuf {
    dir.join(format!("{label}.an.json"))
}

/// Persist a coefficient table under `dir` with an atomic replace.
pub fn store_cache(cache: &CoefficientCache, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let body = CacheFile {
        version: CACHE_VERSION,
        label: cache.label.clone(),
        m: cache.m(),
        checksum: fnv1a(&cache.label, cache.coefficients()),
        coefficients: cache.coefficients().to_vec(),
    };
    let path = cache_path(dir, &cache.label);
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(&body).expect("cache serializes"))?;
    fs::rename(&tmp, &path)?;
    Ok(())
}

/// Load a stored table with at least `m` coefficients; any corruption,
/// version or checksum mismatch, or shortfall reads as absent.
pub fn load_cache(label: &str, m: u64, dir: &Path) -> Result<Option<CoefficientCache>> {
    let path = cache_path(dir, label);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let body: CacheFile = match serde_json::from_slice(&bytes) {
        Ok(b) => b,
        Err(_) => return Ok(None),
    };
    if body.version != CACHE_VERSION
        || body.label != label
        || body.m < m
        || body.m as usize != body.coefficients.len()
        || body.checksum != fnv1a(&body.label, &body.coefficients)
        || body.coefficients.first() != Some(&1)
    {
        return Ok(None);
    }
    let mut one_based = Vec::with_capacity(body.coefficients.len() + 1);
    one_based.push(0);
    one_based.extend_from_slice(&body.coefficients);
    Ok(Some(CoefficientCache {
        label: body.label,
        an: one_based,
    }))
}
