//! Python extension module `heegner_py`.
//!
//! Exposes the core operations of the Heegner-point tracer to Python:
//! curve records, class numbers, the real-component count of X0+(N),
//! Fourier coefficient tables, Heegner traces with their generator
//! indices, and the survey aggregator.  Exact rational coordinates
//! cross the boundary as strings so nothing is lost to floats.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use heegner_core::curve_store::{self, CurveRecord};
use heegner_core::ec_arith::{self, RationalPoint};
use heegner_core::error::Error;
use heegner_core::heegner;
use heegner_core::quadforms;
use heegner_core::survey as survey_mod;
use heegner_core::survey::SurveyOptions;
use rug::Rational;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parse { .. } | Error::Validation(_) | Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::Precision(_) | Error::Recognition(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Accept anything whose str() parses as an exact rational: int,
/// fractions.Fraction, or a "p/q" string.
fn parse_rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let s = obj.str()?.to_string_lossy().into_owned();
    s.trim()
        .parse::<Rational>()
        .map_err(|_| PyValueError::new_err(format!("not a rational number: {s}")))
}

fn pair_for(curve: &CurveRecord, d: i64, r: Option<u64>) -> PyResult<quadforms::HeegnerPair> {
    match r {
        Some(r) => {
            let two_n = 2 * curve.conductor;
            Ok(quadforms::HeegnerPair {
                n: curve.conductor,
                d,
                r,
                r_conj: (two_n - r % two_n) % two_n,
            })
        }
        None => quadforms::heegner_pairs(curve.conductor, d.unsigned_abs() as i64)
            .into_iter()
            .find(|p| p.d == d)
            .ok_or_else(|| {
                PyValueError::new_err(format!(
                    "no Heegner discriminant {d} at level {}",
                    curve.conductor
                ))
            }),
    }
}

/// One recognised Heegner trace: the pair, the rational point it
/// landed on, and the multiple of the generator it realises.
#[pyclass(frozen)]
struct Trace {
    #[pyo3(get)]
    d: i64,
    #[pyo3(get)]
    r: u64,
    /// (x, y) as exact rational strings, or None for the identity.
    #[pyo3(get)]
    point: Option<(String, String)>,
    /// Multiple of the generator; None when the trace is torsion.
    #[pyo3(get)]
    index: Option<u64>,
    #[pyo3(get)]
    u_d: u32,
    #[pyo3(get)]
    residual: f64,
    #[pyo3(get)]
    precision_bits: u32,
}

#[pymethods]
impl Trace {
    #[getter]
    fn is_torsion(&self) -> bool {
        self.index.is_none()
    }

    fn __repr__(&self) -> String {
        let point = match &self.point {
            None => "O".to_string(),
            Some((x, y)) => format!("({x}, {y})"),
        };
        let index = match self.index {
            None => "None".to_string(),
            Some(k) => k.to_string(),
        };
        format!(
            "Trace(d={}, r={}, point={point}, index={index}, residual={:.3e})",
            self.d, self.r, self.residual
        )
    }
}

fn convert_trace(t: &heegner::TraceResult) -> Trace {
    let point = match &t.point {
        RationalPoint::Infinity => None,
        RationalPoint::Affine { x, y } => Some((x.to_string(), y.to_string())),
    };
    Trace {
        d: t.pair.d,
        r: t.pair.r,
        point,
        index: t.index,
        u_d: t.u_d,
        residual: t.residual.to_f64(),
        precision_bits: t.precision_bits,
    }
}

/// Rank-one elliptic curve record with its arithmetic metadata.
#[pyclass(frozen)]
struct Curve {
    inner: CurveRecord,
}

#[pymethods]
impl Curve {
    /// Curve(label, [a1, a2, a3, a4, a6], conductor, rank,
    ///       generator=(x, y), torsion=1, sha=None)
    #[new]
    #[pyo3(signature = (label, a, conductor, rank, generator=None, torsion=1, sha=None))]
    fn new(
        label: &str,
        a: [i64; 5],
        conductor: u64,
        rank: u32,
        generator: Option<(Bound<'_, PyAny>, Bound<'_, PyAny>)>,
        torsion: u32,
        sha: Option<u64>,
    ) -> PyResult<Self> {
        let generator = match generator {
            None => None,
            Some((x, y)) => Some(RationalPoint::affine(
                parse_rational(&x)?,
                parse_rational(&y)?,
            )),
        };
        CurveRecord::new(label, a, conductor, rank, generator, torsion, sha)
            .map(|inner| Curve { inner })
            .map_err(to_py)
    }

    /// Parse a whitespace-separated curve file; returns all records.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Vec<Curve>> {
        let records = curve_store::parse_curve_file(Path::new(path)).map_err(to_py)?;
        Ok(records.into_iter().map(|inner| Curve { inner }).collect())
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    #[getter]
    fn a_invariants(&self) -> (i64, i64, i64, i64, i64) {
        let c = &self.inner;
        (c.a1(), c.a2(), c.a3(), c.a4(), c.a6())
    }

    #[getter]
    fn conductor(&self) -> u64 {
        self.inner.conductor
    }

    #[getter]
    fn rank(&self) -> u32 {
        self.inner.rank
    }

    #[getter]
    fn torsion(&self) -> u32 {
        self.inner.torsion_order
    }

    #[getter]
    fn sha(&self) -> Option<u64> {
        self.inner.sha_analytic
    }

    #[getter]
    fn discriminant(&self) -> i128 {
        self.inner.discriminant()
    }

    #[getter]
    fn generator(&self) -> Option<(String, String)> {
        match &self.inner.generator {
            Some(RationalPoint::Affine { x, y }) => Some((x.to_string(), y.to_string())),
            _ => None,
        }
    }

    /// L-series coefficients a(1..=m) as a list of length m.
    fn an(&self, py: Python<'_>, m: u64) -> PyResult<Vec<i64>> {
        if m == 0 {
            return Ok(Vec::new());
        }
        let curve = self.inner.clone();
        let table = py
            .allow_threads(move || ec_arith::an_table(&curve, m))
            .map_err(to_py)?;
        Ok((1..=m).map(|n| table.get(n)).collect())
    }

    /// Canonical height of the point (x, y), normalised so
    /// h(kP) = k^2 h(P); exactly 0.0 for torsion points.
    #[pyo3(signature = (x, y, prec=128))]
    fn height(
        &self,
        py: Python<'_>,
        x: Bound<'_, PyAny>,
        y: Bound<'_, PyAny>,
        prec: u32,
    ) -> PyResult<f64> {
        let p = RationalPoint::affine(parse_rational(&x)?, parse_rational(&y)?);
        let curve = self.inner.clone();
        let h = py
            .allow_threads(move || ec_arith::canonical_height(&p, &curve, prec))
            .map_err(to_py)?;
        Ok(h.value.to_f64())
    }

    /// Trace the Heegner points of discriminant d (square root class r,
    /// chosen automatically when omitted) and recognise the result.
    #[pyo3(signature = (d, r=None, prec=256))]
    fn trace(&self, py: Python<'_>, d: i64, r: Option<u64>, prec: u32) -> PyResult<Trace> {
        let pair = pair_for(&self.inner, d, r)?;
        let curve = self.inner.clone();
        let result = py
            .allow_threads(move || heegner::trace(&pair, &curve, prec))
            .map_err(to_py)?;
        Ok(convert_trace(&result))
    }

    /// gcd of the trace indices over all Heegner discriminants with
    /// |d| <= dmax.  Returns (index, traces); index is None when every
    /// trace in range is torsion.
    #[pyo3(signature = (dmax=163, prec=256))]
    fn global_index(
        &self,
        py: Python<'_>,
        dmax: i64,
        prec: u32,
    ) -> PyResult<(Option<u64>, Vec<Trace>)> {
        let curve = self.inner.clone();
        let result = py
            .allow_threads(move || heegner::global_index(&curve, dmax, prec))
            .map_err(to_py)?;
        let traces = result.traces.iter().map(convert_trace).collect();
        Ok((result.index, traces))
    }

    fn __repr__(&self) -> String {
        format!(
            "Curve({:?}, N={}, rank={})",
            self.inner.label, self.inner.conductor, self.inner.rank
        )
    }
}

/// Class number of the quadratic order of discriminant d: form class
/// number for fundamental d < 0, narrow class number of the principal
/// cycle for non-square d > 0.
#[pyfunction]
fn class_number(d: i64) -> PyResult<u64> {
    if d < 0 {
        let group = quadforms::class_group(d).map_err(to_py)?;
        Ok(group.len() as u64)
    } else {
        quadforms::indefinite_class_number(d).map_err(to_py)
    }
}

/// Number of real components of X0+(N) for prime N.
#[pyfunction]
fn nu(n: u64) -> PyResult<u64> {
    quadforms::nu(n).map_err(to_py)
}

/// Whether d is a fundamental discriminant.
#[pyfunction]
fn is_fundamental(d: i64) -> bool {
    quadforms::is_fundamental(d)
}

/// All (d, r) with d a fundamental Heegner discriminant for level n,
/// |d| <= dmax, and r a square root of d mod 4n in [0, n].
#[pyfunction]
fn heegner_discriminants(n: u64, dmax: i64) -> Vec<(i64, u64)> {
    quadforms::heegner_pairs(n, dmax)
        .into_iter()
        .map(|p| (p.d, p.r))
        .collect()
}

/// Verdict string for one surveyed curve: how the observed index is
/// accounted for by nu and the analytic Sha order.
#[pyfunction]
#[pyo3(signature = (index, nu, sha=None))]
fn verdict(index: u64, nu: u64, sha: Option<u64>) -> String {
    heegner::conjecture_check(index, nu, sha).to_string()
}

/// Run the survey over the given curves and return the report as a
/// JSON string (same schema as the command-line `--format json`).
#[pyfunction]
#[pyo3(signature = (curves, dmax=163, prec=256, jobs=0, cache_dir=None))]
fn survey(
    py: Python<'_>,
    curves: Vec<PyRef<'_, Curve>>,
    dmax: i64,
    prec: u32,
    jobs: usize,
    cache_dir: Option<String>,
) -> PyResult<String> {
    let records: Vec<CurveRecord> = curves.iter().map(|c| c.inner.clone()).collect();
    drop(curves);
    let opts = SurveyOptions {
        dmax,
        precision_bits: prec,
        jobs,
        with_timing: false,
        cache_dir: cache_dir.map(PathBuf::from),
    };
    let report = py
        .allow_threads(move || survey_mod::run_survey(&records, &opts))
        .map_err(to_py)?;
    survey_mod::render_json(&report).map_err(to_py)
}

#[pymodule]
fn heegner_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Curve>()?;
    m.add_class::<Trace>()?;
    m.add_function(wrap_pyfunction!(class_number, m)?)?;
    m.add_function(wrap_pyfunction!(nu, m)?)?;
    m.add_function(wrap_pyfunction!(is_fundamental, m)?)?;
    m.add_function(wrap_pyfunction!(heegner_discriminants, m)?)?;
    m.add_function(wrap_pyfunction!(verdict, m)?)?;
    m.add_function(wrap_pyfunction!(survey, m)?)?;
    Ok(())
}
