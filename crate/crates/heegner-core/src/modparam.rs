//! Modular parametrisation plumbing: period lattices by AGM, the map
//! phi(tau) = sum a_n/n q^n, Weierstrass functions, and elliptic logarithms.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

use crate::curve_store::{CoefficientCache, CurveRecord};
use crate::ec_arith::{self, RationalPoint};
use crate::error::Error;
use crate::Result;

/// Point of the upper half plane.
#[derive(Debug, Clone)]
pub struct UpperHalfPoint {
    pub z: Complex,
}

impl UpperHalfPoint {
    pub fn new(z: Complex) -> Result<Self> {
        if !(z.imag().is_sign_positive() && !z.imag().is_zero()) {
            return Err(Error::Domain(format!(
                "point {z} is not in the upper half plane"
            )));
        }
        Ok(UpperHalfPoint { z })
    }

    pub fn im(&self) -> Float {
        self.z.imag().clone()
    }
}

/// Complex value on C modulo a period lattice, with a tracked error bound.
#[derive(Debug, Clone)]
pub struct ComplexCurvePoint {
    pub z: Complex,
    pub error_bound: Float,
}

/// Period lattice of a curve: omega1 the least positive real period,
/// Im(omega2/omega1) > 0.
#[derive(Debug, Clone)]
pub struct PeriodLattice {
    pub omega1: Float,
    pub omega2: Complex,
    pub real_components: u8,
    /// Real period of the Neron differential: omega1 times the number of
    /// real components.
    pub real_volume: Float,
    pub precision_bits: u32,
    pub(crate) eta1: Float,
    /// Roots of X³ - 27c4·X - 54c6 (the short model); index 0 holds the
    /// largest (or only) real root.
    pub(crate) short_roots: [Complex; 3],
}

fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

fn cplx(prec: u32, re: Float, im: Float) -> Complex {
    Complex::with_val(prec, (re, im))
}

/// Real roots of the monic cubic X³ + aX + b as f64 seeds.  The number of
/// real roots is decided by the caller from exact data, not from f64.
fn cubic_seeds(a: f64, b: f64, three_real: bool) -> Vec<f64> {
    if three_real {
        // three real roots force a < 0
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        return (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect();
    }
    if a == 0.0 {
        return vec![-b.signum() * b.abs().cbrt()];
    }
    if a < 0.0 {
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = (3.0 * b.abs() / (a * m)).abs().max(1.0);
        let acosh = (arg + (arg * arg - 1.0).max(0.0).sqrt()).ln();
        vec![-b.signum() * m * (acosh / 3.0).cosh()]
    } else {
        let m = 2.0 * (a / 3.0).sqrt();
        let arg = 3.0 * b / (a * m);
        let asinh = (arg + (arg * arg + 1.0).sqrt()).ln();
        vec![-m * (asinh / 3.0).sinh()]
    }
}

/// Polish a real root of X³ + aX + b by Newton iteration at precision prec.
fn polish_root(seed: f64, a: &Float, b: &Float, prec: u32) -> Result<Float> {
    let mut x = Float::with_val(prec, seed);
    let tol = Float::with_val(prec, 1u32) >> (prec - 8);
    for _ in 0..300 {
        let fx = x.clone() * &x * &x + a.clone() * &x + b;
        let dfx = Float::with_val(prec, 3) * &x * &x + a;
        if dfx.is_zero() {
            return Err(Error::Precision("Newton derivative vanished".into()));
        }
        let step = fx / dfx;
        x -= &step;
        let scale = Float::with_val(prec, 1).max(&x.clone().abs());
        if step.abs() < tol.clone() * scale {
            return Ok(x);
        }
    }
    Err(Error::Precision(
        "cubic root refinement did not converge".into(),
    ))
}

/// Period lattice of the minimal model via AGM on the 2-division cubic.
pub fn period_lattice(curve: &CurveRecord, precision_bits: u32) -> Result<PeriodLattice> {
    let prec = precision_bits;
    let work = prec + 32;
    let a_short = Float::with_val(work, Integer::from(-27 * curve.c4()));
    let b_short = Float::with_val(work, Integer::from(-54 * curve.c6()));
    let disc = curve.discriminant();
    // roots of the short cubic; x-cubic roots are e = (R - 3b2)/36
    let seeds = cubic_seeds(a_short.to_f64(), b_short.to_f64(), disc > 0);
    let to_e = |r: &Float| (r.clone() - Float::with_val(work, 3 * curve.b2())) / 36u32;
    let p = pi(work);
    let (omega1, omega2, short_roots, ncomp) = if disc > 0 {
        let mut roots: Vec<Float> = seeds
            .iter()
            .map(|s| polish_root(*s, &a_short, &b_short, work))
            .collect::<Result<_>>()?;
        if roots.len() != 3 {
            return Err(Error::Precision("expected three real roots".into()));
        }
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if !(roots[0] > roots[1] && roots[1] > roots[2]) {
            return Err(Error::Precision("cubic roots not separated".into()));
        }
        let (e1, e2, e3) = (to_e(&roots[0]), to_e(&roots[1]), to_e(&roots[2]));
        let s13 = (e1.clone() - &e3).sqrt();
        let s12 = (e1.clone() - &e2).sqrt();
        let s23 = (e2.clone() - &e3).sqrt();
        let w1 = p.clone() / s13.clone().agm(&s12);
        let w2im = p.clone() / s13.agm(&s23);
        let zero = Float::with_val(work, 0);
        let w2 = cplx(work, zero.clone(), w2im);
        let srts = [
            cplx(work, roots[0].clone(), zero.clone()),
            cplx(work, roots[1].clone(), zero.clone()),
            cplx(work, roots[2].clone(), zero),
        ];
        (w1, w2, srts, 2u8)
    } else {
        let r = polish_root(seeds[0], &a_short, &b_short, work)?;
        // deflate: complex roots -R/2 ± i·sqrt(3R² + 4a)/2
        let s = Float::with_val(work, 3) * &r * &r + Float::with_val(work, 4) * &a_short;
        if !s.is_sign_positive() {
            return Err(Error::Precision(
                "negative-discriminant cubic lacked a complex pair".into(),
            ));
        }
        let q_im = s.sqrt() / 2u32;
        let p_re = -(r.clone() / 2u32);
        let e1 = to_e(&r);
        let ep = to_e(&p_re);
        let qx = q_im.clone() / 36u32;
        let adist = ((e1.clone() - &ep).square() + qx.clone().square()).sqrt();
        let bhalf = e1 - ep;
        let two = Float::with_val(work, 2);
        let g1 = (two.clone() * &adist + two.clone() * &bhalf).sqrt();
        let g2 = (two.clone() * &adist - two.clone() * &bhalf).sqrt();
        let twosqrt = (Float::with_val(work, 4) * &adist).sqrt();
        let w1 = two.clone() * &p / twosqrt.clone().agm(&g1);
        let w2im = p.clone() / twosqrt.agm(&g2);
        let w2 = cplx(work, w1.clone() / 2u32, w2im);
        let srts = [
            cplx(work, r, Float::with_val(work, 0)),
            cplx(work, p_re.clone(), q_im.clone()),
            cplx(work, p_re, -q_im),
        ];
        (w1, w2, srts, 1u8)
    };
    // quasi-period eta1 = pi²/(3 omega1) · E2(omega2/omega1)
    let tau = omega2.clone() / &omega1;
    let q = (cplx(work, Float::with_val(work, 0), Float::with_val(work, 2)) * &p * &tau).exp();
    let qabs = q.clone().abs().real().clone();
    if qabs >= 1 {
        return Err(Error::Precision("lattice ratio not in the disk".into()));
    }
    let ln2 = Float::with_val(work, 2).ln();
    let nterms = ((Float::with_val(work, work + 16) * ln2 / -qabs.clone().ln()).to_f64())
        .ceil() as usize
        + 2;
    let mut sigma1 = vec![0u64; nterms + 1];
    for d in 1..=nterms {
        let mut m = d;
        while m <= nterms {
            sigma1[m] += d as u64;
            m += d;
        }
    }
    let mut e2 = Complex::with_val(work, 1);
    let mut qpow = Complex::with_val(work, 1);
    for s1 in sigma1.iter().skip(1) {
        qpow *= &q;
        e2 -= Complex::with_val(work, 24 * *s1) * &qpow;
    }
    let eta1_c = Complex::with_val(work, (p.clone().square() / 3u32, Float::new(work))) * &e2
        / &omega1;
    let eta1 = eta1_c.real().clone();

    let down = |f: &Float| Float::with_val(prec, f);
    let downc = |c: &Complex| Complex::with_val(prec, c);
    let real_volume = down(&(omega1.clone() * ncomp as u32));
    Ok(PeriodLattice {
        omega1: down(&omega1),
        omega2: downc(&omega2),
        real_components: ncomp,
        real_volume,
        precision_bits: prec,
        eta1: down(&eta1),
        short_roots: [
            downc(&short_roots[0]),
            downc(&short_roots[1]),
            downc(&short_roots[2]),
        ],
    })
}

/// Reduce z modulo the lattice to coordinates t, s in [-1/2, 1/2).
pub(crate) fn reduce_mod_lattice(z: &Complex, lattice: &PeriodLattice) -> Complex {
    let prec = lattice.precision_bits;
    let s = Float::with_val(prec, z.imag() / lattice.omega2.imag());
    let ks = s.clone().round();
    let zr = z.clone() - lattice.omega2.clone() * &ks;
    let t = Float::with_val(prec, zr.real() / &lattice.omega1);
    let kt = t.clone().round();
    zr - Complex::with_val(prec, (lattice.omega1.clone() * &kt, Float::new(prec)))
}

/// Distance from z to the nearest lattice point.
pub(crate) fn lattice_distance(z: &Complex, lattice: &PeriodLattice) -> Float {
    let prec = lattice.precision_bits;
    let zr = reduce_mod_lattice(z, lattice);
    let mut best = zr.clone().abs().real().clone();
    for j in -1i32..=1 {
        for k in -1i32..=1 {
            if j == 0 && k == 0 {
                continue;
            }
            let shift = Complex::with_val(prec, (lattice.omega1.clone() * j, Float::new(prec)))
                + lattice.omega2.clone() * k;
            let d = (zr.clone() - shift).abs().real().clone();
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Number of q-expansion terms needed for a 2^-prec tail at Im(tau) = im.
pub(crate) fn required_terms(im: &Float, prec: u32) -> u64 {
    let wp = im.prec();
    let two_pi = pi(wp) * 2u32;
    let neg_ln_q = two_pi * im;
    let ln2 = Float::with_val(wp, 2).ln();
    let qabs = (-neg_ln_q.clone()).exp();
    let one_minus = Float::with_val(wp, 1) - qabs;
    let needed = (Float::with_val(wp, prec) * ln2
        + (Float::with_val(wp, 2) / one_minus).ln())
        / neg_ln_q;
    needed.to_f64().ceil() as u64 + 1
}

/// phi(tau) = sum_{n <= M} a_n/n · e^{2 pi i n tau}, with a rigorous tail
/// bound from |a_n| <= 2n.
pub fn phi(
    tau: &UpperHalfPoint,
    coeffs: &CoefficientCache,
    _level: u64,
    precision_bits: u32,
) -> Result<ComplexCurvePoint> {
    let prec = precision_bits;
    let needed = required_terms(&Float::with_val(prec, tau.z.imag()), prec);
    let m = coeffs.m();
    if m < needed {
        return Err(Error::Precision(format!(
            "coefficient table has {m} terms but the tail bound needs {needed}"
        )));
    }
    let two_pi_i = Complex::with_val(prec, (Float::new(prec), pi(prec) * 2u32));
    let q = (two_pi_i * &tau.z).exp();
    let qabs = q.clone().abs().real().clone();
    let mut acc = Complex::new(prec);
    let mut qpow = Complex::with_val(prec, 1);
    for n in 1..=m {
        qpow *= &q;
        let a = coeffs.get(n);
        if a != 0 {
            let coef = Float::with_val(
                prec,
                Rational::from((Integer::from(a), Integer::from(n))),
            );
            acc += qpow.clone() * coef;
        }
    }
    // tail: sum_{n > M} 2 |q|^n = 2 |q|^{M+1} / (1 - |q|), plus rounding slack
    let tail = Float::with_val(prec, 2) * qabs.clone().pow(m + 1)
        / (Float::with_val(prec, 1) - &qabs);
    let slack = Float::with_val(prec, m + 1) << 4;
    let error_bound = tail + slack * (Float::with_val(prec, 1) >> prec.min(8000));
    Ok(ComplexCurvePoint {
        z: acc,
        error_bound,
    })
}

/// Whichever of tau (translated to |Re| <= 1/2) or -1/(N tau) has the larger
/// imaginary part.
pub fn best_representative(tau: &UpperHalfPoint, level: u64) -> UpperHalfPoint {
    let prec = tau.z.prec().0;
    let translate = |z: &Complex| -> Complex {
        let k = Float::with_val(prec, z.real()).round();
        z.clone() - Complex::with_val(prec, (k, Float::new(prec)))
    };
    let t = translate(&tau.z);
    let fricke = -(Complex::with_val(prec, 1) / (t.clone() * Complex::with_val(prec, level)));
    let out = if fricke.imag() > t.imag() {
        translate(&fricke)
    } else {
        t
    };
    UpperHalfPoint { z: out }
}

/// Weierstrass p and p' for the lattice, by q-series.
fn wp_pair(z: &Complex, lattice: &PeriodLattice) -> (Complex, Complex) {
    let prec = lattice.precision_bits;
    let p = pi(prec);
    let tau = lattice.omega2.clone() / &lattice.omega1;
    let two_pi_i = Complex::with_val(prec, (Float::new(prec), p.clone() * 2u32));
    let q = (two_pi_i.clone() * &tau).exp();
    let u = (two_pi_i.clone() * z / &lattice.omega1).exp();
    let one = Complex::with_val(prec, 1);
    let qabs = q.clone().abs().real().clone();
    let nterms = ((Float::with_val(prec, prec + 16) * Float::with_val(prec, 2).ln()
        / -qabs.ln())
    .to_f64())
    .ceil() as u64
        + 2;
    let om = one.clone() - &u;
    let mut s = Complex::with_val(prec, Rational::from((1, 12))) + u.clone() / om.clone().square();
    let mut sp = u.clone() * (one.clone() + &u) / (om.clone() * &om * &om);
    let mut qn = Complex::with_val(prec, 1);
    for _ in 1..=nterms {
        qn *= &q;
        let qu = qn.clone() * &u;
        let qiu = qn.clone() / &u;
        let d1 = one.clone() - &qu;
        let d2 = one.clone() - &qiu;
        let d3 = one.clone() - &qn;
        s += qu.clone() / d1.clone().square() + qiu.clone() / d2.clone().square()
            - Complex::with_val(prec, 2) * &qn / d3.square();
        sp += qu.clone() * (one.clone() + &qu) / (d1.clone() * &d1 * &d1)
            - qiu.clone() * (one.clone() + &qiu) / (d2.clone() * &d2 * &d2);
    }
    let fac = two_pi_i / &lattice.omega1;
    let wp = fac.clone().square() * s;
    let wpp = fac.clone() * fac.square() * sp;
    (wp, wpp)
}

/// Weierstrass coordinates of z on the curve model, or None for the point
/// at infinity.
pub fn complex_to_point(
    z: &ComplexCurvePoint,
    lattice: &PeriodLattice,
    curve: &CurveRecord,
) -> Result<Option<(Complex, Complex)>> {
    let prec = lattice.precision_bits;
    let tol = (Float::with_val(prec, 1) >> (prec / 2)) * &lattice.omega1;
    if lattice_distance(&z.z, lattice) < tol.clone().max(&z.error_bound) {
        return Ok(None);
    }
    let zr = reduce_mod_lattice(&z.z, lattice);
    let (wp, wpp) = wp_pair(&zr, lattice);
    // x = wp - b2/12, y = (wp' - a1 x - a3)/2
    let x = wp
        - Complex::with_val(
            prec,
            Rational::from((Integer::from(curve.b2()), Integer::from(12))),
        );
    let y = (wpp
        - Complex::with_val(prec, curve.a1()) * &x
        - Complex::with_val(prec, curve.a3()))
        / Complex::with_val(prec, 2);
    Ok(Some((x, y)))
}

/// Carlson symmetric integral R_F by duplication.
fn carlson_rf(mut x: Complex, mut y: Complex, mut z: Complex, prec: u32) -> Result<Complex> {
    let tol = Float::with_val(prec, 1) >> (prec / 6).min(120);
    let third = Complex::with_val(prec, Rational::from((1, 3)));
    let mut mu;
    let mut iters = 0;
    loop {
        let sx = x.clone().sqrt();
        let sy = y.clone().sqrt();
        let sz = z.clone().sqrt();
        let lam = sx.clone() * &sy + sy * &sz + sz * &sx;
        x = (x + &lam) / 4u32;
        y = (y + &lam) / 4u32;
        z = (z + &lam) / 4u32;
        mu = (x.clone() + &y + &z) * &third;
        if mu.clone().abs().real().is_zero() {
            return Err(Error::Precision("symmetric integral degenerated".into()));
        }
        let dx = (Complex::with_val(prec, 1) - x.clone() / &mu).abs().real().clone();
        let dy = (Complex::with_val(prec, 1) - y.clone() / &mu).abs().real().clone();
        let dz = (Complex::with_val(prec, 1) - z.clone() / &mu).abs().real().clone();
        if dx.max(&dy).max(&dz) < tol {
            break;
        }
        iters += 1;
        if iters > 10_000 {
            return Err(Error::Precision(
                "symmetric integral did not converge".into(),
            ));
        }
    }
    let xx = Complex::with_val(prec, 1) - x / &mu;
    let yy = Complex::with_val(prec, 1) - y / &mu;
    let zz = -(xx.clone() + &yy);
    let e2 = xx.clone() * &yy - zz.clone().square();
    let e3 = xx * yy * zz;
    let series = Complex::with_val(prec, 1)
        - e2.clone() / Complex::with_val(prec, 10)
        + e3.clone() / Complex::with_val(prec, 14)
        + e2.clone().square() / Complex::with_val(prec, 24)
        - Complex::with_val(prec, 3) * e2 * e3 / Complex::with_val(prec, 44);
    Ok(series / mu.sqrt())
}

/// Elliptic log of a point whose short-model x-coordinate X0 lies on the
/// unbounded real component.
fn raw_elliptic_log(x0s: &Float, lattice: &PeriodLattice) -> Result<Complex> {
    let prec = lattice.precision_bits;
    let args: Vec<Complex> = lattice
        .short_roots
        .iter()
        .map(|r| Complex::with_val(prec, (x0s.clone(), Float::new(prec))) - r)
        .collect();
    let rf = carlson_rf(args[0].clone(), args[1].clone(), args[2].clone(), prec)?;
    Ok(rf * Complex::with_val(prec, 6))
}

/// Elliptic logarithm: z with complex_to_point(z) = P, reduced mod lattice.
pub fn point_to_complex(
    p: &RationalPoint,
    lattice: &PeriodLattice,
    curve: &CurveRecord,
) -> Result<ComplexCurvePoint> {
    let prec = lattice.precision_bits;
    if !ec_arith::is_on_curve(p, curve) {
        return Err(Error::Domain(format!(
            "point {p} is not on curve {}",
            curve.label
        )));
    }
    let err = Float::with_val(prec, 1) >> (prec.saturating_sub(16)).max(32);
    let (x, y) = match p {
        RationalPoint::Infinity => {
            return Ok(ComplexCurvePoint {
                z: Complex::new(prec),
                error_bound: err,
            })
        }
        RationalPoint::Affine { x, y } => (x, y),
    };
    let xf = Float::with_val(prec, x);
    let x0s = xf * 36u32 + Float::with_val(prec, 3 * curve.b2());
    let on_egg = lattice.real_components == 2 && x0s < *lattice.short_roots[0].real();
    let base = if on_egg {
        let two_p = ec_arith::add(p, p, curve)?;
        match two_p {
            RationalPoint::Infinity => Complex::new(prec),
            RationalPoint::Affine { x: x2, .. } => {
                let x2f = Float::with_val(prec, &x2) * 36u32
                    + Float::with_val(prec, 3 * curve.b2());
                let z2 = raw_elliptic_log(&x2f, lattice)?;
                z2 / 2u32
            }
        }
    } else {
        raw_elliptic_log(&x0s, lattice)?
    };
    // resolve sign and half-lattice ambiguity by matching coordinates
    let xf = Float::with_val(prec, x);
    let yf = Float::with_val(prec, y);
    let tol = (Float::with_val(prec, 1) >> (prec / 4))
        * (Float::with_val(prec, 1) + xf.clone().abs().max(&yf.clone().abs()));
    let mut best: Option<(Float, Complex)> = None;
    for sign in [1i32, -1] {
        for j in 0..2u32 {
            for k in 0..2u32 {
                let cand = base.clone() * sign
                    + Complex::with_val(
                        prec,
                        (lattice.omega1.clone() * j / 2u32, Float::new(prec)),
                    )
                    + lattice.omega2.clone() * k / 2u32;
                let cand = reduce_mod_lattice(&cand, lattice);
                let probe = ComplexCurvePoint {
                    z: cand.clone(),
                    error_bound: Float::new(prec),
                };
                if let Some((xc, yc)) = complex_to_point(&probe, lattice, curve)? {
                    let dx = (xc - Complex::with_val(prec, (xf.clone(), Float::new(prec))))
                        .abs()
                        .real()
                        .clone();
                    let dy = (yc - Complex::with_val(prec, (yf.clone(), Float::new(prec))))
                        .abs()
                        .real()
                        .clone();
                    let d = dx.max(&dy);
                    if d < tol && best.as_ref().map_or(true, |(b, _)| d < *b) {
                        best = Some((d, cand));
                    }
                }
            }
        }
    }
    match best {
        Some((_, z)) => Ok(ComplexCurvePoint { z, error_bound: err }),
        None => Err(Error::Precision(format!(
            "elliptic log of {p} did not match any branch"
        ))),
    }
}

/// log |exp(-z·eta(z)/2)·sigma(z)| for the lattice, the archimedean block
/// of the canonical height.
pub(crate) fn sigma_quasi_log(z: &ComplexCurvePoint, lattice: &PeriodLattice) -> Result<Float> {
    let prec = lattice.precision_bits;
    let zr = reduce_mod_lattice(&z.z, lattice);
    let p = pi(prec);
    // eta(z) = t·eta1 + s·eta2 with z = t·omega1 + s·omega2
    let s = Float::with_val(prec, zr.imag() / lattice.omega2.imag());
    let t = (Float::with_val(prec, zr.real())
        - s.clone() * lattice.omega2.real())
        / &lattice.omega1;
    let two_pi_i = Complex::with_val(prec, (Float::new(prec), p.clone() * 2u32));
    let eta2 = (lattice.omega2.clone()
        * Complex::with_val(prec, (lattice.eta1.clone(), Float::new(prec)))
        - two_pi_i.clone())
        / Complex::with_val(prec, (lattice.omega1.clone(), Float::new(prec)));
    let etaz = Complex::with_val(prec, (lattice.eta1.clone() * &t, Float::new(prec)))
        + eta2 * Complex::with_val(prec, (s, Float::new(prec)));
    let tau = lattice.omega2.clone() / &lattice.omega1;
    let q = (two_pi_i.clone() * &tau).exp();
    let qabs = q.clone().abs().real().clone();
    let uh = (Complex::with_val(prec, (Float::new(prec), p.clone())) * &zr / &lattice.omega1)
        .exp();
    let u = uh.clone().square();
    let mut sig = Complex::with_val(prec, (lattice.omega1.clone(), Float::new(prec)))
        / two_pi_i
        * ((Complex::with_val(prec, (lattice.eta1.clone(), Float::new(prec)))
            * zr.clone().square()
            / (Complex::with_val(prec, (lattice.omega1.clone(), Float::new(prec))) * 2u32))
        .exp())
        * (uh.clone() - Complex::with_val(prec, 1) / uh);
    let nterms = ((Float::with_val(prec, prec + 16) * Float::with_val(prec, 2).ln()
        / -qabs.ln())
    .to_f64())
    .ceil() as u64
        + 2;
    let one = Complex::with_val(prec, 1);
    let mut qn = Complex::with_val(prec, 1);
    for _ in 1..=nterms {
        qn *= &q;
        let d3 = (one.clone() - &qn).square();
        sig *= (one.clone() - qn.clone() * &u) * (one.clone() - qn.clone() / &u) / d3;
    }
    if sig.clone().abs().real().is_zero() {
        return Err(Error::Precision(
            "sigma vanished: z is a lattice point".into(),
        ));
    }
    let quasi = -(zr * etaz) / Complex::with_val(prec, 2);
    Ok(Float::with_val(prec, quasi.real()) + sig.abs().real().clone().ln())
}
