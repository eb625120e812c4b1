//! Heegner point traces and the index they generate.
//!
//! A valid pair (D, r) for level N selects one CM point per ideal class
//! of discriminant D.  The trace sums the modular parametrisation over
//! those points, divides by the automorphism weight u_D inside the
//! period lattice, and recognises the result as a rational point on the
//! curve.  Canonical heights then express the trace as a multiple of
//! the stored generator, and the gcd of those multiples over a range of
//! pairs is the index the survey reports.

use std::fmt;

use rug::{Complex, Float, Integer, Rational};

use crate::curve_store::{CoefficientCache, CurveRecord};
use crate::ec_arith::{self, RationalPoint};
use crate::error::Error;
use crate::modparam::{self, ComplexCurvePoint, PeriodLattice, UpperHalfPoint};
use crate::quadforms::{self, HeegnerPair, QuadForm};
use crate::Result;

/// Automorphism weight u_D: 3 for D = -3, 2 for D = -4 and for levels
/// ramified in the field (N | D), otherwise 1.
pub fn weight_ud(d: i64, n: u64) -> Result<u32> {
    if d >= 0 || !quadforms::is_fundamental(d) {
        return Err(Error::Domain(format!(
            "{d} is not a fundamental negative discriminant"
        )));
    }
    Ok(match d {
        -3 => 3,
        -4 => 2,
        _ if d.unsigned_abs() % n == 0 => 2,
        _ => 1,
    })
}

/// A CM point on the upper half plane together with its form.
#[derive(Debug, Clone)]
pub struct HeegnerPoint {
    pub form: QuadForm,
    pub tau: UpperHalfPoint,
}

/// One CM point per ideal class of the pair: the root
/// tau = (-B + sqrt(D)) / 2A of each concordant form [A, B, C].
pub fn heegner_points(pair: &HeegnerPair, precision_bits: u32) -> Result<Vec<HeegnerPoint>> {
    let prec = precision_bits;
    quadforms::heegner_forms(pair)?
        .into_iter()
        .map(|form| {
            let two_a = Float::with_val(prec, 2 * form.a);
            let re = Float::with_val(prec, -form.b) / &two_a;
            let im = Float::with_val(prec, -form.disc()).sqrt() / two_a;
            let tau = UpperHalfPoint::new(Complex::with_val(prec, (re, im)))?;
            Ok(HeegnerPoint { form, tau })
        })
        .collect()
}

/// Fourier terms needed to evaluate phi at every lifted CM point of the
/// pairs with a full tail bound at this precision.
pub(crate) fn required_coefficients(pairs: &[HeegnerPair], precision_bits: u32) -> Result<u64> {
    let mut m = 16;
    for pair in pairs {
        for hp in heegner_points(pair, precision_bits)? {
            let lifted = modparam::best_representative(&hp.tau, pair.n);
            m = m.max(modparam::required_terms(&lifted.im(), precision_bits));
        }
    }
    Ok(m + 8)
}

/// A recognised Heegner trace.
#[derive(Debug, Clone)]
pub struct TraceResult {
    pub pair: HeegnerPair,
    pub point: RationalPoint,
    /// Multiple of the generator realised by the trace; None when the
    /// trace is torsion.
    pub index: Option<u64>,
    pub u_d: u32,
    /// Distance between the analytic trace and the recognised point.
    pub residual: Float,
    pub precision_bits: u32,
    /// Reduced elliptic logarithm of the recognised point.
    pub complex_value: Complex,
}

fn validate_pair(pair: &HeegnerPair, curve: &CurveRecord) -> Result<()> {
    if pair.n != curve.conductor {
        return Err(Error::Validation(format!(
            "pair level {} does not match the conductor of {}",
            pair.n, curve.label
        )));
    }
    if pair.d >= 0 || !quadforms::is_fundamental(pair.d) {
        return Err(Error::Validation(format!(
            "{} is not a fundamental negative discriminant",
            pair.d
        )));
    }
    let four_n = 4 * pair.n as i128;
    let r2 = pair.r as i128 * pair.r as i128;
    if (r2 - pair.d as i128).rem_euclid(four_n) != 0 {
        return Err(Error::Validation(format!(
            "r = {} does not satisfy r^2 = D (mod 4N) for (D, N) = ({}, {})",
            pair.r, pair.d, pair.n
        )));
    }
    Ok(())
}

/// Trace of the pair: phi summed over the CM points, divided by u_D,
/// and recognised as a rational point.  On recognition failure the
/// precision doubles, up to three attempts.
pub fn trace(pair: &HeegnerPair, curve: &CurveRecord, precision_bits: u32) -> Result<TraceResult> {
    validate_pair(pair, curve)?;
    let mut prec = precision_bits.max(64);
    let mut last = Error::Recognition("trace not attempted".into());
    for _ in 0..3 {
        let m = required_coefficients(std::slice::from_ref(pair), prec)?;
        let table = ec_arith::an_table(curve, m)?;
        match trace_with_table(pair, curve, &table, prec) {
            Err(Error::Recognition(msg)) => {
                last = Error::Recognition(msg);
                prec *= 2;
            }
            other => return other,
        }
    }
    Err(last)
}

/// Trace evaluation against a caller-supplied coefficient table (shared
/// across pairs by the survey); fails with a recognition error instead
/// of escalating.
pub(crate) fn trace_with_table(
    pair: &HeegnerPair,
    curve: &CurveRecord,
    table: &CoefficientCache,
    precision_bits: u32,
) -> Result<TraceResult> {
    let prec = precision_bits;
    let lattice = modparam::period_lattice(curve, prec)?;
    let mut sum = Complex::new(prec);
    let mut tail = Float::new(prec);
    for hp in heegner_points(pair, prec)? {
        let lifted = modparam::best_representative(&hp.tau, pair.n);
        let value = modparam::phi(&lifted, table, pair.n, prec)?;
        sum += &value.z;
        tail += &value.error_bound;
    }
    let sum = modparam::reduce_mod_lattice(&sum, &lattice);
    let u = weight_ud(pair.d, pair.n)?;

    // dividing by u inside C/L leaves u^2 candidate cosets; rational
    // coordinates single out the trace among them
    let mut found: Vec<(RationalPoint, Float, Complex)> = Vec::new();
    for j in 0..u {
        for k in 0..u {
            let mut cand = sum.clone();
            if j > 0 {
                cand += Float::with_val(prec, &lattice.omega1 * j);
            }
            if k > 0 {
                cand += Complex::with_val(prec, &lattice.omega2 * k);
            }
            cand /= u;
            let cand = modparam::reduce_mod_lattice(&cand, &lattice);
            let guess = ComplexCurvePoint {
                z: cand.clone(),
                error_bound: tail.clone() / u + (Float::with_val(prec, 1) >> (prec - 16)),
            };
            match recognize(&guess, &lattice, curve) {
                Ok((point, residual)) => found.push((point, residual, cand)),
                Err(Error::Recognition(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    let best = match found
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
    {
        Some((i, _)) => i,
        None => {
            return Err(Error::Recognition(format!(
                "no division point of the trace at (D, r) = ({}, {}) was recognised at {prec} bits",
                pair.d, pair.r
            )))
        }
    };
    for (i, (point, _, _)) in found.iter().enumerate() {
        if i == best {
            continue;
        }
        let diff = ec_arith::add(&found[best].0, &ec_arith::negate(point, curve), curve)?;
        if !ec_arith::has_finite_order(&diff, curve) {
            return Err(Error::Recognition(
                "division candidates differ by a point of infinite order".into(),
            ));
        }
    }
    let (point, residual, complex_value) = found.swap_remove(best);
    let index = if ec_arith::has_finite_order(&point, curve) {
        None
    } else {
        Some(index_of(&point, curve)?)
    };
    Ok(TraceResult {
        pair: *pair,
        point,
        index,
        u_d: u,
        residual,
        precision_bits: prec,
        complex_value,
    })
}

/// Identify z as the image of a rational point with bounded denominator
/// and residual below the recognition tolerance.
fn recognize(
    z: &ComplexCurvePoint,
    lattice: &PeriodLattice,
    curve: &CurveRecord,
) -> Result<(RationalPoint, Float)> {
    let prec = lattice.precision_bits;
    let Some((xc, yc)) = modparam::complex_to_point(z, lattice, curve)? else {
        return Ok((
            RationalPoint::Infinity,
            modparam::lattice_distance(&z.z, lattice),
        ));
    };
    let bound = Integer::from(1) << (prec / 3);
    let eps = Float::with_val(prec, 1) >> (3 * prec / 4);
    let floor_tol = Float::with_val(prec, &z.error_bound) * 8u32;

    let xr = Float::with_val(prec, xc.real());
    let tol_x = (eps.clone() * (xr.clone().abs() + 1u32)).max(&floor_tol);
    let x = nearest_rational(&xr, &bound)
        .ok_or_else(|| Error::Recognition("x coordinate is not a finite number".into()))?;
    let err_x = coord_distance(&xc, &x, prec);
    if err_x > tol_x {
        return Err(Error::Recognition(format!(
            "x residual {err_x:.3e} exceeds the tolerance at {prec} bits"
        )));
    }

    // y solves y^2 + (a1 x + a3) y - (x^3 + a2 x^2 + a4 x + a6) = 0 over
    // the recognised x, exactly
    let [a1, a2, a3, a4, a6] = curve.a_rationals();
    let s = Rational::from(&a1 * &x) + &a3;
    let x2 = Rational::from(&x * &x);
    let f = Rational::from(&x2 * &x)
        + Rational::from(&a2 * &x2)
        + Rational::from(&a4 * &x)
        + &a6;
    let disc = Rational::from(&s * &s) + Rational::from(4) * &f;
    if disc < 0 {
        return Err(Error::Recognition(
            "no real point lies above the recognised x".into(),
        ));
    }
    let (sn, rn) = disc.numer().clone().sqrt_rem(Integer::new());
    let (sd, rd) = disc.denom().clone().sqrt_rem(Integer::new());
    if rn != 0 || rd != 0 {
        return Err(Error::Recognition(
            "the y discriminant over the recognised x is not a rational square".into(),
        ));
    }
    let root = Rational::from((sn, sd));
    let half = Rational::from((1u32, 2u32));
    let y_pos = (root.clone() - &s) * &half;
    let y_neg = (-root - &s) * &half;
    let (y, err_y) = {
        let dp = coord_distance(&yc, &y_pos, prec);
        let dn = coord_distance(&yc, &y_neg, prec);
        if dp <= dn {
            (y_pos, dp)
        } else {
            (y_neg, dn)
        }
    };
    let tol_y = (eps * (Float::with_val(prec, yc.real()).abs() + 1u32)).max(&floor_tol);
    if err_y > tol_y {
        return Err(Error::Recognition(format!(
            "y residual {err_y:.3e} exceeds the tolerance at {prec} bits"
        )));
    }
    let point = RationalPoint::affine(x, y);
    debug_assert!(ec_arith::is_on_curve(&point, curve));
    Ok((point, err_x.max(&err_y)))
}

fn coord_distance(c: &Complex, r: &Rational, prec: u32) -> Float {
    let target = Complex::with_val(prec, Float::with_val(prec, r));
    Float::with_val(prec, Complex::with_val(prec, c - &target).abs().real())
}

/// Best rational approximation to the exact binary value of x with
/// denominator at most `bound` (last continued-fraction convergent).
fn nearest_rational(x: &Float, bound: &Integer) -> Option<Rational> {
    let exact = x.to_rational()?;
    let (a0, _) = exact
        .numer()
        .clone()
        .div_rem_floor(exact.denom().clone());
    let mut rem = exact - &a0;
    let mut p_prev = Integer::from(1);
    let mut q_prev = Integer::from(0);
    let mut p = a0;
    let mut q = Integer::from(1);
    while rem != 0 {
        rem.recip_mut();
        let (a, _) = rem.numer().clone().div_rem_floor(rem.denom().clone());
        rem -= &a;
        let p_next = Integer::from(&a * &p) + &p_prev;
        let q_next = Integer::from(&a * &q) + &q_prev;
        if q_next > *bound {
            break;
        }
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    Some(Rational::from((p, q)))
}

/// Express a point of infinite order as a multiple of the stored
/// generator (up to sign and torsion), confirmed by exact subtraction.
pub fn index_of(point: &RationalPoint, curve: &CurveRecord) -> Result<u64> {
    let generator = curve.generator.as_ref().ok_or_else(|| {
        Error::Validation(format!("curve {} has no stored generator", curve.label))
    })?;
    if ec_arith::has_finite_order(point, curve) {
        return Err(Error::Domain(
            "a torsion point is not a multiple of the generator".into(),
        ));
    }
    let hp = ec_arith::canonical_height(point, curve, 192)?;
    let hg = ec_arith::canonical_height(generator, curve, 192)?;
    let guess = Float::with_val(192, &hp.value / &hg.value)
        .sqrt()
        .to_f64()
        .round() as i64;
    for k in [guess, guess - 1, guess + 1] {
        if k < 1 {
            continue;
        }
        let kg = ec_arith::scalar_mul(k, generator, curve)?;
        let diff = ec_arith::add(point, &ec_arith::negate(&kg, curve), curve)?;
        if ec_arith::has_finite_order(&diff, curve) {
            return Ok(k as u64);
        }
        let sum = ec_arith::add(point, &kg, curve)?;
        if ec_arith::has_finite_order(&sum, curve) {
            return Ok(k as u64);
        }
    }
    Err(Error::Validation(format!(
        "height ratio near {guess} is not confirmed by any exact multiple on {}",
        curve.label
    )))
}

/// Per-pair traces of one curve and the gcd of their indices.
#[derive(Debug, Clone)]
pub struct GlobalIndex {
    pub curve_label: String,
    /// gcd of the per-pair indices; None when every trace in range is
    /// torsion.
    pub index: Option<u64>,
    pub traces: Vec<TraceResult>,
}

/// Index over all valid pairs with |D| <= dmax: traces each pair and
/// folds the recognised multiples into a gcd, stopping early once the
/// gcd reaches one.
pub fn global_index(curve: &CurveRecord, dmax: i64, precision_bits: u32) -> Result<GlobalIndex> {
    let prec = precision_bits.max(64);
    let pairs = quadforms::heegner_pairs(curve.conductor, dmax);
    // one coefficient table covers every pair at the base precision
    let m = required_coefficients(&pairs, prec)?;
    let table = ec_arith::an_table(curve, m)?;
    global_index_with_table(curve, &pairs, prec, &table)
}

/// The gcd loop behind `global_index`, against a caller-supplied table.
pub(crate) fn global_index_with_table(
    curve: &CurveRecord,
    pairs: &[HeegnerPair],
    precision_bits: u32,
    table: &CoefficientCache,
) -> Result<GlobalIndex> {
    if curve.rank != 1 {
        return Err(Error::Validation(format!(
            "{}: the Heegner index is defined here only for rank-one curves",
            curve.label
        )));
    }
    if curve.generator.is_none() {
        return Err(Error::Validation(format!(
            "{}: a stored generator is required to measure the index",
            curve.label
        )));
    }
    let prec = precision_bits.max(64);
    let mut traces = Vec::with_capacity(pairs.len());
    let mut index: Option<u64> = None;
    for pair in pairs {
        let t = match trace_with_table(pair, curve, table, prec) {
            Ok(t) => t,
            // a failed pair escalates on its own, with larger tables
            Err(Error::Recognition(_)) => trace(pair, curve, prec * 2)?,
            Err(e) => return Err(e),
        };
        if let Some(i) = t.index {
            index = Some(match index {
                None => i,
                Some(g) => quadforms::gcd(g, i),
            });
        }
        traces.push(t);
        if index == Some(1) {
            break;
        }
    }
    Ok(GlobalIndex {
        curve_label: curve.label.clone(),
        index,
        traces,
    })
}

/// Outcome of the index test "I_E > 1 implies nu > 1 or Sha nontrivial"
/// for one curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// I_E = 1: the implication holds vacuously.
    Vacuous,
    SatisfiedByNu,
    SatisfiedBySha,
    SatisfiedByBoth,
    /// I_E > 1 with nu = 1 and Sha known trivial.
    Counterexample,
    /// I_E > 1 with nu = 1 and Sha unknown.
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Vacuous => "vacuous",
            Verdict::SatisfiedByNu => "satisfied-by-nu",
            Verdict::SatisfiedBySha => "satisfied-by-sha",
            Verdict::SatisfiedByBoth => "satisfied-by-both",
            Verdict::Counterexample => "counterexample",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

/// Test one curve against the conjecture given its measured index, its
/// real-component count nu, and the analytic Sha order when known.
pub fn conjecture_check(index: u64, nu: u64, sha: Option<u64>) -> Verdict {
    if index <= 1 {
        return Verdict::Vacuous;
    }
    match (nu > 1, sha) {
        (true, Some(s)) if s > 1 => Verdict::SatisfiedByBoth,
        (true, _) => Verdict::SatisfiedByNu,
        (false, Some(s)) if s > 1 => Verdict::SatisfiedBySha,
        (false, Some(_)) => Verdict::Counterexample,
        (false, None) => Verdict::Indeterminate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadforms::heegner_pairs;

    fn curve(
        label: &str,
        a: [i64; 5],
        n: u64,
        rank: u32,
        gen: Option<(i64, i64)>,
        tors: u32,
    ) -> CurveRecord {
        let g = gen.map(|(x, y)| RationalPoint::affine(Rational::from(x), Rational::from(y)));
        CurveRecord::new(label, a, n, rank, g, tors, None).unwrap()
    }

    fn c37() -> CurveRecord {
        curve("37a1", [0, 0, 1, -1, 0], 37, 1, Some((0, 0)), 1)
    }

    fn c43() -> CurveRecord {
        curve("43a1", [0, 1, 1, 0, 0], 43, 1, Some((0, 0)), 1)
    }

    fn c11() -> CurveRecord {
        curve("11a1", [0, -1, 1, -10, -20], 11, 0, None, 5)
    }

    fn pair(n: u64, d: i64) -> HeegnerPair {
        heegner_pairs(n, -d).into_iter().find(|p| p.d == d).unwrap()
    }

    #[test]
    fn automorphism_weights() {
        assert_eq!(weight_ud(-3, 37).unwrap(), 3);
        assert_eq!(weight_ud(-4, 37).unwrap(), 2);
        assert_eq!(weight_ud(-43, 43).unwrap(), 2);
        assert_eq!(weight_ud(-7, 11).unwrap(), 1);
        assert_eq!(weight_ud(-8, 35083).unwrap(), 1);
        assert!(weight_ud(-12, 37).is_err());
        assert!(weight_ud(-5, 37).is_err());
        assert!(weight_ud(4, 37).is_err());
    }

    #[test]
    fn cm_points_are_roots_of_their_forms() {
        let p = pair(37, -95);
        let pts = heegner_points(&p, 192).unwrap();
        assert_eq!(pts.len(), 8);
        for hp in &pts {
            assert_eq!(hp.form.a % 37, 0);
            assert_eq!(hp.form.disc(), -95);
            assert_eq!((hp.form.b - 33).rem_euclid(74), 0);
            assert!(hp.tau.im() > 0);
            let t = &hp.tau.z;
            let val = Complex::with_val(192, hp.form.a) * Complex::with_val(192, t * t)
                + Complex::with_val(192, hp.form.b) * t
                + Complex::with_val(192, hp.form.c);
            assert!(Float::with_val(192, val.abs().real()) < 1e-50);
        }
    }

    #[test]
    fn trace_finds_the_generator_at_minus_four() {
        let c = c37();
        let t = trace(&pair(37, -4), &c, 160).unwrap();
        assert_eq!(t.u_d, 2);
        assert_eq!(t.index, Some(1));
        assert_eq!(t.precision_bits, 160);
        assert_eq!(
            t.point,
            RationalPoint::affine(Rational::new(), Rational::from(-1))
        );
        assert!(ec_arith::is_on_curve(&t.point, &c));
        assert!(t.residual < 1e-40);
    }

    #[test]
    fn trace_divides_by_three_at_minus_three() {
        let t = trace(&pair(37, -3), &c37(), 160).unwrap();
        assert_eq!(t.u_d, 3);
        assert_eq!(t.index, Some(1));
        match &t.point {
            RationalPoint::Affine { x, .. } => assert_eq!(*x, 0),
            RationalPoint::Infinity => panic!("expected an affine trace"),
        }
    }

    #[test]
    fn trace_reaches_a_sixfold_multiple() {
        let t = trace(&pair(37, -67), &c37(), 160).unwrap();
        assert_eq!(t.u_d, 1);
        assert_eq!(t.index, Some(6));
    }

    #[test]
    fn trace_with_class_number_two() {
        let t = trace(&pair(37, -40), &c37(), 160).unwrap();
        assert_eq!(t.index, Some(2));
    }

    #[test]
    fn ramified_trace_on_forty_three() {
        let t = trace(&pair(43, -43), &c43(), 160).unwrap();
        assert_eq!(t.u_d, 2);
        assert_eq!(t.index, Some(2));
    }

    #[test]
    fn torsion_trace_reduces_to_the_identity() {
        let t = trace(&pair(37, -95), &c37(), 160).unwrap();
        assert_eq!(t.u_d, 1);
        assert_eq!(t.index, None);
        assert_eq!(t.point, RationalPoint::Infinity);
    }

    #[test]
    fn non_rational_trace_is_rejected() {
        // even-sign curve: the trace lies off the rational locus
        match trace(&pair(11, -7), &c11(), 64) {
            Err(Error::Recognition(_)) => {}
            other => panic!("expected a recognition failure, got {other:?}"),
        }
    }

    #[test]
    fn conjugate_square_roots_agree() {
        let c = c37();
        let p = pair(37, -4);
        let q = HeegnerPair {
            n: 37,
            d: -4,
            r: p.r_conj,
            r_conj: p.r,
        };
        let a = trace(&p, &c, 128).unwrap();
        let b = trace(&q, &c, 128).unwrap();
        assert_eq!(a.index, b.index);
        assert_eq!(a.point, b.point);
    }

    #[test]
    fn index_of_small_multiples() {
        let c = c37();
        let g = c.generator.clone().unwrap();
        assert_eq!(index_of(&g, &c).unwrap(), 1);
        for k in [2i64, 5] {
            let kg = ec_arith::scalar_mul(k, &g, &c).unwrap();
            assert_eq!(index_of(&kg, &c).unwrap(), k as u64);
            let neg = ec_arith::negate(&kg, &c);
            assert_eq!(index_of(&neg, &c).unwrap(), k as u64);
        }
        assert!(matches!(
            index_of(&RationalPoint::Infinity, &c),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn global_index_stops_once_the_gcd_is_one() {
        let gi = global_index(&c37(), 24, 160).unwrap();
        assert_eq!(gi.index, Some(1));
        assert_eq!(gi.traces.len(), 1);
        assert_eq!(gi.curve_label, "37a1");
    }

    #[test]
    fn global_index_requires_rank_one() {
        assert!(matches!(
            global_index(&c11(), 24, 128),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        let c = c37();
        let wrong_level = HeegnerPair {
            n: 43,
            d: -43,
            r: 43,
            r_conj: 43,
        };
        assert!(matches!(trace(&wrong_level, &c, 96), Err(Error::Validation(_))));
        let bad_root = HeegnerPair {
            n: 37,
            d: -4,
            r: 13,
            r_conj: 61,
        };
        assert!(matches!(trace(&bad_root, &c, 96), Err(Error::Validation(_))));
        let not_fundamental = HeegnerPair {
            n: 37,
            d: -12,
            r: 16,
            r_conj: 58,
        };
        assert!(matches!(
            trace(&not_fundamental, &c, 96),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn verdicts_cover_the_truth_table() {
        use Verdict::*;
        assert_eq!(conjecture_check(1, 1, None), Vacuous);
        assert_eq!(conjecture_check(1, 5, Some(9)), Vacuous);
        assert_eq!(conjecture_check(2, 2, None), SatisfiedByNu);
        assert_eq!(conjecture_check(2, 2, Some(1)), SatisfiedByNu);
        assert_eq!(conjecture_check(2, 2, Some(4)), SatisfiedByBoth);
        assert_eq!(conjecture_check(4, 1, Some(4)), SatisfiedBySha);
        assert_eq!(conjecture_check(2, 1, Some(1)), Counterexample);
        assert_eq!(conjecture_check(2, 1, None), Indeterminate);
        assert_eq!(SatisfiedBySha.to_string(), "satisfied-by-sha");
        assert_eq!(Counterexample.to_string(), "counterexample");
    }

    #[test]
    fn precisions_agree_on_the_recognised_point() {
        let c = c37();
        let p = pair(37, -4);
        let a = trace(&p, &c, 128).unwrap();
        let b = trace(&p, &c, 224).unwrap();
        assert_eq!(a.point, b.point);
        assert_eq!(a.index, b.index);
        assert!(b.residual < a.residual);
    }
}
