//! Binary quadratic form machinery.
//!
//! Definite forms: Gauss reduction, class-group enumeration, Dirichlet
//! composition, and enumeration of Heegner forms [A,B,C] with N|A and
//! B ≡ r (mod 2N) for pairs (D, r) with D ≡ r² (mod 4N).
//!
//! Indefinite forms: reduction cycles, Pell fundamental solutions,
//! fundamental automorphs in Γ₀(N), generalised genus characters, and
//! Ogg's formula for the number ν_N of real components of the Fricke
//! quotient X₀⁺(N)(ℝ).

use crate::error::Error;
use crate::Result;
use rug::Integer;
use std::collections::HashSet;

/// Primitive integral binary quadratic form A·x² + B·xy + C·y².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    /// Discriminant B² − 4AC.
    pub fn disc(&self) -> i64 {
        let d = self.b as i128 * self.b as i128 - 4 * self.a as i128 * self.c as i128;
        i64::try_from(d).expect("discriminant overflows i64")
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd(self.a.unsigned_abs(), self.b.unsigned_abs()), self.c.unsigned_abs()) == 1
    }

    /// Value A·x² + B·xy + C·y².
    pub fn eval(&self, x: i64, y: i64) -> i64 {
        let v = self.a as i128 * x as i128 * x as i128
            + self.b as i128 * x as i128 * y as i128
            + self.c as i128 * y as i128 * y as i128;
        i64::try_from(v).expect("form value overflows i64")
    }
}

/// Heegner pair (D, r): fundamental D < 0 with D ≡ r² (mod 4N).
/// `r` is the representative in [0, N]; `r_conj` is the other square root
/// class 2N − r (equal to `r` exactly in the ramified case N | D).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeegnerPair {
    pub n: u64,
    pub d: i64,
    pub r: u64,
    pub r_conj: u64,
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn gcd_i(a: i64, b: i64) -> i64 {
    gcd(a.unsigned_abs(), b.unsigned_abs()) as i64
}

/// Extended gcd: returns (g, s, t) with s·a + t·b = g ≥ 0.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Inverse of a modulo m > 1; None when gcd(a, m) ≠ 1.
fn mod_inv(a: i128, m: i128) -> Option<i128> {
    let (g, s, _) = ext_gcd(a.rem_euclid(m), m);
    if g != 1 {
        return None;
    }
    Some(s.rem_euclid(m))
}

pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64 + 1;
    while x * x > n {
        x = (x + n / x) / 2;
    }
    x
}

pub fn is_square(n: i64) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt(n as u64);
    r * r == n as u64
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin, valid for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Kronecker symbol (a/b) with the standard conventions at 2, −1, and 0.
pub fn kronecker(a: i64, b: i64) -> i64 {
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let mut a = a as i128;
    let mut b = b as i128;
    let mut k = 1i64;
    // strip twos from b; (a/2) = 0, ±1 by a mod 8
    let mut v = 0;
    while b % 2 == 0 {
        b /= 2;
        v += 1;
    }
    if v % 2 == 1 {
        let m = a.rem_euclid(8);
        if m == 3 || m == 5 {
            k = -k;
        }
    }
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    // now b odd positive: Jacobi
    a = a.rem_euclid(b);
    while a != 0 {
        let mut v = 0;
        while a % 2 == 0 {
            a /= 2;
            v += 1;
        }
        if v % 2 == 1 {
            let m = b.rem_euclid(8);
            if m == 3 || m == 5 {
                k = -k;
            }
        }
        if a.rem_euclid(4) == 3 && b.rem_euclid(4) == 3 {
            k = -k;
        }
        let t = a;
        a = b.rem_euclid(t);
        b = t;
    }
    if b == 1 {
        k
    } else {
        0
    }
}

fn is_squarefree(n: u64) -> bool {
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// Fundamental discriminant test for d < 0 (or any nonzero d).
pub fn is_fundamental(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let m4 = d.rem_euclid(4);
    if m4 == 1 {
        is_squarefree(d.unsigned_abs())
    } else if m4 == 0 {
        let q = d / 4;
        let qm = q.rem_euclid(4);
        (qm == 2 || qm == 3) && is_squarefree(q.unsigned_abs())
    } else {
        false
    }
}

fn check_definite(f: &QuadForm) -> Result<i64> {
    let d = f.disc();
    if d >= 0 {
        return Err(Error::Domain(format!(
            "form [{},{},{}] has non-negative discriminant {d}",
            f.a, f.b, f.c
        )));
    }
    if f.a <= 0 {
        return Err(Error::Domain(format!(
            "definite form needs A > 0, got {}",
            f.a
        )));
    }
    if !f.is_primitive() {
        return Err(Error::Domain(format!(
            "form [{},{},{}] is not primitive",
            f.a, f.b, f.c
        )));
    }
    Ok(d)
}

/// Unique reduced representative (|B| ≤ A ≤ C, B ≥ 0 when |B| = A or A = C)
/// of the proper equivalence class of a positive definite form.
pub fn reduce_definite(f: &QuadForm) -> Result<QuadForm> {
    let d = check_definite(f)? as i128;
    let (mut a, mut b, mut c) = (f.a as i128, f.b as i128, f.c as i128);
    loop {
        if b > a || b <= -a {
            let k = (b + a).div_euclid(2 * a);
            b -= 2 * a * k;
            if b == -a {
                b = a;
            }
            c = (b * b - d) / (4 * a);
        }
        if a > c {
            (a, b, c) = (c, -b, a);
            continue;
        }
        break;
    }
    if b < 0 && a == c {
        b = -b;
    }
    Ok(QuadForm::new(a as i64, b as i64, c as i64))
}

fn valid_disc_neg(d: i64) -> Result<()> {
    if d >= 0 || !(d.rem_euclid(4) == 0 || d.rem_euclid(4) == 1) {
        return Err(Error::Domain(format!(
            "{d} is not a negative discriminant"
        )));
    }
    Ok(())
}

/// Principal form of discriminant d < 0.
pub fn principal_form(d: i64) -> QuadForm {
    let b = d.rem_euclid(2);
    QuadForm::new(1, b, (b * b - d) / 4)
}

/// All reduced primitive forms of discriminant d < 0, sorted; its length is
/// the class number h(d).
pub fn class_group(d: i64) -> Result<Vec<QuadForm>> {
    valid_disc_neg(d)?;
    let mut out = Vec::new();
    let bmax = isqrt((d.unsigned_abs()) / 3) as i64;
    let parity = d.rem_euclid(2);
    let mut b = parity;
    while b <= bmax {
        let m = ((b as i128 * b as i128 - d as i128) / 4) as i64;
        let mut a = if b > 0 { b } else { 1 };
        while a as i128 * a as i128 <= m as i128 {
            if m % a == 0 {
                let c = m / a;
                if gcd_i(gcd_i(a, b), c) == 1 {
                    out.push(QuadForm::new(a, b, c));
                    if b > 0 && b < a && a < c {
                        out.push(QuadForm::new(a, -b, c));
                    }
                }
            }
            a += 1;
        }
        b += 2;
    }
    out.sort();
    Ok(out)
}

/// Replace g by a properly equivalent form whose leading coefficient is
/// coprime to m.
fn coprime_rep(g: &QuadForm, m: i64) -> Result<QuadForm> {
    if gcd_i(g.a, m) == 1 {
        return Ok(*g);
    }
    for r in 1..=64i64 {
        for x in -r..=r {
            for y in -r..=r {
                if x.abs() != r && y.abs() != r {
                    continue;
                }
                if gcd_i(x, y) != 1 {
                    continue;
                }
                let v = g.eval(x, y);
                if v == 0 || gcd_i(v, m) != 1 {
                    continue;
                }
                let (_, s, t) = ext_gcd(x as i128, y as i128);
                // x·s + y·t = 1, so columns (x,y),(−t,s) have det 1
                let (u, w) = ((-t) as i64, s as i64);
                let aa = v;
                let cc = g.eval(u, w);
                let bb = 2 * g.a as i128 * x as i128 * u as i128
                    + g.b as i128 * (x as i128 * w as i128 + u as i128 * y as i128)
                    + 2 * g.c as i128 * y as i128 * w as i128;
                let out = QuadForm::new(aa, i64::try_from(bb).map_err(|_| {
                    Error::Validation("composition intermediate overflows i64".into())
                })?, cc);
                debug_assert_eq!(out.disc(), g.disc());
                return Ok(out);
            }
        }
    }
    Err(Error::Domain(
        "no representative with leading coefficient coprime to modulus".into(),
    ))
}

/// Dirichlet composition of two definite forms of equal discriminant,
/// returned reduced. The principal form is the identity and [A,−B,C]
/// the inverse.
pub fn compose(f: &QuadForm, g: &QuadForm) -> Result<QuadForm> {
    let d = check_definite(f)?;
    let dg = check_definite(g)?;
    if d != dg {
        return Err(Error::Domain(format!(
            "discriminant mismatch: {d} vs {dg}"
        )));
    }
    let g2 = coprime_rep(g, f.a)?;
    let (a1, b1) = (f.a as i128, f.b as i128);
    let (a2, b2) = (g2.a as i128, g2.b as i128);
    let inv = mod_inv(a1, a2.abs().max(1))
        .ok_or_else(|| Error::Validation("leading coefficients not coprime".into()))?;
    let t = ((b2 - b1) / 2).rem_euclid(a2) * inv % a2;
    let aa = a1 * a2;
    let mut bb = (b1 + 2 * a1 * t).rem_euclid(2 * aa);
    if bb > aa {
        bb -= 2 * aa;
    }
    let cc = (bb * bb - d as i128) / (4 * aa);
    let to_i64 = |v: i128| {
        i64::try_from(v)
            .map_err(|_| Error::Validation("composition result overflows i64".into()))
    };
    reduce_definite(&QuadForm::new(to_i64(aa)?, to_i64(bb)?, to_i64(cc)?))
}

/// All Heegner pairs (D, r) for level n with fundamental −dmax ≤ D < 0,
/// one representative r ∈ [0, N] per square-root class mod 2N.
pub fn heegner_pairs(n: u64, dmax: i64) -> Vec<HeegnerPair> {
    let mut out = Vec::new();
    let four_n = 4i128 * n as i128;
    for dd in 3..=dmax {
        let d = -dd;
        if !is_fundamental(d) {
            continue;
        }
        let target = (d as i128).rem_euclid(four_n);
        for r in 0..=n {
            if (r as i128 * r as i128).rem_euclid(four_n) == target {
                let r_conj = (2 * n - r) % (2 * n);
                out.push(HeegnerPair { n, d, r, r_conj });
            }
        }
    }
    out
}

fn validate_pair(pair: &HeegnerPair) -> Result<()> {
    let four_n = 4i128 * pair.n as i128;
    let lhs = (pair.r as i128 * pair.r as i128).rem_euclid(four_n);
    let rhs = (pair.d as i128).rem_euclid(four_n);
    if lhs != rhs {
        return Err(Error::Domain(format!(
            "Heegner condition fails: {}² ≡ {} (mod {}), need {}",
            pair.r, lhs, four_n, rhs
        )));
    }
    if !is_fundamental(pair.d) || pair.d >= 0 {
        return Err(Error::Domain(format!(
            "{} is not a fundamental negative discriminant",
            pair.d
        )));
    }
    Ok(())
}

/// One concordant form [A,B,C] with N|A, B ≡ r (mod 2N) per class of
/// Pic(O_D); reduction gives a bijection with class_group(D).
pub fn heegner_forms(pair: &HeegnerPair) -> Result<Vec<QuadForm>> {
    validate_pair(pair)?;
    let n = pair.n as i128;
    let d = pair.d as i128;
    let r = pair.r as i128;
    let mut out = Vec::new();
    for cls in class_group(pair.d)? {
        let (mut a, mut b) = (cls.a, cls.b);
        if gcd(a.unsigned_abs(), pair.n) != 1 {
            // equivalent form [C,−B,A]; A and C cannot share the prime level
            if gcd(cls.c.unsigned_abs(), pair.n) != 1 {
                return Err(Error::Domain(
                    "class has no representative prime to the level".into(),
                ));
            }
            a = cls.c;
            b = -cls.b;
        }
        let (a, b) = (a as i128, b as i128);
        let inv = mod_inv(n, a).ok_or_else(|| {
            Error::Validation("level not invertible modulo leading coefficient".into())
        })?;
        let k = (((b - r) / 2).rem_euclid(a) * inv).rem_euclid(a);
        let big_a = n * a;
        let mut big_b = (r + 2 * n * k).rem_euclid(2 * big_a);
        if big_b > big_a {
            big_b -= 2 * big_a;
        }
        let big_c = (big_b * big_b - d) / (4 * big_a);
        let to_i64 = |v: i128| {
            i64::try_from(v)
                .map_err(|_| Error::Validation("Heegner form overflows i64".into()))
        };
        out.push(QuadForm::new(to_i64(big_a)?, to_i64(big_b)?, to_i64(big_c)?));
    }
    Ok(out)
}

/// Least (x, y), both positive, with x² − Δ·y² = 1, via the continued
/// fraction of √Δ.
pub fn pell_fundamental(delta: i64) -> Result<(Integer, Integer)> {
    if delta <= 0 || is_square(delta) {
        return Err(Error::Domain(format!(
            "Pell needs a positive non-square, got {delta}"
        )));
    }
    let a0 = isqrt(delta as u64) as i64;
    let (mut m, mut den, mut a) = (0i64, 1i64, a0);
    let (mut p_prev, mut p) = (Integer::from(1), Integer::from(a0));
    let (mut q_prev, mut q) = (Integer::from(0), Integer::from(1));
    for _ in 0..4_000_000u64 {
        let lhs = p.clone() * &p - Integer::from(delta) * q.clone() * &q;
        if lhs == 1 {
            return Ok((p, q));
        }
        m = den * a - m;
        den = (delta - m * m) / den;
        a = (a0 + m) / den;
        let p_next = Integer::from(a) * &p + &p_prev;
        let q_next = Integer::from(a) * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    Err(Error::Precision(format!(
        "continued fraction of √{delta} exceeded the iteration budget"
    )))
}

/// Fundamental automorph M_Q = (x−By, −2Cy; 2Ay, x+By) of an indefinite
/// form with N | A; lies in Γ₀(N), det 1, eigenvalue x + y√Δ > 1.
#[derive(Debug, Clone)]
pub struct Automorph {
    pub m: [[Integer; 2]; 2],
    pub x: Integer,
    pub y: Integer,
}

pub fn fundamental_automorph(q: &QuadForm, n: u64) -> Result<Automorph> {
    let delta = q.disc();
    if delta <= 0 || is_square(delta) {
        return Err(Error::Domain(format!(
            "automorph needs indefinite non-square discriminant, got {delta}"
        )));
    }
    if n == 0 || q.a.rem_euclid(n as i64) != 0 {
        return Err(Error::Domain(format!(
            "level {} does not divide leading coefficient {}",
            n, q.a
        )));
    }
    let (x, y) = pell_fundamental(delta)?;
    let m00 = x.clone() - Integer::from(q.b) * &y;
    let m01 = Integer::from(-2 * q.c) * &y;
    let m10 = Integer::from(2 * q.a) * &y;
    let m11 = x.clone() + Integer::from(q.b) * &y;
    Ok(Automorph {
        m: [[m00, m01], [m10, m11]],
        x,
        y,
    })
}

/// Generalised genus character χ_{D0}(Q) for Q = [A,B,C] with N | A and
/// discriminant Δ = D0·D1: zero when gcd(A/N, B, C, D0) > 1, otherwise the
/// Kronecker symbol (D0/n) at a represented value n coprime to D0.
pub fn genus_character(d0: i64, q: &QuadForm, n: u64) -> Result<i64> {
    let delta = q.disc();
    if d0 == 0
        || !(d0.rem_euclid(4) == 0 || d0.rem_euclid(4) == 1)
        || delta % d0 != 0
        || !((delta / d0).rem_euclid(4) == 0 || (delta / d0).rem_euclid(4) == 1)
    {
        return Err(Error::Domain(format!(
            "{d0} does not split discriminant {delta} into two discriminants"
        )));
    }
    if n == 0 || q.a.rem_euclid(n as i64) != 0 {
        return Err(Error::Domain(format!(
            "level {} does not divide leading coefficient {}",
            n, q.a
        )));
    }
    if d0 == 1 {
        return Ok(1);
    }
    let a_over_n = q.a / n as i64;
    let g = gcd(
        gcd(a_over_n.unsigned_abs(), q.b.unsigned_abs()),
        gcd(q.c.unsigned_abs(), d0.unsigned_abs()),
    );
    if g > 1 {
        return Ok(0);
    }
    // represented value of [A/N', B, C·N'] coprime to D0; N' = N
    let form = QuadForm::new(a_over_n, q.b, q.c.checked_mul(n as i64).ok_or_else(|| {
        Error::Validation("genus character form overflows i64".into())
    })?);
    for r in 1..=50i64 {
        for x in -r..=r {
            for y in -r..=r {
                if x.abs() != r && y.abs() != r {
                    continue;
                }
                let v = form.eval(x, y);
                if v != 0 && gcd_i(v, d0) == 1 {
                    return Ok(kronecker(d0, v));
                }
            }
        }
    }
    Err(Error::Domain(
        "no represented value coprime to D0 within the search bound".into(),
    ))
}

fn valid_disc_pos(d: i64) -> Result<()> {
    if d <= 0 || !(d.rem_euclid(4) == 0 || d.rem_euclid(4) == 1) || is_square(d) {
        return Err(Error::Domain(format!(
            "{d} is not a positive non-square discriminant"
        )));
    }
    Ok(())
}

/// All reduced primitive indefinite forms of discriminant Δ > 0:
/// 0 < B < √Δ and |√Δ − 2|A|| < B.
fn reduced_indefinite_forms(delta: i64) -> Vec<(i64, i64, i64)> {
    let s = isqrt(delta as u64) as i64;
    let mut out = Vec::new();
    for b in 1..=s {
        if (delta - b * b) % 4 != 0 {
            continue;
        }
        if b * b >= delta {
            continue;
        }
        let p = (delta - b * b) / 4; // = −AC > 0
        if p == 0 {
            continue;
        }
        let mut d = 1i64;
        while d * d <= p {
            if p % d == 0 {
                for a_abs in [d, p / d] {
                    let ok_hi = delta < (b + 2 * a_abs) * (b + 2 * a_abs);
                    let ok_lo = 2 * a_abs - b <= 0 || (2 * a_abs - b) * (2 * a_abs - b) < delta;
                    if !(ok_hi && ok_lo) {
                        continue;
                    }
                    for a in [a_abs, -a_abs] {
                        let c = -(p / a);
                        if gcd_i(gcd_i(a, b), c) == 1 {
                            out.push((a, b, c));
                        }
                    }
                }
            }
            d += 1;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Reduction neighbour ρ(A,B,C) = (C, B', (B'²−Δ)/(4C)) with B' ≡ −B
/// (mod 2|C|) pushed into (√Δ − 2|C|, √Δ].
fn rho(f: (i64, i64, i64), delta: i64) -> (i64, i64, i64) {
    let (_, b, c) = f;
    let s = isqrt(delta as u64) as i64;
    let two_c = 2 * c.abs();
    let r = (-b).rem_euclid(two_c);
    let k = (s - r).div_euclid(two_c);
    let bp = r + k * two_c;
    let cp = ((bp as i128 * bp as i128 - delta as i128) / (4 * c as i128)) as i64;
    (c, bp, cp)
}

fn form_cycles(delta: i64) -> Vec<Vec<(i64, i64, i64)>> {
    let forms = reduced_indefinite_forms(delta);
    let mut seen: HashSet<(i64, i64, i64)> = HashSet::new();
    let mut cycles = Vec::new();
    for &f in &forms {
        if seen.contains(&f) {
            continue;
        }
        let mut cycle = Vec::new();
        let mut g = f;
        loop {
            seen.insert(g);
            cycle.push(g);
            g = rho(g, delta);
            if g == f {
                break;
            }
        }
        cycles.push(cycle);
    }
    cycles
}

/// Class number of primitive indefinite forms of discriminant Δ in the
/// wide (ordinary) sense: reduction cycles, halved when the principal
/// cycle contains no form with leading coefficient −1.
pub fn indefinite_class_number(delta: i64) -> Result<u64> {
    valid_disc_pos(delta)?;
    let cycles = form_cycles(delta);
    let s = isqrt(delta as u64) as i64;
    let b0 = if (s - delta).rem_euclid(2) == 0 { s } else { s - 1 };
    let pf = (1i64, b0, (b0 * b0 - delta) / 4);
    let pcycle = cycles
        .iter()
        .find(|c| c.contains(&pf))
        .ok_or_else(|| Error::Validation(format!("principal form missing for Δ={delta}")))?;
    let h_plus = cycles.len() as u64;
    if pcycle.iter().any(|&(a, _, _)| a == -1) {
        Ok(h_plus)
    } else if h_plus % 2 == 0 {
        Ok(h_plus / 2)
    } else {
        Err(Error::Validation(format!(
            "odd cycle count {h_plus} without a norm −1 unit for Δ={delta}"
        )))
    }
}

/// Ogg's count of connected components of X₀⁺(N)(ℝ) for prime N.
pub fn nu(n: u64) -> Result<u64> {
    if !is_prime(n) {
        return Err(Error::Domain(format!("nu is defined for prime levels, got {n}")));
    }
    let h4n = indefinite_class_number(4 * n as i64)?;
    if n % 4 == 1 {
        let hn = indefinite_class_number(n as i64)?;
        Ok((h4n + hn) / 2)
    } else {
        Ok((h4n + 1) / 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_fixes_reduced_forms() {
        let f = QuadForm::new(1, 1, 6);
        assert_eq!(reduce_definite(&f).unwrap(), f);
        let g = QuadForm::new(2, -1, 3);
        assert_eq!(reduce_definite(&g).unwrap(), g);
    }

    #[test]
    fn reduction_is_class_invariant_under_unimodular_action() {
        // deterministic LCG over small SL2 words
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as i64
        };
        for f in class_group(-71).unwrap() {
            let reduced = reduce_definite(&f).unwrap();
            let (mut p, mut q, mut r, mut s) = (1i64, 0, 0, 1);
            for _ in 0..6 {
                let k = next() % 5 - 2;
                if next() % 2 == 0 {
                    // T^k
                    q += p * k;
                    s += r * k;
                } else {
                    // S
                    let (np, nq) = (q, -p);
                    let (nr, ns) = (s, -r);
                    p = np;
                    q = nq;
                    r = nr;
                    s = ns;
                }
            }
            assert_eq!(p * s - q * r, 1);
            let aa = f.eval(p, r);
            let cc = f.eval(q, s);
            let bb = 2 * f.a * p * q + f.b * (p * s + q * r) + 2 * f.c * r * s;
            if aa <= 0 {
                continue;
            }
            let transformed = QuadForm::new(aa, bb, cc);
            assert_eq!(transformed.disc(), f.disc());
            assert_eq!(reduce_definite(&transformed).unwrap(), reduced);
        }
    }

    #[test]
    fn class_groups_match_known_counts() {
        assert_eq!(class_group(-4).unwrap(), vec![QuadForm::new(1, 0, 1)]);
        let h23 = class_group(-23).unwrap();
        assert_eq!(h23.len(), 3);
        assert!(h23.contains(&QuadForm::new(1, 1, 6)));
        assert!(h23.contains(&QuadForm::new(2, 1, 3)));
        assert!(h23.contains(&QuadForm::new(2, -1, 3)));
        assert_eq!(class_group(-163).unwrap().len(), 1);
    }

    #[test]
    fn class_group_counts_match_brute_force_spot() {
        for d in [-3i64, -4, -7, -8, -20, -23, -47, -71, -95, -163, -427] {
            let h = class_group(d).unwrap().len();
            // brute force over |B| ≤ A ≤ C
            let mut count = 0usize;
            for a in 1..=isqrt(d.unsigned_abs() / 3) as i64 + 1 {
                for b in -a..=a {
                    if (b * b - d) % (4 * a) != 0 {
                        continue;
                    }
                    let c = (b * b - d) / (4 * a);
                    if c < a {
                        continue;
                    }
                    if b < 0 && (a == c || -b == a) {
                        continue;
                    }
                    if gcd_i(gcd_i(a, b), c) == 1 {
                        count += 1;
                    }
                }
            }
            assert_eq!(h, count, "class number mismatch at D={d}");
        }
    }

    #[test]
    fn composition_realizes_the_class_group() {
        let d = -23;
        let e = principal_form(d);
        let f = QuadForm::new(2, 1, 3);
        let g = QuadForm::new(2, -1, 3);
        assert_eq!(compose(&f, &e).unwrap(), f);
        assert_eq!(compose(&f, &g).unwrap(), QuadForm::new(1, 1, 6));
        // inverse: [A,−B,C]
        for h in class_group(d).unwrap() {
            let inv = reduce_definite(&QuadForm::new(h.a, -h.b, h.c)).unwrap();
            assert_eq!(compose(&h, &inv).unwrap(), e);
        }
    }

    #[test]
    fn composition_is_associative_on_minus71() {
        let classes = class_group(-71).unwrap();
        assert_eq!(classes.len(), 7);
        for i in 0..classes.len() {
            for j in 0..classes.len() {
                for k in [0usize, 3, 5] {
                    let ab_c = compose(&compose(&classes[i], &classes[j]).unwrap(), &classes[k])
                        .unwrap();
                    let a_bc = compose(&classes[i], &compose(&classes[j], &classes[k]).unwrap())
                        .unwrap();
                    assert_eq!(ab_c, a_bc);
                }
            }
        }
    }

    #[test]
    fn composition_closes_on_the_class_list() {
        let classes = class_group(-47).unwrap();
        for f in &classes {
            for g in &classes {
                let h = compose(f, g).unwrap();
                assert!(classes.contains(&h));
            }
        }
    }

    #[test]
    fn heegner_pairs_for_level_37() {
        let pairs = heegner_pairs(37, 163);
        assert_eq!(pairs.len(), 26);
        assert!(pairs.iter().any(|p| p.d == -4 && p.r == 12 && p.r_conj == 62));
        // ramified pairs at the level itself
        assert!(pairs.iter().any(|p| p.d == -111 && p.r == 37 && p.r_conj == 37));
        assert!(pairs.iter().any(|p| p.d == -148 && p.r == 0 && p.r_conj == 0));
        // non-fundamental discriminants never appear
        assert!(pairs.iter().all(|p| p.d != -12));
        // every pair re-checks its congruence
        for p in &pairs {
            let four_n = 4 * p.n as i128;
            assert_eq!(
                (p.r as i128 * p.r as i128).rem_euclid(four_n),
                (p.d as i128).rem_euclid(four_n)
            );
        }
    }

    #[test]
    fn heegner_pair_counts_for_survey_levels() {
        assert_eq!(heegner_pairs(359, 163).len(), 25);
        assert_eq!(heegner_pairs(3797, 163).len(), 28);
        assert_eq!(heegner_pairs(4159, 163).len(), 29);
        assert_eq!(heegner_pairs(35083, 163).len(), 25);
    }

    #[test]
    fn heegner_forms_represent_every_class_once() {
        let pair = HeegnerPair { n: 37, d: -4, r: 12, r_conj: 62 };
        let forms = heegner_forms(&pair).unwrap();
        assert_eq!(forms, vec![QuadForm::new(37, 12, 1)]);

        let pair = HeegnerPair { n: 37, d: -95, r: 33, r_conj: 41 };
        let forms = heegner_forms(&pair).unwrap();
        let classes = class_group(-95).unwrap();
        assert_eq!(forms.len(), classes.len());
        let mut reduced: Vec<QuadForm> = forms
            .iter()
            .map(|f| reduce_definite(f).unwrap())
            .collect();
        reduced.sort();
        assert_eq!(reduced, classes);
        for f in &forms {
            assert_eq!(f.a.rem_euclid(37), 0);
            assert_eq!(f.b.rem_euclid(74), 33);
            assert_eq!(f.disc(), -95);
        }
    }

    #[test]
    fn pell_small_cases() {
        let (x, y) = pell_fundamental(5).unwrap();
        assert_eq!((x.to_i64().unwrap(), y.to_i64().unwrap()), (9, 4));
        let (x, y) = pell_fundamental(8).unwrap();
        assert_eq!((x.to_i64().unwrap(), y.to_i64().unwrap()), (3, 1));
        assert!(pell_fundamental(9).is_err());
    }

    #[test]
    fn automorph_matches_displayed_matrix() {
        let q = QuadForm::new(5, 5, 1);
        let m = fundamental_automorph(&q, 5).unwrap();
        let as_i64 = |v: &Integer| v.to_i64().unwrap();
        assert_eq!(as_i64(&m.m[0][0]), -11);
        assert_eq!(as_i64(&m.m[0][1]), -8);
        assert_eq!(as_i64(&m.m[1][0]), 40);
        assert_eq!(as_i64(&m.m[1][1]), 29);
    }

    #[test]
    fn automorph_det_one_and_gamma0_membership() {
        for (q, n) in [
            (QuadForm::new(37, 12, 1 - 41), 37u64),
            (QuadForm::new(74, 30, 3), 37),
            (QuadForm::new(43, 5, -2), 43),
        ] {
            let delta = q.disc();
            if delta <= 0 || is_square(delta) {
                continue;
            }
            let m = fundamental_automorph(&q, n).unwrap();
            let det = m.m[0][0].clone() * &m.m[1][1] - m.m[0][1].clone() * &m.m[1][0];
            assert_eq!(det, 1);
            assert!(m.m[1][0].is_divisible(&Integer::from(n)));
            // fixed point: A·(M·τ)² + B·(M·τ) + C = 0 as exact identity in ℚ(√Δ):
            // verify M fixes the root pair by the matrix identity M^T G M = G
            // where G is the Gram matrix (2A, B; B, 2C).
            let (a, b, c) = (Integer::from(q.a), Integer::from(q.b), Integer::from(q.c));
            let g = [
                [a.clone() * 2, b.clone()],
                [b.clone(), c.clone() * 2],
            ];
            let mut mt_g_m = [
                [Integer::new(), Integer::new()],
                [Integer::new(), Integer::new()],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = Integer::new();
                    for k in 0..2 {
                        for l in 0..2 {
                            acc += m.m[k][i].clone() * &g[k][l] * &m.m[l][j];
                        }
                    }
                    mt_g_m[i][j] = acc;
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(mt_g_m[i][j], g[i][j]);
                }
            }
        }
    }

    #[test]
    fn genus_character_conventions() {
        // splitting Δ = 12 = (−3)·(−4) at level 37, ρ = 30 (both factors
        // are squares mod 148, so the character is well defined)
        let q = QuadForm::new(37, 30, 6);
        assert_eq!(genus_character(1, &q, 37).unwrap(), 1);
        assert_eq!(genus_character(-3, &q, 37).unwrap(), 1);
        assert_eq!(genus_character(-4, &q, 37).unwrap(), 1);
        let q2 = QuadForm::new(37, 104, 73);
        assert_eq!(genus_character(-3, &q2, 37).unwrap(), 1);
        let q3 = QuadForm::new(74, 30, 3);
        assert_eq!(genus_character(-3, &q3, 37).unwrap(), -1);
        assert_eq!(genus_character(-4, &q3, 37).unwrap(), -1);
        // imprimitive with gcd(A/N, B, C, D0) = 3 kills the character
        let qz = QuadForm::new(6, 12, 3);
        assert_eq!(genus_character(-3, &qz, 2).unwrap(), 0);
        // invalid splitting is rejected
        assert!(genus_character(5, &q, 37).is_err());
        assert!(genus_character(-3, &q, 5).is_err());
    }

    #[test]
    fn genus_character_independent_of_represented_value() {
        // every represented value coprime to D0, for both divisors N' of N,
        // yields the same symbol
        let q = QuadForm::new(74, 30, 3);
        for d0 in [-3i64, -4] {
            let expect = genus_character(d0, &q, 37).unwrap();
            for form in [QuadForm::new(74, 30, 3), QuadForm::new(2, 30, 111)] {
                for x in -8i64..=8 {
                    for y in -8i64..=8 {
                        let v = form.eval(x, y);
                        if v != 0 && gcd_i(v, d0) == 1 {
                            assert_eq!(kronecker(d0, v), expect);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn kronecker_matches_legendre_for_odd_primes() {
        for p in [3i64, 5, 7, 11, 13, 37] {
            for a in 1..p {
                let mut is_qr = false;
                for x in 1..p {
                    if (x * x) % p == a {
                        is_qr = true;
                    }
                }
                assert_eq!(kronecker(a, p), if is_qr { 1 } else { -1 });
            }
            assert_eq!(kronecker(p, p), 0);
        }
        assert_eq!(kronecker(-4, 37), 1);
        assert_eq!(kronecker(-4, 43), -1);
    }

    #[test]
    fn indefinite_class_numbers_pin_the_convention() {
        assert_eq!(indefinite_class_number(5).unwrap(), 1);
        assert_eq!(indefinite_class_number(8).unwrap(), 1);
        assert_eq!(indefinite_class_number(1436).unwrap(), 3);
    }

    #[test]
    fn indefinite_cycles_partition_the_reduced_forms() {
        for delta in [5i64, 8, 13, 40, 145, 148, 1436] {
            let forms = reduced_indefinite_forms(delta);
            let cycles = form_cycles(delta);
            let total: usize = cycles.iter().map(|c| c.len()).sum();
            assert_eq!(total, forms.len());
            // rho maps reduced forms to reduced forms
            for &f in &forms {
                let g = rho(f, delta);
                assert!(forms.contains(&g), "rho left the reduced set: {f:?} -> {g:?} (Δ={delta})");
            }
        }
    }

    #[test]
    fn nu_known_values_fast_subset() {
        assert_eq!(nu(359).unwrap(), 2);
        assert_eq!(nu(37).unwrap(), 2);
        assert_eq!(nu(43).unwrap(), 1);
        assert_eq!(nu(61).unwrap(), 1);
        assert_eq!(nu(389).unwrap(), 2);
        assert!(nu(35084).is_err());
    }

    #[test]
    fn fundamentality_filter() {
        assert!(is_fundamental(-3));
        assert!(is_fundamental(-4));
        assert!(is_fundamental(-163));
        assert!(!is_fundamental(-12));
        assert!(!is_fundamental(-9));
        assert!(!is_fundamental(-16));
        assert!(is_fundamental(-104));
        assert!(!is_fundamental(-100));
    }
}
