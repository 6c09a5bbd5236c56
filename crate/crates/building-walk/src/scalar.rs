//! Exact scalar arithmetic.
//!
//! Three layers, all exact:
//!
//! * [`BigRational`] re-exported from `num-rational` for plain rational work,
//!   plus a safe [`ratio_to_f64`] that survives numerators far beyond the
//!   `f64` conversion range of the stock implementation.
//! * [`QExt`]: numbers of the form `a + b√q` with `a, b` rational and `q` a
//!   fixed positive integer. This field contains every exact quantity the
//!   walk produces at a concrete parameter `q` (transition probabilities,
//!   spectral radii, Green partial sums). When `q` is a perfect square the
//!   representation is normalized to `b = 0`, so comparisons and division
//!   stay exact in that degenerate case too.
//! * [`ScalarQ`]: Laurent polynomials in `u = q^{1/2}` with rational
//!   coefficients, used where quantities are kept symbolic in `q`
//!   (Poincaré polynomials, `q_{t_λ}` powers, vertex counts `N_λ`).

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Rational from an integer pair (panics on zero denominator).
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Rational from an integer.
pub fn ratio_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact integer power of a rational, with negative exponents meaning
/// reciprocal powers.
pub fn ratio_pow(base: &BigRational, exp: i64) -> BigRational {
    if exp == 0 {
        return BigRational::one();
    }
    let e = u32::try_from(exp.unsigned_abs()).expect("exponent out of range");
    let mag = BigRational::new(base.numer().pow(e), base.denom().pow(e));
    if exp > 0 {
        mag
    } else {
        mag.recip()
    }
}

/// Convert a rational of arbitrary magnitude to `f64`.
///
/// The numerator and denominator are shifted to at most 64 significant bits
/// before dividing, then the scale is restored with a power of two, so values
/// whose parts exceed the `f64` range still convert to the nearest
/// representable value (or ±inf when genuinely out of range).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.numer().sign() == Sign::Minus;
    let n = r.numer().magnitude().clone();
    let d = r.denom().magnitude().clone();
    let (nn, ne) = shift_to_64(n);
    let (dd, de) = shift_to_64(d);
    let val = (nn as f64) / (dd as f64) * pow2((ne - de) as i32);
    if neg {
        -val
    } else {
        val
    }
}

fn shift_to_64(x: BigUint) -> (u128, i64) {
    let bits = x.bits() as i64;
    if bits <= 64 {
        (x.to_u128().expect("fits"), 0)
    } else {
        let sh = (bits - 64) as u64;
        ((x >> sh).to_u128().expect("fits"), sh as i64)
    }
}

fn pow2(e: i32) -> f64 {
    // f64::powi saturates cleanly to 0/inf outside the representable range.
    2f64.powi(e)
}

fn int_isqrt(q: u32) -> Option<u32> {
    let s = (q as f64).sqrt().round() as u32;
    for c in s.saturating_sub(1)..=s + 1 {
        if c * c == q {
            return Some(c);
        }
    }
    None
}

/// Element of the quadratic extension `Q(√q)`: the value `a + b√q`.
///
/// `q ≥ 2` is carried in every value; mixing different `q` in one operation
/// is a programming error and panics. When `q` is a perfect square the value
/// is renormalized so `b = 0`, keeping the representation canonical.
#[derive(Clone, PartialEq, Eq)]
pub struct QExt {
    a: BigRational,
    b: BigRational,
    q: u32,
}

impl QExt {
    pub fn new(a: BigRational, b: BigRational, q: u32) -> Self {
        assert!(q >= 2, "parameter q must be at least 2");
        let mut v = QExt { a, b, q };
        if let Some(s) = int_isqrt(q) {
            if !v.b.is_zero() {
                v.a += std::mem::replace(&mut v.b, BigRational::zero())
                    * BigRational::from_integer(BigInt::from(s));
            }
        }
        v
    }

    pub fn zero(q: u32) -> Self {
        Self::new(BigRational::zero(), BigRational::zero(), q)
    }

    pub fn one(q: u32) -> Self {
        Self::new(BigRational::one(), BigRational::zero(), q)
    }

    pub fn from_ratio(a: BigRational, q: u32) -> Self {
        Self::new(a, BigRational::zero(), q)
    }

    pub fn from_int(n: i64, q: u32) -> Self {
        Self::from_ratio(ratio_int(n), q)
    }

    /// The generator `√q` itself.
    pub fn sqrt_q(q: u32) -> Self {
        Self::new(BigRational::zero(), BigRational::one(), q)
    }

    /// `q^{k/2}` for integer (possibly negative, possibly odd) `k`:
    /// the exact half-integer powers of `q` that normalizations
    /// `q_{t_λ}^{±1/2}` produce.
    pub fn q_half_pow(q: u32, k: i64) -> Self {
        let qr = ratio_int(q as i64);
        let m = k.div_euclid(2);
        let rem = k.rem_euclid(2);
        let base = ratio_pow(&qr, m);
        if rem == 0 {
            Self::from_ratio(base, q)
        } else {
            Self::new(BigRational::zero(), base, q)
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }
    pub fn sqrt_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.q, other.q, "mixed q parameters in QExt arithmetic");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        QExt {
            a: &self.a + &other.a,
            b: &self.b + &other.b,
            q: self.q,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        QExt {
            a: &self.a - &other.a,
            b: &self.b - &other.b,
            q: self.q,
        }
    }

    pub fn neg(&self) -> Self {
        QExt {
            a: -self.a.clone(),
            b: -self.b.clone(),
            q: self.q,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let qr = ratio_int(self.q as i64);
        QExt {
            a: &self.a * &other.a + (&self.b * &other.b) * &qr,
            b: &self.a * &other.b + &self.b * &other.a,
            q: self.q,
        }
    }

    pub fn mul_ratio(&self, r: &BigRational) -> Self {
        QExt {
            a: &self.a * r,
            b: &self.b * r,
            q: self.q,
        }
    }

    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "division by zero in Q(√q)");
        if self.b.is_zero() {
            return QExt {
                a: self.a.clone().recip(),
                b: BigRational::zero(),
                q: self.q,
            };
        }
        // q is not a perfect square here (else b was normalized away), so
        // the norm a² − b²q cannot vanish for a nonzero element.
        let qr = ratio_int(self.q as i64);
        let norm = &self.a * &self.a - (&self.b * &self.b) * &qr;
        assert!(!norm.is_zero(), "vanishing norm for nonzero element");
        QExt {
            a: &self.a / &norm,
            b: -(&self.b / &norm),
            q: self.q,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv())
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut acc = QExt::one(self.q);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exact sign of the real number `a + b√q`.
    pub fn sign(&self) -> Ordering {
        if self.b.is_zero() {
            return self.a.cmp(&BigRational::zero());
        }
        if self.a.is_zero() {
            return self.b.cmp(&BigRational::zero());
        }
        let sa = self.a.is_positive();
        let sb = self.b.is_positive();
        if sa == sb {
            return if sa { Ordering::Greater } else { Ordering::Less };
        }
        // Signs differ: compare |a| with |b|√q via squares.
        let qr = ratio_int(self.q as i64);
        let lhs = &self.a * &self.a;
        let rhs = (&self.b * &self.b) * &qr;
        match lhs.cmp(&rhs) {
            Ordering::Equal => unreachable!("√q irrational here"),
            Ordering::Greater => {
                if sa {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            Ordering::Less => {
                if sb {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }
    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.a) + ratio_to_f64(&self.b) * (self.q as f64).sqrt()
    }

    /// The four integers `(a_num, a_den, b_num, b_den)` as decimal strings,
    /// the lossless serialization used by reports.
    pub fn quadruple_strings(&self) -> (String, String, String, String) {
        (
            self.a.numer().to_string(),
            self.a.denom().to_string(),
            self.b.numer().to_string(),
            self.b.denom().to_string(),
        )
    }
}

impl PartialOrd for QExt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QExt {
    fn cmp(&self, other: &Self) -> Ordering {
        self.check(other);
        self.sub(other).sign()
    }
}

impl fmt::Debug for QExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for QExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}·√{}", self.b, self.q)
        } else {
            write!(f, "{} + {}·√{}", self.a, self.b, self.q)
        }
    }
}

/// Laurent polynomial in `u = q^{1/2}` with rational coefficients,
/// keyed by the power of `u` (so even keys are integer powers of `q`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ScalarQ {
    terms: BTreeMap<i32, BigRational>,
}

impl ScalarQ {
    pub fn zero() -> Self {
        ScalarQ {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::u_pow(0)
    }

    pub fn from_ratio(r: BigRational) -> Self {
        let mut s = Self::zero();
        if !r.is_zero() {
            s.terms.insert(0, r);
        }
        s
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_ratio(ratio_int(n))
    }

    /// The monomial `u^k`.
    pub fn u_pow(k: i32) -> Self {
        let mut s = Self::zero();
        s.terms.insert(k, BigRational::one());
        s
    }

    /// The monomial `q^k = u^{2k}`.
    pub fn q_pow(k: i32) -> Self {
        Self::u_pow(2 * k)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: i32) -> BigRational {
        self.terms.get(&k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i32, &BigRational)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            let e = out.terms.entry(*k).or_insert_with(BigRational::zero);
            *e += c;
            if e.is_zero() {
                out.terms.remove(k);
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        ScalarQ {
            terms: self.terms.iter().map(|(k, c)| (*k, -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let k = k1 + k2;
                let e = out.terms.entry(k).or_insert_with(BigRational::zero);
                *e += c1 * c2;
                if e.is_zero() {
                    out.terms.remove(&k);
                }
            }
        }
        out
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        ScalarQ {
            terms: self.terms.iter().map(|(k, c)| (*k, c * r)).collect(),
        }
    }

    /// Exact quotient; panics unless `other` divides `self` exactly.
    pub fn div_exact(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero ScalarQ");
        if self.is_zero() {
            return Self::zero();
        }
        let (dk, dc) = other
            .terms
            .iter()
            .next_back()
            .map(|(k, c)| (*k, c.clone()))
            .expect("nonzero divisor");
        let mut rem = self.clone();
        let mut quot = Self::zero();
        // Top-degree elimination strictly lowers the remainder's top degree,
        // so an exact quotient finishes within the degree span plus one.
        let span = {
            let top = *rem.terms.keys().next_back().unwrap();
            let bot = *rem.terms.keys().next().unwrap();
            let dbot = *other.terms.keys().next().unwrap();
            ((top - bot) + (dk - dbot) + 2) as usize
        };
        for _ in 0..span {
            if rem.is_zero() {
                return quot;
            }
            let (rk, rc) = rem
                .terms
                .iter()
                .next_back()
                .map(|(k, c)| (*k, c.clone()))
                .unwrap();
            let t_k = rk - dk;
            let t_c = &rc / &dc;
            let term = Self::u_pow(t_k).scale(&t_c);
            quot = quot.add(&term);
            rem = rem.sub(&term.mul(other));
        }
        assert!(rem.is_zero(), "ScalarQ division was not exact");
        quot
    }

    /// Evaluate at `u = √q` for a concrete integer `q`, landing in `Q(√q)`.
    pub fn eval_sqrt_q(&self, q: u32) -> QExt {
        let qr = ratio_int(q as i64);
        let mut a = BigRational::zero();
        let mut b = BigRational::zero();
        for (k, c) in &self.terms {
            let m = (*k as i64).div_euclid(2);
            let rem = (*k as i64).rem_euclid(2);
            let p = ratio_pow(&qr, m) * c;
            if rem == 0 {
                a += p;
            } else {
                b += p;
            }
        }
        QExt::new(a, b, q)
    }
}

impl fmt::Display for ScalarQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "{}·u", c)?,
                _ => write!(f, "{}·u^{}", c, k)?,
            }
        }
        Ok(())
    }
}

/// Coefficient ring abstraction for Laurent polynomials on the weight
/// lattice: instantiated with plain rationals (kernel counting, identity
/// checks) and with [`ScalarQ`] (symbolic-in-q expansions).
pub trait Coeff: Clone + PartialEq {
    fn c_zero() -> Self;
    fn c_one() -> Self;
    fn c_is_zero(&self) -> bool;
    fn c_add(&self, other: &Self) -> Self;
    fn c_sub(&self, other: &Self) -> Self;
    fn c_mul(&self, other: &Self) -> Self;
    fn c_neg(&self) -> Self;
    fn c_from_ratio(r: &BigRational) -> Self;
}

impl Coeff for BigRational {
    fn c_zero() -> Self {
        BigRational::zero()
    }
    fn c_one() -> Self {
        BigRational::one()
    }
    fn c_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn c_add(&self, other: &Self) -> Self {
        self + other
    }
    fn c_sub(&self, other: &Self) -> Self {
        self - other
    }
    fn c_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn c_neg(&self) -> Self {
        -self.clone()
    }
    fn c_from_ratio(r: &BigRational) -> Self {
        r.clone()
    }
}

impl Coeff for ScalarQ {
    fn c_zero() -> Self {
        ScalarQ::zero()
    }
    fn c_one() -> Self {
        ScalarQ::one()
    }
    fn c_is_zero(&self) -> bool {
        ScalarQ::is_zero(self)
    }
    fn c_add(&self, other: &Self) -> Self {
        ScalarQ::add(self, other)
    }
    fn c_sub(&self, other: &Self) -> Self {
        ScalarQ::sub(self, other)
    }
    fn c_mul(&self, other: &Self) -> Self {
        ScalarQ::mul(self, other)
    }
    fn c_neg(&self) -> Self {
        ScalarQ::neg(self)
    }
    fn c_from_ratio(r: &BigRational) -> Self {
        ScalarQ::from_ratio(r.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_to_f64_handles_huge_parts() {
        let big: BigInt = BigInt::from(6u32).pow(400u32);
        let r = BigRational::new(big.clone(), big * BigInt::from(8u32));
        assert!((ratio_to_f64(&r) - 0.125).abs() < 1e-15);
        let tiny = BigRational::new(BigInt::one(), BigInt::from(2u32).pow(2000u32));
        assert_eq!(ratio_to_f64(&tiny), 0.0); // below f64 range
        assert_eq!(
            ratio_to_f64(&BigRational::new(BigInt::from(2u32).pow(2000u32), BigInt::one())),
            f64::INFINITY
        );
    }

    #[test]
    fn qext_field_ops() {
        let q = 2u32;
        let x = QExt::new(ratio(1, 3), ratio(2, 5), q); // 1/3 + (2/5)√2
        let y = QExt::new(ratio(-1, 2), ratio(1, 7), q);
        let prod = x.mul(&y);
        // (1/3 + 2/5 s)(-1/2 + 1/7 s), s² = 2:
        // a = -1/6 + (2/35)*2 = -1/6 + 4/35 = (-35 + 24)/210 = -11/210
        // b = 1/21 - 1/5 = (5 - 21)/105 = -16/105
        assert_eq!(prod.rational_part(), &ratio(-11, 210));
        assert_eq!(prod.sqrt_part(), &ratio(-16, 105));
        let back = prod.div(&y);
        assert_eq!(back, x);
        assert_eq!(x.mul(&x.inv()), QExt::one(q));
    }

    #[test]
    fn qext_square_q_normalizes() {
        // q = 4: √q = 2 is rational, so b collapses into a.
        let v = QExt::new(ratio(1, 1), ratio(3, 2), 4);
        assert!(v.is_rational());
        assert_eq!(v.rational_part(), &ratio(4, 1));
        let w = QExt::sqrt_q(4);
        assert_eq!(w, QExt::from_int(2, 4));
        assert_eq!(v.div(&w), QExt::from_ratio(ratio(2, 1), 4));
    }

    #[test]
    fn qext_exact_sign() {
        let q = 2;
        // 3 - 2√2 > 0 (since 9 > 8), 2√2 - 3 < 0.
        let v = QExt::new(ratio(3, 1), ratio(-2, 1), q);
        assert!(v.is_positive());
        assert!(v.neg().is_negative());
        // 7 - 5√2 < 0 (49 < 50)
        let w = QExt::new(ratio(7, 1), ratio(-5, 1), q);
        assert!(w.is_negative());
        assert_eq!(QExt::zero(q).sign(), Ordering::Equal);
        assert!(QExt::sqrt_q(2) > QExt::one(2));
        assert!(QExt::sqrt_q(2) < QExt::from_int(2, 2));
    }

    #[test]
    fn qext_half_powers() {
        let v = QExt::q_half_pow(3, 5); // 3^{5/2} = 9√3
        assert_eq!(v.rational_part(), &ratio(0, 1));
        assert_eq!(v.sqrt_part(), &ratio(9, 1));
        let w = QExt::q_half_pow(3, -3); // 3^{-3/2} = (1/9)√3... = √3/9? 3^{-3/2} = 1/(3√3) = √3/9
        assert_eq!(w.sqrt_part(), &ratio(1, 9));
        assert_eq!(w.rational_part(), &ratio(0, 1));
        assert_eq!(
            QExt::q_half_pow(2, 4),
            QExt::from_ratio(ratio(4, 1), 2)
        );
        assert_eq!(
            QExt::q_half_pow(2, -2),
            QExt::from_ratio(ratio(1, 2), 2)
        );
        // consistency: q_half_pow(q,1)² = q
        let s = QExt::q_half_pow(5, 1);
        assert_eq!(s.mul(&s), QExt::from_int(5, 5));
    }

    #[test]
    fn qext_pow_matches_repeated_mul() {
        let x = QExt::new(ratio(1, 2), ratio(1, 3), 3);
        let mut acc = QExt::one(3);
        for _ in 0..7 {
            acc = acc.mul(&x);
        }
        assert_eq!(acc, x.pow(7));
        assert_eq!(x.pow(0), QExt::one(3));
    }

    #[test]
    fn scalar_q_arithmetic_and_eval() {
        // (u + u^{-1})² = u² + 2 + u^{-2}
        let s = ScalarQ::u_pow(1).add(&ScalarQ::u_pow(-1));
        let sq = s.mul(&s);
        assert_eq!(sq.coeff(2), ratio(1, 1));
        assert_eq!(sq.coeff(0), ratio(2, 1));
        assert_eq!(sq.coeff(-2), ratio(1, 1));
        // evaluate at q=2: 2 + 2 + 1/2 = 9/2
        let v = sq.eval_sqrt_q(2);
        assert_eq!(v, QExt::from_ratio(ratio(9, 2), 2));
        // odd power: u³ at q=2 → 2√2
        assert_eq!(ScalarQ::u_pow(3).eval_sqrt_q(2), QExt::q_half_pow(2, 3));
        // u^{-1} at q=2 → √2/2
        assert_eq!(
            ScalarQ::u_pow(-1).eval_sqrt_q(2),
            QExt::new(ratio(0, 1), ratio(1, 2), 2)
        );
        // subtraction cancels cleanly
        assert!(s.sub(&s).is_zero());
    }

    #[test]
    fn scalar_q_exact_division() {
        // (u² + 1 + u^{-2})(u - u^{-3}) recovered by division
        let a = ScalarQ::u_pow(2).add(&ScalarQ::one()).add(&ScalarQ::u_pow(-2));
        let b = ScalarQ::u_pow(1).sub(&ScalarQ::u_pow(-3));
        let prod = a.mul(&b);
        assert_eq!(prod.div_exact(&a), b);
        assert_eq!(prod.div_exact(&b), a);
        assert_eq!(a.div_exact(&a), ScalarQ::one());
    }

    #[test]
    #[should_panic(expected = "not exact")]
    fn scalar_q_inexact_division_panics() {
        let a = ScalarQ::u_pow(2).add(&ScalarQ::one());
        let b = ScalarQ::u_pow(1).add(&ScalarQ::from_int(3));
        let _ = a.div_exact(&b);
    }
}
