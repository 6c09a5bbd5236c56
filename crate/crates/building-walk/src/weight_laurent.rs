//! Laurent polynomials on the `A_r` weight lattice: finite formal sums
//! `Σ c_μ e^μ` with coefficients in an exact ring.
//!
//! These are the algebra home of the step polynomial
//! `h = Σ_k Σ_{μ ∈ W₀λ_k} e^μ`, the Weyl denominator
//! `Δ = Σ_w det(w) e^{wρ} = e^ρ Π_{α>0}(1 − e^{−α})`, the image of the
//! differential operator `π(∂) = Π_{α>0} ∂_α` (which acts diagonally on
//! exponentials: `e^μ ↦ π(μ) e^μ`), and truncations of the geometric series
//! `b = Π_{α>0}(1 − q^{-1}e^{−α})^{-1}` whose coefficients are the
//! `q^{-1}`-weighted Kostant partition counts.
//!
//! Everything here is exact; the coefficient ring is either `BigRational`
//! or the symbolic [`ScalarQ`](crate::scalar::ScalarQ).

use crate::root_system::{RootSystem, Weight};
use crate::scalar::{ratio_int, Coeff, ScalarQ};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LaurentPoly<C: Coeff> {
    rank: usize,
    terms: BTreeMap<Weight, C>,
}

impl<C: Coeff> LaurentPoly<C> {
    pub fn zero(rank: usize) -> Self {
        LaurentPoly {
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(rank: usize) -> Self {
        Self::monomial(Weight::zero(rank), C::c_one())
    }

    pub fn monomial(w: Weight, c: C) -> Self {
        let rank = w.rank();
        let mut terms = BTreeMap::new();
        if !c.c_is_zero() {
            terms.insert(w, c);
        }
        LaurentPoly { rank, terms }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Weight, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, w: &Weight) -> C {
        self.terms.get(w).cloned().unwrap_or_else(C::c_zero)
    }

    fn insert_add(&mut self, w: Weight, c: C) {
        if c.c_is_zero() {
            return;
        }
        match self.terms.get_mut(&w) {
            Some(existing) => {
                let sum = existing.c_add(&c);
                if sum.c_is_zero() {
                    self.terms.remove(&w);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(w, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.insert_add(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        LaurentPoly {
            rank: self.rank,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), c.c_neg()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &C) -> Self {
        if s.c_is_zero() {
            return Self::zero(self.rank);
        }
        LaurentPoly {
            rank: self.rank,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), c.c_mul(s)))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        let mut out = Self::zero(self.rank);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.insert_add(w1.add(w2), c1.c_mul(c2));
            }
        }
        out
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut acc = Self::one(self.rank);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Push exponents through a Weyl element: `Σ c_μ e^{wμ}`.
    pub fn apply_weyl(&self, rs: &RootSystem, wi: usize) -> Self {
        let mut out = Self::zero(self.rank);
        for (w, c) in &self.terms {
            out.insert_add(rs.apply_weyl(wi, w), c.clone());
        }
        out
    }

    /// Image under the constant-coefficient operator `π(∂) = Π_{α>0} ∂_α`,
    /// which multiplies the coefficient of `e^μ` by `π(μ)`.
    pub fn pi_derivative(&self, rs: &RootSystem) -> Self {
        let mut out = Self::zero(self.rank);
        for (w, c) in &self.terms {
            let p = rs.pi_value(w);
            if p.is_zero() {
                continue;
            }
            let factor = C::c_from_ratio(&BigRational::from_integer(p));
            out.insert_add(w.clone(), c.c_mul(&factor));
        }
        out
    }

    /// Whether `f(wμ) = det(w) f(μ)` for every Weyl element.
    pub fn is_skew_symmetric(&self, rs: &RootSystem) -> bool {
        for wel in 0..rs.weyl_order() {
            let det = rs.weyl_elements()[wel].det;
            for (w, c) in &self.terms {
                let moved = rs.apply_weyl(wel, w);
                let expect = if det == 1 { c.clone() } else { c.c_neg() };
                if self.coeff(&moved) != expect {
                    return false;
                }
            }
        }
        true
    }

    /// Exact quotient by a divisor whose term maximal for `⟨·, ρ⟩` (with a
    /// lexicographic tie-break, though `Δ`'s maximum is strict) has
    /// coefficient one. Returns `None` when the division does not come out
    /// exact; on success the result is re-verified by multiplication.
    pub fn divide_exact(&self, rs: &RootSystem, denom: &Self) -> Option<Self> {
        assert_eq!(self.rank, denom.rank);
        assert!(!denom.is_zero());
        // Order terms by (r+1)·⟨μ, ρ⟩ — an integer linear functional strictly
        // maximized on Δ's support at ρ itself — then lexicographically.
        let n = rs.dim_ambient() as i64;
        let g: Vec<i64> = (1..=self.rank)
            .map(|i| {
                (1..=self.rank)
                    .map(|j| n * (i.min(j) as i64) - (i * j) as i64)
                    .sum()
            })
            .collect();
        let key = |w: &Weight| -> (i64, Weight) {
            let v: i64 = w.coords().iter().zip(&g).map(|(m, gi)| m * gi).sum();
            (v, w.clone())
        };
        let (lead_w, lead_c) = denom
            .terms
            .iter()
            .max_by(|(w1, _), (w2, _)| key(w1).cmp(&key(w2)))
            .map(|(w, c)| (w.clone(), c.clone()))?;
        assert!(
            lead_c == C::c_one(),
            "divisor must have unit leading coefficient"
        );
        let mut rem = self.clone();
        let mut quot = Self::zero(self.rank);
        let cap = 4 * (self.num_terms() + 1) * (denom.num_terms() + 1) + 64;
        for _ in 0..cap {
            if rem.is_zero() {
                // insurance: the quotient must reproduce the dividend
                if &quot.mul(denom) == self {
                    return Some(quot);
                }
                return None;
            }
            let (top_w, top_c) = rem
                .terms
                .iter()
                .max_by(|(w1, _), (w2, _)| key(w1).cmp(&key(w2)))
                .map(|(w, c)| (w.clone(), c.clone()))
                .unwrap();
            let shift = top_w.sub(&lead_w);
            let term = Self::monomial(shift, top_c);
            quot = quot.add(&term);
            rem = rem.sub(&term.mul(denom));
        }
        None
    }
}

/// The step polynomial `h = Σ_k c_k Σ_{μ ∈ W₀λ_k} e^μ` with one coefficient
/// per fundamental orbit.
pub fn h_step_poly<C: Coeff>(rs: &RootSystem, coeffs: &[C]) -> LaurentPoly<C> {
    assert_eq!(coeffs.len(), rs.rank());
    let mut out = LaurentPoly::zero(rs.rank());
    for k in 1..=rs.rank() {
        for mu in rs.orbit(&rs.fundamental(k)) {
            out.insert_add(mu, coeffs[k - 1].clone());
        }
    }
    out
}

/// Weyl denominator in its alternating-sum form `Σ_w det(w) e^{wρ}`.
pub fn weyl_denominator_sum<C: Coeff>(rs: &RootSystem) -> LaurentPoly<C> {
    let rho = rs.rho();
    let mut out = LaurentPoly::zero(rs.rank());
    for wi in 0..rs.weyl_order() {
        let det = rs.weyl_elements()[wi].det;
        let c = if det == 1 { C::c_one() } else { C::c_one().c_neg() };
        out.insert_add(rs.apply_weyl(wi, &rho), c);
    }
    out
}

/// Weyl denominator in its product form `e^ρ Π_{α>0}(1 − e^{−α})`.
pub fn weyl_denominator_product<C: Coeff>(rs: &RootSystem) -> LaurentPoly<C> {
    let mut acc = LaurentPoly::monomial(rs.rho(), C::c_one());
    for &(a, b) in rs.positive_roots() {
        let root = root_weight(rs, a, b);
        let factor = LaurentPoly::one(rs.rank())
            .sub(&LaurentPoly::monomial(root.neg(), C::c_one()));
        acc = acc.mul(&factor);
    }
    acc
}

/// The positive root `e_a − e_b` as a weight.
pub fn root_weight(rs: &RootSystem, a: usize, b: usize) -> Weight {
    let mut c = vec![0i64; rs.dim_ambient()];
    c[a] = 1;
    c[b] = -1;
    rs.weight_from_c(&c)
}

/// Height of an element of the positive root lattice: `ht(Σ a_j α_j) = Σ a_j`,
/// computed as `⟨v, ρ⟩` (an integer for root-lattice `v`).
pub fn root_height(rs: &RootSystem, v: &Weight) -> i64 {
    let p = rs.pairing_weights(v, &rs.rho());
    assert!(p.is_integer(), "not in the root lattice");
    let n = p.to_integer();
    i64::try_from(n).expect("height fits in i64")
}

/// Truncation of `b = Π_{α>0}(1 − q^{-1} e^{−α})^{-1}` to exponents `−v`
/// with `ht(v) ≤ max_height`: the coefficient of `e^{−v}` is the Kostant
/// `q`-partition sum `Σ_parts q^{-#parts}` over multiset decompositions of
/// `v` into positive roots.
pub fn b_series_truncated(rs: &RootSystem, max_height: i64) -> LaurentPoly<ScalarQ> {
    assert!(max_height >= 0);
    let mut acc = LaurentPoly::one(rs.rank());
    for &(a, b) in rs.positive_roots() {
        let root = root_weight(rs, a, b);
        let ht = root_height(rs, &root);
        let mut factor = LaurentPoly::zero(rs.rank());
        let mut j = 0i64;
        while j * ht <= max_height {
            let mut mexp = Weight::zero(rs.rank());
            for _ in 0..j {
                mexp = mexp.sub(&root);
            }
            factor = factor.add(&LaurentPoly::monomial(
                mexp,
                ScalarQ::u_pow(-2 * j as i32),
            ));
            j += 1;
        }
        acc = acc.mul(&factor);
        // prune anything already beyond the height budget
        let mut pruned = LaurentPoly::zero(rs.rank());
        for (w, c) in acc.terms() {
            if root_height(rs, &w.neg()) <= max_height {
                pruned.insert_add(w.clone(), c.clone());
            }
        }
        acc = pruned;
    }
    acc
}

/// Report from the exact symbolic identity suite; `failures` lists
/// human-readable descriptions of any identity that did not hold.
#[derive(Debug)]
pub struct IdentityReport {
    pub rank: usize,
    pub checks: Vec<(String, bool)>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// Exact verification of the structural identities behind the kernel
/// analysis:
///
/// (a) `h + 2 = Π_{i=1}^{r+1}(1 + e^{λ_i − λ_{i−1}})` with `λ_0 = λ_{r+1} = 0`
///     (the factorization of the step polynomial over one `W₀`-orbit);
/// (b) rank 2 only: `π(∂)[h^{n+3}] = (n+2)(n+3)[(n+3)h + 2(n+1)]·h^n·Δ`
///     for `n ≤ n_max`;
/// (c) rank 3: `π(∂)[h^{n+6}]` is skew-symmetric and exactly divisible
///     by `Δ` for `n ≤ min(n_max, 3)`.
pub fn identity_suite(rs: &RootSystem, n_max: usize) -> IdentityReport {
    let mut checks = Vec::new();
    let r = rs.rank();
    let ones: Vec<BigRational> = vec![BigRational::one(); r];
    let h = h_step_poly(rs, &ones);

    // (a) orbit factorization of h + 2
    {
        let mut prod = LaurentPoly::one(r);
        let mut prev = Weight::zero(r);
        for i in 1..=r + 1 {
            let cur = if i <= r { rs.fundamental(i) } else { Weight::zero(r) };
            let factor = LaurentPoly::one(r)
                .add(&LaurentPoly::monomial(cur.sub(&prev), BigRational::one()));
            prod = prod.mul(&factor);
            prev = cur;
        }
        let lhs = h.add(&LaurentPoly::monomial(
            Weight::zero(r),
            ratio_int(2),
        ));
        checks.push(("step polynomial orbit factorization".into(), lhs == prod));
    }

    let delta: LaurentPoly<BigRational> = weyl_denominator_sum(rs);
    checks.push((
        "Weyl denominator sum = product".into(),
        delta == weyl_denominator_product(rs),
    ));
    checks.push((
        "Weyl denominator skew-symmetric".into(),
        delta.is_skew_symmetric(rs),
    ));

    if r == 2 {
        for n in 0..=n_max {
            let lhs = h.pow(n + 3).pi_derivative(rs);
            let ni = n as i64;
            let bracket = h
                .scale(&ratio_int(ni + 3))
                .add(&LaurentPoly::monomial(Weight::zero(r), ratio_int(2 * (ni + 1))));
            let rhs = bracket
                .scale(&ratio_int((ni + 2) * (ni + 3)))
                .mul(&h.pow(n))
                .mul(&delta);
            checks.push((format!("rank-2 derivative identity, n = {n}"), lhs == rhs));
        }
    }

    if r == 3 {
        for n in 0..=n_max.min(3) {
            let img = h.pow(n + rs.num_positive_roots()).pi_derivative(rs);
            let skew = img.is_skew_symmetric(rs);
            let divisible = img.divide_exact(rs, &delta).is_some();
            checks.push((
                format!("rank-3 skew symmetry and Δ-divisibility, n = {n}"),
                skew && divisible,
            ));
        }
    }

    IdentityReport { rank: r, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn ring_smoke() {
        let rs = RootSystem::new(2);
        let h: LaurentPoly<BigRational> =
            h_step_poly(&rs, &[BigRational::one(), BigRational::one()]);
        assert_eq!(h.num_terms(), 6);
        // h² constant coefficient counts the pairs μ + (−μ): 6 of them
        let h2 = h.mul(&h);
        assert_eq!(h2.coeff(&Weight::zero(2)), ratio_int(6));
        // pow consistency
        assert_eq!(h.pow(3), h2.mul(&h));
        assert_eq!(h.pow(0), LaurentPoly::one(2));
        // h is W₀-invariant
        for wi in 0..rs.weyl_order() {
            assert_eq!(h.apply_weyl(&rs, wi), h);
        }
    }

    #[test]
    fn rank1_even_powers_have_central_binomials() {
        let rs = RootSystem::new(1);
        let h: LaurentPoly<BigRational> = h_step_poly(&rs, &[BigRational::one()]);
        for m in 1..=5usize {
            let p = h.pow(2 * m);
            let mut binom = 1i64;
            for i in 0..m as i64 {
                binom = binom * (2 * m as i64 - i) / (i + 1);
            }
            assert_eq!(p.coeff(&Weight::zero(1)), ratio_int(binom));
        }
    }

    #[test]
    fn weyl_denominator_forms_agree() {
        for r in 1..=4 {
            let rs = RootSystem::new(r);
            let sum: LaurentPoly<BigRational> = weyl_denominator_sum(&rs);
            let prod = weyl_denominator_product(&rs);
            assert_eq!(sum, prod);
            assert_eq!(sum.num_terms(), rs.weyl_order());
            assert!(sum.is_skew_symmetric(&rs));
        }
    }

    #[test]
    fn pi_derivative_examples() {
        // π(0) = 0 kills the constant
        let rs = RootSystem::new(2);
        let one_poly: LaurentPoly<BigRational> = LaurentPoly::one(2);
        assert!(one_poly.pi_derivative(&rs).is_zero());
        // r = 1: e^{λ_1} is fixed with coefficient ⟨λ_1, α^∨⟩ = 1
        let rs1 = RootSystem::new(1);
        let mono = LaurentPoly::monomial(rs1.fundamental(1), BigRational::one());
        assert_eq!(mono.pi_derivative(&rs1), mono);
        // r = 2: wall weights of h are annihilated, regular ones keep π(μ)
        let h: LaurentPoly<BigRational> =
            h_step_poly(&rs, &[BigRational::one(), BigRational::one()]);
        let dh = h.pi_derivative(&rs);
        // every orbit weight of h lies on a wall (some pairing vanishes)
        assert!(dh.is_zero());
    }

    #[test]
    fn identity_suite_rank2_exact() {
        let rs = RootSystem::new(2);
        let report = identity_suite(&rs, 6);
        for (name, ok) in &report.checks {
            assert!(ok, "identity failed: {name}");
        }
    }

    #[test]
    fn identity_suite_rank1_and_rank3() {
        for r in [1usize, 3] {
            let rs = RootSystem::new(r);
            let report = identity_suite(&rs, 2);
            for (name, ok) in &report.checks {
                assert!(ok, "rank {r} identity failed: {name}");
            }
        }
    }

    #[test]
    fn division_round_trip() {
        let rs = RootSystem::new(2);
        let delta: LaurentPoly<BigRational> = weyl_denominator_sum(&rs);
        let h = h_step_poly(&rs, &[BigRational::one(), BigRational::one()]);
        let f = delta.mul(&h.pow(2)).scale(&ratio(3, 7));
        let q = f.divide_exact(&rs, &delta).expect("exact division");
        assert_eq!(q, h.pow(2).scale(&ratio(3, 7)));
        // a poly not divisible by Δ is rejected
        assert!(h.divide_exact(&rs, &delta).is_none());
    }

    #[test]
    fn kostant_series_small_values() {
        // r = 1: coefficient of e^{−jα} is q^{-j}
        let rs1 = RootSystem::new(1);
        let b1 = b_series_truncated(&rs1, 4);
        let alpha = root_weight(&rs1, 0, 1);
        for j in 0..=4i64 {
            let mut v = Weight::zero(1);
            for _ in 0..j {
                v = v.sub(&alpha);
            }
            assert_eq!(b1.coeff(&v), ScalarQ::u_pow(-2 * j as i32));
        }

        // r = 2 hand-counted partition values
        let rs = RootSystem::new(2);
        let b = b_series_truncated(&rs, 4);
        let a1 = root_weight(&rs, 0, 1);
        let a2 = root_weight(&rs, 1, 2);
        let qi = |j: i32| ScalarQ::u_pow(-2 * j);
        // K(α_1) = q^{-1}
        assert_eq!(b.coeff(&a1.neg()), qi(1));
        // K(α_1 + α_2) = q^{-1} + q^{-2} ({θ} or {α_1, α_2})
        assert_eq!(b.coeff(&a1.add(&a2).neg()), qi(1).add(&qi(2)));
        // K(2α_1) = q^{-2}
        assert_eq!(b.coeff(&a1.add(&a1).neg()), qi(2));
        // K(2α_1 + α_2) = q^{-2} + q^{-3} ({α_1, θ} or {α_1, α_1, α_2})
        assert_eq!(b.coeff(&a1.add(&a1).add(&a2).neg()), qi(2).add(&qi(3)));
        // K(2α_1 + 2α_2) = q^{-2} + q^{-3} + q^{-4}
        let v = a1.add(&a1).add(&a2).add(&a2).neg();
        assert_eq!(b.coeff(&v), qi(2).add(&qi(3)).add(&qi(4)));
        // constant term 1, no positive-side support
        assert_eq!(b.coeff(&Weight::zero(2)), ScalarQ::one());
        assert!(b.coeff(&rs.fundamental(1)).is_zero());
    }
}
