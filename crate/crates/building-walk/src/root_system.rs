//! The finite root system `A_r` underlying an affine building of type `Ã_r`,
//! realized inside the sum-zero hyperplane of `R^{r+1}`.
//!
//! Conventions (all exact):
//!
//! * Simple roots `α_i = e_i − e_{i+1}`; every root has squared length 2, so
//!   coroots equal roots and the pairing `⟨λ, α^∨⟩` is the integer
//!   `c_a − c_b` of partial sums of the fundamental coordinates.
//! * A [`Weight`] is stored by its fundamental-weight coordinates
//!   `m = (m_1, …, m_r)`, i.e. `λ = Σ m_i λ_i`. The auxiliary `c`-coordinates
//!   `c_a = m_a + … + m_r` (with `c_{r+1} = 0`) are e-coordinates up to a
//!   `W₀`-invariant multiple of `(1,…,1)`, which makes the symmetric-group
//!   action and dominance integer-exact.
//! * `ρ` below always means the Weyl vector of the *finite* system,
//!   `ρ = λ_1 + … + λ_r`, with `c`-coordinates `(r, r−1, …, 0)`.
//!
//! The building enters through the parameter `q` (thickness: each panel lies
//! in `q + 1` chambers): sphere cardinalities `N_λ`, the translation modulus
//! `q_{t_λ} = q^{⟨λ, 2ρ⟩}`, and Poincaré polynomials are produced here as
//! exact Laurent polynomials in `u = q^{1/2}`.

use crate::scalar::{ratio_int, ScalarQ};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeSet;

/// Element of the weight lattice of `A_r` in fundamental-weight coordinates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Weight {
    m: Vec<i64>,
}

impl Weight {
    pub fn new(m: Vec<i64>) -> Self {
        Weight { m }
    }

    pub fn zero(rank: usize) -> Self {
        Weight { m: vec![0; rank] }
    }

    pub fn rank(&self) -> usize {
        self.m.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.m
    }

    pub fn coord(&self, i: usize) -> i64 {
        self.m[i]
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|&x| x == 0)
    }

    pub fn add(&self, other: &Weight) -> Weight {
        Weight {
            m: self.m.iter().zip(&other.m).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Weight) -> Weight {
        Weight {
            m: self.m.iter().zip(&other.m).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> Weight {
        Weight {
            m: self.m.iter().map(|a| -a).collect(),
        }
    }

    /// All coordinates nonnegative: `λ` lies in the closed dominant chamber.
    pub fn is_dominant(&self) -> bool {
        self.m.iter().all(|&x| x >= 0)
    }

    /// `⟨λ, α̃^∨⟩ = m_1 + … + m_r` for the highest root `α̃`: the graph
    /// distance from the origin of the vertex `t_λ` when `λ` is dominant.
    pub fn ell(&self) -> i64 {
        self.m.iter().sum()
    }
}

/// One Weyl group element: a permutation of the `r + 1` e-coordinate slots
/// together with its sign.
#[derive(Clone, Debug)]
pub struct WeylElement {
    /// Position map: coordinate in slot `a` moves to slot `perm[a]`.
    pub perm: Vec<usize>,
    /// Permutation sign, the determinant of the element on the hyperplane.
    pub det: i64,
}

/// Precomputed data for the root system `A_r`.
pub struct RootSystem {
    rank: usize,
    /// `r + 1`, the number of e-coordinates (and letters permuted by `W₀`).
    n: usize,
    /// Positive roots `e_a − e_b` as index pairs `a < b` (0-based).
    positive: Vec<(usize, usize)>,
    weyl: Vec<WeylElement>,
    /// `ρ − wρ` for each Weyl element, in the same order as `weyl`.
    rho_minus_w_rho: Vec<Weight>,
}

fn permutation_sign(perm: &[usize]) -> i64 {
    let mut inv = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            if k % 2 == 0 {
                cur.swap(i, k - 1);
            } else {
                cur.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut cur, &mut out);
    out.sort();
    out
}

impl RootSystem {
    pub fn new(rank: usize) -> Self {
        assert!(
            (1..=7).contains(&rank),
            "rank must be between 1 and 7 (Weyl group is enumerated)"
        );
        let n = rank + 1;
        let mut positive = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                positive.push((a, b));
            }
        }
        let weyl: Vec<WeylElement> = all_permutations(n)
            .into_iter()
            .map(|perm| {
                let det = permutation_sign(&perm);
                WeylElement { perm, det }
            })
            .collect();
        let mut rs = RootSystem {
            rank,
            n,
            positive,
            weyl,
            rho_minus_w_rho: Vec::new(),
        };
        let rho = rs.rho();
        rs.rho_minus_w_rho = (0..rs.weyl.len())
            .map(|wi| rho.sub(&rs.apply_weyl(wi, &rho)))
            .collect();
        rs
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of e-coordinates, `r + 1`.
    pub fn dim_ambient(&self) -> usize {
        self.n
    }

    pub fn positive_roots(&self) -> &[(usize, usize)] {
        &self.positive
    }

    pub fn num_positive_roots(&self) -> usize {
        self.positive.len()
    }

    pub fn weyl_elements(&self) -> &[WeylElement] {
        &self.weyl
    }

    pub fn weyl_order(&self) -> usize {
        self.weyl.len()
    }

    /// `ρ − wρ` for Weyl element `wi`; always a nonnegative root combination.
    pub fn rho_minus_w_rho(&self, wi: usize) -> &Weight {
        &self.rho_minus_w_rho[wi]
    }

    /// Fundamental weight `λ_k`, `1 ≤ k ≤ r`.
    pub fn fundamental(&self, k: usize) -> Weight {
        assert!((1..=self.rank).contains(&k));
        let mut m = vec![0i64; self.rank];
        m[k - 1] = 1;
        Weight::new(m)
    }

    /// The Weyl vector `ρ = Σ_k λ_k`.
    pub fn rho(&self) -> Weight {
        Weight::new(vec![1; self.rank])
    }

    /// Partial-sum coordinates `c_a = m_a + … + m_r`, length `r + 1`
    /// (so `c_{r+1} = 0`); these transform by coordinate permutation.
    pub fn c_coords(&self, w: &Weight) -> Vec<i64> {
        let mut c = vec![0i64; self.n];
        for a in (0..self.rank).rev() {
            c[a] = c[a + 1] + w.m[a];
        }
        c
    }

    pub fn weight_from_c(&self, c: &[i64]) -> Weight {
        assert_eq!(c.len(), self.n);
        Weight::new((0..self.rank).map(|i| c[i] - c[i + 1]).collect())
    }

    /// `⟨λ, α^∨⟩` for the positive root `α = e_a − e_b`: an integer.
    pub fn pairing_root(&self, w: &Weight, root: (usize, usize)) -> i64 {
        let (a, b) = root;
        debug_assert!(a < b && b < self.n);
        (a..b.min(self.rank)).map(|i| w.m[i]).sum()
    }

    /// Apply Weyl element `wi` to a weight (exact, via `c`-coordinates).
    pub fn apply_weyl(&self, wi: usize, w: &Weight) -> Weight {
        let c = self.c_coords(w);
        let perm = &self.weyl[wi].perm;
        let mut out = vec![0i64; self.n];
        for a in 0..self.n {
            out[perm[a]] = c[a];
        }
        self.weight_from_c(&out)
    }

    /// The dominant representative of the `W₀`-orbit of `w`.
    pub fn dominant_fold(&self, w: &Weight) -> Weight {
        let mut c = self.c_coords(w);
        c.sort_unstable_by(|a, b| b.cmp(a));
        self.weight_from_c(&c)
    }

    /// The `W₀`-orbit of a dominant weight, sorted and deduplicated.
    pub fn orbit(&self, dominant: &Weight) -> Vec<Weight> {
        assert!(dominant.is_dominant());
        let set: BTreeSet<Weight> = (0..self.weyl.len())
            .map(|wi| self.apply_weyl(wi, dominant))
            .collect();
        set.into_iter().collect()
    }

    /// Exponents `E_k = k(r + 1 − k)` with `q_{t_{λ_k}} = q^{E_k}`; for a
    /// general weight, `⟨λ, 2ρ⟩ = Σ_k m_k E_k`.
    pub fn q_exponent(&self, w: &Weight) -> i64 {
        w.m.iter()
            .enumerate()
            .map(|(i, &m)| {
                let k = (i + 1) as i64;
                m * k * (self.n as i64 - k)
            })
            .sum()
    }

    /// `π(λ) = Π_{α>0} ⟨λ, α^∨⟩` (skew polynomial; vanishes on walls).
    pub fn pi_value(&self, w: &Weight) -> BigInt {
        let mut acc = BigInt::one();
        for &root in &self.positive {
            acc *= BigInt::from(self.pairing_root(w, root));
            if acc.is_zero() {
                break;
            }
        }
        acc
    }

    /// Vertex type of `t_λ`: `Σ_k k·m_k mod (r+1)`, in `0..r+1`.
    pub fn vertex_type(&self, w: &Weight) -> usize {
        let n = self.n as i64;
        let t: i64 = w
            .m
            .iter()
            .enumerate()
            .map(|(i, &m)| (i as i64 + 1) * m)
            .sum();
        t.rem_euclid(n) as usize
    }

    /// Gram matrix entry `⟨λ_i, λ_j⟩ = min(i,j) − ij/(r+1)` (1-based `i, j`).
    pub fn gram(&self, i: usize, j: usize) -> BigRational {
        assert!((1..=self.rank).contains(&i) && (1..=self.rank).contains(&j));
        let n = self.n as i64;
        ratio_int(i.min(j) as i64) - BigRational::new(((i * j) as i64).into(), n.into())
    }

    /// Exact inner product of two weights.
    pub fn pairing_weights(&self, v: &Weight, w: &Weight) -> BigRational {
        let mut acc = BigRational::zero();
        for i in 0..self.rank {
            if v.m[i] == 0 {
                continue;
            }
            for j in 0..self.rank {
                if w.m[j] == 0 {
                    continue;
                }
                acc += self.gram(i + 1, j + 1) * ratio_int(v.m[i]) * ratio_int(w.m[j]);
            }
        }
        acc
    }

    /// Sum-zero e-coordinates of a weight, as exact rationals:
    /// `x_a = c_a − (Σ_b c_b)/(r+1)`.
    pub fn e_coords_rational(&self, w: &Weight) -> Vec<BigRational> {
        let c = self.c_coords(w);
        let s: i64 = c.iter().sum();
        let shift = BigRational::new(s.into(), (self.n as i64).into());
        c.iter().map(|&ca| ratio_int(ca) - shift.clone()).collect()
    }

    /// Inverse Cartan matrix entry `(C^{-1})_{jk} = min(j,k) − jk/(r+1)`
    /// (1-based); same matrix as [`Self::gram`], exposed under the name used
    /// when converting root-coordinate boxes.
    pub fn cartan_inverse_entry(&self, j: usize, k: usize) -> BigRational {
        self.gram(j, k)
    }

    /// Weight coordinates of `v = Σ_j a_j α_j`: `m_i = 2a_i − a_{i−1} − a_{i+1}`.
    pub fn root_combo_to_weight(&self, a: &[i64]) -> Weight {
        assert_eq!(a.len(), self.rank);
        let get = |i: isize| -> i64 {
            if i < 0 || i as usize >= self.rank {
                0
            } else {
                a[i as usize]
            }
        };
        Weight::new(
            (0..self.rank as isize)
                .map(|i| 2 * get(i) - get(i - 1) - get(i + 1))
                .collect(),
        )
    }

    /// Poincaré polynomial of `W₀ = S_{r+1}` in `x = q^{-1}`:
    /// `W₀(q^{-1}) = Π_{j=1}^{r+1} [j]_{q^{-1}}`.
    pub fn poincare_w0_qinv(&self) -> ScalarQ {
        q_factorial_qinv(self.n)
    }

    /// Poincaré polynomial of the stabilizer `W₀λ` in `x = q^{-1}`: the
    /// product of `[k]!` over multiplicities `k` of equal `c`-coordinates.
    pub fn stabilizer_poincare_qinv(&self, dominant: &Weight) -> ScalarQ {
        let c = self.c_coords(dominant);
        let mut acc = ScalarQ::one();
        let mut run = 1usize;
        for a in 1..=self.n {
            if a < self.n && c[a] == c[a - 1] {
                run += 1;
            } else {
                acc = acc.mul(&q_factorial_qinv(run));
                run = 1;
            }
        }
        acc
    }

    /// Cardinality `N_λ` of the sphere `{y : shape(0, y) = λ}` as a
    /// polynomial in `q`:
    /// `N_λ = q^{⟨λ,2ρ⟩} · W₀(q^{-1}) / W₀λ(q^{-1})`.
    pub fn n_lambda(&self, dominant: &Weight) -> ScalarQ {
        assert!(dominant.is_dominant());
        let ratio = self
            .poincare_w0_qinv()
            .div_exact(&self.stabilizer_poincare_qinv(dominant));
        ratio.mul(&ScalarQ::u_pow(
            2 * i32::try_from(self.q_exponent(dominant)).expect("exponent fits"),
        ))
    }

    /// Number of neighbors of a vertex: `Σ_k N_{λ_k}(q)`, evaluated later;
    /// symbolically this is `Σ_k |W₀λ_k| = 2^{r+1} − 2` only at `q = 1`.
    pub fn vertex_degree_poly(&self) -> ScalarQ {
        let mut acc = ScalarQ::zero();
        for k in 1..=self.rank {
            acc = acc.add(&self.n_lambda(&self.fundamental(k)));
        }
        acc
    }

    /// Total count of monomials in the step polynomial `h`:
    /// `Σ_k |W₀λ_k| = 2^{r+1} − 2`.
    pub fn step_monomial_count(&self) -> u64 {
        (1u64 << self.n) - 2
    }

    /// All dominant weights with `⟨λ, α̃^∨⟩ ≤ bound` (the ball of radius
    /// `bound` in the gallery metric intersected with the chamber).
    pub fn dominant_weights_ell_le(&self, bound: i64) -> Vec<Weight> {
        assert!(bound >= 0);
        let mut out = Vec::new();
        let mut cur = vec![0i64; self.rank];
        fn rec(rs: &RootSystem, i: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Weight>) {
            if i == rs.rank {
                out.push(Weight::new(cur.clone()));
                return;
            }
            for v in 0..=left {
                cur[i] = v;
                rec(rs, i + 1, left - v, cur, out);
            }
            cur[i] = 0;
        }
        rec(self, 0, bound, &mut cur, &mut out);
        out.sort();
        out
    }
}

/// `[n]_x! = Π_{j=1}^{n} (1 + x + … + x^{j−1})` at `x = q^{-1} = u^{-2}`.
fn q_factorial_qinv(n: usize) -> ScalarQ {
    let mut acc = ScalarQ::one();
    for j in 1..=n {
        let mut bracket = ScalarQ::zero();
        for t in 0..j {
            bracket = bracket.add(&ScalarQ::u_pow(-2 * t as i32));
        }
        acc = acc.mul(&bracket);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, QExt};

    fn wt(m: &[i64]) -> Weight {
        Weight::new(m.to_vec())
    }

    #[test]
    fn positive_root_inventory() {
        for r in 1..=4 {
            let rs = RootSystem::new(r);
            assert_eq!(rs.num_positive_roots(), r * (r + 1) / 2);
            assert_eq!(rs.weyl_order(), (1..=r + 1).product::<usize>());
        }
    }

    #[test]
    fn fundamental_simple_pairings_are_kronecker() {
        for r in 1..=4 {
            let rs = RootSystem::new(r);
            for k in 1..=r {
                for j in 0..r {
                    let expected = if j + 1 == k { 1 } else { 0 };
                    assert_eq!(rs.pairing_root(&rs.fundamental(k), (j, j + 1)), expected);
                }
            }
        }
    }

    #[test]
    fn rho_is_sum_of_fundamentals_with_staircase_c_coords() {
        let rs = RootSystem::new(3);
        let rho = rs.rho();
        assert_eq!(rs.c_coords(&rho), vec![3, 2, 1, 0]);
        // ⟨ρ, α_i^∨⟩ = 1 on every simple root
        for j in 0..3 {
            assert_eq!(rs.pairing_root(&rho, (j, j + 1)), 1);
        }
        // highest root pairing = r
        assert_eq!(rs.pairing_root(&rho, (0, 3)), 3);
        assert_eq!(rho.ell(), 3);
    }

    #[test]
    fn weyl_action_preserves_orbits_and_signs_balance() {
        let rs = RootSystem::new(3);
        let sum: i64 = rs.weyl_elements().iter().map(|w| w.det).sum();
        assert_eq!(sum, 0);
        // identity permutation sits somewhere with det +1 and fixes ρ
        let rho = rs.rho();
        let id = rs
            .weyl_elements()
            .iter()
            .position(|w| w.perm.iter().enumerate().all(|(i, &p)| i == p))
            .unwrap();
        assert_eq!(rs.weyl_elements()[id].det, 1);
        assert_eq!(rs.apply_weyl(id, &rho), rho);
        assert!(rs.rho_minus_w_rho(id).is_zero());
        // ρ − wρ is always a nonnegative root combination: its pairing with
        // the highest coroot is ≥ 0 and its total c-sum is zero.
        for wi in 0..rs.weyl_order() {
            let d = rs.rho_minus_w_rho(wi);
            assert_eq!(rs.c_coords(d).iter().sum::<i64>() % 4, 0);
            // dominance of ρ: ⟨ρ − wρ, λ_k-dual⟩ ≥ 0 in the sense that all
            // partial sums of c-coordinates from the left are ≥ 0.
            let c = rs.c_coords(d);
            let mut acc = 0i64;
            let total: i64 = c.iter().sum();
            for a in 0..4 {
                acc += c[a] - total / 4;
                assert!(acc >= 0);
            }
        }
    }

    #[test]
    fn orbit_sizes_match_binomials_and_speed_bound() {
        let rs = RootSystem::new(3);
        let sizes: Vec<usize> = (1..=3).map(|k| rs.orbit(&rs.fundamental(k)).len()).collect();
        assert_eq!(sizes, vec![4, 6, 4]);
        assert_eq!(rs.step_monomial_count(), 14);
        // every orbit element moves each fundamental coordinate by at most 1
        for k in 1..=3 {
            for mu in rs.orbit(&rs.fundamental(k)) {
                assert!(mu.coords().iter().all(|&m| m.abs() <= 1));
                assert_eq!(rs.vertex_type(&mu), k);
                assert_eq!(rs.dominant_fold(&mu), rs.fundamental(k));
            }
        }
        // r = 2: both orbits have 3 elements
        let rs2 = RootSystem::new(2);
        assert_eq!(rs2.orbit(&rs2.fundamental(1)).len(), 3);
        assert_eq!(rs2.orbit(&rs2.fundamental(2)).len(), 3);
        assert_eq!(rs2.step_monomial_count(), 6);
    }

    #[test]
    fn q_exponents() {
        let rs = RootSystem::new(3);
        let e: Vec<i64> = (1..=3).map(|k| rs.q_exponent(&rs.fundamental(k))).collect();
        assert_eq!(e, vec![3, 4, 3]);
        let rs2 = RootSystem::new(2);
        assert_eq!(rs2.q_exponent(&rs2.fundamental(1)), 2);
        assert_eq!(rs2.q_exponent(&rs2.fundamental(2)), 2);
        assert_eq!(RootSystem::new(1).q_exponent(&wt(&[1])), 1);
        // additivity
        assert_eq!(rs.q_exponent(&wt(&[2, 1, 3])), 2 * 3 + 4 + 3 * 3);
    }

    #[test]
    fn pi_value_on_rho_is_superfactorial() {
        let rs = RootSystem::new(3);
        assert_eq!(rs.pi_value(&rs.rho()), BigInt::from(12));
        // vanishes on a wall
        assert_eq!(rs.pi_value(&wt(&[0, 2, 1])), BigInt::from(0));
        let rs2 = RootSystem::new(2);
        assert_eq!(rs2.pi_value(&rs2.rho()), BigInt::from(2));
        assert_eq!(RootSystem::new(1).pi_value(&wt(&[5])), BigInt::from(5));
    }

    #[test]
    fn sphere_cardinalities_match_closed_forms() {
        // r = 1: N = q + 1
        let rs1 = RootSystem::new(1);
        let n1 = rs1.n_lambda(&rs1.fundamental(1));
        assert_eq!(n1, ScalarQ::q_pow(1).add(&ScalarQ::one()));

        // r = 2: both fundamental spheres have q² + q + 1 vertices
        let rs2 = RootSystem::new(2);
        let expect2 = ScalarQ::q_pow(2).add(&ScalarQ::q_pow(1)).add(&ScalarQ::one());
        assert_eq!(rs2.n_lambda(&rs2.fundamental(1)), expect2);
        assert_eq!(rs2.n_lambda(&rs2.fundamental(2)), expect2);

        // r = 3: N₁ = N₃ = (q+1)(q²+1), N₂ = (q²+q+1)(q²+1)
        let rs3 = RootSystem::new(3);
        let qp = |k: i32| ScalarQ::q_pow(k);
        let expect13 = qp(3).add(&qp(2)).add(&qp(1)).add(&ScalarQ::one());
        let expect2b = qp(4).add(&qp(3)).add(&qp(2).scale(&ratio(2, 1))).add(&qp(1)).add(&ScalarQ::one());
        assert_eq!(rs3.n_lambda(&rs3.fundamental(1)), expect13);
        assert_eq!(rs3.n_lambda(&rs3.fundamental(3)), expect13);
        assert_eq!(rs3.n_lambda(&rs3.fundamental(2)), expect2b);

        // Evaluations: q = 2, r = 3 → N₁ = 15, N₂ = 35
        assert_eq!(
            rs3.n_lambda(&rs3.fundamental(1)).eval_sqrt_q(2),
            QExt::from_int(15, 2)
        );
        assert_eq!(
            rs3.n_lambda(&rs3.fundamental(2)).eval_sqrt_q(2),
            QExt::from_int(35, 2)
        );
    }

    #[test]
    fn n_lambda_on_regular_and_wall_weights() {
        // Regular weight: stabilizer trivial, N_λ = q^{⟨λ,2ρ⟩}·W₀(q^{-1}).
        let rs = RootSystem::new(2);
        let lam = wt(&[1, 1]);
        let expected = rs
            .poincare_w0_qinv()
            .mul(&ScalarQ::q_pow(rs.q_exponent(&lam) as i32));
        assert_eq!(rs.n_lambda(&lam), expected);
        // q = 2: ⟨λ,2ρ⟩ = 4, W₀(1/2)·16 = (1+1/2)(1+1/2+1/4)·16 = 42
        assert_eq!(
            rs.n_lambda(&lam).eval_sqrt_q(2),
            QExt::from_int(42, 2)
        );
        // λ = 0: sphere of radius 0 has exactly one vertex.
        assert_eq!(rs.n_lambda(&Weight::zero(2)), ScalarQ::one());
    }

    #[test]
    fn dominant_fold_sorts_c_coords() {
        let rs = RootSystem::new(3);
        for wi in 0..rs.weyl_order() {
            let moved = rs.apply_weyl(wi, &wt(&[2, 0, 1]));
            assert_eq!(rs.dominant_fold(&moved), wt(&[2, 0, 1]));
        }
    }

    #[test]
    fn root_combo_round_trip() {
        let rs = RootSystem::new(3);
        // α_1 = 2λ_1 − λ_2
        assert_eq!(rs.root_combo_to_weight(&[1, 0, 0]), wt(&[2, -1, 0]));
        // Cartan inverse inverts: C^{-1}·(C a) = a for a few vectors a.
        for a in [[1i64, 0, 0], [0, 1, 0], [2, 3, 1], [5, 5, 5]] {
            let m = rs.root_combo_to_weight(&a);
            for j in 1..=3 {
                let mut acc = BigRational::zero();
                for k in 1..=3 {
                    acc += rs.cartan_inverse_entry(j, k) * ratio_int(m.coord(k - 1));
                }
                assert_eq!(acc, ratio_int(a[j - 1]));
            }
        }
    }

    #[test]
    fn gram_and_pairings_consistent() {
        let rs = RootSystem::new(2);
        // ⟨λ_1, λ_1⟩ = 1 − 1/3 = 2/3, ⟨λ_1, λ_2⟩ = 1 − 2/3 = 1/3
        assert_eq!(rs.gram(1, 1), ratio(2, 3));
        assert_eq!(rs.gram(1, 2), ratio(1, 3));
        // pairing via e-coordinates agrees
        let v = wt(&[2, 1]);
        let w = wt(&[0, 3]);
        let ev = rs.e_coords_rational(&v);
        let ew = rs.e_coords_rational(&w);
        let dot: BigRational = ev.iter().zip(&ew).map(|(a, b)| a * b).sum();
        assert_eq!(rs.pairing_weights(&v, &w), dot);
        // e-coordinates sum to zero
        assert_eq!(ev.iter().sum::<BigRational>(), BigRational::zero());
        // ⟨λ, α^∨⟩ matches e-coordinate difference (roots have length² = 2)
        for &(a, b) in rs.positive_roots() {
            assert_eq!(
                ratio_int(rs.pairing_root(&v, (a, b))),
                ev[a].clone() - ev[b].clone()
            );
        }
    }

    #[test]
    fn dominant_enumeration_counts() {
        let rs = RootSystem::new(2);
        // #{m ≥ 0 : m_1 + m_2 ≤ L} = (L+1)(L+2)/2
        for bound in 0..6 {
            let c = rs.dominant_weights_ell_le(bound).len() as i64;
            assert_eq!(c, (bound + 1) * (bound + 2) / 2);
        }
        let all = rs.dominant_weights_ell_le(3);
        assert!(all.iter().all(|w| w.is_dominant() && w.ell() <= 3));
    }

    #[test]
    fn vertex_degree_poly_matches_sum() {
        let rs = RootSystem::new(3);
        // q = 2: 15 + 35 + 15 = 65 neighbors
        assert_eq!(
            rs.vertex_degree_poly().eval_sqrt_q(2),
            QExt::from_int(65, 2)
        );
    }
}
