//! Spectral-side objects: the c-function, the Weyl denominator, Macdonald
//! spherical functions, the leading coefficient `F₀`, and an independent
//! Fourier-inversion cross-check of the exact kernel.
//!
//! Complex points are given by their coordinate values `z_a = ⟨e_a, z⟩`
//! (length `r+1`); only sum-zero projections enter weight pairings, so an
//! overall additive shift of the coordinates is immaterial. The Weyl group
//! acts by permuting coordinates.
//!
//! `F₀(λ) = P_λ(0)` is computed *exactly*: substituting `z = t·v` for a
//! fixed integer direction `v` with pairwise distinct positive root
//! pairings turns the Weyl sum into a univariate rational function of
//! `y = e^{-t}` whose poles at `y = 1` cancel; exact polynomial division by
//! `(1−y)^{|R⁺|}` then evaluates the limit in `Q(√q)`. A rational Neville
//! extrapolation along `y → 1` independently re-derives the limit and the
//! two must agree, guarding the symbolic path.

use crate::exact_kernel::WalkSpec;
use crate::root_system::{RootSystem, Weight};
use crate::scalar::{ratio, ratio_pow, QExt};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("point is too close to a c-function singularity")]
    NearSingular,
    #[error("quadrature is limited to rank ≤ 2, got rank {0}")]
    RankUnsupported(usize),
    #[error("grid of {got} points per period is below the required {need}")]
    ResolutionTooLow { got: usize, need: usize },
    #[error("exact and extrapolated values disagree: {0}")]
    NumericMismatch(String),
}

/// Sum-zero-projected pairing `⟨μ, z⟩ = Σ_a c_a(μ)(z_a − mean z)`.
pub fn pair_weight(rs: &RootSystem, mu: &Weight, z: &[Complex64]) -> Complex64 {
    let c = rs.c_coords(mu);
    let mean = z.iter().sum::<Complex64>() / z.len() as f64;
    c.iter()
        .zip(z)
        .map(|(&ca, &za)| (za - mean) * ca as f64)
        .sum()
}

/// Weyl action on coordinate vectors: slot `a` moves to `perm[a]`.
pub fn apply_weyl_point(rs: &RootSystem, wi: usize, z: &[Complex64]) -> Vec<Complex64> {
    let perm = &rs.weyl_elements()[wi].perm;
    let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
    for (a, &za) in z.iter().enumerate() {
        out[perm[a]] = za;
    }
    out
}

/// Harish-Chandra `c(z) = Π_{α>0} (1 − q^{-1}e^{-⟨α,z⟩})/(1 − e^{-⟨α,z⟩})`.
pub fn c_function(rs: &RootSystem, q: u32, z: &[Complex64]) -> Complex64 {
    let qi = 1.0 / q as f64;
    let mut acc = Complex64::new(1.0, 0.0);
    for &(a, b) in rs.positive_roots() {
        let e = (-(z[a] - z[b])).exp();
        acc *= (1.0 - e * qi) / (1.0 - e);
    }
    acc
}

/// `b(z) = Π_{α>0} (1 − q^{-1}e^{-⟨α,z⟩})^{-1}`.
pub fn b_function(rs: &RootSystem, q: u32, z: &[Complex64]) -> Complex64 {
    let qi = 1.0 / q as f64;
    let mut acc = Complex64::new(1.0, 0.0);
    for &(a, b) in rs.positive_roots() {
        let e = (-(z[a] - z[b])).exp();
        acc /= 1.0 - e * qi;
    }
    acc
}

/// Weyl denominator `Δ(z) = e^{⟨ρ,z⟩} Π_{α>0} (1 − e^{-⟨α,z⟩})`.
pub fn delta_function(rs: &RootSystem, z: &[Complex64]) -> Complex64 {
    let mut acc = pair_weight(rs, &rs.rho(), z).exp();
    for &(a, b) in rs.positive_roots() {
        acc *= 1.0 - (-(z[a] - z[b])).exp();
    }
    acc
}

/// `W₀(q^{-1})` as an exact rational.
pub fn w0_qinv(rs: &RootSystem, q: u32) -> BigRational {
    let v = rs.poincare_w0_qinv().eval_sqrt_q(q);
    debug_assert!(v.is_rational());
    v.rational_part().clone()
}

fn regularity_gap(rs: &RootSystem, z: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for &(a, b) in rs.positive_roots() {
        let p = z[a] - z[b];
        gap = gap.min((1.0 - (-p).exp()).norm());
        gap = gap.min((1.0 - p.exp()).norm());
    }
    gap
}

/// Macdonald spherical function
/// `P_λ(z) = (q_{t_λ}^{-1/2}/W₀(q^{-1})) Σ_w c(w·z) e^{⟨λ, w·z⟩}`.
pub fn macdonald_p(
    rs: &RootSystem,
    q: u32,
    lam: &Weight,
    z: &[Complex64],
) -> Result<Complex64, SpectralError> {
    if regularity_gap(rs, z) < 1e-8 {
        return Err(SpectralError::NearSingular);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for wi in 0..rs.weyl_order() {
        let wz = apply_weyl_point(rs, wi, z);
        sum += c_function(rs, q, &wz) * pair_weight(rs, lam, &wz).exp();
    }
    let pref = QExt::q_half_pow(q, -rs.q_exponent(lam)).to_f64()
        / ratio_to_f64_local(&w0_qinv(rs, q));
    Ok(sum * pref)
}

fn ratio_to_f64_local(r: &BigRational) -> f64 {
    crate::scalar::ratio_to_f64(r)
}

// ---------------------------------------------------------------------------
// F0: the exact limit P_λ(0)
// ---------------------------------------------------------------------------

/// The regular integer direction: coordinates `v_a` with
/// `⟨α_j, v⟩ = (r+2)^{j-1}`, so all positive roots get pairwise distinct
/// positive pairings.
fn regular_direction(rs: &RootSystem) -> Vec<i64> {
    let n = rs.dim_ambient();
    let base = (rs.rank() + 2) as i64;
    let mut v = vec![0i64; n];
    for a in (0..n - 1).rev() {
        v[a] = v[a + 1] + base.pow(a as u32);
    }
    v
}

/// Integer pairing of a weight against an integer coordinate vector (the
/// weight's c-coordinates absorb the sum-zero normalization up to a global
/// `y`-power that drops out of the `y → 1` limit).
fn int_pair(rs: &RootSystem, mu: &Weight, v: &[i64]) -> i64 {
    rs.c_coords(mu).iter().zip(v).map(|(&c, &x)| c * x).sum()
}

/// One Weyl term of `Σ_w c(w·tv)e^{⟨λ,w·tv⟩}` as an exact function of
/// `y = e^{-t}`: numerator Laurent polynomial over the common denominator
/// `Π_{α>0}(1 − y^{m_α})`.
fn weyl_term_numerator(
    rs: &RootSystem,
    q: u32,
    lam: &Weight,
    wi: usize,
    v: &[i64],
) -> BTreeMap<i64, BigRational> {
    let perm = &rs.weyl_elements()[wi].perm;
    let mut wv = vec![0i64; v.len()];
    for (a, &va) in v.iter().enumerate() {
        wv[perm[a]] = va;
    }
    // e^{⟨λ, w·tv⟩} = y^{-⟨λ, wv⟩}
    let mut shift = -int_pair(rs, lam, &wv);
    let mut sign = false;
    let mut factors: Vec<i64> = Vec::new();
    for &(a, b) in rs.positive_roots() {
        let e = wv[a] - wv[b];
        factors.push(e);
        // 1/(1 − y^{-m}) = −y^{m}/(1 − y^{m})
        if e < 0 {
            sign = !sign;
            shift += -e;
        }
    }
    let mut acc: BTreeMap<i64, BigRational> = BTreeMap::new();
    let unit = if sign {
        -BigRational::one()
    } else {
        BigRational::one()
    };
    acc.insert(shift, unit);
    // numerator factors (1 − q^{-1}y^{e}) for every positive root
    let minus_qi = -ratio(1, q as i64);
    for e in factors {
        let mut next: BTreeMap<i64, BigRational> = BTreeMap::new();
        for (k, cv) in &acc {
            *next.entry(*k).or_insert_with(BigRational::zero) += cv;
            *next.entry(k + e).or_insert_with(BigRational::zero) += cv * &minus_qi;
        }
        next.retain(|_, cv| !cv.is_zero());
        acc = next;
    }
    acc
}

/// Direct evaluation of `Σ_w c(w·tv)e^{⟨λ,w·tv⟩}` at a rational `y = e^{-t}`,
/// bypassing the symbolic common denominator entirely.
fn weyl_sum_at(rs: &RootSystem, q: u32, lam: &Weight, v: &[i64], y: &BigRational) -> BigRational {
    let qi = ratio(1, q as i64);
    let mut total = BigRational::zero();
    for wi in 0..rs.weyl_order() {
        let perm = &rs.weyl_elements()[wi].perm;
        let mut wv = vec![0i64; v.len()];
        for (a, &va) in v.iter().enumerate() {
            wv[perm[a]] = va;
        }
        let mut term = ratio_pow(y, -int_pair(rs, lam, &wv));
        for &(a, b) in rs.positive_roots() {
            let e = wv[a] - wv[b];
            let ye = ratio_pow(y, e);
            term *= (BigRational::one() - &qi * &ye) / (BigRational::one() - ye);
        }
        total += term;
    }
    total
}

/// Exact limit `lim_{y→1} Σ_w c(w·tv)e^{⟨λ,w·tv⟩}` via polynomial division.
fn weyl_sum_limit(rs: &RootSystem, q: u32, lam: &Weight, v: &[i64]) -> Result<BigRational, SpectralError> {
    let mut numerator: BTreeMap<i64, BigRational> = BTreeMap::new();
    for wi in 0..rs.weyl_order() {
        for (k, cv) in weyl_term_numerator(rs, q, lam, wi, v) {
            *numerator.entry(k).or_insert_with(BigRational::zero) += cv;
        }
    }
    numerator.retain(|_, cv| !cv.is_zero());
    if numerator.is_empty() {
        return Ok(BigRational::zero());
    }
    let kmin = *numerator.keys().next().unwrap();
    let kmax = *numerator.keys().next_back().unwrap();
    let mut dense = vec![BigRational::zero(); (kmax - kmin + 1) as usize];
    for (k, cv) in numerator {
        dense[(k - kmin) as usize] = cv;
    }
    // divide by (1 − y)^{|R⁺|}: with quotient b, a_k = b_k − b_{k−1}, so
    // b_k = a_k + b_{k−1}; the final carry is the value at y = 1 and must
    // vanish at every stage for the pole to cancel
    for _ in 0..rs.num_positive_roots() {
        let mut carry = BigRational::zero();
        for c in dense.iter_mut() {
            carry += &*c;
            *c = carry.clone();
        }
        let sink = dense.pop().unwrap_or_else(BigRational::zero);
        if !sink.is_zero() {
            return Err(SpectralError::NumericMismatch(
                "expected pole cancellation at y = 1 failed".into(),
            ));
        }
    }
    let value: BigRational = dense.iter().sum();
    let mut denom = BigRational::one();
    for &(a, b) in rs.positive_roots() {
        denom *= BigRational::from_integer(BigInt::from(v[a] - v[b]));
    }
    Ok(value / denom)
}

/// `F₀(λ) = P_λ(0)`, exact in `Q(√q)`.
///
/// For small `ℓ(λ)` (≤ 20 through rank 2, ≤ 8 at rank 3, where the exact
/// rational node values stay cheap) the symbolic limit is cross-checked
/// against a rational Neville extrapolation of the same Weyl sum along
/// `y = 1 − 2^{-j} → 1`; a relative disagreement beyond 1e-6 aborts. (The
/// extrapolation residual grows with the pole order; at rank 3 it reaches
/// ~1e-8, so the gate is set well above that but far below any plausible
/// symbolic-limit bug.)
pub fn f0_exact(rs: &RootSystem, q: u32, lam: &Weight) -> Result<QExt, SpectralError> {
    assert!(lam.is_dominant());
    let v = regular_direction(rs);
    let limit = weyl_sum_limit(rs, q, lam, &v)?;
    let check_cap = if rs.rank() >= 3 { 8 } else { 20 };
    if lam.ell() <= check_cap {
        let extrap = neville_to_one(rs, q, lam, &v);
        let scale = if limit.is_zero() {
            BigRational::one()
        } else {
            limit.abs()
        };
        if (&extrap - &limit).abs() > BigRational::from_float(1e-6).unwrap() * scale {
            return Err(SpectralError::NumericMismatch(format!(
                "limit {} vs extrapolation {}",
                crate::scalar::ratio_to_f64(&limit),
                crate::scalar::ratio_to_f64(&extrap)
            )));
        }
    }
    let w0 = w0_qinv(rs, q);
    Ok(QExt::q_half_pow(q, -rs.q_exponent(lam))
        .mul_ratio(&(limit / w0)))
}

/// Exact-rational Neville extrapolation of the Weyl sum to `y = 1`.
fn neville_to_one(rs: &RootSystem, q: u32, lam: &Weight, v: &[i64]) -> BigRational {
    let js: Vec<i64> = (9..=15).collect();
    let ys: Vec<BigRational> = js
        .iter()
        .map(|&j| BigRational::one() - ratio(1, 1i64 << j))
        .collect();
    let mut tab: Vec<BigRational> = ys
        .iter()
        .map(|y| weyl_sum_at(rs, q, lam, v, y))
        .collect();
    let target = BigRational::one();
    let n = tab.len();
    for m in 1..n {
        for i in 0..(n - m) {
            // P_{i..i+m}(1) via the Neville recurrence
            let num = (&target - &ys[i]) * &tab[i + 1] - (&target - &ys[i + m]) * &tab[i];
            tab[i] = num / (&ys[i + m] - &ys[i]);
        }
    }
    tab[0].clone()
}

// ---------------------------------------------------------------------------
// Quadrature inversion
// ---------------------------------------------------------------------------

/// Fourier-quadrature evaluation of `p^n(0, x_λ)`.
///
/// The spectral inversion integrand `(ρ_v h(iθ))^n \overline{P_λ(iθ)}
/// /|c(iθ)|²` has only removable wall singularities; after symmetrizing the
/// Weyl sum it equals, cell for cell, the pole-free form
/// `ρ_v^n q^{-⟨λ,ρ⟩} · h(iθ)^n e^{-i⟨λ+ρ,θ⟩} Δ(iθ) b(iθ)` integrated over
/// one period cell `θ = 2π(u_1α_1 + … + u_rα_r)`, `u ∈ [0,1)^r`, which is
/// what the trapezoid rule is applied to (the Plancherel constant is
/// calibrated by the `n = 0, λ = 0` integral on the same grid). The rule is
/// exact for trigonometric polynomials below the grid's Nyquist order, so
/// the only error is the geometrically small aliasing of the `b`-tail.
pub fn quadrature_pn(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    n: u32,
    lam: &Weight,
    grid: usize,
) -> Result<f64, SpectralError> {
    let r = rs.rank();
    if r > 2 {
        return Err(SpectralError::RankUnsupported(r));
    }
    assert!(lam.is_dominant());
    let need = (4 * n as usize)
        .max(3 * n as usize + lam.ell() as usize + 64)
        .max(16);
    let m = if grid == 0 { need } else { grid };
    if m < (4 * n as usize).max(1) {
        return Err(SpectralError::ResolutionTooLow {
            got: m,
            need: 4 * n as usize,
        });
    }

    let (rho_v, coeffs) = walk.normalization(rs, q);
    let cf: Vec<f64> = coeffs.iter().map(|c| c.to_f64().unwrap()).collect();
    let orbits: Vec<Vec<Vec<i64>>> = (1..=r)
        .map(|k| {
            rs.orbit(&rs.fundamental(k))
                .iter()
                .map(|muu| rs.c_coords(muu))
                .collect()
        })
        .collect();
    let roots = rs.positive_roots();
    let target = rs.c_coords(&lam.add(&rs.rho()));
    let rho_c = rs.c_coords(&rs.rho());
    let qi = 1.0 / q as f64;

    let dims = vec![m; r];
    let mut acc_n = KahanC::new();
    let mut acc_0 = KahanC::new();
    let mut idx = vec![0usize; r];
    loop {
        // θ coordinates: θ_a from θ = 2π Σ u_j α_j
        let mut theta = vec![0.0f64; r + 1];
        for j in 0..r {
            let u = idx[j] as f64 / m as f64;
            theta[j] += 2.0 * std::f64::consts::PI * u;
            theta[j + 1] -= 2.0 * std::f64::consts::PI * u;
        }
        let pair = |c: &[i64]| -> f64 {
            c.iter().zip(&theta).map(|(&ca, &ta)| ca as f64 * ta).sum()
        };
        // h(iθ)
        let mut h = Complex64::new(0.0, 0.0);
        for (k, orb) in orbits.iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for c in orb {
                s += Complex64::new(0.0, pair(c)).exp();
            }
            h += s * cf[k];
        }
        // Δ(iθ)·b(iθ)
        let mut db = Complex64::new(0.0, pair(&rho_c)).exp();
        for &(a, b) in roots {
            let e = Complex64::new(0.0, -(theta[a] - theta[b])).exp();
            db *= (1.0 - e) / (1.0 - e * qi);
        }
        let hn = h.powu(n);
        acc_n.add(hn * Complex64::new(0.0, -pair(&target)).exp() * db);
        acc_0.add(Complex64::new(0.0, -pair(&rho_c)).exp() * db);

        // odometer
        let mut axis = r;
        loop {
            if axis == 0 {
                let i0 = acc_0.value();
                let i_n = acc_n.value();
                let ratio = i_n.re / i0.re;
                let pref =
                    rho_v.to_f64().powi(n as i32) * QExt::q_half_pow(q, -rs.q_exponent(lam)).to_f64();
                return Ok(pref * ratio);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < dims[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Compensated complex accumulator (deterministic summation order).
struct KahanC {
    s: Complex64,
    c: Complex64,
}

impl KahanC {
    fn new() -> Self {
        KahanC {
            s: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
        }
    }

    fn add(&mut self, v: Complex64) {
        let y = v - self.c;
        let t = self.s + y;
        self.c = (t - self.s) - y;
        self.s = t;
    }

    fn value(&self) -> Complex64 {
        self.s
    }
}
