//! Convex saddle-point machinery for the step polynomial `h`.
//!
//! For a drift direction `δ` in the (closed) dominant chamber with
//! `⟨δ, α̃^∨⟩ < 1`, the function `φ^δ(u) = log h(u) − ⟨δ, u⟩` is smooth,
//! strictly convex, and coercive on `𝔞`; its unique minimizer `s` solves
//! `∇h(s)/h(s) = δ` and the minimum value `φ(δ)` is the exponential decay
//! rate of the kernel along `λ ≈ nδ`. This module computes `s`, `φ`,
//! `Φ(δ) = φ(δ) + log(ρz)`, the map `g = ∇log h` with its differential, the
//! Green-function saddle `(t₀, s₀)` solving `h(s₀) = (ρz)^{-1}` with
//! `∇h(s₀) ∥ λ`, and the concentration quadratic form `q_δ`.
//!
//! Everything is plain `f64`: damped Newton with backtracking on the convex
//! objective, stabilized by log-sum-exp so that large `|s|` (drifts near the
//! boundary) stay finite.

use crate::geometry::{self, dot, e_vec, HyperplaneBasis};
use crate::root_system::RootSystem;
use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SaddleError {
    #[error("invalid saddle input: {0}")]
    BadInput(String),
    #[error("saddle solve did not converge: {0}")]
    NoConvergence(String),
}

/// The step polynomial `h(u) = Σ_k c_k Σ_{μ ∈ W₀λ_k} e^{⟨μ,u⟩}` prepared for
/// floating-point evaluation: one `(coefficient, e-vector)` pair per
/// monomial, plus an orthonormal chart of the hyperplane.
pub struct StepGeometry {
    rank: usize,
    ambient: usize,
    monomials: Vec<(f64, Vec<f64>)>,
    basis: HyperplaneBasis,
    /// e-vectors of `λ_1, …, λ_r`.
    fund: Vec<Vec<f64>>,
    /// e-vectors of the simple roots (for chamber/dominance functionals).
    simple_roots: Vec<Vec<f64>>,
}

impl StepGeometry {
    pub fn new(rs: &RootSystem, coeffs: &[f64]) -> Self {
        assert_eq!(coeffs.len(), rs.rank());
        assert!(coeffs.iter().all(|&c| c > 0.0), "step weights must be positive");
        let mut monomials = Vec::new();
        for k in 1..=rs.rank() {
            for mu in rs.orbit(&rs.fundamental(k)) {
                monomials.push((coeffs[k - 1], e_vec(rs, &mu)));
            }
        }
        StepGeometry {
            rank: rs.rank(),
            ambient: rs.dim_ambient(),
            monomials,
            basis: HyperplaneBasis::new(rs),
            fund: (1..=rs.rank()).map(|k| e_vec(rs, &rs.fundamental(k))).collect(),
            simple_roots: (0..rs.rank())
                .map(|j| geometry::root_e_vec(rs, (j, j + 1)))
                .collect(),
        }
    }

    /// Step geometry of the canonical walk (all sphere weights equal 1 in
    /// the normalized step polynomial).
    pub fn simple(rs: &RootSystem) -> Self {
        Self::new(rs, &vec![1.0; rs.rank()])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &HyperplaneBasis {
        &self.basis
    }

    pub fn fundamental_e_vec(&self, k: usize) -> &[f64] {
        &self.fund[k - 1]
    }

    /// `h(0) = Σ_k c_k |W₀λ_k|`.
    pub fn h_at_zero(&self) -> f64 {
        self.monomials.iter().map(|(c, _)| c).sum()
    }

    pub fn h(&self, s: &[f64]) -> f64 {
        self.log_h(s).exp()
    }

    /// Log-sum-exp stabilized `log h(s)`.
    pub fn log_h(&self, s: &[f64]) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for (c, mu) in &self.monomials {
            let v = dot(mu, s) + c.ln();
            if v > m {
                m = v;
            }
        }
        let sum: f64 = self
            .monomials
            .iter()
            .map(|(c, mu)| (dot(mu, s) + c.ln() - m).exp())
            .sum();
        m + sum.ln()
    }

    /// Softmax statistics of the monomial distribution at `s`:
    /// `(log h, mean, covariance)` where mean = `∇log h` (ambient) and the
    /// covariance is the ambient Hessian of `log h`.
    fn softmax_stats(&self, s: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let n = self.ambient;
        let vals: Vec<f64> = self
            .monomials
            .iter()
            .map(|(c, mu)| dot(mu, s) + c.ln())
            .collect();
        let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = vals.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let mut mean = vec![0.0; n];
        for (p, (_, mu)) in probs.iter().zip(&self.monomials) {
            for a in 0..n {
                mean[a] += p * mu[a];
            }
        }
        let mut cov = vec![vec![0.0; n]; n];
        for (p, (_, mu)) in probs.iter().zip(&self.monomials) {
            let d: Vec<f64> = (0..n).map(|a| mu[a] - mean[a]).collect();
            for a in 0..n {
                for b in 0..n {
                    cov[a][b] += p * d[a] * d[b];
                }
            }
        }
        (m + z.ln(), mean, cov)
    }

    /// `g(s) = ∇h(s)/h(s) = ∇ log h(s)` (ambient coordinates; always lies
    /// in the hyperplane).
    pub fn g(&self, s: &[f64]) -> Vec<f64> {
        self.softmax_stats(s).1
    }

    /// `(g(s), dg_s)` with the differential expressed in the orthonormal
    /// chart of `𝔞` — the softmax covariance `(h·d²h − ∇h⊗∇h)/h²`,
    /// symmetric positive definite.
    pub fn g_and_dg(&self, s: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let (_, mean, cov) = self.softmax_stats(s);
        (mean, self.to_chart(&cov))
    }

    fn to_chart(&self, cov: &[Vec<f64>]) -> DMatrix<f64> {
        let r = self.rank;
        let n = self.ambient;
        DMatrix::from_fn(r, r, |i, j| {
            let bi = &self.basis_col(i);
            let bj = &self.basis_col(j);
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += bi[a] * cov[a][b] * bj[b];
                }
            }
            acc
        })
    }

    fn basis_col(&self, i: usize) -> Vec<f64> {
        let mut xi = vec![0.0; self.rank];
        xi[i] = 1.0;
        self.basis.to_ambient(&xi)
    }

    /// Simple-root pairings `⟨x, α_i^∨⟩` of an ambient vector.
    pub fn simple_pairings(&self, x: &[f64]) -> Vec<f64> {
        self.simple_roots.iter().map(|a| dot(a, x)).collect()
    }

    /// The length functional `|x| = ⟨x, α̃^∨⟩ = x_1 − x_{r+1}`.
    pub fn ell(&self, x: &[f64]) -> f64 {
        x[0] - x[self.ambient - 1]
    }

    /// Concentration quadratic form
    /// `q_δ(θ) = Σ_{i=0}^{r} e^{⟨λ_{i+1}−λ_i, s⟩} ⟨λ_{i+1}−λ_i, θ⟩²`
    /// (conventions `λ_0 = λ_{r+1} = 0`), evaluated at the saddle point `s`
    /// of `δ`. The difference vectors run over the orbit `W₀λ_1`, so the
    /// form is positive definite on `𝔞`.
    pub fn curvature_form(&self, s: &[f64], theta: &[f64]) -> f64 {
        let zero = vec![0.0; self.ambient];
        let mut acc = 0.0;
        for i in 0..=self.rank {
            let hi: &[f64] = if i == self.rank { &zero } else { &self.fund[i] };
            let lo: &[f64] = if i == 0 { &zero } else { &self.fund[i - 1] };
            let d: Vec<f64> = (0..self.ambient).map(|a| hi[a] - lo[a]).collect();
            acc += dot(&d, s).exp() * dot(&d, theta).powi(2);
        }
        acc
    }
}

/// Result of minimizing `φ^δ(u) = log h(u) − ⟨δ, u⟩`.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    /// The drift target (ambient, sum-zero).
    pub delta: Vec<f64>,
    /// Minimizer `s` (ambient, sum-zero); in the closed dominant chamber
    /// whenever `δ` is.
    pub s: Vec<f64>,
    /// Minimum value `φ(δ)`.
    pub phi: f64,
    /// `‖∇h(s)/h(s) − δ‖`.
    pub residual: f64,
    /// Hessian of `φ^δ` at `s` in the orthonormal chart (= `dg_s`).
    pub hessian: DMatrix<f64>,
}

const GRAD_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 400;

/// Minimize `φ^δ` by damped Newton from `u = 0`.
///
/// Requires `δ` in the closed dominant chamber with `⟨δ, α̃^∨⟩ < 1`;
/// strict convexity and coercivity then give global convergence.
pub fn solve_saddle(
    geom: &StepGeometry,
    delta_ambient: &[f64],
) -> Result<SaddleSolution, SaddleError> {
    let delta = geometry::project_sum_zero(delta_ambient);
    let pair = geom.simple_pairings(&delta);
    if pair.iter().any(|&d| d < -1e-12) {
        return Err(SaddleError::BadInput(format!(
            "drift not in the closed dominant chamber: pairings {pair:?}"
        )));
    }
    let ell = geom.ell(&delta);
    if ell >= 1.0 - 1e-12 {
        return Err(SaddleError::BadInput(format!(
            "drift length {ell} ≥ 1: unreachable at linear speed"
        )));
    }

    let r = geom.rank();
    let mut xi = DVector::<f64>::zeros(r);
    let phi_of = |xi: &DVector<f64>| -> f64 {
        let s = geom.basis().to_ambient(xi.as_slice());
        geom.log_h(&s) - dot(&delta, &s)
    };
    let residual_of = |xi: &DVector<f64>| -> f64 {
        let s = geom.basis().to_ambient(xi.as_slice());
        geometry::norm(&geometry::sub(&geom.g(&s), &delta))
    };
    let mut phi_cur = phi_of(&xi);
    let mut best_xi = xi.clone();
    let mut best_res = residual_of(&xi);
    for _ in 0..MAX_NEWTON {
        let s = geom.basis().to_ambient(xi.as_slice());
        let (g, hess) = geom.g_and_dg(&s);
        let grad_ambient = geometry::sub(&g, &delta);
        let res = geometry::norm(&grad_ambient);
        if res < best_res {
            best_res = res;
            best_xi = xi.clone();
        }
        if res <= GRAD_TOL {
            break;
        }
        let grad_xi = DVector::from_vec(geom.basis().from_ambient(&grad_ambient));
        // Cholesky with a Levenberg fallback for near-degenerate Hessians
        let mut step = None;
        let mut shift = 0.0;
        for _ in 0..8 {
            let mut m = hess.clone();
            for i in 0..r {
                m[(i, i)] += shift;
            }
            if let Some(ch) = Cholesky::new(m) {
                step = Some(-ch.solve(&grad_xi));
                break;
            }
            shift = if shift == 0.0 { 1e-12 } else { shift * 100.0 };
        }
        let step = step.ok_or_else(|| {
            SaddleError::NoConvergence("Hessian factorization failed".into())
        })?;
        if res <= 1e-6 {
            // quadratic-convergence zone: objective decrements fall below
            // f64 epsilon, so polish on the residual instead of φ
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..12 {
                let cand = &xi + &step * t;
                if residual_of(&cand) < res {
                    xi = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break; // at the floating-point floor
            }
        } else {
            // globalization phase: backtracking Armijo on the convex objective
            let mut t = 1.0;
            let slope: f64 = grad_xi.dot(&step);
            let mut moved = false;
            for _ in 0..60 {
                let cand = &xi + &step * t;
                let val = phi_of(&cand);
                if val <= phi_cur + 1e-4 * t * slope {
                    xi = cand;
                    phi_cur = val;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break; // stalled at numerical floor
            }
        }
    }
    if residual_of(&xi) > best_res {
        xi = best_xi;
    }

    let phi_final = phi_of(&xi);
    let s = geom.basis().to_ambient(xi.as_slice());
    let (g, hessian) = geom.g_and_dg(&s);
    let residual = geometry::norm(&geometry::sub(&g, &delta));
    if residual > 1e-10 {
        return Err(SaddleError::NoConvergence(format!(
            "gradient residual {residual:.3e} for drift {delta:?}"
        )));
    }
    Ok(SaddleSolution {
        delta,
        s,
        phi: phi_final,
        residual,
        hessian,
    })
}

/// `φ(δ)`: the exponential rate `min_u [log h(u) − ⟨δ,u⟩]`.
pub fn phi(geom: &StepGeometry, delta_ambient: &[f64]) -> Result<f64, SaddleError> {
    Ok(solve_saddle(geom, delta_ambient)?.phi)
}

/// `Φ(δ) = φ(δ) + log(ρ_v z)`; `∇Φ(δ) = −s(δ)`.
pub fn capital_phi(
    geom: &StepGeometry,
    log_rho_z: f64,
    delta_ambient: &[f64],
) -> Result<f64, SaddleError> {
    Ok(phi(geom, delta_ambient)? + log_rho_z)
}

/// Green-function saddle point along the ray through `x`.
#[derive(Debug, Clone)]
pub struct GreenSaddle {
    /// Maximizer of `Ψ(t) = t·Φ(x/t)`.
    pub t0: f64,
    /// Saddle `s₀ = s(x/t₀)`: solves `h(s₀) = (ρz)^{-1}`, `∇h(s₀) ∥ x`.
    pub s0: Vec<f64>,
    /// Drift at the maximizer, `δ₀ = x/t₀`.
    pub delta0: Vec<f64>,
    /// `log h(s₀)` (should equal `−log(ρz)`).
    pub log_h_s0: f64,
}

/// Solve `Ψ'(t) = log h(s_{x/t}) + log(ρz) = 0` for `t₀ > |x|`.
///
/// `Ψ` is strictly concave, and `log h(s_{x/t})` decreases strictly from
/// `+∞` (as `t ↓ |x|`) to `log h(0)` (as `t → ∞`), so a root exists exactly
/// when `log(ρz) < −log h(0)`, i.e. `z` below the spectral-radius inverse.
pub fn green_saddle(
    geom: &StepGeometry,
    log_rho_z: f64,
    x_ambient: &[f64],
) -> Result<GreenSaddle, SaddleError> {
    let x = geometry::project_sum_zero(x_ambient);
    let ell = geom.ell(&x);
    if !(ell > 0.0) {
        return Err(SaddleError::BadInput("x must be a nonzero dominant vector".into()));
    }
    if log_rho_z + geom.h_at_zero().ln() >= -1e-14 {
        return Err(SaddleError::BadInput(
            "z must be strictly below the inverse spectral radius".into(),
        ));
    }
    let psi_slope = |t: f64| -> Option<f64> {
        let delta = geometry::scale(&x, 1.0 / t);
        solve_saddle(geom, &delta)
            .ok()
            .map(|sol| geom.log_h(&sol.s) + log_rho_z)
    };
    // Bracket the root. Lower end: t slightly above |x| (slope → +∞ there);
    // upper end: large t (slope → log h(0) + log ρz < 0).
    let mut t_lo = ell * (1.0 + 1e-7);
    let mut slope_lo = psi_slope(t_lo);
    let mut guard = 0;
    while slope_lo.is_none() || slope_lo.unwrap() <= 0.0 {
        match slope_lo {
            Some(v) if v <= 0.0 => {
                // z so small that even the steepest drift decays: the root
                // sits below our numerical floor next to t = |x|
                if guard > 60 {
                    return Err(SaddleError::NoConvergence(
                        "saddle pinned against the light cone".into(),
                    ));
                }
                t_lo = ell + (t_lo - ell) * 0.25;
            }
            _ => {
                // solver refused this close to the edge; back off upwards
                if guard > 60 {
                    return Err(SaddleError::NoConvergence(
                        "could not evaluate near the light cone".into(),
                    ));
                }
                t_lo = ell + (t_lo - ell) * 4.0;
            }
        }
        slope_lo = psi_slope(t_lo);
        guard += 1;
    }
    let mut t_hi = t_lo * 2.0;
    guard = 0;
    loop {
        match psi_slope(t_hi) {
            Some(v) if v < 0.0 => break,
            _ => {
                t_hi *= 2.0;
                guard += 1;
                if guard > 200 {
                    return Err(SaddleError::NoConvergence("no sign change in Ψ'".into()));
                }
            }
        }
    }
    // Bisection on the strictly decreasing slope.
    for _ in 0..200 {
        let mid = 0.5 * (t_lo + t_hi);
        match psi_slope(mid) {
            Some(v) if v > 0.0 => t_lo = mid,
            Some(_) => t_hi = mid,
            None => t_lo = mid, // failures only occur against the cone edge
        }
        if (t_hi - t_lo) <= 1e-13 * t_hi {
            break;
        }
    }
    let t0 = 0.5 * (t_lo + t_hi);
    let delta0 = geometry::scale(&x, 1.0 / t0);
    let sol = solve_saddle(geom, &delta0)?;
    Ok(GreenSaddle {
        t0,
        log_h_s0: geom.log_h(&sol.s),
        s0: sol.s,
        delta0: sol.delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::root_system::{RootSystem, Weight};

    fn delta_from_coords(rs: &RootSystem, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rs.dim_ambient()];
        for (k, &dk) in d.iter().enumerate() {
            let ev = e_vec(rs, &rs.fundamental(k + 1));
            for a in 0..out.len() {
                out[a] += dk * ev[a];
            }
        }
        out
    }

    #[test]
    fn zero_drift_gives_origin_and_log_degree() {
        for r in 1..=3 {
            let rs = RootSystem::new(r);
            let geom = StepGeometry::simple(&rs);
            let sol = solve_saddle(&geom, &vec![0.0; r + 1]).unwrap();
            assert!(geometry::norm(&sol.s) < 1e-9);
            let expect = ((1u64 << (r + 1)) as f64 - 2.0).ln();
            assert!((sol.phi - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rank1_closed_form() {
        let rs = RootSystem::new(1);
        let geom = StepGeometry::simple(&rs);
        let d1 = 0.6f64;
        let delta = delta_from_coords(&rs, &[d1]);
        let sol = solve_saddle(&geom, &delta).unwrap();
        // ⟨λ_1, s⟩ = artanh(3/5) = ln 2
        let lam = e_vec(&rs, &rs.fundamental(1));
        let v = dot(&lam, &sol.s);
        assert!((v - d1.atanh()).abs() < 1e-10);
        assert!((v - 2f64.ln()).abs() < 1e-10);
        // φ = log(2 cosh v) − δ·v = ln(5/2) − (3/5)·ln 2, the binary-entropy form
        let closed = (5.0f64 / 2.0).ln() - d1 * 2f64.ln();
        let entropy =
            2f64.ln() - 0.5 * ((1.0 + d1) * (1.0 + d1).ln() + (1.0 - d1) * (1.0 - d1).ln());
        assert!((closed - entropy).abs() < 1e-12);
        assert!((sol.phi - closed).abs() < 1e-10);
        assert!((sol.phi - 0.5004024235381879).abs() < 1e-10);
    }

    #[test]
    fn rank2_diagonal_symmetry() {
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        let delta = delta_from_coords(&rs, &[0.3, 0.3]);
        let sol = solve_saddle(&geom, &delta).unwrap();
        let p = geom.simple_pairings(&sol.s);
        assert!((p[0] - p[1]).abs() < 1e-9, "diagonal drift gives diagonal saddle");
    }

    #[test]
    fn gradient_of_capital_phi_is_minus_s() {
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        let delta = delta_from_coords(&rs, &[0.25, 0.4]);
        let sol = solve_saddle(&geom, &delta).unwrap();
        // finite differences of φ along ambient hyperplane directions
        let eps = 1e-6;
        for dir in [[1.0, 0.0], [0.0, 1.0], [0.7, -0.3]] {
            let v = delta_from_coords(&rs, &dir);
            let dp = phi(&geom, &geometry::add(&delta, &geometry::scale(&v, eps))).unwrap();
            let dm = phi(&geom, &geometry::add(&delta, &geometry::scale(&v, -eps))).unwrap();
            let fd = (dp - dm) / (2.0 * eps);
            let exact = -dot(&sol.s, &v);
            assert!(
                (fd - exact).abs() < 1e-5 * (1.0 + exact.abs()),
                "∇Φ = −s failed: fd {fd}, exact {exact}"
            );
        }
    }

    #[test]
    fn dg_is_spd_and_matches_finite_differences() {
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        let s = delta_from_coords(&rs, &[0.35, -0.1]);
        let (_, dg) = geom.g_and_dg(&s);
        // symmetry + positive definiteness
        for i in 0..2 {
            for j in 0..2 {
                assert!((dg[(i, j)] - dg[(j, i)]).abs() < 1e-12);
            }
        }
        assert!(Cholesky::new(dg.clone()).is_some(), "dg must be SPD");
        // finite differences of g in chart coordinates
        let eps = 1e-6;
        for i in 0..2 {
            let mut xi = vec![0.0; 2];
            xi[i] = eps;
            let dv = geom.basis().to_ambient(&xi);
            let gp = geom.basis().from_ambient(&geom.g(&geometry::add(&s, &dv)));
            let gm = geom.basis().from_ambient(&geom.g(&geometry::sub(&s, &dv)));
            for j in 0..2 {
                let fd = (gp[j] - gm[j]) / (2.0 * eps);
                assert!(
                    (fd - dg[(j, i)]).abs() < 1e-5,
                    "dg mismatch at ({j},{i}): fd {fd} vs {}",
                    dg[(j, i)]
                );
            }
        }
        // random directions: ⟨u, dg u⟩ > 0
        for u in [[1.0, 0.0], [0.3, -0.9], [-0.5, -0.5]] {
            let uv = DVector::from_vec(u.to_vec());
            assert!((&dg * &uv).dot(&uv) > 0.0);
        }
    }

    #[test]
    fn newton_converges_on_a_dense_admissible_grid() {
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        let steps = 9;
        for i in 0..=steps {
            for j in 0..=steps {
                let d1 = 0.98 * i as f64 / steps as f64;
                let d2 = 0.98 * j as f64 / steps as f64;
                if d1 + d2 >= 0.98 {
                    continue;
                }
                let delta = delta_from_coords(&rs, &[d1, d2]);
                let sol = solve_saddle(&geom, &delta).unwrap();
                assert!(sol.residual <= 1e-10);
                // minimizer in the closed chamber
                assert!(geom.simple_pairings(&sol.s).iter().all(|&p| p >= -1e-9));
            }
        }
    }

    #[test]
    fn rejects_inadmissible_drifts() {
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        // outside the chamber
        let bad = delta_from_coords(&rs, &[-0.2, 0.4]);
        assert!(matches!(
            solve_saddle(&geom, &bad),
            Err(SaddleError::BadInput(_))
        ));
        // too long
        let far = delta_from_coords(&rs, &[0.7, 0.5]);
        assert!(matches!(
            solve_saddle(&geom, &far),
            Err(SaddleError::BadInput(_))
        ));
    }

    #[test]
    fn chamber_order_consistency_rank2() {
        // ⟨λ_1,s⟩ ≥ ⟨λ_2,s⟩ ⇔ δ_1 ≥ δ_2 on a sample of drifts
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        let l1 = e_vec(&rs, &rs.fundamental(1));
        let l2 = e_vec(&rs, &rs.fundamental(2));
        for (d1, d2) in [(0.5, 0.2), (0.2, 0.5), (0.45, 0.45), (0.7, 0.1)] {
            let sol = solve_saddle(&geom, &delta_from_coords(&rs, &[d1, d2])).unwrap();
            let s1 = dot(&l1, &sol.s);
            let s2 = dot(&l2, &sol.s);
            if d1 > d2 + 1e-9 {
                assert!(s1 >= s2 - 1e-9);
            }
            if d2 > d1 + 1e-9 {
                assert!(s2 >= s1 - 1e-9);
            }
        }
    }

    #[test]
    fn boundary_comparability_brackets() {
        // e^{⟨λ_2−λ_1,s⟩} ≍ 1−δ_1 and e^{−⟨λ_2,s⟩} ≍ 1−δ_1−δ_2 in rank 2
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        let l1 = e_vec(&rs, &rs.fundamental(1));
        let l2 = e_vec(&rs, &rs.fundamental(2));
        let mut d1 = 0.5;
        while d1 <= 0.999 {
            let d2 = 0.5 * (1.0 - d1);
            let sol = solve_saddle(&geom, &delta_from_coords(&rs, &[d1, d2])).unwrap();
            let f1 = (dot(&l2, &sol.s) - dot(&l1, &sol.s)).exp() / (1.0 - d1);
            let f2 = (-dot(&l2, &sol.s)).exp() / (1.0 - d1 - d2);
            for f in [f1, f2] {
                assert!(
                    (1.0 / 64.0..=64.0).contains(&f),
                    "bracket violated at δ1 = {d1}: {f}"
                );
            }
            d1 += 0.0499;
        }
    }

    #[test]
    fn rank3_boundary_brackets() {
        // e^{⟨λ_{i+1}−λ_i,s⟩} ≍ 1 − (δ_1 + … + δ_i) for i = 1..3
        let rs = RootSystem::new(3);
        let geom = StepGeometry::simple(&rs);
        let fund: Vec<Vec<f64>> = (1..=3).map(|k| e_vec(&rs, &rs.fundamental(k))).collect();
        for (d1, d2, d3) in [
            (0.6, 0.2, 0.1),
            (0.8, 0.05, 0.05),
            (0.3, 0.3, 0.3),
            (0.9, 0.04, 0.03),
        ] {
            let sol = solve_saddle(&geom, &delta_from_coords(&rs, &[d1, d2, d3])).unwrap();
            let d = [d1, d2, d3];
            for i in 1..=3usize {
                let hi: &[f64] = if i == 3 { &[0.0, 0.0, 0.0, 0.0] } else { &fund[i] };
                let num = (dot(hi, &sol.s) - dot(&fund[i - 1], &sol.s)).exp();
                let den = 1.0 - d[..i].iter().sum::<f64>();
                let f = num / den;
                assert!(
                    (1.0 / 64.0..=64.0).contains(&f),
                    "rank-3 bracket violated: i={i}, f={f}"
                );
            }
        }
    }

    #[test]
    fn green_saddle_rank1_closed_form() {
        let rs = RootSystem::new(1);
        let geom = StepGeometry::simple(&rs);
        // take ρz with log(ρz) = −log(2 cosh v*) for v* = 0.8
        let vstar = 0.8f64;
        let log_rho_z = -(2.0 * vstar.cosh()).ln();
        let x = e_vec(&rs, &Weight::new(vec![7]));
        let gs = green_saddle(&geom, log_rho_z, &x).unwrap();
        // h(s0) = (ρz)^{-1} and ⟨λ_1, s0⟩ = v*
        assert!((gs.log_h_s0 + log_rho_z).abs() < 1e-10);
        let lam = e_vec(&rs, &rs.fundamental(1));
        assert!((dot(&lam, &gs.s0) - vstar).abs() < 1e-9);
        // δ0 = tanh(v*) direction, t0 = ℓ(x)/δ0
        let d0 = geom.ell(&gs.delta0);
        assert!((d0 - vstar.tanh()).abs() < 1e-9);
        assert!((gs.t0 - 7.0 / vstar.tanh()).abs() < 1e-6 * gs.t0);
    }

    #[test]
    fn green_saddle_rank2_properties() {
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        // z at 0.9 of critical: log(ρz) = log(0.9) − log h(0)
        let log_rho_z = 0.9f64.ln() - geom.h_at_zero().ln();
        let x = e_vec(&rs, &Weight::new(vec![5, 3]));
        let gs = green_saddle(&geom, log_rho_z, &x).unwrap();
        assert!((gs.log_h_s0 + log_rho_z).abs() < 1e-9);
        // ∇h(s0) ∥ x: residual of the cross terms
        let g = geom.g(&gs.s0);
        let xs = geometry::norm(&x);
        let gs_n = geometry::norm(&g);
        let cosangle = dot(&g, &x) / (xs * gs_n);
        assert!(cosangle > 1.0 - 1e-9, "gradient parallel to x");
        // Ψ strictly concave: second difference negative
        let psi = |t: f64| -> f64 {
            t * (phi(&geom, &geometry::scale(&x, 1.0 / t)).unwrap() + log_rho_z)
        };
        let t = gs.t0;
        let dd = psi(t * 1.01) + psi(t * 0.99) - 2.0 * psi(t);
        assert!(dd < 0.0);
        // t0 maximizes Ψ locally
        assert!(psi(t) >= psi(t * 1.01) && assert_finite(psi(t * 0.99)) <= psi(t));
        // z → critical: s0 → 0 like √(1 − z/z_c); Hessian of log h at 0 is
        // (1/3)·Id for rank 2, so |s0|² ≈ 6·(1 − z/z_c)
        let near_crit = 0.999999f64.ln() - geom.h_at_zero().ln();
        let gs2 = green_saddle(&geom, near_crit, &x).unwrap();
        let n0 = geometry::norm(&gs2.s0);
        assert!((1e-3..4e-3).contains(&n0), "|s0| = {n0}");
    }

    fn assert_finite(v: f64) -> f64 {
        assert!(v.is_finite());
        v
    }

    #[test]
    fn curvature_form_examples() {
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        let zero = vec![0.0; 3];
        // θ = 0 → 0
        assert_eq!(geom.curvature_form(&zero, &zero), 0.0);
        // s = 0: all shift factors are 1, so q_0(θ) = Σ ⟨μ, θ⟩² over W₀λ_1
        let theta = delta_from_coords(&rs, &[0.4, -0.2]);
        let mut expect = 0.0;
        for mu in rs.orbit(&rs.fundamental(1)) {
            expect += dot(&e_vec(&rs, &mu), &theta).powi(2);
        }
        assert!((geom.curvature_form(&zero, &theta) - expect).abs() < 1e-12);
        // positivity at a generic saddle
        let sol = solve_saddle(&geom, &delta_from_coords(&rs, &[0.3, 0.25])).unwrap();
        for th in [[1.0, 0.0], [0.0, 1.0], [-0.6, 0.8]] {
            let tv = delta_from_coords(&rs, &th);
            assert!(geom.curvature_form(&sol.s, &tv) > 0.0);
        }
    }

    #[test]
    fn taylor_sandwich_of_capital_phi_at_green_saddle() {
        let rs = RootSystem::new(2);
        let geom = StepGeometry::simple(&rs);
        let log_rho_z = 0.8f64.ln() - geom.h_at_zero().ln();
        let x = e_vec(&rs, &Weight::new(vec![2, 1]));
        let gs = green_saddle(&geom, log_rho_z, &x).unwrap();
        let phi0 = capital_phi(&geom, log_rho_z, &gs.delta0).unwrap();
        // Φ(δ) − Φ(δ0) + ⟨δ − δ0, s0⟩ ≍ −|δ − δ0|² near δ0
        for (e1, e2) in [(1e-3, 0.0), (0.0, 1e-3), (7e-4, -5e-4), (-1e-3, 1e-3)] {
            let dd = delta_from_coords(&rs, &[e1, e2]);
            let delta = geometry::add(&gs.delta0, &dd);
            let val = capital_phi(&geom, log_rho_z, &delta).unwrap() - phi0
                + dot(&dd, &gs.s0);
            let n2 = dot(&dd, &dd);
            let ratio = val / n2;
            assert!(
                (-1e3..=-1e-3).contains(&ratio),
                "second-order sandwich failed: ratio {ratio}"
            );
        }
    }
}
