//! Exact `n`-step transition probabilities and Green functions.
//!
//! The transition operator of a nearest-neighbor isotropic walk acts on the
//! spherical transform side as multiplication by `ρ_v · h(z)`, where `h` is
//! a W₀-invariant Laurent polynomial supported on the orbits of the
//! fundamental weights. Inverting the transform reduces `p^n(0,x)` to
//! coefficient extraction:
//!
//! `p^n(0,λ) = ρ_v^n · q^{-⟨λ,2ρ⟩/2} · Σ_{w∈W₀} det(w) · T_n(λ + ρ − wρ)`,
//!
//! where `T_n` is the coefficient function of `h^n · b` and
//! `b = Π_{α>0} (1 − q^{-1}e^{-α})^{-1}` carries the Kostant-type partition
//! weights `q^{-|κ|}`. The engine materializes `h^t · b` on a shrinking
//! lattice window by a dense dynamic program over scaled integers
//! (`q^{D} · T_t` with `D` the window's partition-height cap), so every
//! readout is an exact element of `Q(√q)`. The total-mass identity
//! `Σ_λ N_λ(q) p^n(0,λ) = 1` is available as a zero-tolerance certificate
//! whenever the read set covers the reachable dominant cone.

use crate::geometry::{self, e_vec};
use crate::root_system::{RootSystem, Weight};
use crate::saddle::{self, StepGeometry};
use crate::scalar::{ratio, ratio_int, ratio_pow, QExt};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid walk specification: {0}")]
    InvalidWalk(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(
        "step ceiling exceeded for rank {rank}: requested n = {requested}, ceiling {ceiling} \
         (raise the configured ceiling to proceed)"
    )]
    ResourceCeiling {
        rank: usize,
        requested: u32,
        ceiling: u32,
    },
    #[error("tail not certifiable: {0}")]
    TailNotCertifiable(String),
}

/// Nearest-neighbor isotropic walk specifications.
#[derive(Debug, Clone, PartialEq)]
pub enum WalkSpec {
    /// One-step probability `q^{-⟨λ_k,2ρ⟩/2}·ρ_v` to each vertex of the
    /// `k`-sphere, `ρ_v = 1/(Σ_k q^{-⟨λ_k,2ρ⟩/2} N_{λ_k})`.
    Simple,
    /// Rank-2 isotropic walk with one-step probability `p_k` to each vertex
    /// of the `k`-sphere; requires `p_1 N_{λ_1} + p_2 N_{λ_2} = 1`.
    Isotropic2 { p1: BigRational, p2: BigRational },
}

impl WalkSpec {
    pub fn validate(&self, rs: &RootSystem, q: u32) -> Result<(), KernelError> {
        if q < 2 {
            return Err(KernelError::InvalidInput(format!(
                "thickness q must be ≥ 2, got {q}"
            )));
        }
        match self {
            WalkSpec::Simple => Ok(()),
            WalkSpec::Isotropic2 { p1, p2 } => {
                if rs.rank() != 2 {
                    return Err(KernelError::InvalidWalk(
                        "isotropic2 walk is defined for rank 2 only".into(),
                    ));
                }
                if !p1.is_positive() || !p2.is_positive() {
                    return Err(KernelError::InvalidWalk(
                        "isotropic2 weights must be positive".into(),
                    ));
                }
                let mut total = QExt::zero(q);
                for (k, p) in [(1usize, p1), (2usize, p2)] {
                    let nk = rs.n_lambda(&rs.fundamental(k)).eval_sqrt_q(q);
                    total = total.add(&nk.mul(&QExt::from_ratio(p.clone(), q)));
                }
                if total.sub(&QExt::one(q)).is_zero() {
                    Ok(())
                } else {
                    Err(KernelError::InvalidWalk(format!(
                        "isotropic2 weights are not normalized: p1·N1 + p2·N2 = {total}"
                    )))
                }
            }
        }
    }

    /// Decompose the spherical symbol as `ρ_v · Σ_k c_k m_k` with *integer*
    /// orbit coefficients `c_k`; returns `(ρ_v, [c_1..c_r])`.
    pub fn normalization(&self, rs: &RootSystem, q: u32) -> (QExt, Vec<BigInt>) {
        match self {
            WalkSpec::Simple => {
                let mut denom = QExt::zero(q);
                for k in 1..=rs.rank() {
                    let lam = rs.fundamental(k);
                    let nk = rs.n_lambda(&lam).eval_sqrt_q(q);
                    denom =
                        denom.add(&nk.mul(&QExt::q_half_pow(q, -rs.q_exponent(&lam))));
                }
                (denom.inv(), vec![BigInt::one(); rs.rank()])
            }
            WalkSpec::Isotropic2 { p1, p2 } => {
                // p_k = ρ_v c_k q^{-E_k/2} with E_k = 2, so c_k = d·q·p_k
                // for d the common denominator: ρ_v = 1/d.
                let qn = BigInt::from(q);
                let c1 = p1 * &qn;
                let c2 = p2 * &qn;
                let d = num_integer::lcm(c1.denom().clone(), c2.denom().clone());
                let coeffs = vec![
                    (&c1 * &d).to_integer(),
                    (&c2 * &d).to_integer(),
                ];
                (
                    QExt::from_ratio(BigRational::new(BigInt::one(), d), q),
                    coeffs,
                )
            }
        }
    }

    /// The spherical normalizer `ρ_v` (for the simple walk this is the
    /// constant `ρ = 1/(Σ q^{-⟨λ_k,2ρ⟩/2} N_{λ_k})`).
    pub fn rho_v(&self, rs: &RootSystem, q: u32) -> QExt {
        self.normalization(rs, q).0
    }

    /// One-step probability to a single vertex of the `k`-sphere.
    pub fn one_step(&self, rs: &RootSystem, q: u32, k: usize) -> QExt {
        let (rho_v, coeffs) = self.normalization(rs, q);
        let ek = rs.q_exponent(&rs.fundamental(k));
        rho_v
            .mul(&QExt::q_half_pow(q, -ek))
            .mul_ratio(&BigRational::from_integer(coeffs[k - 1].clone()))
    }

    /// Spectral radius `ρ̃ = ρ_v · h(0)` of the transition operator.
    pub fn spectral_radius(&self, rs: &RootSystem, q: u32) -> QExt {
        let (rho_v, coeffs) = self.normalization(rs, q);
        let mut h0 = BigInt::zero();
        for (k, c) in coeffs.iter().enumerate() {
            let orbit = rs.orbit(&rs.fundamental(k + 1)).len();
            h0 += c * BigInt::from(orbit);
        }
        rho_v.mul_ratio(&BigRational::from_integer(h0))
    }

    /// Step coefficients as `f64` for the analytic layer.
    pub fn step_coeffs_f64(&self, rs: &RootSystem, q: u32) -> Vec<f64> {
        self.normalization(rs, q)
            .1
            .iter()
            .map(|c| c.to_f64().unwrap())
            .collect()
    }
}

/// Exact closed forms for the simple-walk spectral radius at ranks ≤ 3:
/// `2√q/(q+1)`, `3q/(q²+q+1)`, and
/// `14q²/((1+q²)[(q²+q+1) + 2√q(q+1)])`.
pub fn simple_rho_tilde_closed_form(rank: usize, q: u32) -> Option<QExt> {
    let qi = q as i64;
    match rank {
        1 => Some(QExt::new(ratio(0, 1), ratio(2, qi + 1), q)),
        2 => Some(QExt::from_ratio(ratio(3 * qi, qi * qi + qi + 1), q)),
        3 => {
            let den = QExt::new(
                ratio((1 + qi * qi) * (qi * qi + qi + 1), 1),
                ratio((1 + qi * qi) * 2 * (qi + 1), 1),
                q,
            );
            Some(QExt::from_ratio(ratio(14 * qi * qi, 1), q).mul(&den.inv()))
        }
        _ => None,
    }
}

/// Per-rank default ceilings on the step count of the exact engine.
pub fn default_step_ceiling(rank: usize) -> u32 {
    match rank {
        1 => 200,
        2 => 48,
        3 => 16,
        _ => 8,
    }
}

/// Hard cap on dense window cells (memory guard).
const MAX_WINDOW_CELLS: usize = 4_000_000;

/// Dense box over fundamental-coordinate vectors, row-major.
struct LatticeBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
    strides: Vec<usize>,
    len: usize,
}

impl LatticeBox {
    fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        let r = lo.len();
        let mut strides = vec![0usize; r];
        let mut len = 1usize;
        for i in (0..r).rev() {
            strides[i] = len;
            len *= (hi[i] - lo[i] + 1).max(0) as usize;
        }
        LatticeBox {
            lo,
            hi,
            strides,
            len,
        }
    }

    fn index(&self, m: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..m.len() {
            if m[i] < self.lo[i] || m[i] > self.hi[i] {
                return None;
            }
            idx += (m[i] - self.lo[i]) as usize * self.strides[i];
        }
        Some(idx)
    }

    /// Signed linear offset corresponding to a coordinate displacement.
    fn offset(&self, delta: &[i64]) -> i64 {
        delta
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| d * s as i64)
            .sum()
    }

    /// Iterate linear indices over the sub-box `[lo, hi]` (inclusive, must
    /// lie inside).
    fn for_each_in(&self, lo: &[i64], hi: &[i64], mut f: impl FnMut(usize)) {
        let r = self.lo.len();
        if (0..r).any(|i| lo[i] > hi[i]) {
            return;
        }
        let mut m = lo.to_vec();
        let mut idx = self.index(lo).expect("sub-box inside box");
        'outer: loop {
            f(idx);
            let mut axis = r;
            loop {
                if axis == 0 {
                    break 'outer;
                }
                axis -= 1;
                if m[axis] < hi[axis] {
                    m[axis] += 1;
                    idx += self.strides[axis];
                    continue 'outer;
                }
                idx -= (hi[axis] - lo[axis]) as usize * self.strides[axis];
                m[axis] = lo[axis];
            }
        }
    }
}

/// Scaled Kostant partition table: `κ(a) = q^{ht(v)}·K(v)` for
/// `v = Σ a_j α_j`, over the box `0 ≤ a_j ≤ caps_j`, where `K` is the
/// coefficient of `e^{-v}` in `Π_{α>0}(1 − q^{-1}e^{-α})^{-1}`.
fn kostant_scaled(rs: &RootSystem, q: u32, caps: &[i64]) -> Vec<BigInt> {
    let r = rs.rank();
    let abox = LatticeBox::new(vec![0; r], caps.to_vec());
    let mut table = vec![BigInt::zero(); abox.len.max(1)];
    if abox.len == 0 {
        return table;
    }
    table[0] = BigInt::one();
    for &(i, j) in rs.positive_roots() {
        // root α_{i+1} + … + α_j has a-profile 1 on positions i..j
        let mut profile = vec![0i64; r];
        for p in i..j {
            profile[p] = 1;
        }
        if (0..r).any(|p| profile[p] > caps[p]) {
            continue;
        }
        let ht = (j - i) as u32;
        let mult = BigInt::from(q).pow(ht - 1);
        let off = abox.offset(&profile) as usize;
        // ascending scan implements the geometric series of this factor
        let lo: Vec<i64> = profile.clone();
        abox.for_each_in(&lo, caps, |idx| {
            let add = &mult * &table[idx - off];
            table[idx] += add;
        });
    }
    table
}

/// The exact kernel table of one walk: readouts of
/// `Σ_w det(w)·(scaled h^t·b)(λ+ρ−wρ)` for every step `t ≤ n_max` and every
/// requested dominant weight.
pub struct KernelRun {
    q: u32,
    walk: WalkSpec,
    n_max: u32,
    read: Vec<Weight>,
    sums: Vec<Vec<BigInt>>,
    q_pow_dmax: BigInt,
    rho_pows: Vec<QExt>,
    exps: Vec<i64>,
    full: bool,
}

impl KernelRun {
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn walk(&self) -> &WalkSpec {
        &self.walk
    }

    pub fn read_weights(&self) -> &[Weight] {
        &self.read
    }

    fn read_index(&self, lam: &Weight) -> Result<usize, KernelError> {
        self.read
            .iter()
            .position(|w| w == lam)
            .ok_or_else(|| {
                KernelError::InvalidInput(format!(
                    "weight {:?} is not in the computed read set",
                    lam.coords()
                ))
            })
    }

    /// Exact `p^n(0,x)` for a vertex `x` of radial coordinate `λ`.
    pub fn pn(&self, n: u32, lam: &Weight) -> Result<QExt, KernelError> {
        if n > self.n_max {
            return Err(KernelError::InvalidInput(format!(
                "step {n} exceeds computed horizon {}",
                self.n_max
            )));
        }
        let i = self.read_index(lam)?;
        let s = &self.sums[n as usize][i];
        let frac = BigRational::new(s.clone(), self.q_pow_dmax.clone());
        Ok(self.rho_pows[n as usize]
            .mul(&QExt::q_half_pow(self.q, -self.exps[i]))
            .mul_ratio(&frac))
    }

    pub fn pn_f64(&self, n: u32, lam: &Weight) -> Result<f64, KernelError> {
        Ok(self.pn(n, lam)?.to_f64())
    }

    /// Full table at step `n`, ordered lexicographically in coordinates.
    pub fn table(&self, n: u32) -> Result<KernelTable, KernelError> {
        let mut entries: Vec<(Weight, QExt)> = Vec::with_capacity(self.read.len());
        for lam in &self.read {
            entries.push((lam.clone(), self.pn(n, lam)?));
        }
        entries.sort_by(|a, b| a.0.coords().cmp(b.0.coords()));
        Ok(KernelTable { n, entries })
    }

    /// `Σ_λ N_λ(q)·p^n(0,x_λ) − 1`, exactly. Requires a full read set.
    pub fn mass_defect(&self, rs: &RootSystem, n: u32) -> Result<QExt, KernelError> {
        if !self.full {
            return Err(KernelError::InvalidInput(
                "mass identity requires a full dominant read set".into(),
            ));
        }
        let mut total = QExt::zero(self.q);
        for lam in &self.read {
            if lam.ell() > n as i64 {
                continue;
            }
            let nl = rs.n_lambda(lam).eval_sqrt_q(self.q);
            total = total.add(&nl.mul(&self.pn(n, lam)?));
        }
        Ok(total.sub(&QExt::one(self.q)))
    }
}

/// Exact kernel values at one step count.
pub struct KernelTable {
    pub n: u32,
    pub entries: Vec<(Weight, QExt)>,
}

/// Run the folded dynamic program up to `n_max` steps, recording readouts
/// for the given dominant weights at *every* intermediate step.
pub fn run_kernel(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    read: &[Weight],
    n_max: u32,
    ceiling: u32,
) -> Result<KernelRun, KernelError> {
    walk.validate(rs, q)?;
    if n_max > ceiling {
        return Err(KernelError::ResourceCeiling {
            rank: rs.rank(),
            requested: n_max,
            ceiling,
        });
    }
    let mut read: Vec<Weight> = read.to_vec();
    read.sort_by(|a, b| a.coords().cmp(b.coords()));
    read.dedup();
    if read.is_empty() {
        return Err(KernelError::InvalidInput("empty read set".into()));
    }
    for lam in &read {
        if !lam.is_dominant() {
            return Err(KernelError::InvalidInput(format!(
                "read weight {:?} is not dominant",
                lam.coords()
            )));
        }
    }
    run_prepared(rs, q, walk, read, n_max, false)
}

/// Run with the read set equal to *all* dominant weights of length ≤ n_max,
/// enabling the exact mass-identity certificate.
pub fn run_kernel_full(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    n_max: u32,
    ceiling: u32,
) -> Result<KernelRun, KernelError> {
    walk.validate(rs, q)?;
    if n_max > ceiling {
        return Err(KernelError::ResourceCeiling {
            rank: rs.rank(),
            requested: n_max,
            ceiling,
        });
    }
    let read = rs.dominant_weights_ell_le(n_max as i64);
    run_prepared(rs, q, walk, read, n_max, true)
}

fn run_prepared(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    read: Vec<Weight>,
    n_max: u32,
    full: bool,
) -> Result<KernelRun, KernelError> {
    let r = rs.rank();
    let n = n_max as i64;
    let (rho_v, coeffs) = walk.normalization(rs, q);

    // Readout points λ + (ρ − wρ) and their bounding box.
    let w0 = rs.weyl_order();
    let mut rb_lo = vec![i64::MAX; r];
    let mut rb_hi = vec![i64::MIN; r];
    let mut point_coords: Vec<Vec<Vec<i64>>> = Vec::with_capacity(read.len());
    for lam in &read {
        let mut per_w = Vec::with_capacity(w0);
        for wi in 0..w0 {
            let p = lam.add(rs.rho_minus_w_rho(wi));
            let c = p.coords().to_vec();
            for i in 0..r {
                rb_lo[i] = rb_lo[i].min(c[i]);
                rb_hi[i] = rb_hi[i].max(c[i]);
            }
            per_w.push(c);
        }
        point_coords.push(per_w);
    }

    // Window at step t is [rb_lo − (n−t), rb_hi + (n−t)]; storage box is t=0.
    let box_lo: Vec<i64> = rb_lo.iter().map(|&v| v - n).collect();
    let box_hi: Vec<i64> = rb_hi.iter().map(|&v| v + n).collect();
    let lattice = LatticeBox::new(box_lo, box_hi);
    if lattice.len > MAX_WINDOW_CELLS {
        return Err(KernelError::InvalidInput(format!(
            "window of {} cells exceeds the {MAX_WINDOW_CELLS}-cell memory guard",
            lattice.len
        )));
    }

    // Kostant box caps A_j = ⌊Σ_i ⟨λ_j, λ_i⟩ U_i⌋ from (Ca)_i ≤ U_i = n − rb_lo_i.
    let mut caps = vec![0i64; r];
    let mut empty_init = false;
    for j in 1..=r {
        let mut bound = BigRational::zero();
        for i in 1..=r {
            bound += rs.gram(j, i) * ratio_int(n - rb_lo[i - 1]);
        }
        let f = bound.floor().to_integer().to_i64().unwrap();
        if f < 0 {
            empty_init = true;
        }
        caps[j - 1] = f.max(0);
    }
    let dmax: u32 = caps.iter().map(|&c| c as u32).sum();
    let q_pow_dmax = BigInt::from(q).pow(dmax);

    // Initialize V_0 = q^{dmax}·(coefficients of b) on the storage box.
    let mut cur = vec![BigInt::zero(); lattice.len];
    let mut next = vec![BigInt::zero(); lattice.len];
    if !empty_init {
        let table = kostant_scaled(rs, q, &caps);
        let abox = LatticeBox::new(vec![0; r], caps.clone());
        let mut a = vec![0i64; r];
        for (ai, kappa) in table.iter().enumerate() {
            if kappa.is_zero() {
                continue;
            }
            // unrank ai into a-coordinates
            let mut rem = ai;
            for i in 0..r {
                a[i] = (rem / abox.strides[i]) as i64;
                rem %= abox.strides[i];
            }
            // v = −Σ a_j α_j has m_i = −(2a_i − a_{i−1} − a_{i+1})
            let mut m = vec![0i64; r];
            for i in 0..r {
                let left = if i > 0 { a[i - 1] } else { 0 };
                let right = if i + 1 < r { a[i + 1] } else { 0 };
                m[i] = -(2 * a[i] - left - right);
            }
            if let Some(idx) = lattice.index(&m) {
                let ht: i64 = a.iter().sum();
                cur[idx] = BigInt::from(q).pow(dmax - ht as u32) * kappa;
            }
        }
    }

    // Step monomials: orbit elements of each λ_k with coefficient c_k.
    // The update is the convolution V_t(m) = Σ_μ c_μ V_{t−1}(m − μ).
    let mut steps: Vec<(i64, bool, BigInt)> = Vec::new();
    for k in 1..=r {
        for mu in rs.orbit(&rs.fundamental(k)) {
            let neg: Vec<i64> = mu.coords().iter().map(|&v| -v).collect();
            let off = lattice.offset(&neg);
            steps.push((off, coeffs[k - 1].is_one(), coeffs[k - 1].clone()));
        }
    }

    // Resolve readout linear indices (constant across steps).
    let det_signs: Vec<i64> = rs.weyl_elements().iter().map(|w| w.det).collect();
    let mut read_idx: Vec<Vec<(usize, i64)>> = Vec::with_capacity(read.len());
    for per_w in &point_coords {
        let mut v = Vec::with_capacity(w0);
        for (wi, c) in per_w.iter().enumerate() {
            let idx = lattice
                .index(c)
                .expect("readout points lie in the window by construction");
            v.push((idx, det_signs[wi]));
        }
        read_idx.push(v);
    }

    let readout = |buf: &[BigInt]| -> Vec<BigInt> {
        read_idx
            .iter()
            .map(|per_w| {
                let mut s = BigInt::zero();
                for &(idx, det) in per_w {
                    if det > 0 {
                        s += &buf[idx];
                    } else {
                        s -= &buf[idx];
                    }
                }
                s
            })
            .collect()
    };

    let mut sums: Vec<Vec<BigInt>> = Vec::with_capacity(n_max as usize + 1);
    sums.push(readout(&cur));
    for t in 1..=n {
        let margin = n - t;
        let lo: Vec<i64> = rb_lo.iter().map(|&v| v - margin).collect();
        let hi: Vec<i64> = rb_hi.iter().map(|&v| v + margin).collect();
        lattice.for_each_in(&lo, &hi, |idx| {
            let mut acc = BigInt::zero();
            for (off, unit, coef) in &steps {
                let src = (idx as i64 + off) as usize;
                if *unit {
                    acc += &cur[src];
                } else {
                    acc += coef * &cur[src];
                }
            }
            next[idx] = acc;
        });
        std::mem::swap(&mut cur, &mut next);
        sums.push(readout(&cur));
    }

    let mut rho_pows = Vec::with_capacity(n_max as usize + 1);
    let mut acc = QExt::one(q);
    for _ in 0..=n_max {
        rho_pows.push(acc.clone());
        acc = acc.mul(&rho_v);
    }
    let exps: Vec<i64> = read.iter().map(|lam| rs.q_exponent(lam)).collect();

    Ok(KernelRun {
        q,
        walk: walk.clone(),
        n_max,
        read,
        sums,
        q_pow_dmax,
        rho_pows,
        exps,
        full,
    })
}

/// Distance-chain probability on the `(q+1)`-regular tree: from distance
/// `d ≥ 1` the walk moves to `d+1` with probability `q/(q+1)` and to `d−1`
/// with probability `1/(q+1)`; from `0` it moves to `1`. Returns
/// `P(dist_n = k)`, i.e. the sphere-aggregated kernel `p̄^n(0, kλ_1)`.
pub fn pn_tree_oracle(q: u32, n: u32, k: u32) -> BigRational {
    let up = ratio_int(q as i64) / ratio_int(q as i64 + 1);
    let down = ratio_int(1) / ratio_int(q as i64 + 1);
    let n = n as usize;
    let mut cur = vec![BigRational::zero(); n + 2];
    cur[0] = BigRational::one();
    for _ in 0..n {
        let mut nxt = vec![BigRational::zero(); n + 2];
        for d in 0..=n {
            if cur[d].is_zero() {
                continue;
            }
            if d == 0 {
                nxt[1] += &cur[0];
            } else {
                nxt[d + 1] += &cur[d] * &up;
                if d >= 1 {
                    nxt[d - 1] += &cur[d] * &down;
                }
            }
        }
        cur = nxt;
    }
    if (k as usize) < cur.len() {
        cur[k as usize].clone()
    } else {
        BigRational::zero()
    }
}

/// Empirical Harnack constants: for each `n`, the maximum of
/// `p^n(0,y)/p^{n+1}(0,x)` over radial positions `λ = ȳ` in the read set and
/// neighbor positions `x̄` (dominant folds of `λ + μ`, `μ` a step weight).
pub fn harnack_diagnostic(rs: &RootSystem, run: &KernelRun) -> Vec<(u32, f64)> {
    let mut neighbor_sets: Vec<Vec<usize>> = Vec::with_capacity(run.read.len());
    for lam in &run.read {
        let mut nbrs = Vec::new();
        for k in 1..=rs.rank() {
            for mu in rs.orbit(&rs.fundamental(k)) {
                let cand = rs.dominant_fold(&lam.add(&mu));
                if let Ok(i) = run.read_index(&cand) {
                    if !nbrs.contains(&i) {
                        nbrs.push(i);
                    }
                }
            }
        }
        neighbor_sets.push(nbrs);
    }
    let mut out = Vec::new();
    for n in 0..run.n_max {
        let mut cmax: f64 = 0.0;
        for (yi, nbrs) in neighbor_sets.iter().enumerate() {
            let py = run.pn(n, &run.read[yi]).expect("read set");
            if !py.is_positive() {
                continue;
            }
            for &xi in nbrs {
                let px = run.pn(n + 1, &run.read[xi]).expect("read set");
                if px.is_positive() {
                    cmax = cmax.max(py.to_f64() / px.to_f64());
                }
            }
        }
        out.push((n, cmax));
    }
    out
}

/// Result of an exact Green-function evaluation
/// `G(x; z) = Σ_{n≥0} z^n p^n(0,x)`.
#[derive(Debug, Clone)]
pub struct GreenEvaluation {
    pub x: Weight,
    pub z: QExt,
    /// Exact partial sum `Σ_{n≤N} z^n p^n(0,x)`.
    pub partial: QExt,
    /// Upper bound on the omitted tail. Exact and rigorous when
    /// `certified`; a decay-model extrapolation otherwise.
    pub tail_bound: QExt,
    pub certified: bool,
    /// The truncation horizon `N`.
    pub steps_used: u32,
}

impl GreenEvaluation {
    pub fn value_f64(&self) -> f64 {
        self.partial.to_f64()
    }

    pub fn upper_f64(&self) -> f64 {
        self.partial.add(&self.tail_bound).to_f64()
    }
}

/// Exact Green function with certified truncation.
///
/// For `z·ρ̃ < 1` the tail past `N` is bounded by an explicit exponential
/// moment estimate: for any positive point `t` of the torus,
/// `T_n(μ) ≤ E_t(−μ)·h(t)^n·b(t)` term by term, so
/// `Σ_{n>N} z^n p^n(0,x) ≤ B(t)·γ^{N+1}/(1−γ)` with `γ = z·ρ_v·h(t)`,
/// all evaluated in exact arithmetic. The point `t` is chosen from the
/// saddle of the drift `x/(N+1)` and rationalized; `t = 1` (i.e. `γ = zρ̃`)
/// is kept as a fallback so certification never fails for subcritical `z`.
/// At `z·ρ̃ = 1` the series still converges but the geometric bound
/// degenerates; the tail is then modeled on the local-limit decay
/// `n^{-(|R⁺|+r/2)}` and flagged as not certified.
pub fn green_exact(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    x: &Weight,
    z: &QExt,
    rel_tol: f64,
    ceiling: u32,
) -> Result<GreenEvaluation, KernelError> {
    let mut all = green_exact_batch(rs, q, walk, std::slice::from_ref(x), z, rel_tol, ceiling)?;
    Ok(all.pop().expect("one evaluation per input point"))
}

/// Batch variant of [`green_exact`]: all target weights share each
/// transition-kernel run, so evaluating a whole ray costs about as much as
/// its single farthest point. Results come back in input order.
pub fn green_exact_batch(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    xs: &[Weight],
    z: &QExt,
    rel_tol: f64,
    ceiling: u32,
) -> Result<Vec<GreenEvaluation>, KernelError> {
    walk.validate(rs, q)?;
    if xs.is_empty() {
        return Err(KernelError::InvalidInput(
            "at least one target weight is required".into(),
        ));
    }
    for x in xs {
        if !x.is_dominant() {
            return Err(KernelError::InvalidInput("x must be dominant".into()));
        }
    }
    if !z.is_positive() {
        return Err(KernelError::InvalidInput("z must be positive".into()));
    }
    if !(rel_tol > 0.0) {
        return Err(KernelError::InvalidInput("rel_tol must be positive".into()));
    }
    let gap = QExt::one(q).sub(&z.mul(&walk.spectral_radius(rs, q)));
    match gap.sign() {
        std::cmp::Ordering::Less => Err(KernelError::InvalidInput(
            "z exceeds the radius of convergence 1/ρ̃".into(),
        )),
        std::cmp::Ordering::Equal => green_critical_batch(rs, q, walk, xs, z, ceiling),
        std::cmp::Ordering::Greater => {
            green_subcritical_batch(rs, q, walk, xs, z, rel_tol, ceiling)
        }
    }
}

fn green_subcritical_batch(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    xs: &[Weight],
    z: &QExt,
    rel_tol: f64,
    ceiling: u32,
) -> Result<Vec<GreenEvaluation>, KernelError> {
    let geom = StepGeometry::new(rs, &walk.step_coeffs_f64(rs, q));
    let rho_v = walk.rho_v(rs, q);
    let log_rho_z = rho_v.to_f64().ln() + z.to_f64().ln();
    let gamma_flat = (z.mul(&walk.spectral_radius(rs, q))).to_f64();

    // f64 pre-sizing of the horizon from the concave exponent Ψ(t) = t·Φ(x/t),
    // maximized over the batch.
    let mut n_guess = 16u32;
    for x in xs {
        let ell = x.ell();
        let xe = e_vec(rs, x);
        let psi = |t: f64| -> Option<f64> {
            saddle::phi(&geom, &geometry::scale(&xe, 1.0 / t))
                .ok()
                .map(|p| t * (p + log_rho_z))
        };
        let mut guess = (ell as u32).max(8) + 8;
        if ell > 0 {
            if let Ok(gs) = saddle::green_saddle(&geom, log_rho_z, &xe) {
                if let Some(peak) = psi(gs.t0.max(ell as f64 + 0.5)) {
                    // the certified bound trails the true tail by the
                    // polynomial factors b(t)·Σ_w/(1−γ); reserve ~16 nats
                    let target = peak + rel_tol.ln() - 16.0;
                    let mut t = gs.t0.max(ell as f64 + 1.0);
                    let mut lo = t;
                    for _ in 0..40 {
                        match psi(t) {
                            Some(v) if v > target => {
                                lo = t;
                                t *= 1.5;
                            }
                            _ => break,
                        }
                    }
                    // tighten to the smallest horizon past the crossing
                    let mut hi = t;
                    if hi > lo {
                        for _ in 0..12 {
                            let mid = 0.5 * (lo + hi);
                            match psi(mid) {
                                Some(v) if v > target => lo = mid,
                                _ => hi = mid,
                            }
                        }
                        t = hi;
                    }
                    guess = guess.max(t.ceil() as u32);
                }
            }
        } else {
            // diagonal: geometric decay at rate zρ̃ from the start
            guess = guess.max((rel_tol.ln() / gamma_flat.ln()).ceil() as u32 + 8);
        }
        n_guess = n_guess.max(guess);
    }
    let ell_max = xs.iter().map(|x| x.ell() as u32).max().unwrap_or(0);
    let mut n = n_guess.min(ceiling).max(ell_max + 2);

    let tol = BigRational::from_float(rel_tol)
        .ok_or_else(|| KernelError::InvalidInput("rel_tol not finite".into()))?;
    loop {
        let run = run_kernel(rs, q, walk, xs, n, ceiling)?;
        let mut out = Vec::with_capacity(xs.len());
        let mut failed: Option<(f64, f64)> = None;
        for x in xs {
            let mut partial = QExt::zero(q);
            let mut zp = QExt::one(q);
            for t in 0..=n {
                partial = partial.add(&zp.mul(&run.pn(t, x)?));
                zp = zp.mul(z);
            }
            let tail = best_certified_tail(rs, q, walk, x, z, n, &geom, log_rho_z);
            let ok = tail.sub(&partial.mul_ratio(&tol)).sign() != std::cmp::Ordering::Greater
                && partial.is_positive();
            if !ok && failed.is_none() {
                failed = Some((tail.to_f64(), partial.to_f64() * rel_tol));
            }
            out.push(GreenEvaluation {
                x: x.clone(),
                z: z.clone(),
                partial,
                tail_bound: tail,
                certified: true,
                steps_used: n,
            });
        }
        match failed {
            None => return Ok(out),
            Some((tail, budget)) => {
                if n >= ceiling {
                    return Err(KernelError::TailNotCertifiable(format!(
                        "at the step ceiling {ceiling} the certified tail bound {tail:.3e} \
                         still exceeds rel_tol·partial = {budget:.3e}"
                    )));
                }
                // the pre-sizing is accurate; failures mean we were close
                n = (n + n / 2).max(n + 8).min(ceiling);
            }
        }
    }
}

/// Minimum over candidate exponential points of the exact tail bound
/// `B(t)·γ^{N+1}/(1−γ)`.
#[allow(clippy::too_many_arguments)]
fn best_certified_tail(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    x: &Weight,
    z: &QExt,
    n: u32,
    geom: &StepGeometry,
    log_rho_z: f64,
) -> QExt {
    let mut candidates: Vec<Vec<BigRational>> = vec![flat_point(rs)];
    let xe = e_vec(rs, x);
    if x.ell() > 0 {
        if let Ok(sol) =
            saddle::solve_saddle(geom, &geometry::scale(&xe, 1.0 / (n as f64 + 1.0)))
        {
            candidates.push(rationalize_point(&sol.s));
        }
        if let Ok(gs) = saddle::green_saddle(geom, log_rho_z, &xe) {
            candidates.push(rationalize_point(&gs.s0));
        }
    }
    let mut best: Option<QExt> = None;
    for t in candidates {
        if let Some(tail) = certified_tail_at(rs, q, walk, x, z, n, &t) {
            best = Some(match best {
                None => tail,
                Some(b) => {
                    if tail.sub(&b).sign() == std::cmp::Ordering::Less {
                        tail
                    } else {
                        b
                    }
                }
            });
        }
    }
    best.expect("the flat point always certifies subcritical tails")
}

fn flat_point(rs: &RootSystem) -> Vec<BigRational> {
    vec![BigRational::one(); rs.dim_ambient()]
}

/// Rationalize `e^{s_a}` (normalized to end at 1) with denominator 4096,
/// keeping the coordinates positive and weakly decreasing.
fn rationalize_point(s: &[f64]) -> Vec<BigRational> {
    let last = *s.last().unwrap();
    let denom = 4096i64;
    let mut t: Vec<BigRational> = s
        .iter()
        .map(|&v| {
            let e = (v - last).exp();
            let num = ((e * denom as f64).round() as i64).max(1);
            BigRational::new(BigInt::from(num), BigInt::from(denom))
        })
        .collect();
    t.sort_by(|a, b| b.cmp(a));
    t
}

/// Exact evaluation of the tail bound at a positive rational point, if the
/// geometric ratio is < 1 there.
fn certified_tail_at(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    x: &Weight,
    z: &QExt,
    n: u32,
    t: &[BigRational],
) -> Option<QExt> {
    let (rho_v, coeffs) = walk.normalization(rs, q);
    // h(t)
    let mut h_t = BigRational::zero();
    for k in 1..=rs.rank() {
        let mut orbit_sum = BigRational::zero();
        for mu in rs.orbit(&rs.fundamental(k)) {
            orbit_sum += monomial_at(rs, t, &mu);
        }
        h_t += BigRational::from_integer(coeffs[k - 1].clone()) * orbit_sum;
    }
    let gamma = z.mul(&rho_v).mul_ratio(&h_t);
    let one_minus = QExt::one(q).sub(&gamma);
    if !one_minus.is_positive() || !gamma.is_positive() {
        return None;
    }
    // b(t) = Π_{a<b} 1/(1 − q^{-1} t_b/t_a); positive since t is decreasing
    let qr = ratio_int(q as i64);
    let mut b_t = BigRational::one();
    for &(a, bb) in rs.positive_roots() {
        let f = BigRational::one() - &t[bb] / &t[a] / &qr;
        if !f.is_positive() {
            return None;
        }
        b_t /= f;
    }
    // Σ_w E_t(wρ − ρ) = Σ_w 1/E_t(ρ − wρ)
    let mut wsum = BigRational::zero();
    for wi in 0..rs.weyl_order() {
        wsum += monomial_at(rs, t, rs.rho_minus_w_rho(wi)).recip();
    }
    let e_minus_x = monomial_at(rs, t, x).recip();
    let b_const = QExt::q_half_pow(q, -rs.q_exponent(x))
        .mul_ratio(&(b_t * e_minus_x * wsum));
    Some(
        b_const
            .mul(&gamma.pow(n as u64 + 1))
            .mul(&one_minus.inv()),
    )
}

/// `E_t(μ) = Π_a t_a^{c_a(μ)}` via the c-coordinates (last coordinate 0).
fn monomial_at(rs: &RootSystem, t: &[BigRational], mu: &Weight) -> BigRational {
    let c = rs.c_coords(mu);
    let mut acc = BigRational::one();
    for (a, &ca) in c.iter().enumerate() {
        if ca != 0 {
            acc *= ratio_pow(&t[a], ca);
        }
    }
    acc
}

fn green_critical_batch(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    xs: &[Weight],
    z: &QExt,
    ceiling: u32,
) -> Result<Vec<GreenEvaluation>, KernelError> {
    let n = ceiling;
    let run = run_kernel(rs, q, walk, xs, n, ceiling)?;
    let nu = rs.num_positive_roots() as f64 + rs.rank() as f64 / 2.0;
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        let mut partial = QExt::zero(q);
        let mut zp = QExt::one(q);
        let mut terms_analyse: Vec<(u32, f64)> = Vec::new();
        for t in 0..=n {
            let term = zp.mul(&run.pn(t, x)?);
            if term.is_positive() {
                terms_analyse.push((t, term.to_f64()));
            }
            partial = partial.add(&term);
            zp = zp.mul(z);
        }
        // model a_n ≈ c·n^{-ν} with ν = |R⁺| + r/2 from the last exact terms
        let tail_window: Vec<&(u32, f64)> = terms_analyse.iter().rev().take(6).collect();
        let c_est = tail_window
            .iter()
            .map(|(t, v)| v * (*t as f64).powf(nu))
            .fold(0.0f64, f64::max);
        let tailf = c_est * (n as f64).powf(1.0 - nu) / (nu - 1.0);
        let tail = QExt::from_ratio(
            BigRational::from_float(tailf.max(0.0)).unwrap_or_else(BigRational::zero),
            q,
        );
        out.push(GreenEvaluation {
            x: x.clone(),
            z: z.clone(),
            partial,
            tail_bound: tail,
            certified: false,
            steps_used: n,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use crate::weight_laurent::b_series_truncated;

    fn qx(num: i64, den: i64, q: u32) -> QExt {
        QExt::from_ratio(ratio(num, den), q)
    }

    #[test]
    fn step_zero_is_the_point_mass() {
        for rank in 1..=3usize {
            let rs = RootSystem::new(rank);
            let run = run_kernel_full(&rs, 2, &WalkSpec::Simple, 2, 48).unwrap();
            assert!(run.pn(0, &Weight::zero(rank)).unwrap().sub(&QExt::one(2)).is_zero());
            for k in 1..=rank {
                assert!(run.pn(0, &rs.fundamental(k)).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn one_step_probability_is_the_sphere_normalizer() {
        for rank in 1..=4usize {
            let rs = RootSystem::new(rank);
            for q in [2u32, 3] {
                let walk = WalkSpec::Simple;
                let run = run_kernel_full(&rs, q, &walk, 1, 200).unwrap();
                for k in 1..=rank {
                    let got = run.pn(1, &rs.fundamental(k)).unwrap();
                    assert!(
                        got.sub(&walk.one_step(&rs, q, k)).is_zero(),
                        "rank {rank} q {q} k {k}"
                    );
                }
            }
        }
        // closed forms: rank 1 gives 1/(q+1), rank 2 gives 1/(2(q²+q+1))
        let rs1 = RootSystem::new(1);
        let got = WalkSpec::Simple.one_step(&rs1, 3, 1);
        assert!(got.sub(&qx(1, 4, 3)).is_zero());
        let rs2 = RootSystem::new(2);
        let got = WalkSpec::Simple.one_step(&rs2, 2, 1);
        assert!(got.sub(&qx(1, 14, 2)).is_zero());
    }

    #[test]
    fn spectral_radius_matches_the_closed_forms() {
        for rank in 1..=3usize {
            let rs = RootSystem::new(rank);
            for q in [2u32, 3, 4] {
                let computed = WalkSpec::Simple.spectral_radius(&rs, q);
                let closed = simple_rho_tilde_closed_form(rank, q).unwrap();
                assert!(
                    computed.sub(&closed).is_zero(),
                    "rank {rank} q {q}: computed {} vs closed form {}",
                    computed.to_f64(),
                    closed.to_f64()
                );
            }
        }
        // decimal spot values: rank 1 q 4 -> 4/5, rank 2 q 2 -> 6/7
        assert!(simple_rho_tilde_closed_form(1, 4).unwrap().sub(&qx(4, 5, 4)).is_zero());
        assert!(simple_rho_tilde_closed_form(2, 2).unwrap().sub(&qx(6, 7, 2)).is_zero());
        assert!(simple_rho_tilde_closed_form(4, 2).is_none());
    }

    #[test]
    fn two_step_return_spot_values() {
        let rs1 = RootSystem::new(1);
        for q in [2u32, 3, 4] {
            let run = run_kernel_full(&rs1, q, &WalkSpec::Simple, 2, 200).unwrap();
            let got = run.pn(2, &Weight::zero(1)).unwrap();
            assert!(got.sub(&qx(1, q as i64 + 1, q)).is_zero(), "q = {q}");
        }
        let rs2 = RootSystem::new(2);
        for q in [2u32, 3] {
            let run = run_kernel_full(&rs2, q, &WalkSpec::Simple, 2, 48).unwrap();
            let got = run.pn(2, &Weight::zero(2)).unwrap();
            let d = 2 * (q as i64 * q as i64 + q as i64 + 1);
            assert!(got.sub(&qx(1, d, q)).is_zero(), "q = {q}");
        }
    }

    #[test]
    fn mass_identity_holds_exactly() {
        let cases: &[(usize, u32, u32)] = &[(1, 2, 12), (2, 2, 8), (2, 3, 6), (3, 2, 5)];
        for &(rank, q, n_max) in cases {
            let rs = RootSystem::new(rank);
            let run = run_kernel_full(&rs, q, &WalkSpec::Simple, n_max, 200).unwrap();
            for n in 0..=n_max {
                let defect = run.mass_defect(&rs, n).unwrap();
                assert!(defect.is_zero(), "rank {rank} q {q} n {n}: defect {defect}");
            }
        }
    }

    #[test]
    fn rank_one_kernel_matches_the_tree_distance_chain() {
        for q in [2u32, 3] {
            let rs = RootSystem::new(1);
            let n_max = 12u32;
            let run = run_kernel_full(&rs, q, &WalkSpec::Simple, n_max, 200).unwrap();
            for n in 0..=n_max {
                for k in 0..=n {
                    let mut lam = Weight::zero(1);
                    for _ in 0..k {
                        lam = lam.add(&rs.fundamental(1));
                    }
                    let sphere = rs.n_lambda(&lam).eval_sqrt_q(q);
                    let got = run.pn(n, &lam).unwrap().mul(&sphere);
                    let want = QExt::from_ratio(pn_tree_oracle(q, n, k), q);
                    assert!(
                        got.sub(&want).is_zero(),
                        "q {q} n {n} k {k}: kernel {got} vs chain {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn kostant_table_matches_the_series_expansion() {
        for rank in 1..=3usize {
            let rs = RootSystem::new(rank);
            let q = 2u32;
            let caps = vec![3i64; rank];
            let table = kostant_scaled(&rs, q, &caps);
            let abox = LatticeBox::new(vec![0; rank], caps.clone());
            let series = b_series_truncated(&rs, 3 * rank as i64);
            let mut a = vec![0i64; rank];
            for (ai, kappa) in table.iter().enumerate() {
                let mut rem = ai;
                for i in 0..rank {
                    a[i] = (rem / abox.strides[i]) as i64;
                    rem %= abox.strides[i];
                }
                let ht: i64 = a.iter().sum();
                let mut m = vec![0i64; rank];
                for i in 0..rank {
                    let left = if i > 0 { a[i - 1] } else { 0 };
                    let right = if i + 1 < rank { a[i + 1] } else { 0 };
                    m[i] = -(2 * a[i] - left - right);
                }
                let want = series.coeff(&Weight::new(m)).eval_sqrt_q(q);
                let got = QExt::from_ratio(
                    BigRational::new(kappa.clone(), BigInt::from(q).pow(ht as u32)),
                    q,
                );
                assert!(got.sub(&want).is_zero(), "rank {rank} a {a:?}");
            }
        }
    }

    #[test]
    fn parity_and_reachability_zeros() {
        // rank 1: p^n(0, kλ_1) = 0 unless n ≡ k (mod 2) and k ≤ n
        let rs = RootSystem::new(1);
        let run = run_kernel_full(&rs, 2, &WalkSpec::Simple, 7, 200).unwrap();
        for n in 0..=7u32 {
            for k in 0..=7i64 {
                let lam = Weight::new(vec![k]);
                let p = run.pn(n, &lam).unwrap();
                if k > n as i64 || (n as i64 - k) % 2 != 0 {
                    assert!(p.is_zero(), "n {n} k {k}");
                } else {
                    assert!(p.is_positive(), "n {n} k {k}");
                }
            }
        }
        // rank 2: the origin has vertex type 0, unreachable in one step
        // (steps have types 1 and 2), and length bounds the reach
        let rs2 = RootSystem::new(2);
        let run2 = run_kernel_full(&rs2, 2, &WalkSpec::Simple, 3, 48).unwrap();
        assert!(run2.pn(1, &Weight::zero(2)).unwrap().is_zero());
        for n in 0..=3u32 {
            for lam in run2.read_weights().to_vec() {
                if lam.ell() > n as i64 {
                    assert!(
                        run2.pn(n, &lam).unwrap().is_zero(),
                        "n {n} lam {:?}",
                        lam.coords()
                    );
                }
            }
        }
    }

    #[test]
    fn isotropic_walk_with_equal_weights_reduces_to_simple() {
        let rs = RootSystem::new(2);
        let q = 2u32;
        let p = ratio(1, 14);
        let walk = WalkSpec::Isotropic2 {
            p1: p.clone(),
            p2: p.clone(),
        };
        walk.validate(&rs, q).unwrap();
        let a = run_kernel_full(&rs, q, &walk, 6, 48).unwrap();
        let b = run_kernel_full(&rs, q, &WalkSpec::Simple, 6, 48).unwrap();
        for n in 0..=6u32 {
            for lam in a.read_weights().to_vec() {
                let pa = a.pn(n, &lam).unwrap();
                let pb = b.pn(n, &lam).unwrap();
                assert!(pa.sub(&pb).is_zero(), "n {n} lam {:?}", lam.coords());
            }
        }
    }

    #[test]
    fn asymmetric_isotropic_walk_conserves_mass() {
        let rs = RootSystem::new(2);
        let q = 2u32;
        let walk = WalkSpec::Isotropic2 {
            p1: ratio(3, 28),
            p2: ratio(1, 28),
        };
        walk.validate(&rs, q).unwrap();
        let run = run_kernel_full(&rs, q, &walk, 6, 48).unwrap();
        assert!(run
            .pn(1, &rs.fundamental(1))
            .unwrap()
            .sub(&qx(3, 28, q))
            .is_zero());
        assert!(run
            .pn(1, &rs.fundamental(2))
            .unwrap()
            .sub(&qx(1, 28, q))
            .is_zero());
        for n in 0..=6u32 {
            assert!(run.mass_defect(&rs, n).unwrap().is_zero(), "n = {n}");
        }
    }

    /// Independent closed form on the (q+1)-regular tree:
    /// with s = √((q+1)² − 4qz²),
    /// G(0,z) = 2q/((q−1)+s) and G(k,z) = G(0,z)·F₁(z)^k where
    /// F₁(z) = ((q+1) − s)/(2qz) solves the first-passage recursion
    /// F₁ = z/(q+1) + (qz/(q+1))·F₁².
    fn tree_green_closed_form(q: f64, z: f64, k: u32) -> f64 {
        let s = ((q + 1.0) * (q + 1.0) - 4.0 * q * z * z).sqrt();
        let f1 = ((q + 1.0) - s) / (2.0 * q * z);
        2.0 * q / ((q - 1.0) + s) * f1.powi(k as i32)
    }

    #[test]
    fn green_function_matches_the_tree_closed_form() {
        let rs = RootSystem::new(1);
        let q = 2u32;
        for (zq, zf) in [
            (qx(1, 2, q), 0.5),
            // z = 0.9/ρ̃ = (27/40)√2
            (QExt::new(ratio(0, 1), ratio(27, 40), q), 27.0 / 40.0 * 2f64.sqrt()),
        ] {
            for k in 0..=6i64 {
                let x = Weight::new(vec![k]);
                let g = green_exact(&rs, q, &WalkSpec::Simple, &x, &zq, 1e-12, 600).unwrap();
                assert!(g.certified);
                let want = tree_green_closed_form(q as f64, zf, k as u32);
                let got = g.value_f64();
                assert!(
                    (got - want).abs() <= 1e-9 * want,
                    "k {k} z {zf}: got {got}, want {want}, N {}",
                    g.steps_used
                );
            }
        }
    }

    #[test]
    fn green_certificate_bounds_the_true_remainder() {
        // the certified partial sum must lie below the closed form, and the
        // partial plus tail bound must lie above it
        let rs = RootSystem::new(1);
        let q = 2u32;
        let zq = qx(1, 2, q);
        for k in [0i64, 3] {
            let x = Weight::new(vec![k]);
            let g = green_exact(&rs, q, &WalkSpec::Simple, &x, &zq, 1e-10, 400).unwrap();
            let truth = tree_green_closed_form(2.0, 0.5, k as u32);
            assert!(g.value_f64() <= truth * (1.0 + 1e-12));
            assert!(g.upper_f64() >= truth * (1.0 - 1e-12));
            assert!(g.tail_bound.to_f64() <= 1e-10 * g.value_f64() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn green_critical_evaluation_is_flagged_heuristic() {
        let rs = RootSystem::new(2);
        let q = 2u32;
        // ρ̃ = 6/7 at q = 2, so z = 7/6 is exactly critical
        let z = qx(7, 6, q);
        let x = rs.fundamental(1);
        let g = green_exact(&rs, q, &WalkSpec::Simple, &x, &z, 1e-12, 24).unwrap();
        assert!(!g.certified);
        assert_eq!(g.steps_used, 24);
        assert!(g.partial.is_positive());
        assert!(g.tail_bound.is_positive());
    }

    #[test]
    fn error_paths_are_reported() {
        let rs = RootSystem::new(2);
        let q = 2u32;
        match run_kernel_full(&rs, q, &WalkSpec::Simple, 20, 16) {
            Err(KernelError::ResourceCeiling {
                rank, requested, ceiling,
            }) => {
                assert_eq!((rank, requested, ceiling), (2, 20, 16));
            }
            Err(other) => panic!("expected ceiling error, got {other}"),
            Ok(_) => panic!("expected ceiling error, got a run"),
        }
        let bad = WalkSpec::Isotropic2 {
            p1: ratio(1, 2),
            p2: ratio(1, 2),
        };
        assert!(matches!(
            bad.validate(&rs, q),
            Err(KernelError::InvalidWalk(_))
        ));
        assert!(matches!(
            bad.validate(&RootSystem::new(3), q),
            Err(KernelError::InvalidWalk(_))
        ));
        // z beyond the radius of convergence (ρ̃ = 6/7, so 1/ρ̃ = 7/6 < 6/5)
        let sup = green_exact(
            &rs,
            q,
            &WalkSpec::Simple,
            &rs.fundamental(1),
            &qx(6, 5, q),
            1e-6,
            24,
        );
        assert!(matches!(sup, Err(KernelError::InvalidInput(_))));
        // non-dominant read weight
        let res = run_kernel(
            &rs,
            q,
            &WalkSpec::Simple,
            &[Weight::new(vec![-1, 0])],
            2,
            48,
        );
        assert!(matches!(res, Err(KernelError::InvalidInput(_))));
    }

    #[test]
    fn harnack_ratios_stay_bounded() {
        let rs = RootSystem::new(2);
        let run = run_kernel_full(&rs, 2, &WalkSpec::Simple, 10, 48).unwrap();
        let diag = harnack_diagnostic(&rs, &run);
        assert_eq!(diag.len(), 10);
        for &(n, c) in &diag {
            assert!(c.is_finite() && c > 0.0, "n {n}");
        }
        // the constants should settle: consecutive values within a factor 8
        for w in diag[4..].windows(2) {
            let (a, b) = (w[0].1, w[1].1);
            assert!(a / b < 8.0 && b / a < 8.0, "{a} vs {b}");
        }
    }
}
