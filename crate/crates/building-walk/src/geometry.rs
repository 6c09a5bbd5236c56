//! Floating-point coordinates on the sum-zero hyperplane `𝔞 ⊂ R^{r+1}`.
//!
//! Exact lattice work lives in [`crate::root_system`]; this module provides
//! the `f64` embeddings used by the analytic layer: e-coordinate vectors of
//! weights, inner products (the ambient dot product restricted to `𝔞` is the
//! Killing-normalized form in which roots have squared length 2), and an
//! orthonormal basis of `𝔞` for Newton solvers.

use crate::root_system::{RootSystem, Weight};

/// Sum-zero e-coordinates of a weight.
pub fn e_vec(rs: &RootSystem, w: &Weight) -> Vec<f64> {
    let c = rs.c_coords(w);
    let n = rs.dim_ambient();
    let mean = c.iter().sum::<i64>() as f64 / n as f64;
    c.iter().map(|&ca| ca as f64 - mean).collect()
}

/// e-vector of the positive root `e_a − e_b`.
pub fn root_e_vec(rs: &RootSystem, root: (usize, usize)) -> Vec<f64> {
    let mut v = vec![0.0; rs.dim_ambient()];
    v[root.0] = 1.0;
    v[root.1] = -1.0;
    v
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn scale(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|a| a * s).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Remove the `(1,…,1)` component, projecting onto `𝔞`.
pub fn project_sum_zero(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|a| a - mean).collect()
}

/// Orthonormal basis of the sum-zero hyperplane, as `r` ambient vectors.
pub struct HyperplaneBasis {
    cols: Vec<Vec<f64>>,
    ambient: usize,
}

impl HyperplaneBasis {
    pub fn new(rs: &RootSystem) -> Self {
        let n = rs.dim_ambient();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(rs.rank());
        for j in 0..rs.rank() {
            // Gram–Schmidt over the simple-root directions
            let mut v = root_e_vec(rs, (j, j + 1));
            for c in &cols {
                let p = dot(&v, c);
                v = sub(&v, &scale(c, p));
            }
            let nv = norm(&v);
            assert!(nv > 1e-9, "simple roots are independent");
            cols.push(scale(&v, 1.0 / nv));
        }
        HyperplaneBasis { cols, ambient: n }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// `x = Σ ξ_j b_j`.
    pub fn to_ambient(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.cols.len());
        let mut x = vec![0.0; self.ambient];
        for (c, &w) in self.cols.iter().zip(xi) {
            for a in 0..self.ambient {
                x[a] += w * c[a];
            }
        }
        x
    }

    /// Coordinates of the hyperplane component of `x`.
    pub fn from_ambient(&self, x: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|c| dot(c, x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_vectors_sum_to_zero_and_pair_correctly() {
        for r in 1..=4 {
            let rs = RootSystem::new(r);
            for k in 1..=r {
                let ev = e_vec(&rs, &rs.fundamental(k));
                assert!(ev.iter().sum::<f64>().abs() < 1e-12);
                // ⟨λ_k, α_j^∨⟩ = δ_{kj}; pairings equal dot with root vector
                for j in 0..r {
                    let rv = root_e_vec(&rs, (j, j + 1));
                    let expect = if j + 1 == k { 1.0 } else { 0.0 };
                    assert!((dot(&ev, &rv) - expect).abs() < 1e-12);
                }
            }
            // roots have squared length 2
            for &root in rs.positive_roots() {
                let rv = root_e_vec(&rs, root);
                assert!((dot(&rv, &rv) - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_and_float_pairings_agree() {
        let rs = RootSystem::new(3);
        let v = Weight::new(vec![2, -1, 3]);
        let w = Weight::new(vec![0, 4, 1]);
        let exact = crate::scalar::ratio_to_f64(&rs.pairing_weights(&v, &w));
        let float = dot(&e_vec(&rs, &v), &e_vec(&rs, &w));
        assert!((exact - float).abs() < 1e-10);
    }

    #[test]
    fn basis_is_orthonormal_and_round_trips() {
        for r in 1..=4 {
            let rs = RootSystem::new(r);
            let basis = HyperplaneBasis::new(&rs);
            for i in 0..r {
                for j in 0..r {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&basis.cols[i], &basis.cols[j]) - expect).abs() < 1e-12);
                }
                assert!(basis.cols[i].iter().sum::<f64>().abs() < 1e-12);
            }
            // round trip through coordinates for a lattice vector
            let x = e_vec(&rs, &rs.rho());
            let xi = basis.from_ambient(&x);
            let back = basis.to_ambient(&xi);
            for a in 0..r + 1 {
                assert!((x[a] - back[a]).abs() < 1e-12);
            }
        }
    }
}
