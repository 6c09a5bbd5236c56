//! Exact transition kernels, spherical harmonic analysis, and sharp
//! asymptotic shape estimates for nearest-neighbor random walks on the
//! vertices of thick affine buildings of type `Ã_r`.
//!
//! Everything downstream of the combinatorics is organized around one split:
//!
//! * **Exact layer** ([`scalar`], [`root_system`], [`weight_laurent`],
//!   [`exact_kernel`]): arbitrary-precision arithmetic in `Q` and `Q(√q)`,
//!   the `A_r` weight lattice, Laurent polynomials on it, and a folded
//!   dynamic program computing the `n`-step return and transition
//!   probabilities `p^n(0, x)` *exactly*, certified by the total-mass
//!   identity at every step. Exact Green function partial sums with
//!   certified truncation-error bounds sit here too.
//! * **Analytic layer** ([`geometry`], [`saddle`], [`spectral`],
//!   [`estimates`]): floating-point evaluation of the spherical Plancherel
//!   ingredients (the `c`-function, Macdonald spherical functions, the
//!   spherical function `F_0` at the spectral base point), strictly convex
//!   saddle-point problems for the large-deviation rate, and the closed-form
//!   shape estimates whose uniform comparability with the exact kernel the
//!   test suite certifies by interval ratio analysis.
//!
//! The [`report`] module ties the layers together into ratio tables and
//! machine-readable reports; the `building-walk` binary exposes them on the
//! command line.

pub mod exact_kernel;
pub mod estimates;
pub mod geometry;
pub mod report;
pub mod root_system;
pub mod saddle;
pub mod scalar;
pub mod spectral;
pub mod weight_laurent;
