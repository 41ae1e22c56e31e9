//! Numerics for right-convolution operators on the Heisenberg group with
//! measures carried by the graph of a phase function.
//!
//! The crate is organized around the objects these operators are built from:
//!
//! * [`hgroup`] — exact arithmetic on ℍⁿ realized as ℝ^{2n} × ℝ;
//! * [`measures`] — the graph measure ν: phase, smooth cutoffs, densities;
//! * [`specfun`] — complex Gamma, Laguerre polynomials, the F_{n,k} family
//!   and its closed-form Fourier transform, plus the quadrature oracle;
//! * [`kernels`] — the fractional-kernel analytic family, the band-limited
//!   mollifier, and the closed form of ν convolved against it;
//! * [`spectral`] — group-Fourier diagonal entries of poliradial kernels and
//!   the uniform-bound sweeps behind them;
//! * [`convolve`] — the discretized operator T_ν on grid-sampled fields,
//!   its adjoint, translations, and Lᵖ norms;
//! * [`typeset`] — type-set geometry, scaling-ladder experiments, and the
//!   p→q norm lower-bound estimator.
//!
//! All Fourier transforms in the crate use the convention
//! ĝ(ξ) = ∫ g(σ) e^{−iσξ} dσ.

pub mod convolve;
pub mod error;
pub mod hgroup;
pub mod kernels;
pub mod measures;
pub mod quad;
pub mod specfun;
pub mod spectral;
pub mod typeset;

pub use error::{Error, Result};
pub use num_complex::Complex64;
