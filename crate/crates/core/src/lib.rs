//! Numerical engine for the rescaled choose-the-leader (CL) alignment model
//! on the circle, worked entirely in Fourier space.
//!
//! The crate covers five layers:
//!
//! * [`spectral`] — truncated Fourier tensors of probability measures on the
//!   k-torus and the exponential-polynomial time algebra that keeps every
//!   trajectory in closed form.
//! * [`interaction`] — interaction generating functions `g`, their rescaled
//!   torus coefficients, moments, norms, samplers and frequency bounds.
//! * [`finite`] / [`limit`] — the closed BBGKY recursion for the exact
//!   finite-N marginals and its mean-field limit, including the stationary
//!   partially ordered hierarchy.
//! * [`partial_order`] — construction and detection of chaotic, ordered and
//!   partially ordered coefficient families.
//! * [`particle`] / [`bounds`] — a reproducible jump-process simulator and
//!   the evaluator for the explicit convergence constants and inequalities.

pub mod bounds;
pub mod finite;
pub mod hierarchy;
pub mod init;
pub mod interaction;
pub mod limit;
pub mod partial_order;
pub mod particle;
pub mod quad;
pub mod rng;
pub mod spectral;

pub use init::{InitialFamily, OneDimFamily};
pub use interaction::{GeneratorFamily, InteractionGenerator, Regime, ScalingSchedule};
pub use limit::M2;
pub use spectral::{ExpPolynomial, MultiIndex, SpectralCoefficients};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
