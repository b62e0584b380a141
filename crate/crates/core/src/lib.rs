//! Exact propagator for the Fokker–Planck equation of a turbulent cascade with
//! scale-dependent multiplicative coefficients
//!
//! ```text
//! ∂P/∂λ = ∂/∂v [a(λ) v P] + ∂²/∂v² [c(λ) v² P],     P(0, v) = φ(v),
//! ```
//!
//! together with two independent checks of it: a Crank–Nicolson solver of the
//! same equation in log-velocity and an exact/Euler–Maruyama sampler of the dual
//! Itô diffusion `dv = -a v dλ + √(2c) v dW`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod coefficients;
pub mod error;
pub mod grid;
pub mod hermite;
pub mod initial;
pub mod montecarlo;
pub mod oracle;
pub mod propagator;
pub mod scenario;

pub use coefficients::{CoefficientProfile, IntegratedCoefficients, RateSpec};
pub use error::{Error, Result};
pub use grid::YGrid;
pub use initial::InitialCondition;
pub use propagator::{DensityField, QuadratureConfig};
