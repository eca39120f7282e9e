//! Visco-acoustic frequency-domain wavefield-reconstruction inversion.
//!
//! The crate estimates complex squared slowness `m` with ADMM-based IR-WRI,
//! regularized by complex-valued total variation, and maps `m` to phase
//! velocity and attenuation with the KF or SLS mechanism.

pub mod atten;
pub mod error;
pub mod field;
pub mod helmholtz;
pub mod irwri;
pub mod regularize;
pub mod sparse;

pub use error::{Error, Result};
pub use field::{ComplexField, Grid2D, RealField, C64};
