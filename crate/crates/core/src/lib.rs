//! Spectral magnetic-helicity laboratory: helical-basis fields on the
//! periodic box, field-line tracing, quadratic helicity estimators,
//! induction-equation evolution and shell spectra.
pub mod error;
pub mod evolution;
pub mod fields;
pub mod invariants;
pub mod io;
pub mod quadrature;
pub mod scaling;
pub mod spectral;
pub mod tracer;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::Vec3;

/// Period of the box `[0, 2π)³`.
pub const BOX_LENGTH: f64 = 2.0 * std::f64::consts::PI;
/// `(2π)³`.
pub const VOLUME: f64 = BOX_LENGTH * BOX_LENGTH * BOX_LENGTH;
