//! Helical-basis spectral representation of divergence-free periodic fields.
pub mod basis;
pub mod biot_savart;
pub mod fft;
pub mod field;
pub mod grid;
pub mod interp;

pub use basis::{helical_basis, HelicalBasis, WaveVector};
pub use field::{ExactEvaluator, FieldBuilder, Mode, SpectralField};
pub use grid::{analyze, synthesize, Analysis, GridField, Support};
pub use interp::SplineField;
