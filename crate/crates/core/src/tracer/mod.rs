//! Field-line integration and line functionals.
mod line;
mod linking;
pub mod ode;
mod stokes;

use crate::fields::{TubeField, TubeSet};
use crate::spectral::field::{ExactEvaluator, SpectralField};
use crate::spectral::interp::SplineField;
use crate::vec3::Vec3;

pub use line::{trace_line, trace_many, FieldLine, Sample, TraceOptions};
pub use linking::{gauss_linking, linking_number};
pub use ode::Tolerance;
pub use stokes::{stokes_endpoint_check, stokes_gauge_check, StokesResult};

/// A field with a vector potential that can be evaluated at any point.
pub trait LineField: Sync {
    fn field_and_potential(&self, x: Vec3) -> (Vec3, Vec3);

    fn field(&self, x: Vec3) -> Vec3 {
        self.field_and_potential(x).0
    }

    fn potential(&self, x: Vec3) -> Vec3 {
        self.field_and_potential(x).1
    }
}

impl LineField for ExactEvaluator {
    fn field_and_potential(&self, x: Vec3) -> (Vec3, Vec3) {
        ExactEvaluator::field_and_potential(self, x)
    }
}

impl LineField for SplineField {
    fn field_and_potential(&self, x: Vec3) -> (Vec3, Vec3) {
        SplineField::field_and_potential(self, x)
    }
}

impl LineField for TubeField {
    fn field_and_potential(&self, x: Vec3) -> (Vec3, Vec3) {
        (TubeField::field(self, x), TubeField::potential(self, x))
    }

    fn field(&self, x: Vec3) -> Vec3 {
        TubeField::field(self, x)
    }
}

impl LineField for TubeSet {
    fn field_and_potential(&self, x: Vec3) -> (Vec3, Vec3) {
        (TubeSet::field(self, x), TubeSet::potential(self, x))
    }

    fn field(&self, x: Vec3) -> Vec3 {
        TubeSet::field(self, x)
    }
}

/// Mode count above which spectral fields are interpolated instead of summed.
pub const EXACT_MODE_LIMIT: usize = 512;

/// Point evaluator for a spectral field and its Coulomb-gauge potential.
#[derive(Debug, Clone)]
pub enum SpectralLineField {
    Exact(ExactEvaluator),
    Spline(SplineField),
}

impl SpectralLineField {
    /// Exact Fourier sum for small fields, tricubic spline otherwise.
    pub fn new(f: &SpectralField) -> Self {
        if f.mode_count() <= EXACT_MODE_LIMIT {
            SpectralLineField::Exact(ExactEvaluator::new(f, None))
        } else {
            SpectralLineField::Spline(SplineField::new(
                f,
                &f.vector_potential(),
                SplineField::default_size(f),
            ))
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, SpectralLineField::Exact(_))
    }
}

impl LineField for SpectralLineField {
    fn field_and_potential(&self, x: Vec3) -> (Vec3, Vec3) {
        match self {
            SpectralLineField::Exact(e) => e.field_and_potential(x),
            SpectralLineField::Spline(s) => s.field_and_potential(x),
        }
    }
}
