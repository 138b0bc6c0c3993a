//! Trap minima, guide parameters, longitudinal profiles and trap reports.

mod minimize;
mod profile;
mod quad;
mod report;

use thiserror::Error;

pub use minimize::{find_minimum, find_minimum_in, Minimum, MinimumOptions, ProjectedField};
pub use profile::{longitudinal_profile, LongitudinalProfile, ProfileOptions, ProfileSample};
pub use quad::{guide_element, quad_params, GuideElement, QuadParams};
pub use report::{
    adiabaticity, characterize, frequencies, ground_state_diameter, lamb_dicke, Adiabaticity, DepthBox,
    TrapReport,
};

use crate::field::FieldError;
use crate::layout::Vec3;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("minimisation did not converge after {iterations} iterations (last point {point:?} m, |grad| = {gradient:e} T^2/m)")]
    NoConvergence {
        iterations: usize,
        point: Vec3,
        gradient: f64,
    },
    #[error("minimisation left the search domain at {point:?} m")]
    EscapedDomain { point: Vec3 },
    #[error("transverse minimum lost at x = {x:e} m (last good slice at {last_good:?} m)")]
    SliceLost { x: f64, last_good: Option<f64> },
    #[error("no guide: {0}")]
    NoGuide(String),
    #[error("invalid analysis input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}
