//! Time-dependent potentials, conveyor transport and the linear collider.

mod cloud;
mod collider;
mod conveyor;
mod particle;
mod potential;
mod spline;

use thiserror::Error;

pub use cloud::{rf_truncate, CloudState};
pub use collider::{collider_run, ColliderOptions, LinearFit, TrajectoryRecord};
pub use conveyor::{conveyor_transport, ConveyorOptions, ConveyorRun, WellEvent, WellSample, WellTrack};
pub use particle::{acceleration, integrate_particle, ParticleState};
pub use potential::{potential_1d, PotentialCurve1D};
pub use spline::UniformSpline;

use crate::analysis::AnalysisError;
use crate::field::FieldError;
use crate::schedule::ScheduleError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("time step {dt:e} s too large: stability needs dt < {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("particle left the potential range at x = {x:e} m, t = {t:e} s")]
    EscapedDomain { x: f64, t: f64 },
    #[error("cloud is empty after truncation")]
    EmptyCloud,
    #[error("invalid dynamics input: {0}")]
    Invalid(String),
}

impl DynamicsError {
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            DynamicsError::Invalid(_)
                | DynamicsError::Analysis(AnalysisError::Invalid(_))
                | DynamicsError::Schedule(ScheduleError::Invalid(_) | ScheduleError::UnknownChannel(_))
        )
    }
}
