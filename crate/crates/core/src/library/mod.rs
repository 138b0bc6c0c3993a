//! Parameterised builders for the standard wire-and-bias trap configurations,
//! the curvature-optimal spacing search, the rotation sequence and the
//! conductor limits checker.

mod builders;
mod limits;
pub mod rotation;
pub mod scenarios;

use thiserror::Error;

pub use builders::*;
pub use limits::{conductor_limits, ConductorLimits, DEFAULT_J_MAX};
pub use rotation::{make_rotation_layout, make_rotation_schedule, rotation_sweep, CrossGeometry, RotationState, SweepPoint};

use crate::layout::{Layout, ValidationError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LibraryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("field zero risk: |I2| = {i2} A must stay below (I1+I3)/2 = {limit} A")]
    FieldZeroRisk { i2: f64, limit: f64 },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T, LibraryError> {
    Err(LibraryError::InvalidParams(msg.into()))
}

/// Checks builder-specific constraints recorded in a layout's metadata, so
/// that hand-edited layout files are held to the same rules as built ones.
pub fn validate_metadata(layout: &Layout) -> Result<(), ValidationError> {
    let Some(meta) = layout.metadata() else {
        return Ok(());
    };
    if meta.builder == builders::FOUR_WIRE {
        let current = |name: &str| {
            layout
                .conductor_by_name(name)
                .map(|c| c.current)
                .or_else(|| meta.params.get(name).copied())
        };
        if let (Some(i1), Some(i2), Some(i3)) = (current("I1"), current("I2"), current("I3")) {
            check_four_wire(i1, i2, i3).map_err(|e| ValidationError(e.to_string()))?;
        }
    }
    Ok(())
}

pub(crate) fn check_four_wire(i1: f64, i2: f64, i3: f64) -> Result<(), LibraryError> {
    let limit = 0.5 * (i1 + i3);
    if i2.abs() >= limit.abs() {
        return Err(LibraryError::FieldZeroRisk { i2: i2.abs(), limit });
    }
    Ok(())
}
