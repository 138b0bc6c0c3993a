use serde::Serialize;

use super::{invalid, LibraryError, DEFAULT_HALF_LENGTH};
use crate::analysis::{find_minimum, MinimumOptions};
use crate::layout::{Conductor, Layout, Vec3};
use crate::units::gauss_to_tesla;

/// One step of the continuous rotation of a crossed-wire trap. `i1` flows
/// along +x̂ through the origin, `i2` along +ŷ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationState {
    pub angle_deg: f64,
    pub i1: f64,
    pub i2: f64,
    /// T
    pub b0x: f64,
    /// T
    pub b0y: f64,
}

impl RotationState {
    /// Long axis along ŷ.
    pub fn end() -> RotationState {
        RotationState {
            angle_deg: 90.0,
            i1: 0.2,
            i2: -1.2,
            b0x: gauss_to_tesla(10.0),
            b0y: gauss_to_tesla(4.0),
        }
    }

    /// Mirror image of [`RotationState::end`] under x ↔ y: currents swap
    /// wires, and the bias (an axial vector) swaps components and flips sign.
    pub fn start() -> RotationState {
        let e = Self::end();
        RotationState {
            angle_deg: 0.0,
            i1: e.i2,
            i2: e.i1,
            b0x: -e.b0y,
            b0y: -e.b0x,
        }
    }

    /// cos²/sin² blend of the two end states at `angle_deg`.
    pub fn at(angle_deg: f64) -> RotationState {
        let (s, e) = (Self::start(), Self::end());
        let w = angle_deg.to_radians().sin().powi(2);
        let mix = |a: f64, b: f64| a * (1.0 - w) + b * w;
        RotationState {
            angle_deg,
            i1: mix(s.i1, e.i1),
            i2: mix(s.i2, e.i2),
            b0x: mix(s.b0x, e.b0x),
            b0y: mix(s.b0y, e.b0y),
        }
    }
}

/// `steps` states evenly spaced in angle from 0° to 90°.
pub fn make_rotation_schedule(steps: usize) -> Result<Vec<RotationState>, LibraryError> {
    if steps < 2 {
        return invalid("rotation needs at least 2 steps");
    }
    Ok((0..steps)
        .map(|k| RotationState::at(90.0 * k as f64 / (steps - 1) as f64))
        .collect())
}

/// Conductor geometry of the crossed pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossGeometry {
    /// Two straight wires crossing at the origin.
    Straight,
    /// Each wire turns off sideways at distance `bend` from the crossing,
    /// the two ends leaving in opposite directions (a Z). The ŷ wire is the
    /// x ↔ y mirror of the x̂ wire, so the 45° state is still mirror
    /// symmetric and its zero-field ring survives; use [`rotation_sweep`]
    /// to see where |B| vanishes.
    Bent { bend: f64 },
}

pub fn make_rotation_layout(state: &RotationState, geometry: CrossGeometry) -> Result<Layout, LibraryError> {
    let l = DEFAULT_HALF_LENGTH;
    let (p1, p2) = match geometry {
        CrossGeometry::Straight => (
            vec![Vec3::new(-l, 0.0, 0.0), Vec3::new(l, 0.0, 0.0)],
            vec![Vec3::new(0.0, -l, 0.0), Vec3::new(0.0, l, 0.0)],
        ),
        CrossGeometry::Bent { bend } => {
            if !(bend > 0.0 && bend < l) {
                return invalid("bend distance must lie inside the wire half-length");
            }
            let p1 = vec![
                Vec3::new(-bend, -l, 0.0),
                Vec3::new(-bend, 0.0, 0.0),
                Vec3::new(bend, 0.0, 0.0),
                Vec3::new(bend, l, 0.0),
            ];
            let p2 = p1.iter().map(|p| Vec3::new(p.y, p.x, 0.0)).collect();
            (p1, p2)
        }
    };
    let bend = match geometry {
        CrossGeometry::Straight => 0.0,
        CrossGeometry::Bent { bend } => bend,
    };
    Ok(Layout::builder()
        .conductor(Conductor::polyline("I1", p1, state.i1))
        .conductor(Conductor::polyline("I2", p2, state.i2))
        .bias(Vec3::new(state.b0x, state.b0y, 0.0))
        .metadata(
            "rotation",
            &[
                ("angle_deg", state.angle_deg),
                ("I1", state.i1),
                ("I2", state.i2),
                ("B0x", state.b0x),
                ("B0y", state.b0y),
                ("bend", bend),
            ],
        )
        .build()?)
}

/// Trap minimum at one rotation step; `None` where tracking was lost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub angle_deg: f64,
    /// T
    pub b_min: Option<f64>,
    pub r_min: Option<[f64; 3]>,
}

/// Follows the trap minimum through the rotation by continuation from
/// `seed`, keeping each search within `reach` of the previous minimum.
pub fn rotation_sweep(
    geometry: CrossGeometry,
    steps: usize,
    seed: Vec3,
    reach: f64,
) -> Result<Vec<SweepPoint>, LibraryError> {
    let opts = MinimumOptions {
        domain_half_width: reach,
        ..MinimumOptions::default()
    };
    let mut seed = seed;
    let mut out = Vec::with_capacity(steps);
    for state in make_rotation_schedule(steps)? {
        let layout = make_rotation_layout(&state, geometry)?;
        let found = find_minimum(&layout, seed, &layout.unit_multipliers(), &opts).ok();
        if let Some(m) = &found {
            seed = m.point;
        }
        out.push(SweepPoint {
            angle_deg: state.angle_deg,
            b_min: found.as_ref().map(|m| m.b_min),
            r_min: found.map(|m| [m.point.x, m.point.y, m.point.z]),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_continuity() {
        let s = make_rotation_schedule(91).unwrap();
        assert_eq!(s[0], RotationState::start());
        let last = s[90];
        let e = RotationState::end();
        assert!((last.i1 - e.i1).abs() < 1e-15 && (last.b0x - e.b0x).abs() < 1e-18);
        for w in s.windows(2) {
            assert!((w[1].i1 - w[0].i1).abs() < 0.03);
            assert!((w[1].b0y - w[0].b0y).abs() < gauss_to_tesla(0.3));
        }
        assert!(make_rotation_schedule(1).is_err());
    }

    #[test]
    fn midpoint_is_the_symmetric_cross() {
        let m = RotationState::at(45.0);
        assert!((m.i1 - m.i2).abs() < 1e-12);
        assert!((m.b0x.abs() - m.b0y.abs()).abs() < 1e-15);
    }

    #[test]
    fn straight_cross_degenerates_at_midpoint() {
        let sweep = rotation_sweep(CrossGeometry::Straight, 3, Vec3::new(0.0, 0.0, 230e-6), 300e-6).unwrap();
        let ends = [sweep[0].b_min.unwrap(), sweep[2].b_min.unwrap()];
        assert!((ends[0] - ends[1]).abs() < 1e-9 * ends[0]);
        assert!(ends[0] > gauss_to_tesla(0.5));
        assert!(sweep[1].b_min.map_or(true, |b| b < gauss_to_tesla(1e-3)));
    }
}
