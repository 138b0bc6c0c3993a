use serde::Serialize;

use super::{check_four_wire, invalid, LibraryError};
use crate::analysis::{find_minimum, MinimumOptions};
use crate::constants::MU0_OVER_2PI;
use crate::layout::{Binding, Conductor, InfiniteWire, Layout, Vec3};

/// Half-length of the straight wires emitted by the builders, m.
pub const DEFAULT_HALF_LENGTH: f64 = 10e-3;

pub(crate) const SIDE_GUIDE: &str = "side_guide";
pub(crate) const CROSSING: &str = "crossing_trap";
pub(crate) const H_TRAP: &str = "h_trap";
pub(crate) const FOUR_WIRE: &str = "four_wire";
pub(crate) const ELONGATED_Z: &str = "elongated_z";

/// Height of the field zero above a wire carrying `current` in a transverse
/// bias `b0y`: z₀ = μ₀I/(2πB₀y).
pub fn guide_height(current: f64, b0y: f64) -> f64 {
    MU0_OVER_2PI * current / b0y
}

/// Transverse quadrupole gradient b = B₀y/z₀ = (2π/μ₀)·B₀y²/I.
pub fn guide_gradient(current: f64, b0y: f64) -> f64 {
    b0y * b0y / (MU0_OVER_2PI * current)
}

/// Axial field of a wire crossing the guide, taken at height `z0` and
/// distance `x` along the guide from the crossing point.
pub fn crossing_wire_bx(current: f64, z0: f64, x: f64) -> f64 {
    MU0_OVER_2PI * current * z0 / (x * x + z0 * z0)
}

/// Second derivative of [`crossing_wire_bx`] with respect to `x`.
pub fn crossing_wire_bx_curvature(current: f64, z0: f64, x: f64) -> f64 {
    let r2 = x * x + z0 * z0;
    MU0_OVER_2PI * current * z0 * (6.0 * x * x - 2.0 * z0 * z0) / (r2 * r2 * r2)
}

/// How the transverse bias of a side guide is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuideSpec {
    /// Bias B₀y, T.
    Bias(f64),
    /// Height of the field zero z₀, m.
    Height(f64),
}

fn resolve_guide(i0: f64, spec: GuideSpec) -> Result<(f64, f64), LibraryError> {
    if i0 == 0.0 || !i0.is_finite() {
        return invalid("guide current must be non-zero and finite");
    }
    let (b0y, z0) = match spec {
        GuideSpec::Bias(b0y) => {
            if b0y == 0.0 || !b0y.is_finite() {
                return invalid("guide bias must be non-zero and finite");
            }
            (b0y, guide_height(i0, b0y))
        }
        GuideSpec::Height(z0) => (MU0_OVER_2PI * i0 / z0, z0),
    };
    if !(z0 > 0.0 && z0.is_finite()) {
        return invalid(format!(
            "bias and current signs put the field zero below the chip (z0 = {z0:e} m)"
        ));
    }
    Ok((b0y, z0))
}

fn along_x(name: &str, x: f64, current: f64) -> Conductor {
    Conductor::straight(
        name,
        Vec3::new(-DEFAULT_HALF_LENGTH, x, 0.0),
        Vec3::new(DEFAULT_HALF_LENGTH, x, 0.0),
        current,
    )
}

fn along_y(name: &str, x: f64, current: f64) -> Conductor {
    Conductor::straight(
        name,
        Vec3::new(x, -DEFAULT_HALF_LENGTH, 0.0),
        Vec3::new(x, DEFAULT_HALF_LENGTH, 0.0),
        current,
    )
}

/// Straight wire along x̂ with a ŷ bias cancelling its field at height z₀.
pub fn make_side_guide(i0: f64, spec: GuideSpec) -> Result<Layout, LibraryError> {
    let (b0y, z0) = resolve_guide(i0, spec)?;
    Ok(Layout::builder()
        .conductor(along_x("I0", 0.0, i0))
        .bias(Vec3::new(0.0, b0y, 0.0))
        .metadata(
            SIDE_GUIDE,
            &[("I0", i0), ("B0y", b0y), ("z0", z0), ("b", guide_gradient(i0, b0y))],
        )
        .build()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrapKind {
    /// The axial bias opposes and exceeds the crossing wire's field: a
    /// non-zero minimum above the crossing.
    Attractive,
    /// The crossing wire raises |B| above the crossing: a barrier.
    Repulsive,
    /// No crossing current: a plain guide.
    Guide,
}

#[derive(Debug, Clone)]
pub struct CrossingTrap {
    pub layout: Layout,
    pub kind: TrapKind,
    pub z0: f64,
    /// Peak axial field of the crossing wire on the guide axis, T.
    pub barrier: f64,
}

pub fn crossing_kind(b_wire: f64, b0x: f64) -> TrapKind {
    if b_wire == 0.0 {
        TrapKind::Guide
    } else if b_wire * b0x < 0.0 && b0x.abs() > b_wire.abs() {
        TrapKind::Attractive
    } else {
        TrapKind::Repulsive
    }
}

/// Central wire along x̂ crossed at the origin by a wire along ŷ.
pub fn make_crossing_trap(i0: f64, i1: f64, b0y: f64, b0x: f64) -> Result<CrossingTrap, LibraryError> {
    let (b0y, z0) = resolve_guide(i0, GuideSpec::Bias(b0y))?;
    let barrier = crossing_wire_bx(i1, z0, 0.0);
    let mut b = Layout::builder().conductor(along_x("I0", 0.0, i0));
    if i1 != 0.0 {
        b = b.conductor(along_y("I1", 0.0, i1));
    }
    let layout = b
        .bias(Vec3::new(b0x, b0y, 0.0))
        .metadata(
            CROSSING,
            &[("I0", i0), ("I1", i1), ("B0y", b0y), ("B0x", b0x), ("z0", z0)],
        )
        .build()?;
    Ok(CrossingTrap {
        layout,
        kind: crossing_kind(barrier, b0x),
        z0,
        barrier,
    })
}

/// Central wire crossed by two parallel wires at x = ∓d/2 carrying I₁, I₂.
pub fn make_h_trap(
    i0: f64,
    i1: f64,
    i2: f64,
    d: f64,
    b0y: f64,
    b0x: f64,
) -> Result<Layout, LibraryError> {
    if !(d > 0.0 && d.is_finite()) {
        return invalid("crossing wire spacing must be positive");
    }
    let (b0y, z0) = resolve_guide(i0, GuideSpec::Bias(b0y))?;
    Ok(Layout::builder()
        .conductor(along_x("I0", 0.0, i0))
        .conductor(along_y("I1", -0.5 * d, i1))
        .conductor(along_y("I2", 0.5 * d, i2))
        .bias(Vec3::new(b0x, b0y, 0.0))
        .metadata(
            H_TRAP,
            &[("I0", i0), ("I1", i1), ("I2", i2), ("d", d), ("B0y", b0y), ("B0x", b0x), ("z0", z0)],
        )
        .build()?)
}

/// Longitudinal curvature at the centre of two equal crossing wires at ±a,
/// from the closed-form axial field. Positive values confine.
pub fn spacing_objective(i1: f64, z0: f64, a: f64) -> f64 {
    2.0 * crossing_wire_bx_curvature(i1, z0, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacingOptimum {
    /// Optimal half-spacing, m.
    pub a: f64,
    pub z0: f64,
    /// Objective at the optimum, T/m².
    pub curvature: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation of `f` on `[lo, hi]` to absolute tolerance `tol`.
pub fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64, usize) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut evals = 2;
    while hi - lo > tol {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        evals += 1;
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    (x, fx, evals + 1)
}

/// Half-spacing of two crossing wires that maximises the longitudinal
/// curvature at the trap centre, searched over (0, 10z₀].
pub fn optimize_spacing(i0: f64, i1: f64, b0y: f64) -> Result<SpacingOptimum, LibraryError> {
    let (_, z0) = resolve_guide(i0, GuideSpec::Bias(b0y))?;
    if i1 == 0.0 {
        return invalid("crossing current must be non-zero");
    }
    // The sign of I1 and the axial bias do not move the optimum; work with |I1|.
    let objective = |a: f64| spacing_objective(i1.abs(), z0, a);
    let (a, curvature, evaluations) = golden_section_max(objective, 1e-6 * z0, 10.0 * z0, 1e-6 * z0);
    Ok(SpacingOptimum {
        a,
        z0,
        curvature,
        evaluations,
    })
}

/// Four crossing wires: I₁ and I₃ at x = ∓z₀, the opposed I₂ at the centre.
/// All crossing currents are signed along +ŷ.
pub fn make_four_wire(
    i0: f64,
    i1: f64,
    i2: f64,
    i3: f64,
    b0y: f64,
    b0x: f64,
) -> Result<Layout, LibraryError> {
    let (b0y, z0) = resolve_guide(i0, GuideSpec::Bias(b0y))?;
    check_four_wire(i1, i2, i3)?;
    Ok(Layout::builder()
        .conductor(along_x("I0", 0.0, i0))
        .conductor(along_y("I1", -z0, i1))
        .conductor(along_y("I2", 0.0, i2))
        .conductor(along_y("I3", z0, i3))
        .bias(Vec3::new(b0x, b0y, 0.0))
        .metadata(
            FOUR_WIRE,
            &[("I0", i0), ("I1", i1), ("I2", i2), ("I3", i3), ("B0y", b0y), ("B0x", b0x), ("z0", z0)],
        )
        .build()?)
}

#[derive(Debug, Clone)]
pub struct FourWireCalibration {
    pub i2: f64,
    pub b_min: f64,
    pub r_min: Vec3,
    pub layout: Layout,
}

/// Solves for the centre current I₂ (opposed to I₁, I₃) that gives the
/// requested minimum field, by bisection on the exact trap minimum.
pub fn calibrate_four_wire(
    i0: f64,
    i1: f64,
    i3: f64,
    b0y: f64,
    b0x: f64,
    target_b_min: f64,
) -> Result<FourWireCalibration, LibraryError> {
    if !(target_b_min > 0.0) {
        return invalid("target minimum field must be positive");
    }
    let (_, z0) = resolve_guide(i0, GuideSpec::Bias(b0y))?;
    let limit = 0.5 * (i1 + i3);
    let sign = -limit.signum();
    let evaluate = |mag: f64| -> Result<(f64, Vec3, Layout), LibraryError> {
        let layout = make_four_wire(i0, i1, sign * mag, i3, b0y, b0x)?;
        let m = layout.unit_multipliers();
        let min = find_minimum(&layout, Vec3::new(0.0, 0.0, z0), &m, &MinimumOptions::default())
            .map_err(|e| LibraryError::InvalidParams(format!("trap search failed: {e}")))?;
        Ok((min.b_min, min.point, layout))
    };
    let (b_lo, _, _) = evaluate(0.0)?;
    if target_b_min > b_lo {
        return invalid(format!(
            "target {target_b_min:e} T exceeds the minimum without a centre current ({b_lo:e} T)"
        ));
    }
    let (mut lo, mut hi) = (0.0, limit.abs() * (1.0 - 1e-6));
    while hi - lo > 1e-9 * limit.abs() {
        let mid = 0.5 * (lo + hi);
        if evaluate(mid)?.0 > target_b_min {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i2 = sign * 0.5 * (lo + hi);
    let (b_min, r_min, layout) = evaluate(i2.abs())?;
    Ok(FourWireCalibration {
        i2,
        b_min,
        r_min,
        layout,
    })
}

/// Geometry of the elongated Z-shaped guide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZGeometry {
    /// Length of the central x̂ section, m.
    pub central_length: f64,
    /// Length of each ŷ-parallel end section, m.
    pub end_length: f64,
}

impl Default for ZGeometry {
    fn default() -> Self {
        ZGeometry {
            central_length: 7e-3,
            end_length: DEFAULT_HALF_LENGTH,
        }
    }
}

/// Z-shaped conductor: a long x̂ section whose ends turn off in opposite ŷ
/// directions, plus a ŷ bias.
pub fn make_elongated_z(i0: f64, b0y: f64) -> Result<Layout, LibraryError> {
    make_elongated_z_with(i0, b0y, ZGeometry::default())
}

pub fn make_elongated_z_with(i0: f64, b0y: f64, geometry: ZGeometry) -> Result<Layout, LibraryError> {
    if !(i0 > 0.0 && b0y > 0.0) {
        return invalid("Z guide needs positive current and bias");
    }
    let ZGeometry {
        central_length,
        end_length,
    } = geometry;
    if !(central_length > 0.0 && end_length > 0.0) {
        return invalid("Z guide sections must have positive length");
    }
    let h = 0.5 * central_length;
    let path = vec![
        Vec3::new(-h, -end_length, 0.0),
        Vec3::new(-h, 0.0, 0.0),
        Vec3::new(h, 0.0, 0.0),
        Vec3::new(h, end_length, 0.0),
    ];
    Ok(Layout::builder()
        .conductor(Conductor::polyline("I0", path, i0))
        .bias(Vec3::new(0.0, b0y, 0.0))
        .metadata(
            ELONGATED_Z,
            &[
                ("I0", i0),
                ("B0y", b0y),
                ("z0", guide_height(i0, b0y)),
                ("central_length", central_length),
                ("end_length", end_length),
            ],
        )
        .build()?)
}

/// Replaces every straight two-point conductor by an infinite wire through
/// the same points, for comparison with the closed-form expressions.
pub fn idealized(layout: &Layout) -> Result<Layout, LibraryError> {
    let mut b = Layout::builder()
        .bias(layout.bias())
        .gravity(layout.include_gravity())
        .metadata_raw(layout.metadata().cloned());
    let mut converted = Vec::new();
    for c in layout.conductors() {
        if c.path.len() == 2 && c.cross_section.is_none() {
            let name = c.name.clone().unwrap_or_else(|| format!("wire{}", converted.len()));
            b = b.infinite_wire(InfiniteWire::new(name.clone(), c.path[0], c.path[1] - c.path[0], c.current));
            converted.push(name);
        } else {
            b = b.conductor(c.clone());
        }
    }
    for w in layout.infinite_wires() {
        b = b.infinite_wire(w.clone());
    }
    for ch in layout.channels() {
        let bindings = ch
            .bindings
            .iter()
            .map(|x| match x {
                Binding::Conductor(n) if converted.contains(n) => Binding::InfiniteWire(n.clone()),
                other => other.clone(),
            })
            .collect();
        b = b.channel(ch.name.clone(), bindings);
    }
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{gauss_to_tesla, um_to_m};

    #[test]
    fn side_guide_coefficient() {
        let l = make_side_guide(1.0, GuideSpec::Height(1e-3)).unwrap();
        assert!((l.bias().y - gauss_to_tesla(2.0)).abs() < 1e-18);
        let l = make_side_guide(2.0, GuideSpec::Bias(gauss_to_tesla(160.0))).unwrap();
        assert!((l.metadata_param("z0").unwrap() - um_to_m(25.0)).abs() < 1e-15);
    }

    #[test]
    fn side_guide_rejects_zero_below_chip() {
        assert!(make_side_guide(1.0, GuideSpec::Bias(-1e-3)).is_err());
        assert!(make_side_guide(0.0, GuideSpec::Height(1e-3)).is_err());
    }

    #[test]
    fn crossing_kinds() {
        let b0y = gauss_to_tesla(160.0);
        let t = make_crossing_trap(2.0, 0.5, b0y, gauss_to_tesla(-45.0)).unwrap();
        assert_eq!(t.kind, TrapKind::Attractive);
        assert!((t.barrier - gauss_to_tesla(40.0)).abs() < 1e-12);
        let t = make_crossing_trap(2.0, 0.5, b0y, 0.0).unwrap();
        assert_eq!(t.kind, TrapKind::Repulsive);
        let t = make_crossing_trap(2.0, 0.0, b0y, 0.0).unwrap();
        assert_eq!(t.kind, TrapKind::Guide);
        assert_eq!(t.layout.conductors().len(), 1);
    }

    #[test]
    fn curvature_formula_matches_differences() {
        let (i, z0) = (0.5, 25e-6);
        let h = 1e-8;
        for x in [0.0, 10e-6, 40e-6] {
            let fd = (crossing_wire_bx(i, z0, x + h) - 2.0 * crossing_wire_bx(i, z0, x)
                + crossing_wire_bx(i, z0, x - h))
                / (h * h);
            let an = crossing_wire_bx_curvature(i, z0, x);
            assert!((fd - an).abs() < 1e-5 * an.abs().max(1.0), "{fd} {an}");
        }
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx, _) = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn four_wire_constraint() {
        let b0y = gauss_to_tesla(160.0);
        assert!(matches!(
            make_four_wire(2.0, 0.5, -0.5, 0.5, b0y, 0.0),
            Err(LibraryError::FieldZeroRisk { .. })
        ));
        assert!(make_four_wire(2.0, 0.5, -0.45, 0.5, b0y, 0.0).is_ok());
    }

    #[test]
    fn idealized_converts_straight_wires() {
        let t = make_crossing_trap(2.0, 0.5, 0.016, 0.0).unwrap();
        let ideal = idealized(&t.layout).unwrap();
        assert_eq!(ideal.conductors().len(), 0);
        assert_eq!(ideal.infinite_wires().len(), 2);
    }
}
