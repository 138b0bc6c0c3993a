use serde::Serialize;

use super::{find_minimum_in, AnalysisError, MinimumOptions, ProjectedField};
use crate::constants::MU0_OVER_2PI;
use crate::field::{MagneticField, Scene};
use crate::layout::{Axis, ElementRef, Layout, Multipliers, Vec3};

/// The wire that forms the guide along an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GuideElement {
    pub element: ElementRef,
    /// Current along +axis, A.
    pub current: f64,
    /// A point of the guide section used for the located zero.
    pub anchor: Vec3,
}

/// Guide parameters of a wire plus transverse bias.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadParams {
    /// Height of the field zero from μ₀I/(2πB⊥), m.
    pub z0: f64,
    /// Gradient B⊥/z₀, T/m.
    pub b: f64,
    /// Located zero of the transverse field components.
    pub zero: [f64; 3],
    /// Transverse gradient at the located zero, T/m.
    pub b_located: f64,
    /// Transverse bias component that the wire cancels, T.
    pub b_perp: f64,
    pub current: f64,
}

/// Dominant straight section parallel to `axis`: the one carrying the
/// largest |current|, ties broken by length.
pub fn guide_element(layout: &Layout, axis: Axis, multipliers: &Multipliers) -> Option<GuideElement> {
    let t = axis.unit();
    let mut best: Option<(f64, f64, GuideElement)> = None;
    let mut offer = |i: f64, len: f64, g: GuideElement| {
        let better = match &best {
            None => true,
            Some((bi, bl, _)) => i.abs() > bi.abs() * (1.0 + 1e-12) || (i.abs() >= bi.abs() && len > *bl),
        };
        if better && i != 0.0 {
            best = Some((i, len, g));
        }
    };
    for (ci, c) in layout.conductors().iter().enumerate() {
        let current = layout.conductor_current(ci, multipliers);
        for w in c.path.windows(2) {
            let d = w[1] - w[0];
            let len = d.norm();
            let cos = d.dot(&t) / len;
            if (cos.abs() - 1.0).abs() < 1e-9 {
                offer(
                    current * cos.signum(),
                    len,
                    GuideElement {
                        element: ElementRef::Conductor(ci),
                        current: current * cos.signum(),
                        anchor: (w[0] + w[1]) * 0.5,
                    },
                );
            }
        }
    }
    for (wi, w) in layout.infinite_wires().iter().enumerate() {
        let cos = w.direction.dot(&t);
        if (cos.abs() - 1.0).abs() < 1e-9 {
            let current = layout.wire_current(wi, multipliers) * cos.signum();
            offer(
                current,
                f64::INFINITY,
                GuideElement {
                    element: ElementRef::InfiniteWire(wi),
                    current,
                    anchor: w.anchor - t * w.anchor.dot(&t),
                },
            );
        }
    }
    best.map(|(_, _, g)| g)
}

/// z₀ and b of the guide along `axis`, with the zero of the transverse
/// field located numerically as a cross-check.
pub fn quad_params(layout: &Layout, axis: Axis, multipliers: &Multipliers) -> Result<QuadParams, AnalysisError> {
    if axis == Axis::Z {
        return Err(AnalysisError::NoGuide("guides run parallel to the chip plane".into()));
    }
    layout
        .check_multipliers(multipliers)
        .map_err(|e| AnalysisError::Invalid(e.0))?;
    let guide = guide_element(layout, axis, multipliers)
        .ok_or_else(|| AnalysisError::NoGuide(format!("no current-carrying wire along {}", axis.tag())))?;
    // Above a wire along t the field points along t × ẑ; the bias must oppose it.
    let n = axis.unit().cross(&Vec3::z());
    let b_perp = -layout.effective_bias(multipliers).dot(&n);
    if b_perp == 0.0 {
        return Err(AnalysisError::NoGuide("no transverse bias field".into()));
    }
    let z0 = MU0_OVER_2PI * guide.current / b_perp;
    if !(z0 > 0.0) {
        return Err(AnalysisError::NoGuide(format!(
            "bias and current put the field zero below the chip (z0 = {z0:e} m)"
        )));
    }
    let b = b_perp / z0;

    let scene = Scene::new(layout, multipliers);
    let transverse = ProjectedField { inner: &scene, axis };
    let seed = guide.anchor + Vec3::new(0.0, 0.0, z0);
    let zero = find_minimum_in(&transverse, seed, &MinimumOptions::transverse_to(axis))
        .map_err(|e| AnalysisError::NoGuide(format!("transverse zero not found: {e}")))?;
    if zero.b_min > 1e-3 * b_perp.abs() {
        return Err(AnalysisError::NoGuide(format!(
            "transverse field does not vanish (|B_t| = {:e} T)",
            zero.b_min
        )));
    }
    let (_, j) = transverse.field_and_jacobian(zero.point)?;
    let (u, v) = match axis {
        Axis::X => (1, 2),
        Axis::Y => (0, 2),
        Axis::Z => unreachable!(),
    };
    let block = nalgebra::Matrix2::new(j[(u, u)], j[(u, v)], j[(v, u)], j[(v, v)]);
    let b_located = block.determinant().abs().sqrt();
    Ok(QuadParams {
        z0,
        b,
        zero: [zero.point.x, zero.point.y, zero.point.z],
        b_located,
        b_perp,
        current: guide.current,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{make_side_guide, GuideSpec};
    use crate::units::gauss_to_tesla;

    #[test]
    fn side_guide_parameters() {
        let l = make_side_guide(2.0, GuideSpec::Bias(gauss_to_tesla(160.0))).unwrap();
        let q = quad_params(&l, Axis::X, &l.unit_multipliers()).unwrap();
        assert!((q.z0 - 25e-6).abs() < 1e-15);
        assert!((q.b - 640.0).abs() < 1e-9);
        assert!((q.zero[2] - 25e-6).abs() < 1e-10);
        assert!((q.b_located / q.b - 1.0).abs() < 1e-4);
    }

    #[test]
    fn scaling_law() {
        let l1 = make_side_guide(1.0, GuideSpec::Bias(gauss_to_tesla(24.0))).unwrap();
        let l2 = make_side_guide(2.0, GuideSpec::Bias(gauss_to_tesla(48.0))).unwrap();
        let q1 = quad_params(&l1, Axis::X, &l1.unit_multipliers()).unwrap();
        let q2 = quad_params(&l2, Axis::X, &l2.unit_multipliers()).unwrap();
        assert!((q1.z0 / q2.z0 - 1.0).abs() < 1e-12);
        assert!((q2.b / q1.b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_guide_without_bias() {
        let l = make_side_guide(1.0, GuideSpec::Bias(gauss_to_tesla(24.0)))
            .unwrap()
            .with_bias(Vec3::zeros());
        assert!(matches!(
            quad_params(&l, Axis::X, &l.unit_multipliers()),
            Err(AnalysisError::NoGuide(_))
        ));
        let l = Layout::bias_only(Vec3::new(0.0, 1e-3, 0.0));
        assert!(quad_params(&l, Axis::X, &l.unit_multipliers()).is_err());
    }
}
