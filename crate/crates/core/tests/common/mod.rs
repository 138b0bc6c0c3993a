#![allow(dead_code)]

use atomchip::analysis::{find_minimum, MinimumOptions};
use atomchip::constants::MU0_OVER_4PI;
use atomchip::field::{distance_to_segment, field_segment, grid_eval, jacobian, GridSpec};
use atomchip::library::make_crossing_trap;
use atomchip::units::gauss_to_tesla;
use atomchip::{Axis, Conductor, Layout, Vec3};
use proptest::prelude::*;

pub fn v3() -> impl Strategy<Value = Vec3> {
    (-1e-3..1e-3, -1e-3..1e-3, -1e-3..1e-3).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

pub fn polyline() -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(v3(), 2..5).prop_filter("segments need length", |p| {
        p.windows(2).all(|w| (w[1] - w[0]).norm() > 1e-5)
    })
}

pub fn layout_of(closed: bool) -> impl Strategy<Value = Layout> {
    (
        prop::collection::vec((polyline(), -3.0..3.0f64), 1..4),
        v3(),
    )
        .prop_map(move |(cs, bias)| {
            let mut b = Layout::builder().bias(bias * 0.1);
            for (i, (mut path, current)) in cs.into_iter().enumerate() {
                if closed {
                    path.push(path[0]);
                }
                b = b.conductor(Conductor::polyline(format!("c{i}"), path, current));
            }
            b.build().unwrap()
        })
}

pub fn random_layout() -> impl Strategy<Value = Layout> {
    layout_of(false)
}

/// Closed circuits; open segments are not curl-free.
pub fn random_circuit() -> impl Strategy<Value = Layout> {
    layout_of(true)
}

pub fn clearance(layout: &Layout, p: &Vec3) -> f64 {
    layout
        .conductors()
        .iter()
        .flat_map(|c| {
            c.path
                .windows(2)
                .map(|w| distance_to_segment(&w[0], &w[1], p))
                .collect::<Vec<_>>()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn near(a: f64, b: f64, ulps: f64) -> bool {
    a == b || (a - b).abs() <= ulps * f64::EPSILON * a.abs().max(b.abs())
}

/// Composite 8-point Gauss–Legendre integration of the Biot–Savart law.
pub fn quadrature_segment(a: Vec3, b: Vec3, current: f64, p: Vec3) -> Vec3 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let panels = 400;
    let dl = (b - a) / panels as f64;
    let mut sum = Vec3::zeros();
    for k in 0..panels {
        let mid = a + dl * (k as f64 + 0.5);
        for (x, w) in X.iter().zip(W) {
            for s in [-1.0, 1.0] {
                let l = mid + dl * (0.5 * s * x);
                let r = p - l;
                sum += dl.cross(&r) * (0.5 * w / r.norm().powi(3));
            }
        }
    }
    sum * (MU0_OVER_4PI * current)
}

pub fn check_jacobian(layout: &Layout, p: Vec3) -> Result<(), TestCaseError> {
    prop_assume!(clearance(layout, &p) > 2e-5);
    let j = jacobian(layout, p, &layout.unit_multipliers()).unwrap();
    let scale = j.norm();
    // Skip loops that double back and cancel to rounding noise.
    let typical: f64 = layout
        .conductors()
        .iter()
        .map(|c| c.current.abs())
        .sum::<f64>()
        * MU0_OVER_4PI
        / clearance(layout, &p).powi(2);
    prop_assume!(scale > 1e-6 * typical);
    prop_assert!(j.trace().abs() <= 1e-6 * scale);
    prop_assert!((j - j.transpose()).norm() <= 1e-6 * scale);
    Ok(())
}

pub fn check_segment(a: Vec3, b: Vec3, current: f64, p: Vec3) -> Result<(), TestCaseError> {
    let len = (b - a).norm();
    prop_assume!(len > 1e-5 && distance_to_segment(&a, &b, &p) > 0.05 * len);
    let exact = field_segment(a, b, current, p).unwrap();
    let quad = quadrature_segment(a, b, current, p);
    prop_assert!(
        (exact - quad).norm() <= 1e-9 * quad.norm(),
        "{exact} vs {quad}"
    );
    Ok(())
}

pub fn check_grid_argmin(i1: f64, b0x: f64) -> Result<(), TestCaseError> {
    let t = make_crossing_trap(2.0, i1, gauss_to_tesla(160.0), gauss_to_tesla(b0x)).unwrap();
    let m = t.layout.unit_multipliers();
    let min = find_minimum(
        &t.layout,
        Vec3::new(0.0, 0.0, 25e-6),
        &m,
        &MinimumOptions::default(),
    )
    .unwrap();
    let spec = GridSpec::plane(
        Axis::Y,
        min.point.y,
        Vec3::new(-40e-6, 0.0, 5e-6),
        Vec3::new(40e-6, 0.0, 45e-6),
        [81, 1, 81],
    );
    let grid = grid_eval(&t.layout, &spec, &m, false).unwrap();
    let (_, p, b) = grid.argmin().unwrap();
    let h = spec.spacing();
    prop_assert!(
        (p.x - min.point.x).abs() <= h.x && (p.z - min.point.z).abs() <= h.z,
        "{p} vs {}",
        min.point
    );
    prop_assert!(b >= min.b_min);
    Ok(())
}
