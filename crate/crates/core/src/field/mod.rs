//! Magnetic field synthesis for layouts: B, its Jacobian, and the Hessian of |B|.

mod filament;
pub mod grid;

use thiserror::Error;

pub use filament::{distance_to_segment, distance_to_wire, field_infinite_wire, field_segment};
pub use grid::{grid_eval, Grid, GridShape, GridSpec};

use crate::layout::{ElementRef, Layout, Mat3, Multipliers, Vec3};

/// Points closer than this to a filament are treated as singular, m.
pub const SINGULARITY_DISTANCE: f64 = 1e-9;
/// Below this |B| the Hessian of |B| is not reported, T.
pub const ZERO_FIELD_THRESHOLD: f64 = 1e-8;
/// Smallest finite-difference step, m.
pub const MIN_FD_STEP: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error("field singularity: point lies {distance:e} m from {element}")]
    Singularity { element: String, distance: f64 },
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,
    #[error("|B| = {field:e} T is below the 1e-8 T threshold; Hessian of |B| is undefined")]
    ZeroFieldRegion { field: f64 },
}

/// Anything that can report a static magnetic field and its Jacobian.
pub trait MagneticField: Sync {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError>;

    /// Field and Jacobian `J[i][j] = ∂B_i/∂x_j`.
    fn field_and_jacobian(&self, p: Vec3) -> Result<(Vec3, Mat3), FieldError>;

    /// Local geometric length scale at `p` (distance to the nearest source).
    fn length_scale(&self, _p: Vec3) -> Option<f64> {
        None
    }
}

/// A layout frozen at one set of channel multipliers.
#[derive(Debug, Clone)]
pub struct Scene<'a> {
    layout: &'a Layout,
    filament_currents: Vec<f64>,
    wire_currents: Vec<f64>,
    bias: Vec3,
}

impl<'a> Scene<'a> {
    pub fn new(layout: &'a Layout, multipliers: &Multipliers) -> Scene<'a> {
        assert_eq!(
            multipliers.0.len(),
            layout.channels().len(),
            "multiplier count must match the layout's channels"
        );
        Scene {
            layout,
            filament_currents: layout
                .filaments()
                .iter()
                .map(|f| layout.filament_current(f, multipliers))
                .collect(),
            wire_currents: (0..layout.infinite_wires().len())
                .map(|i| layout.wire_current(i, multipliers))
                .collect(),
            bias: layout.effective_bias(multipliers),
        }
    }

    pub fn layout(&self) -> &Layout {
        self.layout
    }

    pub fn bias(&self) -> Vec3 {
        self.bias
    }

    /// Nearest filament (or wire) to `p` and its distance.
    pub fn nearest_source(&self, p: &Vec3) -> Option<(ElementRef, f64)> {
        let mut best: Option<(ElementRef, f64)> = None;
        for f in self.layout.filaments() {
            for w in f.points.windows(2) {
                let d = distance_to_segment(&w[0], &w[1], p);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((f.element, d));
                }
            }
        }
        for (i, w) in self.layout.infinite_wires().iter().enumerate() {
            let d = distance_to_wire(w, p);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((ElementRef::InfiniteWire(i), d));
            }
        }
        best
    }

    fn accumulate(&self, p: &Vec3, with_jacobian: bool) -> Result<(Vec3, Mat3), FieldError> {
        let mut b = self.bias;
        let mut j = Mat3::zeros();
        for (f, &current) in self.layout.filaments().iter().zip(&self.filament_currents) {
            for w in f.points.windows(2) {
                let dist = distance_to_segment(&w[0], &w[1], p);
                if dist < SINGULARITY_DISTANCE {
                    return Err(FieldError::Singularity {
                        element: self.layout.element_label(f.element),
                        distance: dist,
                    });
                }
                if current == 0.0 {
                    continue;
                }
                let (fb, fj) = filament::segment_field_jacobian(&w[0], &w[1], current, p);
                b += fb;
                if with_jacobian {
                    j += fj;
                }
            }
        }
        for (i, (w, &current)) in self
            .layout
            .infinite_wires()
            .iter()
            .zip(&self.wire_currents)
            .enumerate()
        {
            let dist = distance_to_wire(w, p);
            if dist < SINGULARITY_DISTANCE {
                return Err(FieldError::Singularity {
                    element: self.layout.element_label(ElementRef::InfiniteWire(i)),
                    distance: dist,
                });
            }
            if current == 0.0 {
                continue;
            }
            let (fb, fj) = filament::wire_field_jacobian(w, current, p);
            b += fb;
            if with_jacobian {
                j += fj;
            }
        }
        Ok((b, j))
    }
}

impl MagneticField for Scene<'_> {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError> {
        self.accumulate(&p, false).map(|(b, _)| b)
    }

    fn field_and_jacobian(&self, p: Vec3) -> Result<(Vec3, Mat3), FieldError> {
        self.accumulate(&p, true)
    }

    fn length_scale(&self, p: Vec3) -> Option<f64> {
        self.nearest_source(&p).map(|(_, d)| d)
    }
}

/// Field, Jacobian and (optionally) Hessian of |B| at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub point: Vec3,
    pub field: Vec3,
    pub jacobian: Mat3,
    pub norm_hessian: Option<Mat3>,
}

/// Total field of `layout` at `p`: filaments, infinite wires and bias.
pub fn field_total(layout: &Layout, p: Vec3, multipliers: &Multipliers) -> Result<Vec3, FieldError> {
    Scene::new(layout, multipliers).field(p)
}

pub fn jacobian(layout: &Layout, p: Vec3, multipliers: &Multipliers) -> Result<Mat3, FieldError> {
    Scene::new(layout, multipliers)
        .field_and_jacobian(p)
        .map(|(_, j)| j)
}

pub fn norm_hessian(layout: &Layout, p: Vec3, multipliers: &Multipliers) -> Result<Mat3, FieldError> {
    norm_hessian_of(&Scene::new(layout, multipliers), p)
}

pub fn sample(
    layout: &Layout,
    p: Vec3,
    multipliers: &Multipliers,
    with_hessian: bool,
) -> Result<FieldSample, FieldError> {
    let scene = Scene::new(layout, multipliers);
    let (field, jacobian) = scene.field_and_jacobian(p)?;
    let norm_hessian = if with_hessian {
        Some(norm_hessian_of(&scene, p)?)
    } else {
        None
    };
    Ok(FieldSample {
        point: p,
        field,
        jacobian,
        norm_hessian,
    })
}

/// Gradient of |B|: `Jᵀ B / |B|`.
pub fn norm_gradient(b: &Vec3, j: &Mat3) -> Vec3 {
    j.transpose() * b / b.norm()
}

/// Finite-difference step for the Hessian of |B| at `p`: 10⁻³ of the
/// distance to the nearest source, capped at a tenth of the local
/// curvature radius |B|/‖J‖, floored at 10 nm.
pub fn hessian_step<F: MagneticField + ?Sized>(source: &F, p: Vec3, b: &Vec3, j: &Mat3) -> f64 {
    let geometric = source.length_scale(p).map_or(1e-5, |d| 1e-3 * d);
    let jn = j.norm();
    let curvature = if jn > 0.0 { 0.1 * b.norm() / jn } else { f64::INFINITY };
    geometric.min(curvature).max(MIN_FD_STEP)
}

/// Hessian of |B| by central differences with one Richardson level.
pub fn norm_hessian_of<F: MagneticField + ?Sized>(source: &F, p: Vec3) -> Result<Mat3, FieldError> {
    let (b, j) = source.field_and_jacobian(p)?;
    let bn = b.norm();
    if bn < ZERO_FIELD_THRESHOLD {
        return Err(FieldError::ZeroFieldRegion { field: bn });
    }
    let h = hessian_step(source, p, &b, &j);
    let modulus = |q: Vec3| source.field(q).map(|b| b.norm());
    let coarse = scalar_hessian(&modulus, p, h)?;
    let fine = scalar_hessian(&modulus, p, 0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Symmetric second-difference Hessian of a scalar function with step `h`.
pub fn scalar_hessian<E>(
    f: &impl Fn(Vec3) -> Result<f64, E>,
    p: Vec3,
    h: f64,
) -> Result<Mat3, E> {
    let e = |i: usize| {
        let mut v = Vec3::zeros();
        v[i] = h;
        v
    };
    let f0 = f(p)?;
    let mut hess = Mat3::zeros();
    for i in 0..3 {
        let ei = e(i);
        hess[(i, i)] = (f(p + ei)? - 2.0 * f0 + f(p - ei)?) / (h * h);
        for k in (i + 1)..3 {
            let ek = e(k);
            let v = (f(p + ei + ek)? - f(p + ei - ek)? - f(p - ei + ek)? + f(p - ei - ek)?)
                / (4.0 * h * h);
            hess[(i, k)] = v;
            hess[(k, i)] = v;
        }
    }
    Ok(hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{Axis, Binding, Conductor, InfiniteWire};
    use crate::units::{gauss_to_tesla, tesla_to_gauss};
    use nalgebra::Rotation3;

    // Long enough (±1 m) that the finite-length correction at 25 µm is ~1e-10.
    fn side_guide() -> Layout {
        Layout::builder()
            .conductor(Conductor::straight(
                "I0",
                Vec3::new(-1.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                2.0,
            ))
            .bias(Vec3::new(0.0, gauss_to_tesla(160.0), 0.0))
            .build()
            .unwrap()
    }

    #[test]
    fn side_guide_cancels_at_25_um() {
        let l = side_guide();
        let b = field_total(&l, Vec3::new(0.0, 0.0, 25e-6), &l.unit_multipliers()).unwrap();
        assert!(tesla_to_gauss(b.norm()) < 1e-4);
    }

    #[test]
    fn crossing_wire_adds_40_gauss_along_x() {
        let l = side_guide()
            .to_builder()
            .conductor(Conductor::straight(
                "I1",
                Vec3::new(0.0, -0.01, 0.0),
                Vec3::new(0.0, 0.01, 0.0),
                0.5,
            ))
            .build()
            .unwrap();
        let b = field_total(&l, Vec3::new(0.0, 0.0, 25e-6), &l.unit_multipliers()).unwrap();
        // μ0 I z0 / 2π (x² + z0²) at x = 0.
        assert!((tesla_to_gauss(b.x) - 40.0).abs() < 1e-3);
    }

    #[test]
    fn zero_multipliers_zero_field() {
        let l = side_guide()
            .to_builder()
            .channel("all", vec![Binding::Conductor("I0".into()), Binding::Bias(Axis::Y)])
            .build()
            .unwrap();
        let m = l.multipliers(&[("all", 0.0)]).unwrap();
        let b = field_total(&l, Vec3::new(1e-5, 2e-5, 3e-5), &m).unwrap();
        assert_eq!(b, Vec3::zeros());
    }

    #[test]
    fn side_guide_gradient_eigenvalues() {
        let l = side_guide();
        let j = jacobian(&l, Vec3::new(0.0, 0.0, 25e-6), &l.unit_multipliers()).unwrap();
        let eig = j.symmetric_eigenvalues();
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(|a, b| a.total_cmp(b));
        // 160 G / 25 µm = 6.4 G/µm = 640 T/m.
        assert!((e[0] + 640.0).abs() / 640.0 < 1e-4);
        assert!(e[1].abs() < 1e-3);
        assert!((e[2] - 640.0).abs() / 640.0 < 1e-4);
    }

    #[test]
    fn pure_bias_has_zero_jacobian_and_linear_scaling() {
        let l = Layout::bias_only(Vec3::new(0.0, 0.0, 1e-4));
        let p = Vec3::new(1.0, -2.0, 3.0);
        assert_eq!(field_total(&l, p, &l.unit_multipliers()).unwrap(), Vec3::new(0.0, 0.0, 1e-4));
        assert_eq!(jacobian(&l, p, &l.unit_multipliers()).unwrap(), Mat3::zeros());

        let g = side_guide();
        let q = Vec3::new(1e-5, 3e-6, 4e-5);
        let j1 = jacobian(&g, q, &g.unit_multipliers()).unwrap();
        let j2 = jacobian(&g.scaled(2.0), q, &g.unit_multipliers()).unwrap();
        assert!((j2 - j1 * 2.0).norm() <= 1e-12 * j1.norm());
    }

    #[test]
    fn singularity_reports_element() {
        let l = side_guide();
        let err = field_total(&l, Vec3::new(0.003, 0.0, 0.0), &l.unit_multipliers()).unwrap_err();
        match err {
            FieldError::Singularity { element, .. } => assert_eq!(element, "I0"),
            e => panic!("unexpected {e:?}"),
        }
    }

    struct Quadratic {
        b0: f64,
        c: f64,
    }

    impl MagneticField for Quadratic {
        fn field(&self, p: Vec3) -> Result<Vec3, FieldError> {
            Ok(Vec3::new(self.b0 + self.c * p.x * p.x, 0.0, 0.0))
        }
        fn field_and_jacobian(&self, p: Vec3) -> Result<(Vec3, Mat3), FieldError> {
            let mut j = Mat3::zeros();
            j[(0, 0)] = 2.0 * self.c * p.x;
            Ok((self.field(p)?, j))
        }
        fn length_scale(&self, _p: Vec3) -> Option<f64> {
            Some(25e-6)
        }
    }

    #[test]
    fn quadratic_stub_curvature_exact() {
        let q = Quadratic { b0: 5e-4, c: 3.7e6 };
        let h = norm_hessian_of(&q, Vec3::new(0.0, 0.0, 0.0)).unwrap();
        assert!((h[(0, 0)] - 2.0 * q.c).abs() / (2.0 * q.c) < 1e-6);
        assert!(h[(1, 1)].abs() < 1e-6 * q.c && h[(0, 1)].abs() < 1e-6 * q.c);
    }

    #[test]
    fn zero_field_hessian_rejected() {
        let l = side_guide();
        let err = norm_hessian(&l, Vec3::new(0.0, 0.0, 25e-6), &l.unit_multipliers()).unwrap_err();
        assert!(matches!(err, FieldError::ZeroFieldRegion { .. }));
    }

    #[test]
    fn crossing_wire_longitudinal_curvature() {
        // 1D model f(x) = |B0x| - μ0 I z0 / 2π (x² + z0²) along the guide line:
        // second derivative μ0 I / (π z0³) = 1.28e7 T/m² for I = 0.5 A, z0 = 25 µm.
        let z0 = 25e-6;
        let i1 = 0.5;
        let l = Layout::builder()
            .infinite_wire(InfiniteWire::new("I1", Vec3::zeros(), Vec3::y(), i1))
            .bias(Vec3::new(gauss_to_tesla(-45.0), 0.0, 0.0))
            .build()
            .unwrap();
        let scene = Scene::new(&l, &l.unit_multipliers());
        let axial = |q: Vec3| scene.field(q).map(|b| b.x.abs());
        let h = scalar_hessian(&axial, Vec3::new(0.0, 0.0, z0), 5e-9).unwrap();
        let oracle = 4e-7 * i1 / z0.powi(3);
        assert!((oracle - 1.28e7).abs() / 1.28e7 < 1e-12);
        assert!((h[(0, 0)] - oracle).abs() / oracle < 1e-6, "{} vs {oracle}", h[(0, 0)]);
    }

    #[test]
    fn hessian_is_rotation_covariant() {
        let l = side_guide()
            .to_builder()
            .conductor(Conductor::straight(
                "I1",
                Vec3::new(0.0, -0.01, 0.0),
                Vec3::new(0.0, 0.01, 0.0),
                0.5,
            ))
            .bias(Vec3::new(gauss_to_tesla(-45.0), gauss_to_tesla(160.0), 0.0))
            .build()
            .unwrap();
        let rot = Rotation3::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_2);
        let lr = l.transformed(&rot, Vec3::zeros());
        let p = Vec3::new(3e-6, -2e-6, 24e-6);
        let h = norm_hessian(&l, p, &l.unit_multipliers()).unwrap();
        let hr = norm_hessian(&lr, rot * p, &lr.unit_multipliers()).unwrap();
        let expected = rot.matrix() * h * rot.matrix().transpose();
        let scale = h.abs().max();
        for (a, b) in hr.iter().zip(expected.iter()) {
            assert!((a - b).abs() <= 1e-6 * scale, "{hr} vs {expected}");
        }
    }
}
