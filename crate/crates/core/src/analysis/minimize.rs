use nalgebra::SymmetricEigen;

use super::AnalysisError;
use crate::field::{FieldError, MagneticField, Scene};
use crate::layout::{Axis, Layout, Mat3, Multipliers, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct MinimumOptions {
    pub max_iterations: usize,
    /// Convergence threshold on ‖∇|B|²‖, T²/m.
    pub gradient_tolerance: f64,
    /// Convergence threshold on the last step length, m.
    pub step_tolerance: f64,
    /// Half-width of the box around the seed the search may not leave, m.
    pub domain_half_width: f64,
    /// Coordinates the search may move; fixed axes keep the seed value.
    pub free_axes: [bool; 3],
}

impl Default for MinimumOptions {
    fn default() -> Self {
        MinimumOptions {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-9,
            domain_half_width: 10e-3,
            free_axes: [true; 3],
        }
    }
}

impl MinimumOptions {
    /// Search restricted to the plane perpendicular to `axis`.
    pub fn transverse_to(axis: Axis) -> Self {
        let mut free_axes = [true; 3];
        free_axes[axis.index()] = false;
        MinimumOptions {
            free_axes,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec3,
    /// |B| at the minimum, T.
    pub b_min: f64,
    pub field: Vec3,
    pub iterations: usize,
    /// ‖∇|B|²‖ at the returned point, T²/m.
    pub gradient: f64,
}

/// Field with the component along one axis removed, so that minimising its
/// modulus locates the zero of the transverse components.
pub struct ProjectedField<'a, F: MagneticField + ?Sized> {
    pub inner: &'a F,
    pub axis: Axis,
}

impl<F: MagneticField + ?Sized> MagneticField for ProjectedField<'_, F> {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError> {
        let mut b = self.inner.field(p)?;
        b[self.axis.index()] = 0.0;
        Ok(b)
    }

    fn field_and_jacobian(&self, p: Vec3) -> Result<(Vec3, Mat3), FieldError> {
        let (mut b, mut j) = self.inner.field_and_jacobian(p)?;
        b[self.axis.index()] = 0.0;
        j.row_mut(self.axis.index()).fill(0.0);
        Ok((b, j))
    }

    fn length_scale(&self, p: Vec3) -> Option<f64> {
        self.inner.length_scale(p)
    }
}

/// Minimises |B|² starting from `seed`.
pub fn find_minimum(
    layout: &Layout,
    seed: Vec3,
    multipliers: &Multipliers,
    options: &MinimumOptions,
) -> Result<Minimum, AnalysisError> {
    layout
        .check_multipliers(multipliers)
        .map_err(|e| AnalysisError::Invalid(e.0))?;
    find_minimum_in(&Scene::new(layout, multipliers), seed, options)
}

struct Objective<'a, F: MagneticField + ?Sized> {
    source: &'a F,
    mask: Vec3,
}

impl<F: MagneticField + ?Sized> Objective<'_, F> {
    fn value(&self, p: Vec3) -> Result<f64, FieldError> {
        self.source.field(p).map(|b| b.norm_squared())
    }

    /// |B|², its masked gradient 2JᵀB and the field.
    fn gradient(&self, p: Vec3) -> Result<(f64, Vec3, Vec3), FieldError> {
        let (b, j) = self.source.field_and_jacobian(p)?;
        let g = (j.transpose() * b * 2.0).component_mul(&self.mask);
        Ok((b.norm_squared(), g, b))
    }

    /// Hessian of |B|² from central differences of the analytic gradient.
    fn hessian(&self, p: Vec3) -> Result<Mat3, FieldError> {
        let h = self
            .source
            .length_scale(p)
            .map_or(1e-7, |d| (1e-4 * d).clamp(1e-10, 1e-6));
        let mut hess = Mat3::identity();
        for k in 0..3 {
            if self.mask[k] == 0.0 {
                continue;
            }
            let mut e = Vec3::zeros();
            e[k] = h;
            let (_, gp, _) = self.gradient(p + e)?;
            let (_, gm, _) = self.gradient(p - e)?;
            hess.set_column(k, &((gp - gm) / (2.0 * h)));
        }
        for k in 0..3 {
            if self.mask[k] == 0.0 {
                hess.row_mut(k).fill(0.0);
                hess.column_mut(k).fill(0.0);
                hess[(k, k)] = 1.0;
            }
        }
        Ok((hess + hess.transpose()) * 0.5)
    }
}

/// Newton direction with eigenvalues replaced by their moduli (floored)
/// so that the step always descends.
fn guarded_newton_step(hess: &Mat3, g: &Vec3) -> Vec3 {
    let eig = SymmetricEigen::new(*hess);
    let scale = eig.eigenvalues.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return -g;
    }
    let floor = 1e-10 * scale;
    let mut step = Vec3::zeros();
    for i in 0..3 {
        let v = eig.eigenvectors.column(i);
        let lam = eig.eigenvalues[i].abs().max(floor);
        step -= v * (v.dot(g) / lam);
    }
    step
}

/// Minimises |B|² of an arbitrary field source.
pub fn find_minimum_in<F: MagneticField + ?Sized>(
    source: &F,
    seed: Vec3,
    options: &MinimumOptions,
) -> Result<Minimum, AnalysisError> {
    let mask = Vec3::from_fn(|i, _| if options.free_axes[i] { 1.0 } else { 0.0 });
    let obj = Objective { source, mask };
    let mut p = seed;
    let (mut f, mut g, mut b) = obj.gradient(p)?;
    for iteration in 0..options.max_iterations {
        let hess = obj.hessian(p)?;
        let newton = guarded_newton_step(&hess, &g);
        let mut step = newton;
        // Never jump further than a quarter of the distance to the nearest wire.
        let max_step = source.length_scale(p).map_or(1e-3, |d| (0.25 * d).min(1e-3));
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        if g.norm() < options.gradient_tolerance && newton.norm() < options.step_tolerance {
            return Ok(Minimum {
                point: p,
                b_min: f.sqrt(),
                field: b,
                iterations: iteration,
                gradient: g.norm(),
            });
        }

        let mut accepted = line_search(&obj, p, f, &g, step);
        if accepted.is_none() && g.norm() > 0.0 {
            let descent = -g * (step.norm().max(options.step_tolerance) / g.norm());
            accepted = line_search(&obj, p, f, &g, descent);
        }
        let Some((q, taken)) = accepted else {
            // No decrease is possible within rounding: accept the point if
            // the Newton estimate of the remaining distance is below tolerance.
            if newton.norm() < options.step_tolerance {
                return Ok(Minimum {
                    point: p,
                    b_min: f.sqrt(),
                    field: b,
                    iterations: iteration,
                    gradient: g.norm(),
                });
            }
            return Err(AnalysisError::NoConvergence {
                iterations: iteration,
                point: p,
                gradient: g.norm(),
            });
        };
        p = q;
        if (p - seed).amax() > options.domain_half_width {
            return Err(AnalysisError::EscapedDomain { point: p });
        }
        (f, g, b) = obj.gradient(p)?;
        if g.norm() < options.gradient_tolerance && taken < options.step_tolerance {
            return Ok(Minimum {
                point: p,
                b_min: f.sqrt(),
                field: b,
                iterations: iteration + 1,
                gradient: g.norm(),
            });
        }
    }
    Err(AnalysisError::NoConvergence {
        iterations: options.max_iterations,
        point: p,
        gradient: g.norm(),
    })
}

/// Backtracking Armijo search along `dir`; returns the new point and the step length.
fn line_search<F: MagneticField + ?Sized>(
    obj: &Objective<'_, F>,
    p: Vec3,
    f: f64,
    g: &Vec3,
    dir: Vec3,
) -> Option<(Vec3, f64)> {
    let slope = g.dot(&dir);
    if !(slope < 0.0) {
        return None;
    }
    let mut alpha = 1.0;
    for _ in 0..40 {
        let q = p + dir * alpha;
        if let Ok(fq) = obj.value(q) {
            if fq <= f + 1e-4 * alpha * slope && fq < f {
                return Some((q, (dir * alpha).norm()));
            }
        }
        alpha *= 0.5;
    }
    None
}
