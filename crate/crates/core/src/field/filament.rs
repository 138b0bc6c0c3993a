//! Closed-form Biot–Savart fields of straight filaments.

use crate::constants::{MU0_OVER_2PI, MU0_OVER_4PI};
use crate::layout::{InfiniteWire, Mat3, Vec3};

use super::{FieldError, SINGULARITY_DISTANCE};

/// Skew matrix `[u]×` with `[u]× v = u × v`.
fn skew(u: &Vec3) -> Mat3 {
    Mat3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn distance_to_segment(a: &Vec3, b: &Vec3, p: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let s = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * s)).norm()
}

/// Perpendicular distance from `p` to the axis of an infinite wire.
pub fn distance_to_wire(wire: &InfiniteWire, p: &Vec3) -> f64 {
    let r = p - wire.anchor;
    (r - wire.direction * r.dot(&wire.direction)).norm()
}

/// Field and Jacobian of a segment from `a` to `b` carrying `current`.
///
/// With `r1 = p - a`, `r2 = p - b`:
/// `B = μ0 I/4π · (r1 × r2)(|r1| + |r2|) / (|r1||r2|(|r1||r2| + r1·r2))`.
/// The caller guarantees that `p` is off the segment.
pub(crate) fn segment_field_jacobian(a: &Vec3, b: &Vec3, current: f64, p: &Vec3) -> (Vec3, Mat3) {
    let r1 = p - a;
    let r2 = p - b;
    let n1 = r1.norm();
    let n2 = r2.norm();
    let v = r1.cross(&r2);
    let n12 = n1 * n2;
    let d = n12 + r1.dot(&r2);
    let m = n12 * d;
    let f = (n1 + n2) / m;
    let k = MU0_OVER_4PI * current;

    let grad_n12 = r1 * (n2 / n1) + r2 * (n1 / n2);
    let grad_d = grad_n12 + r1 + r2;
    let grad_m = grad_n12 * d + grad_d * n12;
    let grad_f = (r1 / n1 + r2 / n2 - grad_m * f) / m;

    let field = v * (k * f);
    // ∂(r1 × r2)/∂p_j = e_j × (a - b) = (b - a) × e_j.
    let jac = (skew(&(b - a)) * f + v * grad_f.transpose()) * k;
    (field, jac)
}

pub(crate) fn wire_field_jacobian(wire: &InfiniteWire, current: f64, p: &Vec3) -> (Vec3, Mat3) {
    let d = wire.direction;
    let r = p - wire.anchor;
    let rho = r - d * r.dot(&d);
    let rho2 = rho.norm_squared();
    let k = MU0_OVER_2PI * current;
    let dxr = d.cross(&rho);
    let field = dxr * (k / rho2);
    let proj = Mat3::identity() - d * d.transpose();
    let jac = (skew(&d) * proj / rho2 - dxr * rho.transpose() * (2.0 / (rho2 * rho2))) * k;
    (field, jac)
}

/// Field of an infinite straight wire: `|B| = μ0 I / 2πR`, azimuthal.
pub fn field_infinite_wire(wire: &InfiniteWire, p: Vec3) -> Result<Vec3, FieldError> {
    let dist = distance_to_wire(wire, &p);
    if dist < SINGULARITY_DISTANCE {
        return Err(FieldError::Singularity {
            element: wire.name.clone().unwrap_or_else(|| "infinite wire".into()),
            distance: dist,
        });
    }
    Ok(wire_field_jacobian(wire, wire.current, &p).0)
}

/// Field of a finite straight filament from `a` to `b`.
pub fn field_segment(a: Vec3, b: Vec3, current: f64, p: Vec3) -> Result<Vec3, FieldError> {
    if (b - a).norm() <= crate::layout::MIN_POINT_SEPARATION {
        return Err(FieldError::DegenerateSegment);
    }
    let dist = distance_to_segment(&a, &b, &p);
    if dist < SINGULARITY_DISTANCE {
        return Err(FieldError::Singularity {
            element: "segment".into(),
            distance: dist,
        });
    }
    Ok(segment_field_jacobian(&a, &b, current, &p).0)
}
