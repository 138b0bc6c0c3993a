use super::DynamicsError;
use crate::constants::{GRAVITY_DIRECTION_Z, G_ACCEL};
use crate::field::{norm_gradient, MagneticField, Scene};
use crate::layout::{Layout, Multipliers, Vec3};
use crate::species::AtomSpecies;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub t: f64,
    pub r: Vec3,
    pub v: Vec3,
}

/// Acceleration of a weak-field seeker in a static field: −μ∇|B|/m, plus
/// gravity when the layout asks for it.
pub fn acceleration(
    scene: &Scene,
    r: Vec3,
    species: &AtomSpecies,
    gravity: bool,
) -> Result<Vec3, DynamicsError> {
    let (b, j) = scene.field_and_jacobian(r)?;
    let grad = if b.norm() > 0.0 { norm_gradient(&b, &j) } else { Vec3::zeros() };
    let mut a = -species.magnetic_moment() * grad / species.mass;
    if gravity {
        a.z += G_ACCEL * GRAVITY_DIRECTION_Z;
    }
    Ok(a)
}

/// Velocity Verlet in a frozen field, returning every step including
/// the initial one.
pub fn integrate_particle(
    layout: &Layout,
    multipliers: &Multipliers,
    species: &AtomSpecies,
    start: ParticleState,
    dt: f64,
    steps: usize,
) -> Result<Vec<ParticleState>, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::Invalid("dt must be positive".into()));
    }
    layout
        .check_multipliers(multipliers)
        .map_err(|e| DynamicsError::Invalid(e.0))?;
    let scene = Scene::new(layout, multipliers);
    let grav = layout.include_gravity();
    let mut s = start;
    let mut a = acceleration(&scene, s.r, species, grav)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s);
    for _ in 0..steps {
        s.r += s.v * dt + 0.5 * a * dt * dt;
        let na = acceleration(&scene, s.r, species, grav)?;
        s.v += 0.5 * (a + na) * dt;
        s.t += dt;
        a = na;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{find_minimum, MinimumOptions};
    use crate::field::field_total;
    use crate::library::make_crossing_trap;
    use crate::species::species_rb87;
    use crate::units::gauss_to_tesla;

    #[test]
    fn conserves_energy_near_trap_centre() {
        let rb = species_rb87();
        let t = make_crossing_trap(2.0, 0.5, gauss_to_tesla(160.0), gauss_to_tesla(-45.0)).unwrap();
        let m = t.layout.unit_multipliers();
        let min = find_minimum(&t.layout, Vec3::new(0.0, 0.0, 25e-6), &m, &MinimumOptions::default()).unwrap();
        let start = ParticleState {
            t: 0.0,
            r: min.point + Vec3::new(0.5e-6, 0.05e-6, 0.0),
            v: Vec3::zeros(),
        };
        let path = integrate_particle(&t.layout, &m, &rb, start, 2e-7, 2000).unwrap();
        let energy = |s: &ParticleState| {
            0.5 * rb.mass * s.v.norm_squared()
                + rb.magnetic_moment() * field_total(&t.layout, s.r, &m).unwrap().norm()
        };
        let e0 = energy(&path[0]);
        let u0 = rb.magnetic_moment() * min.b_min;
        for s in &path {
            assert!((energy(s) - e0).abs() < 1e-3 * (e0 - u0));
            assert!((s.r - min.point).norm() < 1e-6);
        }
    }
}
