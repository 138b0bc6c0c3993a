//! Physical constants in SI units (CODATA 2018 exact or recommended values).

use std::f64::consts::PI;

/// Vacuum permeability, T·m/A. Uses the classical 4π·10⁻⁷ so that μ0/2π is
/// exactly 2·10⁻⁷ T·m/A (2 G·mm/A).
pub const MU0: f64 = 4.0e-7 * PI;
/// μ0 / 2π in T·m/A.
pub const MU0_OVER_2PI: f64 = 2.0e-7;
/// μ0 / 4π in T·m/A.
pub const MU0_OVER_4PI: f64 = 1.0e-7;
/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Planck constant, J·s.
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = H / (2.0 * PI);
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Standard gravitational acceleration, m/s².
pub const G_ACCEL: f64 = 9.806_65;
/// ẑ component of the direction of gravity in chip coordinates. The chip is
/// mounted upside down, so gravity pulls trapped atoms away from the surface.
pub const GRAVITY_DIRECTION_Z: f64 = 1.0;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Proton mass, kg.
pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu0_over_two_pi_is_two_gauss_mm_per_amp() {
        assert!((MU0 / (2.0 * PI) - 2e-7).abs() < 1e-22);
        assert_eq!(MU0_OVER_2PI, 2e-7);
    }
}
