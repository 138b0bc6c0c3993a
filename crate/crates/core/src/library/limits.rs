use serde::Serialize;

use super::{invalid, LibraryError};

/// Highest sustainable current density, A/m² (4.6·10⁶ A/cm²).
pub const DEFAULT_J_MAX: f64 = 4.6e10;

/// Electrical figures of a rectangular conductor at one current.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConductorLimits {
    pub width: f64,
    pub height: f64,
    /// Ω·m
    pub resistivity: f64,
    /// A/m²
    pub j_max: f64,
    pub current: f64,
    /// Ω/m
    pub resistance_per_length: f64,
    /// W/m
    pub power_per_length: f64,
    /// A/m²
    pub current_density: f64,
    /// Current at which the density reaches `j_max`, A.
    pub current_at_j_max: f64,
    pub ok: bool,
}

pub fn conductor_limits(
    width: f64,
    height: f64,
    resistivity: f64,
    current: f64,
    j_max: f64,
) -> Result<ConductorLimits, LibraryError> {
    if !(width > 0.0 && height > 0.0 && resistivity > 0.0) {
        return invalid("width, height and resistivity must be positive");
    }
    if !(j_max > 0.0) || !current.is_finite() {
        return invalid("current must be finite and j_max positive");
    }
    let area = width * height;
    let r = resistivity / area;
    let j = current.abs() / area;
    Ok(ConductorLimits {
        width,
        height,
        resistivity,
        j_max,
        current,
        resistance_per_length: r,
        power_per_length: current * current * r,
        current_density: j,
        current_at_j_max: j_max * area,
        ok: j <= j_max,
    })
}

impl ConductorLimits {
    pub fn resistance_per_cm(&self) -> f64 {
        self.resistance_per_length / 100.0
    }

    pub fn power_per_cm(&self) -> f64 {
        self.power_per_length / 100.0
    }

    /// A/cm²
    pub fn j_per_cm2(&self) -> f64 {
        self.current_density / 1e4
    }

    pub fn j_max_per_cm2(&self) -> f64 {
        self.j_max / 1e4
    }

    /// JSON report in Ω/cm, W/cm and A/cm².
    pub fn report(&self) -> serde_json::Value {
        serde_json::json!({
            "width_um": self.width * 1e6,
            "height_um": self.height * 1e6,
            "resistivity_uohm_cm": self.resistivity * 1e8,
            "current_A": self.current,
            "R_per_cm": self.resistance_per_cm(),
            "P_per_cm": self.power_per_cm(),
            "j": self.j_per_cm2(),
            "j_max": self.j_max_per_cm2(),
            "current_at_j_max_A": self.current_at_j_max,
            "ok": self.ok,
            "note": format!(
                "j_max = {:.3e} A/cm^2 corresponds to {:.3} A in this cross-section; \
                 3 A gives {:.3e} A/cm^2",
                self.j_max_per_cm2(),
                self.current_at_j_max,
                3.0 / (self.width * self.height) / 1e4
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_current() {
        let l = conductor_limits(10e-6, 7e-6, 2.2e-8, 0.0, DEFAULT_J_MAX).unwrap();
        assert_eq!(l.power_per_length, 0.0);
        assert_eq!(l.current_density, 0.0);
        assert!(l.ok);
    }

    #[test]
    fn exact_relations() {
        let l = conductor_limits(10e-6, 7e-6, 2.2e-8, 1.5, DEFAULT_J_MAX).unwrap();
        assert_eq!(l.resistance_per_length, 2.2e-8 / (10e-6 * 7e-6));
        assert_eq!(l.power_per_length, 1.5 * 1.5 * l.resistance_per_length);
    }

    #[test]
    fn flags_excess_density() {
        let l = conductor_limits(10e-6, 7e-6, 2.2e-8, 3.5, DEFAULT_J_MAX).unwrap();
        assert!(!l.ok);
        assert!(conductor_limits(0.0, 7e-6, 2.2e-8, 1.0, DEFAULT_J_MAX).is_err());
    }
}
