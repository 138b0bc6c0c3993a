use crate::constants::{ATOMIC_MASS_UNIT, H, MU_B};

/// A trappable atomic species in a weak-field-seeking state.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Product g_F·m_F of the trapped hyperfine state.
    pub gf_mf: f64,
    /// Wavelength of the probe transition, m.
    pub transition_wavelength: f64,
}

impl AtomSpecies {
    /// Magnetic moment μ = g_F m_F μ_B, J/T.
    pub fn magnetic_moment(&self) -> f64 {
        self.gf_mf * MU_B
    }

    /// Recoil frequency ν_r = h / (2 m λ²), Hz.
    pub fn recoil_frequency(&self) -> f64 {
        H / (2.0 * self.mass * self.transition_wavelength.powi(2))
    }
}

/// ⁸⁷Rb in |F=2, m_F=2⟩, probed on the D2 line.
pub fn species_rb87() -> AtomSpecies {
    AtomSpecies {
        name: "Rb87 |F=2,mF=2>".to_string(),
        mass: 86.909_180_527 * ATOMIC_MASS_UNIT,
        gf_mf: 1.0,
        transition_wavelength: 780.241e-9,
    }
}

/// Parse a species selector as used on the command line.
pub fn species_by_name(name: &str) -> Option<AtomSpecies> {
    match name.to_ascii_lowercase().as_str() {
        "rb87" | "87rb" => Some(species_rb87()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PROTON_MASS;

    #[test]
    fn rb87_recoil_frequency() {
        // h / (2 m λ²) with CODATA values: 3.7710 kHz.
        let rb = species_rb87();
        let oracle = 6.626_070_15e-34 / (2.0 * 1.443_160_895e-25 * 780.241e-9f64.powi(2));
        assert!((rb.recoil_frequency() - oracle).abs() / oracle < 1e-8);
        assert!((rb.recoil_frequency() - 3.77e3).abs() / 3.77e3 < 0.01);
    }

    #[test]
    fn rb87_moment_and_mass() {
        let rb = species_rb87();
        assert_eq!(rb.magnetic_moment(), MU_B);
        assert!((rb.mass - 1.4432e-25).abs() / 1.4432e-25 < 1e-4);
        assert!((rb.mass / ATOMIC_MASS_UNIT - 86.909).abs() < 1e-3);
        // Ratio to the proton mass is 86.28, not the atomic mass number.
        assert!((rb.mass / PROTON_MASS - 86.28).abs() < 0.01);
        assert!(rb.magnetic_moment() > 0.0);
    }

    #[test]
    fn lookup() {
        assert!(species_by_name("Rb87").is_some());
        assert!(species_by_name("Cs133").is_none());
    }
}
