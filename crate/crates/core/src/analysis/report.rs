use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use super::AnalysisError;
use crate::constants::HBAR;
use crate::field::{norm_hessian_of, FieldError, MagneticField, Scene, ZERO_FIELD_THRESHOLD};
use crate::layout::{Layout, Mat3, Multipliers, Vec3};
use crate::species::AtomSpecies;
use crate::units::{m_to_um, si_to_gauss_per_cm2, tesla_to_gauss};

/// Harmonic frequency ν = (1/2π)·√(μκ/m), Hz; `None` unless κ > 0.
pub fn frequencies(kappa: &[f64; 3], species: &AtomSpecies) -> [Option<f64>; 3] {
    let mu = species.magnetic_moment();
    kappa.map(|k| (k > 0.0).then(|| (mu * k / species.mass).sqrt() / (2.0 * PI)))
}

/// Lamb–Dicke parameter √(ν_r/ν).
pub fn lamb_dicke(nu: f64, species: &AtomSpecies) -> f64 {
    (species.recoil_frequency() / nu).sqrt()
}

/// 1/e² diameter of the harmonic ground-state density, 2√2·√(ħ/(mω)), m.
pub fn ground_state_diameter(nu: f64, species: &AtomSpecies) -> f64 {
    2.0 * 2f64.sqrt() * (HBAR / (species.mass * 2.0 * PI * nu)).sqrt()
}

/// Axis-aligned box whose faces bound the trap for the depth estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBox {
    pub min: Vec3,
    pub max: Vec3,
    /// Samples per face edge.
    pub resolution: usize,
}

impl DepthBox {
    /// Cube of half-width `half` centred at `c`.
    pub fn around(c: Vec3, half: f64) -> Self {
        DepthBox {
            min: c - Vec3::repeat(half),
            max: c + Vec3::repeat(half),
            resolution: 21,
        }
    }

    fn face_points(&self) -> Vec<Vec3> {
        let n = self.resolution.max(2);
        let lerp = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
        let mut pts = Vec::with_capacity(6 * n * n);
        for axis in 0..3 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in [self.min[axis], self.max[axis]] {
                for i in 0..n {
                    for k in 0..n {
                        let mut p = Vec3::zeros();
                        p[axis] = side;
                        p[u] = lerp(self.min[u], self.max[u], i);
                        p[v] = lerp(self.min[v], self.max[v], k);
                        pts.push(p);
                    }
                }
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapReport {
    pub r_min: Vec3,
    pub b_min: f64,
    /// Eigen-curvatures of the Hessian of |B|, descending, T/m².
    pub kappa: [f64; 3],
    /// Orthonormal eigen-axes, matching `kappa`.
    pub axes: [Vec3; 3],
    pub nu: [Option<f64>; 3],
    pub eta: [Option<f64>; 3],
    /// Lowest |B| on the depth box faces minus `b_min`, T.
    pub depth: Option<f64>,
    pub species: String,
    /// Some curvature is negative: the point is not a minimum.
    pub saddle: bool,
    pub curvature_override: bool,
}

impl TrapReport {
    /// Report from given curvatures and axes, sorting them descending.
    pub fn from_curvatures(
        r_min: Vec3,
        b_min: f64,
        kappa: [f64; 3],
        axes: [Vec3; 3],
        species: &AtomSpecies,
    ) -> TrapReport {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| kappa[b].total_cmp(&kappa[a]));
        let kappa = order.map(|i| kappa[i]);
        let axes = order.map(|i| axes[i]);
        let nu = frequencies(&kappa, species);
        let eta = nu.map(|n| n.map(|n| lamb_dicke(n, species)));
        TrapReport {
            r_min,
            b_min,
            kappa,
            axes,
            nu,
            eta,
            depth: None,
            species: species.name.clone(),
            saddle: kappa.iter().any(|&k| k < 0.0),
            curvature_override: false,
        }
    }

    /// Same trap with curvatures replaced (axes kept); frequencies and
    /// Lamb–Dicke parameters recomputed.
    pub fn with_curvatures(&self, kappa: [f64; 3], species: &AtomSpecies) -> TrapReport {
        let mut r = TrapReport::from_curvatures(self.r_min, self.b_min, kappa, self.axes, species);
        r.depth = self.depth;
        r.curvature_override = true;
        r
    }

    /// JSON in µm, G, G/cm² and kHz.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Json<'a> {
            r_min_um: [f64; 3],
            b_min_g: f64,
            kappa_g_per_cm2: [f64; 3],
            axes: [[f64; 3]; 3],
            nu_khz: [Option<f64>; 3],
            eta: [Option<f64>; 3],
            depth_g: Option<f64>,
            species: &'a str,
            saddle_detected: bool,
            curvature_override: bool,
        }
        let v3 = |v: Vec3| [v.x, v.y, v.z];
        serde_json::to_value(Json {
            r_min_um: v3(self.r_min.map(m_to_um)),
            b_min_g: tesla_to_gauss(self.b_min),
            kappa_g_per_cm2: self.kappa.map(si_to_gauss_per_cm2),
            axes: self.axes.map(v3),
            nu_khz: self.nu.map(|n| n.map(|n| n / 1e3)),
            eta: self.eta,
            depth_g: self.depth.map(tesla_to_gauss),
            species: &self.species,
            saddle_detected: self.saddle,
            curvature_override: self.curvature_override,
        })
        .expect("report serialises")
    }
}

fn eigen_sorted(h: Mat3) -> ([f64; 3], [Vec3; 3]) {
    let eig = SymmetricEigen::new(h);
    let kappa = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    let axes = [0, 1, 2].map(|i| Vec3::from(eig.eigenvectors.column(i)).normalize());
    (kappa, axes)
}

/// Eigen-analysis of the Hessian of |B| at `r_min`.
pub fn characterize(
    layout: &Layout,
    r_min: Vec3,
    species: &AtomSpecies,
    multipliers: &Multipliers,
    depth_box: Option<&DepthBox>,
) -> Result<TrapReport, AnalysisError> {
    layout
        .check_multipliers(multipliers)
        .map_err(|e| AnalysisError::Invalid(e.0))?;
    let scene = Scene::new(layout, multipliers);
    let b = scene.field(r_min)?;
    let b_min = b.norm();
    if b_min < ZERO_FIELD_THRESHOLD {
        return Err(FieldError::ZeroFieldRegion { field: b_min }.into());
    }
    let h = norm_hessian_of(&scene, r_min)?;
    let (kappa, axes) = eigen_sorted(h);
    let mut report = TrapReport::from_curvatures(r_min, b_min, kappa, axes, species);
    if let Some(bx) = depth_box {
        report.depth = depth(&scene, bx, b_min);
    }
    Ok(report)
}

fn depth<F: MagneticField>(source: &F, bx: &DepthBox, b_min: f64) -> Option<f64> {
    bx.face_points()
        .into_iter()
        .filter_map(|p| source.field(p).ok().map(|b| b.norm()))
        .min_by(f64::total_cmp)
        .map(|lowest| (lowest - b_min).max(0.0))
}

/// Axial bias that keeps Larmor precession `ratio` times faster than the
/// transverse oscillation it produces, and that oscillation frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Adiabaticity {
    /// T
    pub b0: f64,
    /// Transverse frequency b·√(μ/(m B₀))/2π, Hz.
    pub nu: f64,
    /// ω_prec / ω_osc.
    pub ratio: f64,
}

/// Solves μB₀/ħ = c·b·√(μ/(m B₀)) for B₀.
pub fn adiabaticity(b: f64, species: &AtomSpecies, c: f64) -> Result<Adiabaticity, AnalysisError> {
    if !(b > 0.0 && c > 0.0) {
        return Err(AnalysisError::Invalid("gradient and ratio must be positive".into()));
    }
    let mu = species.magnetic_moment();
    let b0 = (c * HBAR * b / (mu * species.mass).sqrt()).powf(2.0 / 3.0);
    let omega = b * (mu / (species.mass * b0)).sqrt();
    Ok(Adiabaticity {
        b0,
        nu: omega / (2.0 * PI),
        ratio: mu * b0 / HBAR / omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::species_rb87;

    #[test]
    fn frequency_consistency() {
        let rb = species_rb87();
        let kappa = [3.0e7, 1.0e5, -2.0];
        let nu = frequencies(&kappa, &rb);
        for (k, n) in kappa.iter().zip(nu) {
            if let Some(n) = n {
                let lhs = 2.0 * PI * n * (rb.mass / rb.magnetic_moment()).sqrt();
                assert!((lhs - k.sqrt()).abs() <= 1e-12 * k.sqrt());
            }
        }
        assert!(nu[2].is_none());
    }

    #[test]
    fn report_sorts_and_flags_saddles() {
        let rb = species_rb87();
        let r = TrapReport::from_curvatures(Vec3::zeros(), 1e-4, [1.0, -3.0, 5.0], [Vec3::x(), Vec3::y(), Vec3::z()], &rb);
        assert_eq!(r.kappa, [5.0, 1.0, -3.0]);
        assert_eq!(r.axes[0], Vec3::z());
        assert!(r.saddle);
        assert!(r.eta[2].is_none());
    }

    #[test]
    fn adiabaticity_monotone_in_ratio() {
        let rb = species_rb87();
        let mut last = adiabaticity(4.12e3, &rb, 1.0).unwrap();
        for c in [2.0, 10.0, 100.0, 1e4] {
            let a = adiabaticity(4.12e3, &rb, c).unwrap();
            assert!(a.b0 > last.b0 && a.nu < last.nu);
            assert!((a.ratio - c).abs() < 1e-9 * c);
            last = a;
        }
    }

    #[test]
    fn depth_of_uniform_field_is_zero() {
        let l = Layout::bias_only(Vec3::new(0.0, 0.0, 1e-4));
        let r = characterize(
            &l,
            Vec3::zeros(),
            &species_rb87(),
            &l.unit_multipliers(),
            Some(&DepthBox::around(Vec3::zeros(), 1e-5)),
        )
        .unwrap();
        assert_eq!(r.depth, Some(0.0));
    }
}
