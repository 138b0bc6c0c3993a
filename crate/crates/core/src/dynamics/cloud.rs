use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::potential::PotentialCurve1D;
use super::DynamicsError;
use crate::constants::K_B;
use crate::species::AtomSpecies;

/// Centre-of-mass state of a cloud, optionally with its particles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloudState {
    pub label: String,
    /// m
    pub x: f64,
    /// m/s
    pub v: f64,
    /// Particle (x, v) pairs.
    pub ensemble: Option<Vec<(f64, f64)>>,
}

impl CloudState {
    /// A cloud represented by its centre of mass alone.
    pub fn point(label: impl Into<String>, x: f64, v: f64) -> Self {
        CloudState {
            label: label.into(),
            x,
            v,
            ensemble: None,
        }
    }

    /// Thermal ensemble of `n` particles in the part of `curve` between
    /// `lo` and `hi`, positions drawn by inverse CDF from the Boltzmann
    /// density and velocities from a Maxwell distribution. The tracked
    /// centre of mass is the exact mean of the density, at rest.
    #[allow(clippy::too_many_arguments)]
    pub fn thermal(
        label: impl Into<String>,
        curve: &PotentialCurve1D,
        lo: f64,
        hi: f64,
        temperature: f64,
        n: usize,
        seed: u64,
        species: &AtomSpecies,
    ) -> Result<Self, DynamicsError> {
        if !(temperature > 0.0 && temperature.is_finite()) || n == 0 {
            return Err(DynamicsError::Invalid("thermal cloud needs T > 0 and at least one particle".into()));
        }
        if !(lo < hi && curve.contains(lo) && curve.contains(hi)) {
            return Err(DynamicsError::Invalid("sampling window must lie inside the potential curve".into()));
        }
        let kt = K_B * temperature;
        let cells = ((hi - lo) / curve.spacing() * 8.0).ceil().max(2000.0) as usize;
        let dx = (hi - lo) / cells as f64;
        let xs: Vec<f64> = (0..=cells).map(|i| lo + dx * i as f64).collect();
        let us: Vec<f64> = xs.iter().map(|&x| curve.value(x)).collect();
        let u0 = us.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = us.iter().map(|u| (-(u - u0) / kt).exp()).collect();
        let mut cdf = vec![0.0; w.len()];
        let mut mean = 0.0;
        for i in 1..w.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (w[i] + w[i - 1]) * dx;
            mean += 0.5 * (w[i] * xs[i] + w[i - 1] * xs[i - 1]) * dx;
        }
        let total = cdf[cells];
        mean /= total;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let maxwell = Normal::new(0.0, (kt / species.mass).sqrt()).expect("positive width");
        let mut ensemble = Vec::with_capacity(n);
        for _ in 0..n {
            let target = rng.random::<f64>() * total;
            let j = cdf.partition_point(|&c| c < target).clamp(1, cells);
            let span = cdf[j] - cdf[j - 1];
            let f = if span > 0.0 { (target - cdf[j - 1]) / span } else { 0.5 };
            let x = xs[j - 1] + f * dx;
            ensemble.push((x, maxwell.sample(&mut rng)));
        }
        Ok(CloudState {
            label: label.into(),
            x: mean,
            v: 0.0,
            ensemble: Some(ensemble),
        })
    }

    /// Mean position and velocity of the particles, or the tracked values
    /// for a centre-of-mass cloud.
    pub fn centre_of_mass(&self) -> (f64, f64) {
        match &self.ensemble {
            Some(e) if !e.is_empty() => {
                let n = e.len() as f64;
                let (sx, sv) = e.iter().fold((0.0, 0.0), |(a, b), (x, v)| (a + x, b + v));
                (sx / n, sv / n)
            }
            _ => (self.x, self.v),
        }
    }

    /// RMS position spread of the particles about their mean; zero without
    /// an ensemble.
    pub fn rms_width(&self) -> f64 {
        match &self.ensemble {
            Some(e) if e.len() > 1 => {
                let (m, _) = self.centre_of_mass();
                (e.iter().map(|(x, _)| (x - m).powi(2)).sum::<f64>() / e.len() as f64).sqrt()
            }
            _ => 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.ensemble.as_ref().map_or(1, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Removes particles whose energy ½mv² + U(x) − U_min exceeds `cutoff` (J),
/// U_min being the lowest sample of `curve`.
pub fn rf_truncate(
    cloud: &CloudState,
    curve: &PotentialCurve1D,
    species: &AtomSpecies,
    cutoff: f64,
) -> Result<CloudState, DynamicsError> {
    let Some(ensemble) = &cloud.ensemble else {
        return Err(DynamicsError::Invalid("rf truncation needs an ensemble".into()));
    };
    let (_, u_min) = curve.min_sample();
    let kept: Vec<(f64, f64)> = ensemble
        .iter()
        .copied()
        .filter(|&(x, v)| 0.5 * species.mass * v * v + curve.value(x) - u_min <= cutoff)
        .collect();
    if kept.is_empty() {
        return Err(DynamicsError::EmptyCloud);
    }
    let mut out = CloudState {
        label: cloud.label.clone(),
        x: 0.0,
        v: 0.0,
        ensemble: Some(kept),
    };
    (out.x, out.v) = out.centre_of_mass();
    Ok(out)
}
