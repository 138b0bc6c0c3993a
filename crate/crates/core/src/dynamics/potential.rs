use serde::Serialize;

use super::spline::UniformSpline;
use super::DynamicsError;
use crate::analysis::{longitudinal_profile, ProfileOptions};
use crate::constants::{GRAVITY_DIRECTION_Z, G_ACCEL};
use crate::layout::{Axis, Layout};
use crate::schedule::Schedule;
use crate::species::AtomSpecies;
use crate::units::{m_to_um, tesla_to_gauss};

/// Adiabatic longitudinal potential on a uniform grid, with a natural cubic
/// spline through the samples for forces between them.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCurve1D {
    pub axis: Axis,
    pub x: Vec<f64>,
    /// J
    pub u: Vec<f64>,
    /// Slice minimum |B| per sample, T; empty for synthetic curves.
    pub b_min: Vec<f64>,
    /// Height of the slice minimum per sample, m; empty for synthetic curves.
    pub height: Vec<f64>,
    /// Schedule time the curve belongs to, s.
    pub t: f64,
    spline: UniformSpline,
}

#[derive(Serialize)]
struct CurveJson {
    t_ms: f64,
    axis: &'static str,
    x_um: Vec<f64>,
    u_j: Vec<f64>,
}

impl PotentialCurve1D {
    /// Curve from explicit samples `u` at `start + i·spacing`.
    pub fn from_samples(axis: Axis, start: f64, spacing: f64, u: Vec<f64>, t: f64) -> Result<Self, DynamicsError> {
        if u.len() < 2 || !(spacing > 0.0) {
            return Err(DynamicsError::Invalid(
                "potential curve needs two samples and positive spacing".into(),
            ));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::Invalid("potential curve has non-finite samples".into()));
        }
        let x = (0..u.len()).map(|i| start + spacing * i as f64).collect();
        let spline = UniformSpline::new(start, spacing, u.clone());
        Ok(PotentialCurve1D {
            axis,
            x,
            u,
            b_min: Vec::new(),
            height: Vec::new(),
            t,
            spline,
        })
    }

    pub fn start(&self) -> f64 {
        self.spline.start()
    }

    pub fn end(&self) -> f64 {
        self.spline.end()
    }

    pub fn spacing(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn contains(&self, x: f64) -> bool {
        self.spline.contains(x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.spline.value(x)
    }

    /// −dU/dx, N.
    pub fn force(&self, x: f64) -> f64 {
        -self.spline.derivative(x)
    }

    /// Smallest sample and its position.
    pub fn min_sample(&self) -> (f64, f64) {
        let (i, u) = self
            .u
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("curve has samples");
        (self.x[i], *u)
    }

    /// Interior local minima, refined by a parabola through the three
    /// samples around each.
    pub fn local_minima(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..self.u.len() - 1)
            .filter(|&i| self.u[i] < self.u[i - 1] && self.u[i] <= self.u[i + 1])
            .map(|i| {
                let (a, b, c) = (self.u[i - 1], self.u[i], self.u[i + 1]);
                let denom = a - 2.0 * b + c;
                let shift = if denom > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
                self.x[i] + shift.clamp(-0.5, 0.5) * h
            })
            .collect()
    }

    /// Largest |U''| over the knots whose potential (or a neighbour's) does
    /// not exceed `energy`, J/m².
    pub fn max_curvature_below(&self, energy: f64) -> f64 {
        let m = self.spline.knot_curvatures();
        let n = self.u.len();
        (0..n)
            .filter(|&i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                self.u[lo..=hi].iter().any(|&u| u <= energy)
            })
            .map(|i| m[i].abs())
            .fold(0.0, f64::max)
    }

    /// CSV with position in µm, U in J, and |B| and height of the slice
    /// minimum when known.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_um,U_J,Bmin_G,z_min_um\n");
        for i in 0..self.x.len() {
            let b = self.b_min.get(i).map_or("NaN".into(), |b| tesla_to_gauss(*b).to_string());
            let z = self.height.get(i).map_or("NaN".into(), |z| m_to_um(*z).to_string());
            out.push_str(&format!("{},{},{b},{z}\n", m_to_um(self.x[i]), self.u[i]));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CurveJson {
            t_ms: self.t * 1e3,
            axis: self.axis.tag(),
            x_um: self.x.iter().map(|x| m_to_um(*x)).collect(),
            u_j: self.u.clone(),
        })
        .expect("curve serialises")
    }
}

/// U(x) = μ·B_min(x) from per-slice minimisation, plus the gravitational
/// energy at the slice minimum when the layout includes gravity. Without a
/// schedule all channel multipliers are one.
pub fn potential_1d(
    layout: &Layout,
    schedule: Option<&Schedule>,
    t: f64,
    axis: Axis,
    range: &ProfileOptions,
    species: &AtomSpecies,
) -> Result<PotentialCurve1D, DynamicsError> {
    if range.samples < 2 || !(range.end > range.start) {
        return Err(DynamicsError::Invalid(
            "potential range needs two samples over a positive interval".into(),
        ));
    }
    let m = match schedule {
        Some(s) => s.multipliers(layout, t)?,
        None => layout.unit_multipliers(),
    };
    let profile = longitudinal_profile(layout, axis, range, &m)?;
    let mu = species.magnetic_moment();
    let gravity = layout.include_gravity();
    let (b_min, height): (Vec<f64>, Vec<f64>) = profile.samples.iter().map(|s| (s.b_exact, s.r_exact[2])).unzip();
    let u = b_min
        .iter()
        .zip(&height)
        .map(|(b, z)| {
            let g = if gravity { -species.mass * G_ACCEL * GRAVITY_DIRECTION_Z * z } else { 0.0 };
            mu * b + g
        })
        .collect();
    let spacing = (range.end - range.start) / (range.samples - 1) as f64;
    let mut curve = PotentialCurve1D::from_samples(axis, range.start, spacing, u, t)?;
    curve.b_min = b_min;
    curve.height = height;
    Ok(curve)
}
