use std::f64::consts::PI;

use serde::Serialize;

use super::potential::potential_1d;
use super::DynamicsError;
use crate::analysis::{find_minimum, MinimumOptions, ProfileOptions};
use crate::field::norm_hessian;
use crate::layout::{Axis, Layout, Vec3};
use crate::schedule::Schedule;
use crate::species::AtomSpecies;

#[derive(Debug, Clone, PartialEq)]
pub struct ConveyorOptions {
    pub axis: Axis,
    /// Range and resolution of the t = 0 scan that detects the wells.
    pub scan: ProfileOptions,
    /// Time step, s; at most 1 ms.
    pub dt: f64,
    /// Simulated time, s; defaults to the schedule duration.
    pub duration: Option<f64>,
    /// A well may move at most this far per step before it counts as lost, m.
    pub reach: f64,
    /// Two wells closer than this have merged, m.
    pub merge_distance: f64,
}

impl ConveyorOptions {
    pub fn new(axis: Axis, scan: ProfileOptions, dt: f64) -> Self {
        ConveyorOptions {
            axis,
            scan,
            dt,
            duration: None,
            reach: 200e-6,
            merge_distance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellSample {
    pub t: f64,
    pub point: [f64; 3],
    /// T
    pub b_min: f64,
    /// Curvature of |B| along the guide axis, T/m².
    pub kappa_axial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellTrack {
    pub id: usize,
    pub samples: Vec<WellSample>,
    /// Largest ratio of the well's displacement during one axial oscillation
    /// period to its half-distance to the nearest neighbouring well. Values
    /// well below one mean the transport is adiabatic.
    pub adiabaticity: Option<f64>,
}

impl WellTrack {
    pub fn first(&self) -> &WellSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &WellSample {
        self.samples.last().expect("tracks start with one sample")
    }

    /// Axial displacement from the first to the last sample, m.
    pub fn displacement(&self, axis: Axis) -> f64 {
        self.last().point[axis.index()] - self.first().point[axis.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WellEvent {
    Merged { t: f64, well: usize, into: usize },
    Lost { t: f64, well: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConveyorRun {
    pub times: Vec<f64>,
    pub wells: Vec<WellTrack>,
    pub events: Vec<WellEvent>,
}

fn refine(
    layout: &Layout,
    schedule: &Schedule,
    t: f64,
    seed: Vec3,
    reach: f64,
    axis: Axis,
) -> Result<WellSample, DynamicsError> {
    let m = schedule.multipliers(layout, t)?;
    let opts = MinimumOptions {
        domain_half_width: reach,
        ..MinimumOptions::default()
    };
    let min = find_minimum(layout, seed, &m, &opts)?;
    let h = norm_hessian(layout, min.point, &m)?;
    let a = axis.index();
    Ok(WellSample {
        t,
        point: [min.point.x, min.point.y, min.point.z],
        b_min: min.b_min,
        kappa_axial: h[(a, a)],
    })
}

/// Tracks every well present at t = 0 through the schedule by seeding each
/// step's 3D minimisation with the previous minimum. Wells that cannot be
/// followed or that run into another are reported as events.
pub fn conveyor_transport(
    layout: &Layout,
    schedule: &Schedule,
    species: &AtomSpecies,
    opts: &ConveyorOptions,
) -> Result<ConveyorRun, DynamicsError> {
    if !(opts.dt > 0.0 && opts.dt <= 1e-3) {
        return Err(DynamicsError::Invalid(format!(
            "conveyor time step must lie in (0, 1 ms], got {} s",
            opts.dt
        )));
    }
    let duration = opts.duration.unwrap_or(schedule.duration());
    if !(duration > 0.0 && duration <= schedule.duration()) {
        return Err(DynamicsError::Invalid("duration must lie within the schedule".into()));
    }
    let a = opts.axis.index();
    let scan = potential_1d(layout, Some(schedule), 0.0, opts.axis, &opts.scan, species)?;
    let mut wells: Vec<WellTrack> = Vec::new();
    for x in scan.local_minima() {
        let i = ((x - scan.start()) / scan.spacing()).round() as usize;
        let mut seed = Vec3::zeros();
        seed[a] = x;
        seed.z = scan.height[i.min(scan.height.len() - 1)];
        if let Ok(s) = refine(layout, schedule, 0.0, seed, opts.reach, opts.axis) {
            let dup = wells
                .iter()
                .any(|w| (Vec3::from(w.first().point) - Vec3::from(s.point)).norm() < opts.merge_distance);
            if !dup {
                wells.push(WellTrack {
                    id: wells.len(),
                    samples: vec![s],
                    adiabaticity: None,
                });
            }
        }
    }

    let steps = (duration / opts.dt).round().max(1.0) as usize;
    let mut times = vec![0.0];
    let mut alive: Vec<usize> = (0..wells.len()).collect();
    let mut events = Vec::new();
    for k in 1..=steps {
        let t = if k == steps { duration } else { k as f64 * opts.dt };
        times.push(t);
        let mut next = Vec::with_capacity(alive.len());
        for &w in &alive {
            let seed = Vec3::from(wells[w].last().point);
            match refine(layout, schedule, t, seed, opts.reach, opts.axis) {
                Ok(s) => {
                    if let Some(&into) = next
                        .iter()
                        .find(|&&o: &&usize| (Vec3::from(wells[o].last().point) - Vec3::from(s.point)).norm() < opts.merge_distance)
                    {
                        events.push(WellEvent::Merged { t, well: w, into });
                    } else {
                        wells[w].samples.push(s);
                        next.push(w);
                    }
                }
                Err(e) => events.push(WellEvent::Lost {
                    t,
                    well: w,
                    reason: e.to_string(),
                }),
            }
        }
        alive = next;
    }

    let mu = species.magnetic_moment();
    // Sample k of every track belongs to times[k]: live wells gain one
    // sample per step.
    let positions: Vec<Vec<f64>> = wells
        .iter()
        .map(|w| w.samples.iter().map(|s| s.point[a]).collect())
        .collect();
    for w in wells.iter_mut() {
        let mut worst: Option<f64> = None;
        for (k, pair) in w.samples.windows(2).enumerate() {
            let (s0, s1) = (&pair[0], &pair[1]);
            let speed = (s1.point[a] - s0.point[a]).abs() / (s1.t - s0.t);
            let neighbour = positions
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != w.id)
                .filter_map(|(_, p)| p.get(k + 1).map(|x| (x - s1.point[a]).abs()))
                .fold(f64::INFINITY, f64::min);
            if !(neighbour.is_finite() && s1.kappa_axial > 0.0) {
                continue;
            }
            let nu = (mu * s1.kappa_axial / species.mass).sqrt() / (2.0 * PI);
            let ratio = speed / nu / (0.5 * neighbour);
            worst = Some(worst.map_or(ratio, |r: f64| r.max(ratio)));
        }
        w.adiabaticity = worst;
    }
    Ok(ConveyorRun { times, wells, events })
}
