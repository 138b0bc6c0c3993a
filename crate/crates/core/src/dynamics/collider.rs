use rayon::prelude::*;
use serde::Serialize;

use super::cloud::CloudState;
use super::potential::{potential_1d, PotentialCurve1D};
use super::DynamicsError;
use crate::analysis::ProfileOptions;
use crate::layout::{Axis, Layout, Multipliers};
use crate::schedule::Schedule;
use crate::species::AtomSpecies;
use crate::units::{m_to_um, s_to_ms};

#[derive(Debug, Clone, PartialEq)]
pub struct ColliderOptions {
    pub axis: Axis,
    /// Sampling of the potential after the release.
    pub range: ProfileOptions,
    /// Integration step, s.
    pub dt: f64,
    /// Time integrated after the release, s.
    pub duration: f64,
    /// Interval between recorded centre-of-mass samples, s.
    pub record_interval: f64,
    /// Samples before the overlap used for the linear fits.
    pub fit_points: usize,
    /// Seed used to sample the clouds, echoed in the summary.
    pub seed: Option<u64>,
}

impl ColliderOptions {
    pub fn new(range: ProfileOptions, dt: f64, duration: f64, record_interval: f64) -> Self {
        ColliderOptions {
            axis: Axis::X,
            range,
            dt,
            duration,
            record_interval,
            fit_points: 10,
            seed: None,
        }
    }
}

/// x(t) = slope·t + intercept, t measured from the release.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    /// m/s
    pub slope: f64,
    /// m
    pub intercept: f64,
}

impl LinearFit {
    pub fn at(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }

    fn least_squares(t: &[f64], x: &[f64]) -> LinearFit {
        let n = t.len() as f64;
        let tm = t.iter().sum::<f64>() / n;
        let xm = x.iter().sum::<f64>() / n;
        let (mut stt, mut stx) = (0.0, 0.0);
        for (ti, xi) in t.iter().zip(x) {
            stt += (ti - tm) * (ti - tm);
            stx += (ti - tm) * (xi - xm);
        }
        let slope = if stt > 0.0 { stx / stt } else { 0.0 };
        LinearFit {
            slope,
            intercept: xm - slope * tm,
        }
    }
}

/// Centre-of-mass trajectories of the two clouds after the release.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub labels: [String; 2],
    /// Time since the release, s.
    pub times: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub left_v: Vec<f64>,
    pub right_v: Vec<f64>,
    /// Mean particle energy ½mv² + U per cloud, J.
    pub energy: Vec<[f64; 2]>,
    /// First crossing of the centres of mass, interpolated between records.
    pub encounter_t: Option<f64>,
    pub encounter_x: Option<f64>,
    pub fit_left: Option<LinearFit>,
    pub fit_right: Option<LinearFit>,
    /// Largest distance of either centre of mass from its fit line after
    /// the encounter, over as long a window as the fit spanned before it, m.
    pub post_fit_deviation: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct FitJson {
    /// µm/ms
    slope: f64,
    /// µm
    intercept: f64,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    labels: &'a [String; 2],
    encounter_t_ms: Option<f64>,
    encounter_x_um: Option<f64>,
    fit_left: Option<FitJson>,
    fit_right: Option<FitJson>,
    fit_units: &'static str,
    post_fit_deviation_um: Option<f64>,
    seed: Option<u64>,
    records: usize,
}

impl TrajectoryRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ms,x_left_um,x_right_um\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                s_to_ms(self.times[i]),
                m_to_um(self.left[i]),
                m_to_um(self.right[i])
            ));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let fit = |f: &Option<LinearFit>| {
            f.map(|f| FitJson {
                slope: f.slope * 1e3,
                intercept: m_to_um(f.intercept),
            })
        };
        serde_json::to_value(SummaryJson {
            labels: &self.labels,
            encounter_t_ms: self.encounter_t.map(s_to_ms),
            encounter_x_um: self.encounter_x.map(m_to_um),
            fit_left: fit(&self.fit_left),
            fit_right: fit(&self.fit_right),
            fit_units: "slope um/ms, intercept um, t from release",
            post_fit_deviation_um: self.post_fit_deviation.map(m_to_um),
            seed: self.seed,
            records: self.times.len(),
        })
        .expect("summary serialises")
    }
}

struct Particle {
    x: f64,
    v: f64,
    a: f64,
}

fn particles(c: &CloudState) -> Vec<Particle> {
    match &c.ensemble {
        Some(e) => e.iter().map(|&(x, v)| Particle { x, v, a: 0.0 }).collect(),
        None => vec![Particle { x: c.x, v: c.v, a: 0.0 }],
    }
}

fn mean(ps: &[Particle], f: impl Fn(&Particle) -> f64) -> f64 {
    ps.iter().map(f).sum::<f64>() / ps.len() as f64
}

fn spread(ps: &[Particle]) -> f64 {
    if ps.len() < 2 {
        return 0.0;
    }
    let m = mean(ps, |p| p.x);
    mean(ps, |p| (p.x - m).powi(2)).sqrt()
}

/// Checks that every particle lies in the curve and that the step resolves
/// the fastest local oscillation the particles can reach.
fn check_step(curve: &PotentialCurve1D, clouds: &[Vec<Particle>; 2], mass: f64, dt: f64, t: f64) -> Result<(), DynamicsError> {
    let mut e_max = f64::NEG_INFINITY;
    for p in clouds.iter().flatten() {
        if !curve.contains(p.x) {
            return Err(DynamicsError::EscapedDomain { x: p.x, t });
        }
        e_max = e_max.max(0.5 * mass * p.v * p.v + curve.value(p.x));
    }
    let omega = (curve.max_curvature_below(e_max) / mass).sqrt();
    // v_max·dt < ℓ/20 with the feature scale ℓ = v_max/ω.
    if omega > 0.0 && omega * dt >= 1.0 / 20.0 {
        return Err(DynamicsError::StepTooLarge {
            dt,
            limit: 1.0 / (20.0 * omega),
        });
    }
    Ok(())
}

/// Releases two clouds at `release_time` and integrates them with velocity
/// Verlet in the adiabatic potential given by the schedule from then on,
/// evaluated right-continuously so that a step at the release already
/// applies. Clouds do not interact. `clouds[0]` must be the left one.
pub fn collider_run(
    layout: &Layout,
    schedule: &Schedule,
    release_time: f64,
    clouds: [CloudState; 2],
    species: &AtomSpecies,
    opts: &ColliderOptions,
) -> Result<TrajectoryRecord, DynamicsError> {
    if !(opts.dt > 0.0 && opts.duration > 0.0 && opts.record_interval >= opts.dt) {
        return Err(DynamicsError::Invalid(
            "need dt > 0, duration > 0 and record interval >= dt".into(),
        ));
    }
    if release_time < 0.0 || release_time + opts.duration > schedule.duration() * (1.0 + 1e-12) {
        return Err(DynamicsError::Invalid(format!(
            "release at {release_time} s plus {} s runs past the schedule ({} s)",
            opts.duration,
            schedule.duration()
        )));
    }
    if clouds.iter().any(|c| c.is_empty()) {
        return Err(DynamicsError::EmptyCloud);
    }
    if clouds[0].centre_of_mass().0 >= clouds[1].centre_of_mass().0 {
        return Err(DynamicsError::Invalid("clouds[0] must start left of clouds[1]".into()));
    }
    let mass = species.mass;
    let at = |t: f64| (release_time + t).min(schedule.duration());
    let curve_for = |t: f64| potential_1d(layout, Some(schedule), at(t), opts.axis, &opts.range, species);

    let mut curve = curve_for(0.0)?;
    let mut current: Multipliers = schedule.multipliers(layout, at(0.0))?;
    let mut state = [particles(&clouds[0]), particles(&clouds[1])];
    check_step(&curve, &state, mass, opts.dt, 0.0)?;
    for p in state.iter_mut().flatten() {
        p.a = curve.force(p.x) / mass;
    }

    let steps = (opts.duration / opts.dt).round() as usize;
    let every = ((opts.record_interval / opts.dt).round() as usize).max(1);
    let mut rec = TrajectoryRecord {
        labels: [clouds[0].label.clone(), clouds[1].label.clone()],
        times: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        left_v: Vec::new(),
        right_v: Vec::new(),
        energy: Vec::new(),
        encounter_t: None,
        encounter_x: None,
        fit_left: None,
        fit_right: None,
        post_fit_deviation: None,
        seed: opts.seed,
    };
    let mut widths = Vec::new();
    let record = |rec: &mut TrajectoryRecord, widths: &mut Vec<f64>, state: &[Vec<Particle>; 2], curve: &PotentialCurve1D, t: f64| {
        rec.times.push(t);
        rec.left.push(mean(&state[0], |p| p.x));
        rec.right.push(mean(&state[1], |p| p.x));
        rec.left_v.push(mean(&state[0], |p| p.v));
        rec.right_v.push(mean(&state[1], |p| p.v));
        let e = |ps: &[Particle]| mean(ps, |p| 0.5 * mass * p.v * p.v + curve.value(p.x));
        rec.energy.push([e(&state[0]), e(&state[1])]);
        widths.push(spread(&state[0]) + spread(&state[1]));
    };
    record(&mut rec, &mut widths, &state, &curve, 0.0);

    let dt = opts.dt;
    for k in 1..=steps {
        let t = k as f64 * dt;
        let m = schedule.multipliers(layout, at(t))?;
        if m != current {
            curve = curve_for(t)?;
            current = m;
            check_step(&curve, &state, mass, dt, t)?;
        }
        for cloud in state.iter_mut() {
            cloud.par_iter_mut().for_each(|p| {
                p.x += p.v * dt + 0.5 * p.a * dt * dt;
                if curve.contains(p.x) {
                    let a = curve.force(p.x) / mass;
                    p.v += 0.5 * (p.a + a) * dt;
                    p.a = a;
                }
            });
        }
        if let Some(p) = state.iter().flatten().find(|p| !curve.contains(p.x)) {
            return Err(DynamicsError::EscapedDomain { x: p.x, t });
        }
        if k % every == 0 || k == steps {
            record(&mut rec, &mut widths, &state, &curve, t);
        }
    }
    analyse(&mut rec, &widths, opts.fit_points);
    Ok(rec)
}

/// Encounter, pre-overlap fits and post-encounter deviation.
fn analyse(rec: &mut TrajectoryRecord, widths: &[f64], fit_points: usize) {
    let gap: Vec<f64> = rec.right.iter().zip(&rec.left).map(|(r, l)| r - l).collect();
    let Some(cross) = gap.iter().position(|&g| g <= 0.0) else {
        return;
    };
    if cross == 0 {
        return;
    }
    let (g0, g1) = (gap[cross - 1], gap[cross]);
    let f = if g0 != g1 { g0 / (g0 - g1) } else { 0.0 };
    let lerp = |v: &[f64]| v[cross - 1] + f * (v[cross] - v[cross - 1]);
    let t_enc = lerp(&rec.times);
    rec.encounter_t = Some(t_enc);
    rec.encounter_x = Some(0.5 * (lerp(&rec.left) + lerp(&rec.right)));

    // Clouds overlap once their gap falls below twice their summed widths.
    let overlap = (0..=cross).find(|&i| gap[i] <= 2.0 * widths[i]).unwrap_or(cross);
    if overlap < fit_points || fit_points < 2 {
        return;
    }
    let window = overlap - fit_points..overlap;
    let t = &rec.times[window.clone()];
    let fl = LinearFit::least_squares(t, &rec.left[window.clone()]);
    let fr = LinearFit::least_squares(t, &rec.right[window]);
    rec.fit_left = Some(fl);
    rec.fit_right = Some(fr);
    let span = t_enc - t[0];
    let dev = (0..rec.times.len())
        .filter(|&i| rec.times[i] > t_enc && rec.times[i] <= t_enc + span)
        .map(|i| (rec.left[i] - fl.at(rec.times[i])).abs().max((rec.right[i] - fr.at(rec.times[i])).abs()))
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
    rec.post_fit_deviation = dev;
}
