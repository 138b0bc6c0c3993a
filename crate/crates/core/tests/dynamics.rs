use atomchip::analysis::{find_minimum, MinimumOptions, ProfileOptions};
use atomchip::constants::K_B;
use atomchip::dynamics::*;
use atomchip::library::make_elongated_z;
use atomchip::library::scenarios::*;
use atomchip::units::gauss_to_tesla;
use atomchip::{species_rb87, Axis, Layout, Schedule, Vec3};

const WALL: f64 = 3.2e-3;

fn released_range() -> ProfileOptions {
    ProfileOptions::new(-3.45e-3, 3.45e-3, 691)
}

fn collider_setup() -> (Layout, Schedule, f64) {
    let l = make_conveyor(&ConveyorParams::default()).unwrap();
    let (s, release) = make_collider_schedule(&ColliderTiming::default()).unwrap();
    (l, s, release)
}

fn symmetric_pair() -> [CloudState; 2] {
    [CloudState::point("left", -WALL, 0.0), CloudState::point("right", WALL, 0.0)]
}

fn harmonic(k: f64) -> PotentialCurve1D {
    let h = 1e-5;
    let u = (0..=400).map(|i| 0.5 * k * (-2e-3 + h * i as f64).powi(2)).collect();
    PotentialCurve1D::from_samples(Axis::X, -2e-3, h, u, 0.0).unwrap()
}

#[test]
fn elongated_z_potential_is_box_like() {
    let rb = species_rb87();
    let z = make_elongated_z(1.0, gauss_to_tesla(24.0)).unwrap();
    let c = potential_1d(&z, None, 0.0, Axis::X, &ProfileOptions::new(-3.45e-3, 3.45e-3, 139), &rb).unwrap();
    let (_, u_min) = c.min_sample();
    let wall = c.u[0].min(*c.u.last().unwrap()) - u_min;
    let interior = c
        .x
        .iter()
        .zip(&c.u)
        .filter(|(x, _)| x.abs() <= 2.5e-3)
        .map(|(_, u)| u - u_min)
        .fold(0.0, f64::max);
    assert!(interior < 0.1 * wall, "{interior:e} vs wall {wall:e}");
}

#[test]
fn bias_only_potential_is_flat() {
    let rb = species_rb87();
    let l = Layout::bias_only(Vec3::new(0.0, 0.0, 1e-4));
    let c = potential_1d(&l, None, 0.0, Axis::X, &ProfileOptions::new(-1e-3, 1e-3, 21).with_seed(Vec3::zeros()), &rb)
        .unwrap();
    assert!(c.u.iter().all(|&u| u == c.u[0]));
}

#[test]
fn raised_hold_wire_pins_a_well() {
    let rb = species_rb87();
    let p = ConveyorParams::default();
    let l = make_conveyor(&p).unwrap();
    let near_hold = |h2: f64, m1: f64, m2: f64| {
        let s = Schedule::constant(1e-3, &[(CH_M1, m1), (CH_M2, m2), (CH_H1, 0.0), (CH_H2, h2)]).unwrap();
        potential_1d(&l, Some(&s), 0.0, Axis::X, &released_range(), &rb)
            .unwrap()
            .local_minima()
            .into_iter()
            .find(|x| (x - p.hold_position).abs() < 10e-6)
    };
    let phases = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
    let pinned: Vec<f64> = phases.iter().map(|&(a, b)| near_hold(1.0, a, b).expect("held well")).collect();
    let spread = pinned.iter().fold(f64::MIN, |a, &b| a.max(b)) - pinned.iter().fold(f64::MAX, |a, &b| a.min(b));
    assert!(spread < 10e-6, "{pinned:?}");
    assert!(phases.iter().any(|&(a, b)| near_hold(0.0, a, b).is_none()));
}

fn scan() -> ProfileOptions {
    ProfileOptions::new(-2e-3, 2e-3, 201)
}

#[test]
fn one_cycle_advances_one_lattice_period() {
    let p = ConveyorParams::default();
    let l = make_conveyor(&p).unwrap();
    let s = make_conveyor_schedule(5e-3, 1).unwrap();
    let run = conveyor_transport(&l, &s, &species_rb87(), &ConveyorOptions::new(Axis::X, scan(), 0.5e-3)).unwrap();
    assert!(run.events.is_empty(), "{:?}", run.events);
    assert!(run.wells.len() >= 4);
    for w in &run.wells {
        let d = w.displacement(Axis::X);
        assert!((d - p.lattice_period()).abs() < 2e-6, "well {} moved {d:e}", w.id);
    }
    // Periodicity: each well ends where its right neighbour started.
    let mut wells = run.wells.clone();
    wells.sort_by(|a, b| a.first().point[0].total_cmp(&b.first().point[0]));
    for pair in wells.windows(2) {
        let end = pair[0].last().point;
        let start = pair[1].first().point;
        assert!((Vec3::from(end) - Vec3::from(start)).norm() < 0.1e-6);
    }
    let back = make_conveyor_schedule(5e-3, -1).unwrap();
    let run = conveyor_transport(&l, &back, &species_rb87(), &ConveyorOptions::new(Axis::X, scan(), 0.5e-3)).unwrap();
    assert!(run.wells.iter().all(|w| (w.displacement(Axis::X) + p.lattice_period()).abs() < 2e-6));
}

#[test]
fn frozen_schedule_keeps_wells_still() {
    let l = make_conveyor(&ConveyorParams::default()).unwrap();
    let s = Schedule::constant(0.1, &[(CH_M1, 1.0), (CH_M2, 0.0), (CH_H1, 0.0), (CH_H2, 0.0)]).unwrap();
    let run = conveyor_transport(&l, &s, &species_rb87(), &ConveyorOptions::new(Axis::X, scan(), 1e-3)).unwrap();
    assert!(!run.wells.is_empty());
    for w in &run.wells {
        let x0 = Vec3::from(w.first().point);
        assert!(w.samples.iter().all(|s| (Vec3::from(s.point) - x0).norm() < 0.1e-6));
        assert_eq!(w.samples.len(), run.times.len());
    }
}

#[test]
fn reversed_schedule_retraces_the_wells() {
    let l = make_conveyor(&ConveyorParams::default()).unwrap();
    let s = make_conveyor_schedule(5e-3, 1).unwrap();
    let opts = ConveyorOptions::new(Axis::X, scan(), 0.5e-3);
    let fwd = conveyor_transport(&l, &s, &species_rb87(), &opts).unwrap();
    let rev = conveyor_transport(&l, &s.reversed().unwrap(), &species_rb87(), &opts).unwrap();
    let n = fwd.times.len() - 1;
    let mut matched = 0;
    for r in &rev.wells {
        let Some(f) = fwd
            .wells
            .iter()
            .find(|f| (Vec3::from(f.last().point) - Vec3::from(r.first().point)).norm() < 0.1e-6)
        else {
            continue;
        };
        matched += 1;
        for (k, sample) in r.samples.iter().enumerate() {
            let mirror = Vec3::from(f.samples[n - k].point);
            assert!((Vec3::from(sample.point) - mirror).norm() < 0.1e-6, "step {k}: {:e} {:?} {:?}", (Vec3::from(sample.point) - mirror).norm(), sample.point, mirror);
        }
    }
    assert!(matched >= 3);
}

#[test]
fn potential_is_continuous_across_ramp_boundaries() {
    let rb = species_rb87();
    let l = make_conveyor(&ConveyorParams::default()).unwrap();
    let s = make_conveyor_schedule(5e-3, 1).unwrap();
    let range = scan();
    for &tb in s.breakpoints().iter().filter(|&&t| t > 0.0 && t < s.duration()) {
        let a = potential_1d(&l, Some(&s), tb - 1e-7, Axis::X, &range, &rb).unwrap();
        let b = potential_1d(&l, Some(&s), tb + 1e-7, Axis::X, &range, &rb).unwrap();
        let (_, lo) = a.min_sample();
        let depth = a.u.iter().fold(f64::MIN, |m, &u| m.max(u)) - lo;
        let jump = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(jump < 1e-3 * depth, "t = {tb}: {jump:e} vs {depth:e}");
    }
}

#[test]
fn symmetric_release_meets_at_centre() {
    let (l, s, release) = collider_setup();
    let opts = ColliderOptions::new(released_range(), 1e-6, 60e-3, 0.5e-3);
    let r = collider_run(&l, &s, release, symmetric_pair(), &species_rb87(), &opts).unwrap();
    for (a, b) in r.left.iter().zip(&r.right) {
        assert!((a + b).abs() < 1e-6);
    }
    assert!(r.encounter_x.unwrap().abs() < 1e-6);
    let t_enc = r.encounter_t.unwrap();
    assert!(t_enc > 10e-3 && t_enc < 60e-3);

    // The last ten points before the overlap lie on a straight line.
    let fit = r.fit_left.unwrap();
    let first = r.times.iter().position(|&t| t > t_enc).unwrap() - 10;
    let window = first..first + 10;
    let travelled = r.left[window.end - 1] - r.left[window.start];
    let worst = window.map(|i| (r.left[i] - fit.at(r.times[i])).abs()).fold(0.0, f64::max);
    assert!(worst < 0.01 * travelled.abs(), "{worst:e} over {travelled:e}");
    // Clouds pass through each other untouched.
    assert!(r.post_fit_deviation.unwrap() < 0.01 * travelled.abs());
    assert!(r.to_csv().starts_with("t_ms,x_left_um,x_right_um\n"));
    let json = r.summary_json();
    assert!(json["encounter_t_ms"].as_f64().is_some());
    assert!(json["fit_left"]["slope"].as_f64().unwrap() > 0.0);
}

#[test]
fn energy_is_conserved_after_release() {
    let (l, s, release) = collider_setup();
    let rb = species_rb87();
    let opts = ColliderOptions::new(released_range(), 1e-6, 50e-3, 0.1e-3);
    let r = collider_run(&l, &s, release, symmetric_pair(), &rb, &opts).unwrap();
    let curve = potential_1d(&l, Some(&s), release, Axis::X, &released_range(), &rb).unwrap();
    let (_, u_min) = curve.min_sample();
    for c in 0..2 {
        let e0 = r.energy[0][c];
        let drift = r.energy.iter().map(|e| (e[c] - e0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-6 * (e0 - u_min), "cloud {c}: {:e}", drift / (e0 - u_min));
    }
}

#[test]
fn released_cloud_returns_to_its_wall() {
    let (l, s, release) = collider_setup();
    let opts = ColliderOptions::new(released_range(), 1e-6, 100e-3, 0.05e-3);
    let r = collider_run(&l, &s, release, symmetric_pair(), &species_rb87(), &opts).unwrap();
    let far = r.left.iter().fold(f64::MIN, |a, &b| a.max(b));
    assert!((far - WALL).abs() < 1e-6, "{far:e}");
    let turn = r.left.iter().position(|&x| x == far).unwrap();
    let back = r.left[turn..].iter().fold(f64::MAX, |a, &b| a.min(b));
    assert!(back > -WALL - 1e-6);
}

#[test]
fn verlet_converges_at_second_order() {
    let (l, s, release) = collider_setup();
    let rb = species_rb87();
    let end = |dt: f64| {
        let opts = ColliderOptions::new(released_range(), dt, 10e-3, 1e-3);
        let r = collider_run(&l, &s, release, symmetric_pair(), &rb, &opts).unwrap();
        *r.left.last().unwrap()
    };
    let (a, b, c) = (end(4e-6), end(2e-6), end(1e-6));
    let (d1, d2) = ((a - b).abs(), (b - c).abs());
    assert!(d2 < 1e-9, "{d2:e}");
    assert!((d1 / d2).log2() >= 1.9, "order {}", (d1 / d2).log2());
}

#[test]
fn seeded_ensembles_rerun_identically() {
    let (l, s, release) = collider_setup();
    let rb = species_rb87();
    let curve = potential_1d(&l, Some(&s), release, Axis::X, &released_range(), &rb).unwrap();
    let clouds = || {
        [
            CloudState::thermal("left", &curve, -3.3e-3, -3.1e-3, 5e-6, 200, 7, &rb).unwrap(),
            CloudState::thermal("right", &curve, 3.1e-3, 3.3e-3, 5e-6, 200, 8, &rb).unwrap(),
        ]
    };
    let mut opts = ColliderOptions::new(released_range(), 2e-6, 20e-3, 0.5e-3);
    opts.seed = Some(7);
    let a = collider_run(&l, &s, release, clouds(), &rb, &opts).unwrap();
    let b = collider_run(&l, &s, release, clouds(), &rb, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.summary_json()["seed"], 7);
}

#[test]
fn coarse_steps_are_rejected() {
    let (l, s, release) = collider_setup();
    let opts = ColliderOptions::new(released_range(), 2e-3, 50e-3, 2e-3);
    let e = collider_run(&l, &s, release, symmetric_pair(), &species_rb87(), &opts).unwrap_err();
    assert!(matches!(e, DynamicsError::StepTooLarge { .. }), "{e}");
}

#[test]
fn fast_cloud_escapes() {
    let (l, s, release) = collider_setup();
    let clouds = [CloudState::point("left", -WALL, 0.0), CloudState::point("right", WALL, 2.0)];
    let opts = ColliderOptions::new(released_range(), 1e-6, 10e-3, 0.1e-3);
    let e = collider_run(&l, &s, release, clouds, &species_rb87(), &opts).unwrap_err();
    assert!(matches!(e, DynamicsError::EscapedDomain { .. }), "{e}");
}

#[test]
fn release_past_schedule_end_is_invalid() {
    let (l, s, _) = collider_setup();
    let opts = ColliderOptions::new(released_range(), 1e-6, 10e-3, 0.1e-3);
    let e = collider_run(&l, &s, s.duration(), symmetric_pair(), &species_rb87(), &opts).unwrap_err();
    assert!(e.is_validation());
}

#[test]
fn thermal_ensemble_centre_and_truncation() {
    let rb = species_rb87();
    let k = rb.mass * (2.0 * std::f64::consts::PI * 10.0).powi(2);
    let curve = harmonic(k);
    let t = 1e-6;
    let n = 20_000;
    let cloud = CloudState::thermal("c", &curve, -1.9e-3, 1.9e-3, t, n, 42, &rb).unwrap();
    let sigma = (K_B * t / k).sqrt();
    let (cm, _) = cloud.centre_of_mass();
    assert!(cloud.x.abs() < 1e-9);
    assert!((cm - cloud.x).abs() < 3.0 * sigma / (n as f64).sqrt());
    assert!((cloud.rms_width() - sigma).abs() < 0.03 * sigma);

    let same = rf_truncate(&cloud, &curve, &rb, f64::INFINITY).unwrap();
    assert_eq!(same.ensemble, cloud.ensemble);
    assert_eq!(rf_truncate(&cloud, &curve, &rb, 0.0).unwrap_err(), DynamicsError::EmptyCloud);

    // Two quadratic degrees of freedom: P(E < kT) = 1 − 1/e.
    let kept = rf_truncate(&cloud, &curve, &rb, K_B * t).unwrap().len() as f64 / n as f64;
    let p = 1.0 - (-1.0f64).exp();
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    assert!((kept - p).abs() < 3.0 * sd, "{kept} vs {p}");
    assert!(rf_truncate(&CloudState::point("p", 0.0, 0.0), &curve, &rb, 1.0).unwrap_err().is_validation());
}

#[test]
fn particle_mode_agrees_with_adiabatic_curve() {
    // 3D motion along a weak axis follows the 1D curve of slice minima.
    let rb = species_rb87();
    let z = make_elongated_z(1.0, gauss_to_tesla(24.0)).unwrap();
    let curve = potential_1d(&z, None, 0.0, Axis::X, &ProfileOptions::new(-3.45e-3, 3.45e-3, 691), &rb).unwrap();
    let x0 = 3.0e-3;
    let i = ((x0 - curve.start()) / curve.spacing()).round() as usize;
    let m = z.unit_multipliers();
    let seed = Vec3::new(curve.x[i], 0.0, curve.height[i]);
    let slice = find_minimum(&z, seed, &m, &MinimumOptions::transverse_to(Axis::X)).unwrap();
    let start = ParticleState {
        t: 0.0,
        r: slice.point,
        v: Vec3::zeros(),
    };
    let path = integrate_particle(&z, &m, &rb, start, 2e-7, 5000).unwrap();
    let end = path.last().unwrap();
    let force = curve.force(curve.x[i]) / rb.mass;
    let expect = curve.x[i] + 0.5 * force * end.t * end.t;
    assert!((end.r.x - expect).abs() < 0.1 * (expect - curve.x[i]).abs(), "{} vs {expect}", end.r.x);
}
