use std::fs;
use std::path::Path;

use atomchip::analysis::{
    characterize, find_minimum, longitudinal_profile, DepthBox, MinimumOptions, ProfileOptions,
};
use atomchip::dynamics::{
    collider_run, conveyor_transport, potential_1d, CloudState, ColliderOptions, ConveyorOptions,
};
use atomchip::field::{grid_eval, GridSpec};
use atomchip::format::{serialize_layout, serialize_schedule};
use atomchip::library::scenarios::{make_collider_schedule, make_conveyor, make_conveyor_schedule, ColliderTiming, ConveyorParams};
use atomchip::library::{
    calibrate_four_wire, conductor_limits, make_crossing_trap, make_elongated_z_with, make_four_wire, make_h_trap,
    make_rotation_layout, make_side_guide, optimize_spacing, CrossGeometry, GuideSpec, RotationState, ZGeometry,
};
use atomchip::species::species_by_name;
use atomchip::units::{
    gauss_per_cm2_to_si, gauss_to_tesla, m_to_um, ms_to_s, si_to_gauss_per_cm, si_to_gauss_per_cm2, tesla_to_gauss,
};
use atomchip::{AtomSpecies, Axis, Error, Layout, Schedule};
use serde_json::json;

use crate::io::{hash, invalid, load_layout, load_schedule, multipliers, pretty, sidecar, um3, Input, Output};
use crate::{
    BuildArgs, Builder, CollideArgs, Command, FieldArgs, GuideAxis, LimitsArgs, OptimizeArgs, Plane, ProfileArgs,
    ScheduleArgs, TrapArgs,
};

pub fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Field(a) => field(a),
        Command::Profile(a) => profile(a),
        Command::Trap(a) => trap(a),
        Command::Build(a) => build(a),
        Command::Optimize(a) => optimize(a),
        Command::Limits(a) => limits(a),
        Command::Schedule(a) => schedule(a),
        Command::Collide(a) => collide(a),
    }
}

fn species(name: &str) -> Result<AtomSpecies, Error> {
    species_by_name(name).ok_or_else(|| invalid(format!("unknown species {name:?}")))
}

fn field(a: FieldArgs) -> Result<(), Error> {
    let layout = load_layout(&a.layout)?;
    let m = multipliers(&layout.value, &a.common.set)?;
    let (lo, hi) = (um3(a.min), um3(a.max));
    let spec = match a.plane {
        None => GridSpec::volume(lo, hi, a.counts),
        Some(p) => {
            let normal = match p {
                Plane::Xy => Axis::Z,
                Plane::Xz => Axis::Y,
                Plane::Yz => Axis::X,
            };
            GridSpec::plane(normal, a.at * 1e-6, lo, hi, a.counts)
        }
    };
    let grid = grid_eval(&layout.value, &spec, &m, a.components)?;
    let mut out = Output::new(&a.common.out)?;
    out.write("grid.csv", &grid.to_csv())?;
    out.write_json("grid.json", &grid.to_json())?;
    out.finish("field", json!({ "layout_sha256": layout.sha256 }), None)?;
    println!("singular points: {}", grid.singular_count);
    if let Some((_, p, b)) = grid.argmin() {
        println!(
            "grid minimum: {:.4} G at ({:.4}, {:.4}, {:.4}) um",
            tesla_to_gauss(b),
            m_to_um(p.x),
            m_to_um(p.y),
            m_to_um(p.z)
        );
    }
    Ok(())
}

fn profile(a: ProfileArgs) -> Result<(), Error> {
    let layout = load_layout(&a.layout)?;
    let m = multipliers(&layout.value, &a.common.set)?;
    let axis = match a.axis {
        GuideAxis::X => Axis::X,
        GuideAxis::Y => Axis::Y,
    };
    let mut opts = ProfileOptions::new(a.range.0 * 1e-6, a.range.1 * 1e-6, a.samples);
    if let Some(s) = a.seed {
        opts = opts.with_seed(um3(s));
    }
    let p = longitudinal_profile(&layout.value, axis, &opts, &m)?;
    let mut out = Output::new(&a.common.out)?;
    out.write("profile.csv", &p.to_csv())?;
    out.finish("profile", json!({ "layout_sha256": layout.sha256 }), None)?;
    if let Some(q) = &p.quad {
        println!(
            "guide: z0 = {:.4} um, gradient = {:.1} G/cm",
            m_to_um(q.z0),
            si_to_gauss_per_cm(q.b)
        );
    }
    Ok(())
}

fn trap(a: TrapArgs) -> Result<(), Error> {
    let layout = load_layout(&a.layout)?;
    let sp = species(&a.species)?;
    let m = multipliers(&layout.value, &a.common.set)?;
    let opts = MinimumOptions {
        domain_half_width: a.reach * 1e-6,
        ..MinimumOptions::default()
    };
    let min = find_minimum(&layout.value, um3(a.seed), &m, &opts)?;
    let depth = a.depth_box.map(|h| DepthBox::around(min.point, h * 1e-6));
    let mut report = characterize(&layout.value, min.point, &sp, &m, depth.as_ref())?;
    if let Some(k) = a.curvature_override {
        report = report.with_curvatures(k.map(gauss_per_cm2_to_si), &sp);
    }
    let mut v = report.to_json();
    v["iterations"] = json!(min.iterations);
    let mut out = Output::new(&a.common.out)?;
    out.write_json("trap.json", &v)?;
    out.finish("trap", json!({ "layout_sha256": layout.sha256 }), None)?;
    print!("{}", pretty(&v));
    Ok(())
}

fn build(a: BuildArgs) -> Result<(), Error> {
    let g = gauss_to_tesla;
    let layout = match a.builder {
        Builder::SideGuide { i0, b0y, z0 } => {
            let spec = match (b0y, z0) {
                (Some(b), _) => GuideSpec::Bias(g(b)),
                (None, Some(z)) => GuideSpec::Height(z * 1e-6),
                (None, None) => unreachable!("clap requires one of them"),
            };
            make_side_guide(i0, spec)?
        }
        Builder::Crossing { i0, i1, b0y, b0x } => make_crossing_trap(i0, i1, g(b0y), g(b0x))?.layout,
        Builder::HTrap { i0, i1, i2, d, b0y, b0x } => make_h_trap(i0, i1, i2, d * 1e-6, g(b0y), g(b0x))?,
        Builder::FourWire {
            i0,
            i1,
            i2,
            i3,
            b0y,
            b0x,
            calibrate_bmin,
        } => match (calibrate_bmin, i2) {
            (Some(target), _) => {
                let c = calibrate_four_wire(i0, i1, i3, g(b0y), g(b0x), g(target))?;
                eprintln!("calibrated I2 = {:.6} A", c.i2);
                c.layout
            }
            (None, Some(i2)) => make_four_wire(i0, i1, i2, i3, g(b0y), g(b0x))?,
            (None, None) => unreachable!("clap requires one of them"),
        },
        Builder::ElongatedZ { i0, b0y, central_length } => {
            let geometry = ZGeometry {
                central_length: central_length * 1e-3,
                ..ZGeometry::default()
            };
            make_elongated_z_with(i0, g(b0y), geometry)?
        }
        Builder::Rotation { angle, bend } => {
            let geometry = match bend {
                None => CrossGeometry::Straight,
                Some(b) => CrossGeometry::Bent { bend: b * 1e-6 },
            };
            make_rotation_layout(&RotationState::at(angle), geometry)?
        }
        Builder::Conveyor { period, cells, b0y } => {
            let mut p = ConveyorParams::default();
            if let Some(v) = period {
                p.period = v * 1e-6;
            }
            if let Some(v) = cells {
                p.cells = v;
            }
            if let Some(v) = b0y {
                p.b0y = g(v);
            }
            make_conveyor(&p)?
        }
    };
    let text = serialize_layout(&layout);
    match a.output {
        None => print!("{text}"),
        Some(path) => {
            write_file(&path, &text)?;
            let meta = sidecar("build", json!({ "layout_sha256": hash(&text) }), None, &[path.display().to_string()]);
            write_file(&path.with_extension("meta.json"), &pretty(&meta))?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn optimize(a: OptimizeArgs) -> Result<(), Error> {
    let o = optimize_spacing(a.i0, a.i1, gauss_to_tesla(a.b0y))?;
    let v = json!({
        "a_um": m_to_um(o.a),
        "z0_um": m_to_um(o.z0),
        "a_over_z0": o.a / o.z0,
        "curvature_g_per_cm2": si_to_gauss_per_cm2(o.curvature),
        "evaluations": o.evaluations,
    });
    print!("{}", pretty(&v));
    Ok(())
}

fn limits(a: LimitsArgs) -> Result<(), Error> {
    // 1 µΩ·cm = 1e-8 Ω·m, 1 A/cm² = 1e4 A/m².
    let l = conductor_limits(a.width * 1e-6, a.height * 1e-6, a.resistivity * 1e-8, a.current, a.j_max * 1e4)?;
    print!("{}", pretty(&l.report()));
    Ok(())
}

fn text_input<T>(value: T, text: &str) -> Input<T> {
    Input {
        value,
        sha256: hash(text),
    }
}

fn schedule(a: ScheduleArgs) -> Result<(), Error> {
    let sp = species(&a.species)?;
    let mut out = Output::new(&a.out)?;
    let layout = match &a.layout {
        Some(p) => load_layout(p)?,
        None => {
            let l = make_conveyor(&ConveyorParams::default())?;
            let text = serialize_layout(&l);
            out.write("layout.json", &text)?;
            text_input(l, &text)
        }
    };
    let schedule: Input<Schedule> = match &a.schedule {
        Some(p) => load_schedule(p)?,
        None => {
            let s = make_conveyor_schedule(ms_to_s(a.quarter), a.cycles)?;
            let text = serialize_schedule(&s);
            out.write("schedule.json", &text)?;
            text_input(s, &text)
        }
    };
    let scan = ProfileOptions::new(a.scan.0 * 1e-6, a.scan.1 * 1e-6, a.samples);
    let mut opts = ConveyorOptions::new(Axis::X, scan, ms_to_s(a.dt));
    opts.duration = a.duration.map(ms_to_s);
    let run = conveyor_transport(&layout.value, &schedule.value, &sp, &opts)?;

    let mut csv = String::from("t_ms,well,x_um,y_um,z_um,Bmin_G\n");
    for w in &run.wells {
        for s in &w.samples {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.t * 1e3,
                w.id,
                m_to_um(s.point[0]),
                m_to_um(s.point[1]),
                m_to_um(s.point[2]),
                tesla_to_gauss(s.b_min)
            ));
        }
    }
    let wells: Vec<_> = run
        .wells
        .iter()
        .map(|w| {
            json!({
                "id": w.id,
                "start_x_um": m_to_um(w.first().point[0]),
                "end_x_um": m_to_um(w.last().point[0]),
                "displacement_um": m_to_um(w.displacement(Axis::X)),
                "adiabaticity": w.adiabaticity,
            })
        })
        .collect();
    let summary = json!({ "wells": wells, "events": run.events, "steps": run.times.len() - 1 });
    out.write("wells.csv", &csv)?;
    out.write_json("wells.json", &summary)?;
    out.finish(
        "schedule",
        json!({ "layout_sha256": layout.sha256, "schedule_sha256": schedule.sha256 }),
        None,
    )?;
    print!("{}", pretty(&summary));
    Ok(())
}

/// Local minimum of `curve` closest to `x`.
fn nearest_well(curve: &atomchip::dynamics::PotentialCurve1D, x: f64) -> Result<f64, Error> {
    curve
        .local_minima()
        .into_iter()
        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
        .ok_or_else(|| invalid("no well before the release to place the clouds in"))
}

fn collide(a: CollideArgs) -> Result<(), Error> {
    let sp = species(&a.species)?;
    let mut out = Output::new(&a.out)?;
    let range = ProfileOptions::new(a.range.0 * 1e-6, a.range.1 * 1e-6, a.samples);
    let duration = ms_to_s(a.duration);
    let (layout, schedule, release): (Input<Layout>, Input<Schedule>, f64) = match &a.layout {
        Some(p) => {
            let s = a.schedule.as_ref().expect("clap enforces --schedule");
            (load_layout(p)?, load_schedule(s)?, ms_to_s(a.release.expect("clap enforces --release")))
        }
        None => {
            let l = make_conveyor(&ConveyorParams::default())?;
            let timing = ColliderTiming {
                after_release: duration,
                ..ColliderTiming::default()
            };
            let (s, release) = make_collider_schedule(&timing)?;
            let (lt, st) = (serialize_layout(&l), serialize_schedule(&s));
            out.write("layout.json", &lt)?;
            out.write("schedule.json", &st)?;
            (text_input(l, &lt), text_input(s, &st), release)
        }
    };
    // Clouds are prepared in the potential just before the release.
    let before = release - 1e-9;
    let held = potential_1d(&layout.value, Some(&schedule.value), before.max(0.0), Axis::X, &range, &sp)?;
    let (xl, xr) = match a.positions {
        Some((l, r)) => (l * 1e-6, r * 1e-6),
        None => {
            let hold = ConveyorParams::default().hold_position;
            (nearest_well(&held, -hold)?, nearest_well(&held, hold)?)
        }
    };
    let cloud = |label: &str, x: f64, seed: u64| -> Result<CloudState, Error> {
        if a.particles == 0 {
            return Ok(CloudState::point(label, x, 0.0));
        }
        let w = a.window * 1e-6;
        let (lo, hi) = ((x - w).max(held.start()), (x + w).min(held.end()));
        Ok(CloudState::thermal(label, &held, lo, hi, a.temperature * 1e-6, a.particles, seed, &sp)?)
    };
    let clouds = [cloud("left", xl, a.seed)?, cloud("right", xr, a.seed.wrapping_add(1))?];
    let mut opts = ColliderOptions::new(range, ms_to_s(a.dt), duration, ms_to_s(a.record));
    opts.seed = Some(a.seed);
    let rec = collider_run(&layout.value, &schedule.value, release, clouds, &sp, &opts)?;
    let mut summary = rec.summary_json();
    summary["release_ms"] = json!(release * 1e3);
    summary["release_positions_um"] = json!([m_to_um(xl), m_to_um(xr)]);
    summary["particles"] = json!(a.particles);
    out.write("trajectory.csv", &rec.to_csv())?;
    out.write_json("summary.json", &summary)?;
    out.finish(
        "collide",
        json!({ "layout_sha256": layout.sha256, "schedule_sha256": schedule.sha256 }),
        Some(a.seed),
    )?;
    print!("{}", pretty(&summary));
    Ok(())
}
