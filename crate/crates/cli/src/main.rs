//! Command-line front end: builds layouts, samples fields and profiles,
//! characterises traps, and runs conveyor and collider schedules.
//!
//! Lengths are given in µm, fields in G, currents in A and times in ms.
//! Exit codes: 1 for unreadable input or bad flags, 2 for input that
//! violates a model constraint, 3 when the computation itself fails.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::{parse_counts, parse_pair, parse_setting, parse_vec3};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "ATOMCHIP_THREADS";

#[derive(Parser)]
#[command(name = "atomchip", version, about = "Atom chip microtrap design and analysis")]
#[command(after_help = "Set ATOMCHIP_THREADS to fix the number of worker threads.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample |B| on a plane or volume grid (grid.csv, grid.json).
    Field(FieldArgs),
    /// Transverse minima along a guide (profile.csv).
    Profile(ProfileArgs),
    /// Locate and characterise a trap minimum (trap.json).
    Trap(TrapArgs),
    /// Write a layout file from one of the standard builders.
    Build(BuildArgs),
    /// Crossing-wire half-spacing that maximises the axial curvature.
    Optimize(OptimizeArgs),
    /// Resistance, dissipation and current density of a conductor.
    Limits(LimitsArgs),
    /// Track conveyor wells through a schedule (wells.csv, wells.json).
    Schedule(ScheduleArgs),
    /// Release two clouds into the guide and follow them (trajectory.csv, summary.json).
    Collide(CollideArgs),
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Channel multiplier, repeatable.
    #[arg(long = "set", value_name = "CHANNEL=VALUE", value_parser = parse_setting)]
    set: Vec<(String, f64)>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Plane {
    Xy,
    Xz,
    Yz,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FieldArgs {
    /// Layout file.
    #[arg(long)]
    layout: PathBuf,
    /// Lower grid corner, µm.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    min: [f64; 3],
    /// Upper grid corner, µm.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    max: [f64; 3],
    /// Samples along x, y, z.
    #[arg(long, value_parser = parse_counts, default_value = "51,51,51")]
    counts: [usize; 3],
    /// Sample one plane instead of the volume.
    #[arg(long, value_enum)]
    plane: Option<Plane>,
    /// Coordinate of the plane along its normal, µm.
    #[arg(long, default_value_t = 0.0)]
    at: f64,
    /// Also write the field components.
    #[arg(long)]
    components: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum GuideAxis {
    X,
    Y,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ProfileArgs {
    #[arg(long)]
    layout: PathBuf,
    #[arg(long, value_enum, default_value = "x")]
    axis: GuideAxis,
    /// Range along the guide, µm, as lo:hi.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    range: (f64, f64),
    #[arg(long, default_value_t = 101)]
    samples: usize,
    /// Transverse seed for the first slice, µm; defaults to the guide zero.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    seed: Option<[f64; 3]>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct TrapArgs {
    #[arg(long)]
    layout: PathBuf,
    /// Starting point of the search, µm.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    seed: [f64; 3],
    #[arg(long, default_value = "rb87")]
    species: String,
    /// Half-width of the cube whose faces bound the depth estimate, µm.
    #[arg(long)]
    depth_box: Option<f64>,
    /// Replace the computed curvatures (G/cm²) before deriving frequencies.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    curvature_override: Option<[f64; 3]>,
    /// Search box half-width around the seed, µm.
    #[arg(long, default_value_t = 10_000.0)]
    reach: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BuildArgs {
    #[command(subcommand)]
    builder: Builder,
    /// Layout file to write; printed to standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Builder {
    /// Straight wire along x plus a ŷ bias.
    SideGuide {
        #[arg(long)]
        i0: f64,
        /// Bias, G.
        #[arg(long, allow_negative_numbers = true, conflicts_with = "z0", required_unless_present = "z0")]
        b0y: Option<f64>,
        /// Height of the field zero, µm.
        #[arg(long)]
        z0: Option<f64>,
    },
    /// Guide crossed by one wire along ŷ at x = 0.
    Crossing {
        #[arg(long)]
        i0: f64,
        #[arg(long, allow_negative_numbers = true)]
        i1: f64,
        #[arg(long, allow_negative_numbers = true)]
        b0y: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        b0x: f64,
    },
    /// Guide crossed by two wires at x = ∓d/2.
    HTrap {
        #[arg(long)]
        i0: f64,
        #[arg(long, allow_negative_numbers = true)]
        i1: f64,
        #[arg(long, allow_negative_numbers = true)]
        i2: f64,
        /// Wire spacing, µm.
        #[arg(long)]
        d: f64,
        #[arg(long, allow_negative_numbers = true)]
        b0y: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        b0x: f64,
    },
    /// Guide crossed by I1, I3 at x = ∓z0 and the opposed I2 at x = 0.
    FourWire {
        #[arg(long)]
        i0: f64,
        #[arg(long, allow_negative_numbers = true)]
        i1: f64,
        #[arg(long, allow_negative_numbers = true, required_unless_present = "calibrate_bmin")]
        i2: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        i3: f64,
        #[arg(long, allow_negative_numbers = true)]
        b0y: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        b0x: f64,
        /// Solve for I2 giving this minimum field, G.
        #[arg(long, conflicts_with = "i2")]
        calibrate_bmin: Option<f64>,
    },
    /// Z-shaped guide with a ŷ bias.
    ElongatedZ {
        #[arg(long)]
        i0: f64,
        #[arg(long)]
        b0y: f64,
        /// Length of the central section, mm.
        #[arg(long, default_value_t = 7.0)]
        central_length: f64,
    },
    /// Crossed wire pair at a rotation angle between the 0° and 90° traps.
    Rotation {
        #[arg(long)]
        angle: f64,
        /// Distance from the crossing at which the wires bend, µm; straight wires when absent.
        #[arg(long)]
        bend: Option<f64>,
    },
    /// Z guide with two meanders and two hold wires.
    Conveyor {
        /// Crossing distance of one meander, µm.
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        cells: Option<usize>,
        /// Guide bias B0y, G.
        #[arg(long)]
        b0y: Option<f64>,
    },
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct OptimizeArgs {
    #[arg(long)]
    i0: f64,
    #[arg(long)]
    i1: f64,
    /// G
    #[arg(long)]
    b0y: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LimitsArgs {
    /// µm
    #[arg(long)]
    width: f64,
    /// µm
    #[arg(long)]
    height: f64,
    /// µΩ·cm
    #[arg(long, default_value_t = 2.2)]
    resistivity: f64,
    /// A
    #[arg(long)]
    current: f64,
    /// Highest sustainable current density, A/cm².
    #[arg(long, default_value_t = 4.6e6)]
    j_max: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ScheduleArgs {
    /// Layout file; the bundled conveyor when absent.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Schedule file; otherwise a conveyor schedule from --quarter and --cycles.
    #[arg(long, conflicts_with_all = ["quarter", "cycles"])]
    schedule: Option<PathBuf>,
    /// Length of one cos² ramp, ms.
    #[arg(long, default_value_t = 5.0)]
    quarter: f64,
    /// Conveyor cycles; negative runs backwards.
    #[arg(long, default_value_t = 1)]
    cycles: i64,
    /// Tracking step, ms.
    #[arg(long, default_value_t = 0.5)]
    dt: f64,
    /// Simulated time, ms; the whole schedule when absent.
    #[arg(long)]
    duration: Option<f64>,
    /// Range scanned for wells at t = 0, µm, as lo:hi.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "-2000:2000")]
    scan: (f64, f64),
    #[arg(long, default_value_t = 201)]
    samples: usize,
    #[arg(long, default_value = "rb87")]
    species: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CollideArgs {
    /// Layout file; the bundled conveyor and collider preparation when absent.
    #[arg(long, requires_all = ["schedule", "release", "positions"])]
    layout: Option<PathBuf>,
    #[arg(long, requires = "layout")]
    schedule: Option<PathBuf>,
    /// Release time within the schedule, ms.
    #[arg(long, requires = "layout")]
    release: Option<f64>,
    /// Release positions of the left and right cloud, µm, as left:right;
    /// by default the two hold wells.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    positions: Option<(f64, f64)>,
    /// Potential range after the release, µm, as lo:hi.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "-3450:3450")]
    range: (f64, f64),
    #[arg(long, default_value_t = 691)]
    samples: usize,
    /// Integration step, ms.
    #[arg(long, default_value_t = 0.001)]
    dt: f64,
    /// Time followed after the release, ms.
    #[arg(long, default_value_t = 80.0)]
    duration: f64,
    /// Interval between recorded samples, ms.
    #[arg(long, default_value_t = 0.5)]
    record: f64,
    /// Particles per cloud; 0 follows the centres of mass only.
    #[arg(long, default_value_t = 0)]
    particles: usize,
    /// Cloud temperature, µK.
    #[arg(long, default_value_t = 10.0)]
    temperature: f64,
    /// Half-width of the sampling window around each release position, µm.
    #[arg(long, default_value_t = 100.0)]
    window: f64,
    /// Seed of the ensemble sampling; the right cloud uses seed + 1.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "rb87")]
    species: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
