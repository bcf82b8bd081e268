use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Forced impact oscillator with dry friction: simulation, stroboscopic-map
/// portraits, periodic orbits and continuation.
#[derive(Parser)]
#[command(name = "vibro", version)]
struct Cli {
    /// Worker threads for grid evaluation (default: available processors).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write its event log and stroboscopic states.
    Simulate(SimulateArgs),
    /// Evaluate the period map on a grid of initial states.
    Portrait(PortraitArgs),
    /// Follow a periodic orbit in the friction parameter f.
    Continue(ContinueArgs),
    /// Locate a periodic orbit by Newton iteration from a guess.
    Periodic(PeriodicArgs),
    /// Compare a trajectory with its Hamiltonian lift.
    LiftCheck(LiftArgs),
    /// Test forward invariance of the contracting region.
    RegionsInvariance(InvarianceArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Override the friction coefficient f.
    #[arg(long)]
    f: Option<f64>,
    /// Override the forcing amplitude F.
    #[arg(long = "F")]
    big_f: Option<f64>,
    /// Override the forcing frequency.
    #[arg(long)]
    omega: Option<f64>,
}

#[derive(Args)]
struct StateArgs {
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    /// Initial phase time.
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    state: StateArgs,
    /// Number of forcing periods.
    #[arg(long)]
    periods: Option<usize>,
    /// Output prefix: writes PREFIX.csv, PREFIX.events.json and, with
    /// --samples, PREFIX.samples.csv. Without it the stroboscopic CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dense samples per period for PREFIX.samples.csv.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PortraitMode {
    /// Stroboscopic orbit points of every cell center.
    Cloud,
    /// One-period determinant and area-preserving/contracting split.
    Regions,
    /// Long-run fate of every cell.
    Verdicts,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nv: Option<usize>,
    /// Map iterations per cell.
    #[arg(long)]
    iterations: Option<usize>,
    /// Leading iterations dropped from clouds.
    #[arg(long)]
    transient: Option<usize>,
    #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["LO", "HI"])]
    x_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["LO", "HI"])]
    v_range: Option<Vec<f64>>,
}

#[derive(Args)]
struct PortraitArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value = "regions")]
    mode: PortraitMode,
    /// CSV output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a binary tile (det for regions, verdict code for verdicts).
    #[arg(long)]
    tile: Option<PathBuf>,
}

#[derive(Args)]
struct ContinueArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    state: StateArgs,
    /// Period multiple of the orbit.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    f_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    f_max: Option<f64>,
    /// Continue towards decreasing f.
    #[arg(long)]
    down: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PeriodicArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct LiftArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    periods: Option<usize>,
    /// Comparison sample count.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args)]
struct InvarianceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Portrait(a) => commands::portrait(a),
        Command::Continue(a) => commands::continuation(a),
        Command::Periodic(a) => commands::periodic(a),
        Command::LiftCheck(a) => commands::lift_check(a),
        Command::RegionsInvariance(a) => commands::regions_invariance(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
