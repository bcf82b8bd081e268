use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use vibro_core::config::ExperimentConfig;
use vibro_core::export::{
    write_branch_csv, write_cloud_csv, write_portrait_csv, write_regions_csv, write_samples_csv, write_strobe_csv,
    write_tile, write_trajectory_json, StrobeRow,
};
use vibro_core::orbits::lift::lift_check_samples;
use vibro_core::orbits::{continue_in_f, find_periodic, StepPolicy};
use vibro_core::portrait::{
    classify_cells, classify_regions, invariance_check, iterate_cloud, GridSpec, VerdictOptions,
};
use vibro_core::simulator;
use vibro_core::strobemap::phi;
use vibro_core::{Error, PhaseState, ValidatedParams};

use crate::{
    Common, ContinueArgs, GridArgs, InvarianceArgs, LiftArgs, PeriodicArgs, PortraitArgs, PortraitMode, SimulateArgs,
    StateArgs,
};

/// Bad command line or config; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// 2 for usage, config, validation and I/O problems; 3 for numerical failures.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<Usage>().is_some() || cause.downcast_ref::<io::Error>().is_some() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::InvalidParams(_) | Error::ContractViolation(_) | Error::Config(_) | Error::Io(_) | Error::Json(_) => 2,
                _ => 3,
            };
        }
    }
    2
}

struct Loaded {
    config: ExperimentConfig,
    params: ValidatedParams,
}

fn load(common: &Common) -> Result<Loaded> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(f) = common.f {
        config.params.friction = f;
    }
    if let Some(big_f) = common.big_f {
        config.params.forcing = big_f;
    }
    if let Some(w) = common.omega {
        config.params.omega = w;
    }
    let params = config.validated()?;
    Ok(Loaded { config, params })
}

fn initial_state(state: &StateArgs, config: &ExperimentConfig) -> Result<PhaseState> {
    let x = state
        .x0
        .or(config.run.x0)
        .ok_or_else(|| usage("initial position required: pass --x0 or set run.x0"))?;
    let v = state.v0.or(config.run.v0).unwrap_or(0.0);
    let t = state.t0.or(config.run.t0).unwrap_or(0.0);
    Ok(PhaseState::new(x, v, t))
}

fn positive(name: &str, value: Option<usize>) -> Result<usize> {
    match value {
        None => Err(usage(format!("{name} is required"))),
        Some(0) => Err(usage(format!("{name} must be at least 1"))),
        Some(n) => Ok(n),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Opens `path`, or stdout when absent.
fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let Loaded { config, params: p } = load(&args.common)?;
    let periods = positive("--periods", args.periods.or(config.run.periods))?;
    let start = initial_state(&args.state, &config)?;
    if args.samples == Some(0) {
        return Err(usage("--samples must be at least 1"));
    }

    let mut rows = Vec::with_capacity(periods);
    let mut z = (start.x, start.v);
    for n in 1..=periods {
        let m = phi(&p, z, start.t, 1).with_context(|| format!("period {n}"))?;
        z = m.output_xy();
        rows.push(StrobeRow {
            n,
            t: start.t + n as f64 * p.period(),
            x: z.0,
            v: z.1,
            impacts: m.summary.impacts(),
            turnings: m.summary.turnings,
            sticks: m.summary.stick_starts,
            det: m.det.unwrap_or(f64::NAN),
        });
    }

    match &args.out {
        None => write_strobe_csv(output(None)?, &rows)?,
        Some(prefix) => {
            write_strobe_csv(create(&with_suffix(prefix, ".csv"))?, &rows)?;
            let traj = simulator::simulate(&p, start, periods as f64 * p.period())?;
            write_trajectory_json(create(&with_suffix(prefix, ".events.json"))?, &traj)?;
            if let Some(n) = args.samples {
                let samples = traj.sample(p.period() / n as f64);
                write_samples_csv(create(&with_suffix(prefix, ".samples.csv"))?, &samples)?;
            }
        }
    }
    Ok(())
}

fn grid_from(args: &GridArgs, config: &ExperimentConfig, p: &ValidatedParams) -> Result<GridSpec> {
    let mut g = config.grid.unwrap_or_else(|| GridSpec::new((p.l(), p.r()), (-4.0, 4.0), 200, 200));
    if let Some(n) = args.nx {
        g.nx = n;
    }
    if let Some(n) = args.nv {
        g.nv = n;
    }
    if let Some(n) = args.iterations {
        g.iterations = n;
    }
    if let Some(n) = args.transient {
        g.transient = n;
    }
    if let Some(r) = &args.x_range {
        g.x_range = (r[0], r[1]);
    }
    if let Some(r) = &args.v_range {
        g.v_range = (r[0], r[1]);
    }
    g.validate(p)?;
    Ok(g)
}

pub fn portrait(args: PortraitArgs) -> Result<()> {
    let Loaded { config, params: p } = load(&args.common)?;
    let grid = grid_from(&args.grid, &config, &p)?;
    let out = output(args.out.as_ref())?;
    match args.mode {
        PortraitMode::Cloud => {
            let cloud = iterate_cloud(&p, &grid)?;
            if !cloud.failures.is_empty() {
                eprintln!("{} seeds stopped early", cloud.failures.len());
            }
            write_cloud_csv(out, &cloud)?;
        }
        PortraitMode::Regions => {
            let map = classify_regions(&p, &grid)?;
            write_regions_csv(out, &map)?;
            if let Some(path) = &args.tile {
                write_tile(create(path)?, &grid, &map.dets)?;
            }
        }
        PortraitMode::Verdicts => {
            let portrait = classify_cells(&p, &grid, VerdictOptions::default())?;
            write_portrait_csv(out, &portrait)?;
            if let Some(path) = &args.tile {
                let codes: Vec<f64> = portrait.cells.iter().map(|c| c.verdict.code() as f64).collect();
                write_tile(create(path)?, &grid, &codes)?;
            }
            for a in &portrait.attractors {
                eprintln!("attractor {}: period {} at ({:.9}, {:.9})", a.id, a.period, a.points[0].0, a.points[0].1);
            }
        }
    }
    Ok(())
}

pub fn continuation(args: ContinueArgs) -> Result<()> {
    let Loaded { config, params: p } = load(&args.common)?;
    let start = initial_state(&args.state, &config)?;
    let k = positive("--k", Some(args.k.or(config.run.k).unwrap_or(1)))?;
    let [lo, hi] = config.run.f_range.unwrap_or([0.0, p.forcing()]);
    let range = (args.f_min.unwrap_or(lo), args.f_max.unwrap_or(hi));
    if !(range.0 < range.1) {
        bail!(usage(format!("empty friction range [{}, {}]", range.0, range.1)));
    }
    let f = p.friction();
    if f < range.0 || f > range.1 {
        bail!(usage(format!("starting f = {f} lies outside [{}, {}]", range.0, range.1)));
    }
    let orbit = find_periodic(&p, (start.x, start.v), k, start.t)?;
    let policy = StepPolicy { direction: if args.down { -1.0 } else { 1.0 }, ..StepPolicy::default() };
    let branch = continue_in_f(&p, &orbit, range, policy)?;
    eprintln!("{} points, termination {:?}", branch.points.len(), branch.termination);
    if let Some(fold) = &branch.fold {
        eprintln!("fold at f = {:.9}", fold.f_crit);
    }
    write_branch_csv(output(args.out.as_ref())?, &branch)?;
    Ok(())
}

pub fn periodic(args: PeriodicArgs) -> Result<()> {
    let Loaded { config, params: p } = load(&args.common)?;
    let start = initial_state(&args.state, &config)?;
    let k = positive("--k", Some(args.k.or(config.run.k).unwrap_or(1)))?;
    let orbit = find_periodic(&p, (start.x, start.v), k, start.t)?;
    print_json(&orbit)
}

#[derive(Serialize)]
struct NotApplicable {
    applicable: bool,
    reason: String,
}

pub fn lift_check(args: LiftArgs) -> Result<()> {
    let Loaded { config, params: p } = load(&args.common)?;
    let start = initial_state(&args.state, &config)?;
    let periods = positive("--periods", args.periods.or(config.run.periods))?;
    match lift_check_samples(&p, start, periods as f64 * p.period(), args.samples) {
        Ok(report) => print_json(&report),
        Err(Error::NotApplicable(reason)) => print_json(&NotApplicable { applicable: false, reason }),
        Err(e) => Err(e.into()),
    }
}

pub fn regions_invariance(args: InvarianceArgs) -> Result<()> {
    let Loaded { config, params: p } = load(&args.common)?;
    let grid = grid_from(&args.grid, &config, &p)?;
    let map = classify_regions(&p, &grid)?;
    print_json(&invariance_check(&p, &map))
}
