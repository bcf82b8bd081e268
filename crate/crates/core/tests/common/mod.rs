#![allow(dead_code)]

use vibro_core::oracle::{oracle_simulate, OracleEventKind, OracleTrajectory};
use vibro_core::simulator::{simulate, ResolvedKind, Trajectory, Wall};
use vibro_core::{OscillatorParams, PhaseState, ValidatedParams};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn narrow(f: f64) -> ValidatedParams {
    OscillatorParams::uniform(1.0, f, 1.0, 0.0, 0.8).validate().unwrap()
}

pub fn wide(f: f64) -> ValidatedParams {
    OscillatorParams::uniform(1.0, f, 1.0, 0.0, 20.0).validate().unwrap()
}

pub fn unit_walls(f: f64) -> ValidatedParams {
    OscillatorParams::uniform(1.0, f, TWO_PI, -1.0, 1.0).validate().unwrap()
}

pub fn event_kinds(tr: &Trajectory) -> Vec<OracleEventKind> {
    tr.events
        .iter()
        .filter_map(|e| match e.kind {
            ResolvedKind::Impact(Wall::Left) => Some(OracleEventKind::ImpactLeft),
            ResolvedKind::Impact(Wall::Right) => Some(OracleEventKind::ImpactRight),
            ResolvedKind::Turning => Some(OracleEventKind::Turning),
            ResolvedKind::StickStart => Some(OracleEventKind::StickStart),
            ResolvedKind::StickRelease => Some(OracleEventKind::StickRelease),
            ResolvedKind::Grazing => Some(OracleEventKind::Grazing),
            ResolvedKind::Horizon => None,
        })
        .collect()
}

pub struct Agreement {
    pub max_dx: f64,
    pub max_dv: f64,
    pub same_events: bool,
    pub engine_events: usize,
    pub oracle_events: usize,
}

/// Runs both integrators and compares them at every oracle sample.
pub fn compare(p: &ValidatedParams, initial: PhaseState, periods: f64, steps_per_period: f64) -> Agreement {
    let duration = periods * p.period();
    let engine = simulate(p, initial, duration).expect("engine");
    let oracle: OracleTrajectory =
        oracle_simulate(p, initial, duration, p.period() / steps_per_period).expect("oracle");
    let (mut max_dx, mut max_dv) = (0.0f64, 0.0f64);
    for s in &oracle.samples {
        let e = engine.state_at(s.t);
        max_dx = max_dx.max((e.x - s.x).abs());
        max_dv = max_dv.max((e.v - s.v).abs());
    }
    let ours = event_kinds(&engine);
    let theirs: Vec<_> = oracle.events.iter().map(|e| e.kind).collect();
    Agreement {
        max_dx,
        max_dv,
        same_events: ours == theirs,
        engine_events: ours.len(),
        oracle_events: theirs.len(),
    }
}
