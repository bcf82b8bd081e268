//! Hamiltonian lift of the uniform-force oscillator.
//!
//! With the tent map `W` (`W(q) = q` on `[0, 1)`, `2 - q` on `[1, 2)`, period 2)
//! every non-sticking solution is the image `x = R W(q) + l` of a solution of
//!
//! ```text
//! q'' = (F / R) W'(q) cos(omega t) - (f / R) sgn(q'),
//! ```
//!
//! started on the branch where `q` decreases, so that the friction term is the
//! constant `+f/R` until a turning point. Impacts become passages through
//! integer `q`, where `W'` flips sign.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flight::{ClosedArc, EventKind, TIE_FRACTION};
use crate::model::{ForceLaw, PhaseState, Sign, ValidatedParams};
use crate::simulator::{simulate, ResolvedKind, Trajectory};

/// Largest accepted position defect.
pub const LIFT_TOL: f64 = 1e-8;

/// Default number of comparison samples.
pub const LIFT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftState {
    pub q: f64,
    pub q_dot: f64,
}

/// The tent map.
pub fn tent(q: f64) -> f64 {
    let m = q.rem_euclid(2.0);
    if m < 1.0 {
        m
    } else {
        2.0 - m
    }
}

/// Slope of the tent map on the unit cell `[n, n + 1]`.
fn cell_slope(n: f64) -> f64 {
    if n.rem_euclid(2.0) < 1.0 {
        1.0
    } else {
        -1.0
    }
}

impl LiftState {
    /// Pull-back of a moving state onto the decreasing-`q` branch.
    pub fn pull_back(p: &ValidatedParams, x: f64, v: f64) -> Result<LiftState> {
        let u = (x - p.l()) / p.width();
        if v > 0.0 {
            Ok(LiftState { q: 2.0 - u, q_dot: -v / p.width() })
        } else if v < 0.0 {
            Ok(LiftState { q: u, q_dot: v / p.width() })
        } else {
            Err(Error::NotApplicable("state at rest has no lifted branch".into()))
        }
    }

    /// Projection `x = R W(q) + l`, `v = R W'(q) q'`.
    pub fn project(&self, p: &ValidatedParams) -> (f64, f64) {
        let cell = (self.q.ceil() - 1.0).min(self.q.floor());
        (p.width() * tent(self.q) + p.l(), p.width() * cell_slope(cell) * self.q_dot)
    }
}

#[derive(Debug, Clone, Copy)]
struct LiftArc {
    cell: f64,
    arc: ClosedArc,
    end: f64,
}

/// Solution of the lifted system, as a chain of closed-form arcs.
#[derive(Debug, Clone)]
pub struct LiftedTrajectory {
    arcs: Vec<LiftArc>,
}

impl LiftedTrajectory {
    pub fn state_at(&self, t: f64) -> LiftState {
        let i = self.arcs.partition_point(|a| a.end < t).min(self.arcs.len() - 1);
        let a = &self.arcs[i].arc;
        LiftState { q: a.position(t), q_dot: a.velocity(t) }
    }

    /// Number of integer-`q` passages (impacts of the projected motion).
    pub fn corner_crossings(&self) -> usize {
        self.arcs
            .windows(2)
            .filter(|w| w[0].cell != w[1].cell)
            .count()
    }

    pub fn cells(&self) -> impl Iterator<Item = f64> + '_ {
        self.arcs.iter().map(|a| a.cell)
    }
}

/// Integrates the lifted system from `start` over `duration`.
pub fn integrate_lift(p: &ValidatedParams, start: LiftState, t0: f64, duration: f64) -> Result<LiftedTrajectory> {
    let mut sign = Sign::of(start.q_dot)
        .ok_or_else(|| Error::ContractViolation("lifted velocity must be nonzero".into()))?;
    let horizon = t0 + duration;
    let tie = TIE_FRACTION * p.period();
    let amp = p.forcing() / p.width();
    let fric = p.friction() / p.width();
    let mut state = PhaseState::new(start.q, start.q_dot, t0);
    let mut arcs = Vec::new();
    loop {
        let cell = match sign {
            Sign::Neg => state.x.ceil() - 1.0,
            Sign::Pos => state.x.floor(),
        };
        let slope = cell_slope(cell) * amp;
        let arc = ClosedArc::new(state, sign, slope, p.omega(), fric);
        let ev = arc.next_event(cell, cell + 1.0, horizon, tie)?;
        if ev.kind != EventKind::Horizon && ev.grazing {
            return Err(Error::NotApplicable(format!("lifted motion grazes a corner at t = {}", ev.time)));
        }
        let end = ev.time.min(horizon);
        arcs.push(LiftArc { cell, arc, end });
        if ev.kind == EventKind::Horizon || ev.time >= horizon {
            return Ok(LiftedTrajectory { arcs });
        }
        state = match ev.kind {
            EventKind::ImpactLeft => PhaseState::new(cell, ev.state.v, ev.time),
            EventKind::ImpactRight => PhaseState::new(cell + 1.0, ev.state.v, ev.time),
            _ => {
                let g = slope * (p.omega() * ev.time).cos();
                if g.abs() <= fric {
                    return Err(Error::NotApplicable(format!("lifted motion sticks at t = {}", ev.time)));
                }
                sign = sign.flip();
                PhaseState::new(ev.state.x, 0.0, ev.time)
            }
        };
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub samples: usize,
    pub max_position_defect: f64,
    pub max_velocity_defect: f64,
    pub impacts: usize,
    pub corner_crossings: usize,
    pub passed: bool,
}

/// Compares the constrained trajectory from `initial` with the projection of
/// the lifted solution at `samples` equally spaced times.
pub fn lift_check(p: &ValidatedParams, initial: PhaseState, duration: f64) -> Result<LiftReport> {
    lift_check_samples(p, initial, duration, LIFT_SAMPLES)
}

pub fn lift_check_samples(
    p: &ValidatedParams,
    initial: PhaseState,
    duration: f64,
    samples: usize,
) -> Result<LiftReport> {
    if p.law() != ForceLaw::Uniform {
        return Err(Error::ContractViolation("the lift exists for the uniform force law only".into()));
    }
    if samples < 2 || !(duration > 0.0) {
        return Err(Error::ContractViolation("need at least two samples over a positive duration".into()));
    }
    let traj = simulate(p, initial, duration)?;
    check_nonsticking(&traj)?;
    // Start from the post-impact state when the initial point sits on a wall.
    let first = traj.state_at(initial.t);
    let lift = LiftState::pull_back(p, first.x, first.v)?;
    let lifted = integrate_lift(p, lift, initial.t, duration)?;

    let mut max_x: f64 = 0.0;
    let mut max_v: f64 = 0.0;
    for i in 0..samples {
        let t = initial.t + duration * i as f64 / (samples - 1) as f64;
        let s = traj.state_at(t);
        let (x, v) = lifted.state_at(t).project(p);
        max_x = max_x.max((x - s.x).abs());
        // Velocities jump at impacts; compare away from them.
        let near_impact = traj
            .events
            .iter()
            .any(|e| matches!(e.kind, ResolvedKind::Impact(_)) && (e.time - t).abs() < 1e-9 * p.period());
        if !near_impact {
            max_v = max_v.max((v - s.v).abs());
        }
    }
    Ok(LiftReport {
        samples,
        max_position_defect: max_x,
        max_velocity_defect: max_v,
        impacts: traj.impacts(),
        corner_crossings: lifted.corner_crossings(),
        passed: max_x <= LIFT_TOL,
    })
}

fn check_nonsticking(traj: &Trajectory) -> Result<()> {
    if traj.initial.v == 0.0 {
        return Err(Error::NotApplicable("trajectory starts at rest".into()));
    }
    for e in &traj.events {
        let why = match e.kind {
            ResolvedKind::StickStart => "trajectory sticks",
            ResolvedKind::Grazing => "trajectory grazes a wall",
            _ => continue,
        };
        return Err(Error::NotApplicable(format!("{why} at t = {}", e.time)));
    }
    Ok(())
}
