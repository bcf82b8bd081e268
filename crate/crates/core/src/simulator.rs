//! Event-driven trajectories: flight arcs joined by impacts, turning points and
//! stick intervals.
//!
//! Velocity zeros follow the Filippov convention: with `|force| > f` the
//! particle turns instantly, with `|force| <= f` it sticks until the force
//! magnitude next rises through `f`. A particle that reaches a wall at rest
//! (grazing) may only leave towards the interior.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flight::{make_arc, EventKind, FlightArc};
use crate::model::{PhaseState, Sign, ValidatedParams};
use crate::roots::brent;

pub const DEFAULT_EVENT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Wall {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ResolvedKind {
    Impact(Wall),
    Turning,
    StickStart,
    StickRelease,
    Grazing,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedEvent {
    pub kind: ResolvedKind,
    pub time: f64,
    pub state_before: PhaseState,
    pub state_after: PhaseState,
    pub force_at_event: f64,
}

#[derive(Debug, Clone)]
pub enum Segment {
    Flight { arc: FlightArc, end: f64 },
    Stick { x: f64, start: f64, end: f64 },
}

impl Segment {
    pub fn start(&self) -> f64 {
        match self {
            Segment::Flight { arc, .. } => arc.start().t,
            Segment::Stick { start, .. } => *start,
        }
    }

    pub fn end(&self) -> f64 {
        match self {
            Segment::Flight { end, .. } | Segment::Stick { end, .. } => *end,
        }
    }

    pub fn state_at(&self, t: f64) -> PhaseState {
        match self {
            Segment::Flight { arc, .. } => arc.state_at(t),
            Segment::Stick { x, .. } => PhaseState { x: *x, v: 0.0, t },
        }
    }
}

/// Receives the pieces of a trajectory as they are produced.
pub trait Observer {
    fn segment(&mut self, _segment: Segment) {}
    fn event(&mut self, _event: &ResolvedEvent) {}
}

impl Observer for () {}

/// Outcome of reaching zero velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroVelocity {
    /// Force exceeds friction: motion resumes at once in `direction`.
    Turning { event: ResolvedEvent, direction: Sign },
    /// Friction holds the particle; `release` is `None` when it never moves again.
    Stick { event: ResolvedEvent, release: Option<(f64, Sign)> },
}

impl ZeroVelocity {
    pub fn event(&self) -> &ResolvedEvent {
        match self {
            ZeroVelocity::Turning { event, .. } | ZeroVelocity::Stick { event, .. } => event,
        }
    }
}

/// First time after `t` at which a particle resting at `x` starts to move.
///
/// With `allowed` set, only force pointing that way can free the particle
/// (rest against a wall).
pub fn release_time(
    p: &ValidatedParams,
    x: f64,
    t: f64,
    allowed: Option<Sign>,
) -> Result<Option<(f64, Sign)>> {
    let amp = p.amplitude_at(x);
    let f = p.friction();
    let w = p.omega();
    let excess = |s: f64| -> f64 {
        let g = amp * (w * s).cos();
        match allowed {
            None => g.abs() - f,
            Some(d) => d.value() * g - f,
        }
    };
    if amp.abs() <= f {
        return Ok(None);
    }
    let theta0 = w * t;
    let mut a = t;
    let mut fa = excess(a);
    let mut k = (theta0 / FRAC_PI_2).floor() + 1.0;
    // Two periods always contain a release if one exists.
    for _ in 0..10 {
        let b = k * FRAC_PI_2 / w;
        let fb = excess(b);
        if fb > 0.0 {
            let tr = if fa > 0.0 { a } else { brent(&excess, a, b, fa, fb)? };
            let g = p.applied_force(x, tr);
            let dir = match allowed {
                Some(d) => d,
                None => Sign::of(g).unwrap_or(Sign::Pos),
            };
            return Ok(Some((tr, dir)));
        }
        a = b;
        fa = fb;
        k += 1.0;
    }
    Ok(None)
}

fn rest_resolution(p: &ValidatedParams, state: PhaseState, allowed: Option<Sign>) -> Result<ZeroVelocity> {
    let g = p.applied_force(state.x, state.t);
    let f = p.friction();
    let at_rest = PhaseState { v: 0.0, ..state };
    let moves = match (Sign::of(g), allowed) {
        (Some(dir), None) => (g.abs() > f).then_some(dir),
        (Some(dir), Some(d)) => (dir == d && g.abs() > f).then_some(dir),
        (None, _) => None,
    };
    if let Some(direction) = moves {
        return Ok(ZeroVelocity::Turning {
            event: ResolvedEvent {
                kind: ResolvedKind::Turning,
                time: state.t,
                state_before: state,
                state_after: at_rest,
                force_at_event: g,
            },
            direction,
        });
    }
    let release = release_time(p, state.x, state.t, allowed)?;
    Ok(ZeroVelocity::Stick {
        event: ResolvedEvent {
            kind: ResolvedKind::StickStart,
            time: state.t,
            state_before: state,
            state_after: at_rest,
            force_at_event: g,
        },
        release,
    })
}

/// Classify a velocity zero strictly between the walls.
pub fn resolve_velocity_zero(p: &ValidatedParams, state: PhaseState) -> Result<ZeroVelocity> {
    if state.v != 0.0 {
        return Err(Error::ContractViolation(format!(
            "velocity-zero resolution called with v = {}",
            state.v
        )));
    }
    rest_resolution(p, state, None)
}

/// Rest resolution at a wall: motion may only resume towards the interior.
pub fn resolve_rest_at_wall(p: &ValidatedParams, state: PhaseState, wall: Wall) -> Result<ZeroVelocity> {
    let inward = match wall {
        Wall::Left => Sign::Pos,
        Wall::Right => Sign::Neg,
    };
    rest_resolution(p, PhaseState { v: 0.0, ..state }, Some(inward))
}

fn wall_at(p: &ValidatedParams, x: f64) -> Option<Wall> {
    if x == p.l() {
        Some(Wall::Left)
    } else if x == p.r() {
        Some(Wall::Right)
    } else {
        None
    }
}

/// Elastic reflection. A zero-velocity contact yields a `Grazing` event.
pub fn resolve_impact(p: &ValidatedParams, state: PhaseState) -> Result<ResolvedEvent> {
    let wall = wall_at(p, state.x).ok_or_else(|| {
        Error::ContractViolation(format!("impact requested away from the walls at x = {}", state.x))
    })?;
    let force = p.applied_force(state.x, state.t);
    if state.v == 0.0 {
        return Ok(ResolvedEvent {
            kind: ResolvedKind::Grazing,
            time: state.t,
            state_before: state,
            state_after: state,
            force_at_event: force,
        });
    }
    let into_wall = match wall {
        Wall::Left => state.v < 0.0,
        Wall::Right => state.v > 0.0,
    };
    if !into_wall {
        return Err(Error::ContractViolation(format!(
            "velocity {} points away from the {wall:?} wall",
            state.v
        )));
    }
    Ok(ResolvedEvent {
        kind: ResolvedKind::Impact(wall),
        time: state.t,
        state_before: state,
        state_after: PhaseState { v: -state.v, ..state },
        force_at_event: force,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub event_cap: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { event_cap: DEFAULT_EVENT_CAP }
    }
}

enum Mode {
    Moving(Sign),
    Resting { release: Option<(f64, Sign)> },
}

fn apply_rest<O: Observer>(res: ZeroVelocity, obs: &mut O) -> Mode {
    obs.event(res.event());
    match res {
        ZeroVelocity::Turning { direction, .. } => Mode::Moving(direction),
        ZeroVelocity::Stick { release, .. } => Mode::Resting { release },
    }
}

fn grazing<O: Observer>(
    p: &ValidatedParams,
    state: PhaseState,
    wall: Wall,
    obs: &mut O,
) -> Result<Mode> {
    let at_rest = PhaseState { v: 0.0, ..state };
    obs.event(&ResolvedEvent {
        kind: ResolvedKind::Grazing,
        time: state.t,
        state_before: state,
        state_after: at_rest,
        force_at_event: p.applied_force(state.x, state.t),
    });
    Ok(match resolve_rest_at_wall(p, at_rest, wall)? {
        ZeroVelocity::Turning { direction, .. } => Mode::Moving(direction),
        ZeroVelocity::Stick { release, .. } => Mode::Resting { release },
    })
}

fn initial_mode<O: Observer>(p: &ValidatedParams, state: &mut PhaseState, obs: &mut O) -> Result<Mode> {
    match wall_at(p, state.x) {
        Some(wall) => {
            let into_wall = match wall {
                Wall::Left => state.v < 0.0,
                Wall::Right => state.v > 0.0,
            };
            if state.v == 0.0 {
                grazing(p, *state, wall, obs)
            } else if into_wall {
                let ev = resolve_impact(p, *state)?;
                obs.event(&ev);
                *state = ev.state_after;
                Ok(Mode::Moving(Sign::of(state.v).unwrap()))
            } else {
                Ok(Mode::Moving(Sign::of(state.v).unwrap()))
            }
        }
        None => match Sign::of(state.v) {
            Some(s) => Ok(Mode::Moving(s)),
            None => Ok(apply_rest(resolve_velocity_zero(p, *state)?, obs)),
        },
    }
}

/// Run the event-driven engine, streaming segments and events to `obs`.
/// Returns the state at `initial.t + duration`.
pub fn simulate_with<O: Observer>(
    p: &ValidatedParams,
    initial: PhaseState,
    duration: f64,
    opts: SimOptions,
    obs: &mut O,
) -> Result<PhaseState> {
    if !(duration > 0.0) {
        return Err(Error::ContractViolation(format!("duration must be positive, got {duration}")));
    }
    if !p.contains(initial.x) || !initial.v.is_finite() || !initial.t.is_finite() {
        return Err(Error::ContractViolation(format!(
            "initial state {initial:?} is outside [{}, {}]",
            p.l(),
            p.r()
        )));
    }
    let horizon = initial.t + duration;
    let mut state = initial;
    let mut count = 0usize;
    let mut mode = initial_mode(p, &mut state, obs)?;

    loop {
        count += 1;
        if count > opts.event_cap {
            return Err(Error::EventCap { cap: opts.event_cap, time: state.t });
        }
        if state.t >= horizon {
            state.t = horizon;
            break;
        }
        match mode {
            Mode::Moving(sign) => {
                let mut arc = make_arc(p, state, sign)?;
                let ev = arc.next_event(p, horizon)?;
                match ev.kind {
                    EventKind::Horizon => {
                        obs.segment(Segment::Flight { arc, end: horizon });
                        state = ev.state;
                        break;
                    }
                    EventKind::VelocityZero if ev.time > horizon => {
                        state = arc.state_at(horizon);
                        obs.segment(Segment::Flight { arc, end: horizon });
                        break;
                    }
                    EventKind::VelocityZero => {
                        obs.segment(Segment::Flight { arc, end: ev.time });
                        state = ev.state;
                        mode = apply_rest(resolve_velocity_zero(p, state)?, obs);
                    }
                    EventKind::ImpactLeft | EventKind::ImpactRight => {
                        obs.segment(Segment::Flight { arc, end: ev.time.min(horizon) });
                        let wall = if ev.kind == EventKind::ImpactLeft { Wall::Left } else { Wall::Right };
                        if ev.grazing || ev.state.v == 0.0 {
                            state = ev.state;
                            mode = grazing(p, state, wall, obs)?;
                        } else {
                            let resolved = resolve_impact(p, ev.state)?;
                            obs.event(&resolved);
                            state = resolved.state_after;
                            mode = Mode::Moving(sign.flip());
                        }
                    }
                }
            }
            Mode::Resting { release } => match release {
                Some((tr, dir)) if tr <= horizon => {
                    obs.segment(Segment::Stick { x: state.x, start: state.t, end: tr });
                    let before = PhaseState { t: tr, ..state };
                    obs.event(&ResolvedEvent {
                        kind: ResolvedKind::StickRelease,
                        time: tr,
                        state_before: before,
                        state_after: before,
                        force_at_event: p.applied_force(state.x, tr),
                    });
                    state = before;
                    mode = Mode::Moving(dir);
                }
                _ => {
                    obs.segment(Segment::Stick { x: state.x, start: state.t, end: horizon });
                    state = PhaseState { x: state.x, v: 0.0, t: horizon };
                    break;
                }
            },
        }
    }
    obs.event(&ResolvedEvent {
        kind: ResolvedKind::Horizon,
        time: horizon,
        state_before: state,
        state_after: state,
        force_at_event: p.applied_force(state.x, horizon),
    });
    Ok(state)
}

/// A complete recorded trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: PhaseState,
    pub segments: Vec<Segment>,
    pub events: Vec<ResolvedEvent>,
    pub final_state: PhaseState,
}

#[derive(Default)]
struct Recorder {
    segments: Vec<Segment>,
    events: Vec<ResolvedEvent>,
}

impl Observer for Recorder {
    fn segment(&mut self, segment: Segment) {
        self.segments.push(segment);
    }
    fn event(&mut self, event: &ResolvedEvent) {
        self.events.push(*event);
    }
}

pub fn simulate(p: &ValidatedParams, initial: PhaseState, duration: f64) -> Result<Trajectory> {
    simulate_opts(p, initial, duration, SimOptions::default())
}

pub fn simulate_opts(
    p: &ValidatedParams,
    initial: PhaseState,
    duration: f64,
    opts: SimOptions,
) -> Result<Trajectory> {
    let mut rec = Recorder::default();
    let final_state = simulate_with(p, initial, duration, opts, &mut rec)?;
    Ok(Trajectory { initial, segments: rec.segments, events: rec.events, final_state })
}

impl Trajectory {
    /// State at time `t`; right-continuous at impacts.
    pub fn state_at(&self, t: f64) -> PhaseState {
        if self.segments.is_empty() || t >= self.final_state.t {
            return PhaseState { t, ..self.final_state };
        }
        let idx = self.segments.partition_point(|s| s.start() <= t);
        let idx = idx.saturating_sub(1);
        self.segments[idx].state_at(t)
    }

    /// States at `t0, t0 + dt, ...` up to the final time.
    pub fn sample(&self, dt: f64) -> Vec<PhaseState> {
        let t0 = self.initial.t;
        let n = ((self.final_state.t - t0) / dt + 1e-9).floor() as usize;
        (0..=n).map(|i| self.state_at(t0 + i as f64 * dt)).collect()
    }

    pub fn count(&self, kind: ResolvedKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn impacts(&self) -> usize {
        self.events.iter().filter(|e| matches!(e.kind, ResolvedKind::Impact(_))).count()
    }

    /// Event kinds in order, without the closing horizon marker.
    pub fn signature(&self) -> Vec<ResolvedKind> {
        self.events.iter().map(|e| e.kind).filter(|k| *k != ResolvedKind::Horizon).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OscillatorParams;
    use std::f64::consts::PI;

    fn uniform(forcing: f64, friction: f64, omega: f64, l: f64, r: f64) -> ValidatedParams {
        OscillatorParams::uniform(forcing, friction, omega, l, r).validate().unwrap()
    }

    #[test]
    fn turning_when_force_beats_friction() {
        let p = uniform(1.0, 0.1, 1.0, -10.0, 10.0);
        let t = 2.0 * PI / 3.0;
        match resolve_velocity_zero(&p, PhaseState::new(0.0, 0.0, t)).unwrap() {
            ZeroVelocity::Turning { direction, event } => {
                assert_eq!(direction, Sign::Neg);
                assert_eq!(event.kind, ResolvedKind::Turning);
            }
            other => panic!("expected turning, got {other:?}"),
        }
    }

    #[test]
    fn stick_then_release_at_two_thirds_pi() {
        let p = uniform(1.0, 0.5, 1.0, -10.0, 10.0);
        match resolve_velocity_zero(&p, PhaseState::new(0.0, 0.0, PI / 2.0)).unwrap() {
            ZeroVelocity::Stick { release: Some((tr, dir)), .. } => {
                assert!((tr - 2.0 * PI / 3.0).abs() < 1e-14);
                assert_eq!(dir, Sign::Neg);
            }
            other => panic!("expected stick with release, got {other:?}"),
        }
    }

    #[test]
    fn permanent_rest_inside_band() {
        let p = OscillatorParams::wall_vanishing(1.0, 0.1, 2.0 * PI).validate().unwrap();
        match resolve_velocity_zero(&p, PhaseState::new(0.99, 0.0, 0.0)).unwrap() {
            ZeroVelocity::Stick { release: None, .. } => {}
            other => panic!("expected permanent stick, got {other:?}"),
        }
    }

    #[test]
    fn velocity_zero_contract() {
        let p = uniform(1.0, 0.1, 1.0, -10.0, 10.0);
        assert!(resolve_velocity_zero(&p, PhaseState::new(0.0, 0.3, 0.0)).is_err());
    }

    #[test]
    fn impact_flips_velocity() {
        let p = uniform(1.0, 0.1, 1.0, 0.0, 1.0);
        let ev = resolve_impact(&p, PhaseState::new(1.0, 2.0, 1.0)).unwrap();
        assert_eq!(ev.state_after, PhaseState::new(1.0, -2.0, 1.0));
        let ev = resolve_impact(&p, PhaseState::new(0.0, -0.5, 3.0)).unwrap();
        assert_eq!(ev.state_after, PhaseState::new(0.0, 0.5, 3.0));
        assert!(resolve_impact(&p, PhaseState::new(1.0, -2.0, 1.0)).is_err());
        assert_eq!(resolve_impact(&p, PhaseState::new(1.0, 0.0, 1.0)).unwrap().kind, ResolvedKind::Grazing);
    }

    #[test]
    fn globally_sticking_comes_to_rest() {
        let p = uniform(1.0, 1.5, 1.0, 0.0, 1.0);
        let traj = simulate(&p, PhaseState::new(0.5, 0.0, 0.0), 10.0 * p.period()).unwrap();
        assert_eq!(traj.final_state.v, 0.0);
        assert_eq!(traj.final_state.x, 0.5);
        assert_eq!(traj.count(ResolvedKind::StickRelease), 0);
        let traj = simulate(&p, PhaseState::new(0.5, 0.3, 0.0), 10.0 * p.period()).unwrap();
        assert_eq!(traj.final_state.v, 0.0);
        assert!(traj.events.len() < 10);
    }

    #[test]
    fn stays_between_walls_and_chains() {
        let p = uniform(1.0, 0.05, 2.0 * PI, -1.0, 1.0);
        let traj = simulate(&p, PhaseState::new(0.1, 2.3, 0.0), 20.0 * p.period()).unwrap();
        for s in traj.sample(1e-3) {
            assert!(s.x >= -1.0 - 1e-10 && s.x <= 1.0 + 1e-10);
        }
        for w in traj.segments.windows(2) {
            let a = w[0].state_at(w[0].end());
            let b = w[1].state_at(w[1].start());
            assert!((a.x - b.x).abs() < 1e-12, "{a:?} {b:?}");
            assert!((w[0].end() - w[1].start()).abs() < 1e-12);
            assert!((a.v.abs() - b.v.abs()).abs() < 1e-12);
        }
        for e in &traj.events {
            if let ResolvedKind::Impact(_) = e.kind {
                assert_eq!(e.state_after.v, -e.state_before.v);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = uniform(1.0, 0.05, 1.0, 0.0, 1.0);
        assert!(simulate(&p, PhaseState::new(1.5, 0.0, 0.0), 1.0).is_err());
        assert!(simulate(&p, PhaseState::new(0.5, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn event_cap_is_enforced() {
        let p = uniform(1.0, 0.0, 1.0, 0.0, 0.01);
        let err = simulate_opts(&p, PhaseState::new(0.005, 3.0, 0.0), 100.0, SimOptions { event_cap: 50 });
        assert!(matches!(err, Err(Error::EventCap { cap: 50, .. })));
    }

    #[test]
    fn grazing_start_holds_against_wall() {
        // Force pushes into the right wall at t = 0: the particle waits there.
        let p = uniform(1.0, 0.1, 1.0, 0.0, 1.0);
        let traj = simulate(&p, PhaseState::new(1.0, 0.0, 0.0), 1.5).unwrap();
        assert_eq!(traj.events[0].kind, ResolvedKind::Grazing);
        assert_eq!(traj.final_state.x, 1.0);
        // Released once the force points inwards with magnitude above friction.
        let traj = simulate(&p, PhaseState::new(1.0, 0.0, 0.0), 4.0).unwrap();
        let release = traj.events.iter().find(|e| e.kind == ResolvedKind::StickRelease).unwrap();
        assert!((release.time - (PI - 0.1f64.acos())).abs() < 1e-12);
        assert!(traj.final_state.x < 1.0);
    }

    #[test]
    fn sticking_breaks_backward_uniqueness() {
        // Two different starts that stick at the same spot end identically.
        let p = uniform(1.0, 0.5, 1.0, -50.0, 50.0);
        let t0 = PI / 3.0;
        let stick_pos = |v0: f64| {
            let tr = simulate(&p, PhaseState::new(0.0, v0, t0), 2.0).unwrap();
            let e = tr.events.iter().find(|e| e.kind == ResolvedKind::StickStart).unwrap();
            e.state_before.x
        };
        let (va, vb) = (0.20, 0.21);
        let xa = 0.0;
        let xb = stick_pos(va) - stick_pos(vb);
        let a = simulate(&p, PhaseState::new(xa, va, t0), 3.0 * p.period()).unwrap();
        let b = simulate(&p, PhaseState::new(xb, vb, t0), 3.0 * p.period()).unwrap();
        assert!((a.final_state.x - b.final_state.x).abs() < 1e-12);
        assert!((a.final_state.v - b.final_state.v).abs() < 1e-12);
        assert!((xa - xb).abs() > 1e-4 || (va - vb).abs() > 1e-4);
    }
}
