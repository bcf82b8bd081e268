//! Brute-force reference integrator for validating the event-driven engine.
//!
//! Classical fixed-step RK4 with event location by bisection on the step
//! length. It evaluates the force itself and shares no code with the flight
//! or simulator modules.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ForceLaw, PhaseState, ValidatedParams};

/// Time resolution of event bisection.
pub const EVENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleEventKind {
    ImpactLeft,
    ImpactRight,
    Turning,
    StickStart,
    StickRelease,
    Grazing,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleEvent {
    pub kind: OracleEventKind,
    pub time: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleTrajectory {
    /// States on the grid `t0 + n dt`, plus the final state.
    pub samples: Vec<PhaseState>,
    pub events: Vec<OracleEvent>,
}

#[derive(Clone, Copy)]
struct Force {
    law: ForceLaw,
    amp: f64,
    omega: f64,
    fric: f64,
}

impl Force {
    fn applied(&self, x: f64, t: f64) -> f64 {
        let envelope = match self.law {
            ForceLaw::Uniform => self.amp,
            ForceLaw::WallVanishing => self.amp * (0.5 * PI * x).cos(),
        };
        envelope * (self.omega * t).cos()
    }

    fn accel(&self, x: f64, t: f64, s: f64) -> f64 {
        self.applied(x, t) - s * self.fric
    }

    fn rk4(&self, t: f64, x: f64, v: f64, s: f64, h: f64) -> (f64, f64) {
        let a1 = self.accel(x, t, s);
        let (x2, v2) = (x + 0.5 * h * v, v + 0.5 * h * a1);
        let a2 = self.accel(x2, t + 0.5 * h, s);
        let (x3, v3) = (x + 0.5 * h * v2, v + 0.5 * h * a2);
        let a3 = self.accel(x3, t + 0.5 * h, s);
        let (x4, v4) = (x + h * v3, v + h * a3);
        let a4 = self.accel(x4, t + h, s);
        (
            x + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4),
            v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        )
    }
}

/// Smallest `theta` in `(0, h]` with `g(theta) >= 0`, given `g(h) >= 0`.
fn bisect(mut g: impl FnMut(f64) -> f64, h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, h);
    while hi - lo > EVENT_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

enum Mode {
    Moving(f64),
    /// At rest; `allowed` restricts the release direction at a wall.
    Resting { allowed: Option<f64> },
}

/// Integrates from `initial` over `duration` with step `dt <= T / 1000`.
pub fn oracle_simulate(p: &ValidatedParams, initial: PhaseState, duration: f64, dt: f64) -> Result<OracleTrajectory> {
    let period = p.period();
    if !(dt > 0.0 && dt <= period / 1000.0) {
        return Err(Error::ContractViolation(format!("oracle step {dt} exceeds T/1000 = {}", period / 1000.0)));
    }
    let force = Force { law: p.law(), amp: p.forcing(), omega: p.omega(), fric: p.friction() };
    let (l, r) = (p.l(), p.r());
    if initial.x < l || initial.x > r {
        return Err(Error::ContractViolation("initial position outside the walls".into()));
    }
    let t0 = initial.t;
    let horizon = t0 + duration;
    let n_steps = (duration / dt).round() as usize;
    let grid = |n: usize| if n >= n_steps { horizon } else { t0 + n as f64 * dt };

    let mut events = Vec::new();
    let (mut t, mut x, mut v) = (t0, initial.x, initial.v);
    let at_wall = |x: f64| -> Option<f64> {
        if x <= l {
            Some(1.0)
        } else if x >= r {
            Some(-1.0)
        } else {
            None
        }
    };
    let rest_mode = |x: f64, t: f64, events: &mut Vec<OracleEvent>| -> Mode {
        let g = force.applied(x, t);
        let inward = at_wall(x);
        match inward {
            Some(dir) if g * dir <= force.fric => Mode::Resting { allowed: Some(dir) },
            None if g.abs() <= force.fric => Mode::Resting { allowed: None },
            _ => {
                events.push(OracleEvent { kind: OracleEventKind::Turning, time: t, x });
                Mode::Moving(g.signum())
            }
        }
    };
    let mut mode = if v != 0.0 {
        if let Some(dir) = at_wall(x) {
            if v * dir < 0.0 {
                return Err(Error::ContractViolation("initial velocity points into the wall".into()));
            }
        }
        Mode::Moving(v.signum())
    } else {
        let m = rest_mode(x, t, &mut events);
        if matches!(m, Mode::Resting { .. }) {
            events.push(OracleEvent { kind: OracleEventKind::StickStart, time: t, x });
        }
        m
    };

    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(PhaseState::new(x, v, t));
    let mut n = 1;
    while n <= n_steps {
        let target = grid(n);
        let h = target - t;
        if h <= 0.0 {
            samples.push(PhaseState::new(x, v, target));
            n += 1;
            continue;
        }
        match mode {
            Mode::Moving(s) => {
                let (xn, vn) = force.rk4(t, x, v, s, h);
                let wall = if s > 0.0 { r } else { l };
                let hits_wall = s * (xn - wall) >= 0.0;
                let stops = s * vn <= 0.0;
                if !hits_wall && !stops {
                    (x, v, t) = (xn, vn, target);
                    samples.push(PhaseState::new(x, v, t));
                    n += 1;
                    continue;
                }
                let th_wall = hits_wall.then(|| bisect(|th| s * (force.rk4(t, x, v, s, th).0 - wall), h));
                let th_stop = stops.then(|| bisect(|th| -s * force.rk4(t, x, v, s, th).1, h));
                let take_wall = match (th_wall, th_stop) {
                    (Some(a), Some(b)) => a <= b,
                    (Some(_), None) => true,
                    _ => false,
                };
                if take_wall {
                    let th = th_wall.unwrap();
                    let (_, ve) = force.rk4(t, x, v, s, th);
                    t += th;
                    x = wall;
                    if th_stop.map_or(false, |b| (b - th).abs() <= 2.0 * EVENT_TOL) {
                        v = 0.0;
                        events.push(OracleEvent { kind: OracleEventKind::Grazing, time: t, x });
                        mode = rest_mode(x, t, &mut events);
                        if matches!(mode, Mode::Resting { .. }) {
                            events.push(OracleEvent { kind: OracleEventKind::StickStart, time: t, x });
                        }
                    } else {
                        let kind = if s > 0.0 { OracleEventKind::ImpactRight } else { OracleEventKind::ImpactLeft };
                        events.push(OracleEvent { kind, time: t, x });
                        v = -ve;
                        mode = Mode::Moving(-s);
                    }
                } else {
                    let th = th_stop.unwrap();
                    let (xe, _) = force.rk4(t, x, v, s, th);
                    t += th;
                    x = xe.clamp(l, r);
                    v = 0.0;
                    mode = rest_mode(x, t, &mut events);
                    if matches!(mode, Mode::Resting { .. }) {
                        events.push(OracleEvent { kind: OracleEventKind::StickStart, time: t, x });
                    }
                }
            }
            Mode::Resting { allowed } => {
                let excess = |tt: f64| -> f64 {
                    let g = force.applied(x, tt);
                    match allowed {
                        Some(dir) => g * dir - force.fric,
                        None => g.abs() - force.fric,
                    }
                };
                if excess(target) <= 0.0 {
                    t = target;
                    samples.push(PhaseState::new(x, 0.0, t));
                    n += 1;
                    continue;
                }
                let th = bisect(|th| excess(t + th), h);
                t += th;
                events.push(OracleEvent { kind: OracleEventKind::StickRelease, time: t, x });
                // Direction of the force just after release.
                let g = force.applied(x, t + EVENT_TOL);
                mode = Mode::Moving(g.signum());
            }
        }
    }
    Ok(OracleTrajectory { samples, events })
}
