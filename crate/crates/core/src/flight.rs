//! Single free-flight arcs with a fixed velocity sign, and location of the
//! first event (wall contact, velocity zero, horizon) on an arc.
//!
//! For the uniform force law the arc is an exact closed form. Its velocity is
//! monotone between consecutive quarter-period phases and critical points of
//! the acceleration, so sign checks at those breakpoints bracket every root.
//! The wall-vanishing law has no elementary solution; its arcs are stepped
//! with Dormand-Prince 5(4) and events are located on the dense output.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use serde::Serialize;

use crate::dopri::{self, DenseStep, Stepper, Tolerances};
use crate::error::{Error, Result};
use crate::model::{ForceLaw, PhaseState, Sign, ValidatedParams};
use crate::roots::brent;

/// Relative width (in periods) within which two events count as simultaneous.
pub const TIE_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    ImpactLeft,
    ImpactRight,
    VelocityZero,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub state: PhaseState,
    /// Impact and velocity zero coincide (the particle reaches the wall at rest).
    pub grazing: bool,
}

/// `sin(u) - u`, accurate for small `u`.
fn sin_minus_id(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let u2 = u * u;
        -u * u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)))
    } else {
        u.sin() - u
    }
}

/// `cos(u) - 1`, accurate for small `u`.
fn cos_minus_one(u: f64) -> f64 {
    let s = (0.5 * u).sin();
    -2.0 * s * s
}

/// Closed-form arc of `x'' = amp cos(omega t) - sign * friction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedArc {
    pub start: PhaseState,
    pub sign: Sign,
    pub amp: f64,
    pub omega: f64,
    pub friction: f64,
    sin0: f64,
    cos0: f64,
}

impl ClosedArc {
    pub fn new(start: PhaseState, sign: Sign, amp: f64, omega: f64, friction: f64) -> Self {
        let (sin0, cos0) = (omega * start.t).sin_cos();
        Self { start, sign, amp, omega, friction, sin0, cos0 }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let tau = t - self.start.t;
        let u = self.omega * tau;
        self.start.v - self.sign.value() * self.friction * tau
            + (self.amp / self.omega) * (self.sin0 * cos_minus_one(u) + self.cos0 * u.sin())
    }

    pub fn position(&self, t: f64) -> f64 {
        let tau = t - self.start.t;
        let u = self.omega * tau;
        let w2 = self.omega * self.omega;
        self.start.x + self.start.v * tau - 0.5 * self.sign.value() * self.friction * tau * tau
            - (self.amp / w2) * (self.cos0 * cos_minus_one(u) - self.sin0 * sin_minus_id(u))
    }

    pub fn state_at(&self, t: f64) -> PhaseState {
        PhaseState { x: self.position(t), v: self.velocity(t), t }
    }

    pub fn accel_at(&self, t: f64) -> f64 {
        self.amp * (self.omega * t).cos() - self.sign.value() * self.friction
    }

    /// Breakpoints in `(t0, t_end]` between which the velocity is monotone.
    fn monotone_pieces(&self, t_end: f64, min_gap: f64) -> Vec<f64> {
        let w = self.omega;
        let theta0 = w * self.start.t;
        let theta_end = w * t_end;
        let crit = if self.amp != 0.0 {
            let c = self.sign.value() * self.friction / self.amp;
            (c.abs() <= 1.0).then(|| c)
        } else {
            None
        };

        let mut out = Vec::new();
        let mut a = theta0;
        let mut k = (theta0 / FRAC_PI_2).floor() + 1.0;
        loop {
            let b = (k * FRAC_PI_2).min(theta_end);
            if let Some(c) = crit {
                let ca = a.cos() - c;
                let cb = b.cos() - c;
                if ca * cb < 0.0 {
                    let mid = 0.5 * (a + b);
                    let n = (mid / (2.0 * PI)).floor();
                    let base = mid - 2.0 * PI * n;
                    let ac = c.acos();
                    let theta = if base < PI { 2.0 * PI * n + ac } else { 2.0 * PI * (n + 1.0) - ac };
                    if theta > a && theta < b {
                        out.push(theta / w);
                    }
                }
            }
            out.push(b / w);
            if b >= theta_end {
                break;
            }
            a = b;
            k += 1.0;
        }
        let t0 = self.start.t;
        out.retain(|&t| t - t0 > min_gap);
        if out.last().map_or(true, |&t| t < t_end) {
            out.push(t_end);
        }
        out
    }

    /// First event in `(t0, horizon + tie]` with walls `lo < hi`.
    pub fn next_event(&self, lo: f64, hi: f64, horizon: f64, tie: f64) -> Result<Event> {
        let s = self.sign.value();
        let wall = if s > 0.0 { hi } else { lo };
        let width = hi - lo;
        let search_end = horizon + tie;
        let t0 = self.start.t;

        let mut prev = t0;
        for b in self.monotone_pieces(search_end, tie) {
            let vb = s * self.velocity(b);
            let mut piece_end = b;
            let mut v_root = None;
            if vb <= 0.0 {
                let va = self.velocity(prev);
                let (lo_t, fa) = if s * va <= 0.0 {
                    // arc starts at rest; skip the degenerate endpoint
                    let probe = prev + tie;
                    (probe, self.velocity(probe))
                } else {
                    (prev, va)
                };
                let root = if s * fa <= 0.0 {
                    lo_t
                } else {
                    brent(|t| self.velocity(t), lo_t, b, fa, self.velocity(b))?
                };
                v_root = Some(root);
                piece_end = root;
            }

            let xe = s * (self.position(piece_end) - wall);
            if xe >= 0.0 {
                let xa = self.position(prev) - wall;
                let tw = brent(|t| self.position(t) - wall, prev, piece_end, xa, self.position(piece_end) - wall)?;
                let grazing = v_root.map_or(false, |tv| (tv - tw).abs() <= tie);
                let v = if grazing { 0.0 } else { self.velocity(tw) };
                return Ok(Event {
                    kind: if s > 0.0 { EventKind::ImpactRight } else { EventKind::ImpactLeft },
                    time: tw,
                    state: PhaseState { x: wall, v, t: tw },
                    grazing,
                });
            }
            if let Some(tv) = v_root {
                let x = self.position(tv);
                if (x - wall).abs() <= 1e-12 * width.max(1.0) {
                    return Ok(Event {
                        kind: if s > 0.0 { EventKind::ImpactRight } else { EventKind::ImpactLeft },
                        time: tv,
                        state: PhaseState { x: wall, v: 0.0, t: tv },
                        grazing: true,
                    });
                }
                return Ok(Event {
                    kind: EventKind::VelocityZero,
                    time: tv,
                    state: PhaseState { x, v: 0.0, t: tv },
                    grazing: false,
                });
            }
            prev = b;
        }
        Ok(Event {
            kind: EventKind::Horizon,
            time: horizon,
            state: self.state_at(horizon),
            grazing: false,
        })
    }
}

/// Arc of the wall-vanishing law, carried with its variational matrix.
#[derive(Debug, Clone)]
pub struct IntegratedArc {
    pub start: PhaseState,
    pub sign: Sign,
    params: ValidatedParams,
    steps: Vec<DenseStep>,
}

const INTEGRATION_TOL: Tolerances = Tolerances { rtol: 1e-12, atol: 1e-13, h_max: f64::INFINITY };

impl IntegratedArc {
    fn rhs(&self) -> impl Fn(f64, &dopri::Vector) -> dopri::Vector + '_ {
        let p = self.params;
        let s = self.sign.value();
        move |t, y| {
            let c = (p.omega() * t).cos();
            let a = p.amplitude_at(y[0]) * c - s * p.friction();
            let gx = p.amplitude_slope(y[0]) * c;
            [y[1], a, y[4], y[5], gx * y[2], gx * y[3]]
        }
    }

    fn eval(&self, t: f64) -> dopri::Vector {
        if self.steps.is_empty() || t <= self.start.t {
            return [self.start.x, self.start.v, 1.0, 0.0, 0.0, 1.0];
        }
        let idx = self.steps.partition_point(|s| s.t1() < t).min(self.steps.len() - 1);
        self.steps[idx].eval(t)
    }

    pub fn state_at(&self, t: f64) -> PhaseState {
        let y = self.eval(t);
        PhaseState { x: y[0], v: y[1], t }
    }

    pub fn accel_at(&self, t: f64) -> f64 {
        let x = self.eval(t)[0];
        self.params.applied_force(x, t) - self.sign.value() * self.params.friction()
    }

    /// Fundamental matrix of the linearized flight from the arc start to `t`.
    pub fn flight_matrix(&self, t: f64) -> Matrix2<f64> {
        let y = self.eval(t);
        Matrix2::new(y[2], y[3], y[4], y[5])
    }

    pub fn next_event(&mut self, horizon: f64, tie: f64) -> Result<Event> {
        let p = self.params;
        let s = self.sign.value();
        let (lo, hi) = (p.l(), p.r());
        let wall = if s > 0.0 { hi } else { lo };
        let search_end = horizon + tie;
        let tol = Tolerances { h_max: p.period() / 32.0, ..INTEGRATION_TOL };
        let y0 = [self.start.x, self.start.v, 1.0, 0.0, 0.0, 1.0];
        self.steps.clear();
        let rhs = self.rhs();
        let mut stepper = Stepper::new(&rhs, self.start.t, y0, tol);
        let mut steps = Vec::new();
        let mut found = None;
        while stepper.t < search_end {
            let step = stepper.step(&rhs, search_end).map_err(Error::Integration)?;
            let (ta, tb) = (step.t0, step.t1());
            let ya = step.eval(ta);
            let yb = step.end();
            let mut v_root = None;
            let mut end = tb;
            if s * yb[1] <= 0.0 && tb - self.start.t > tie {
                let root = if s * ya[1] <= 0.0 {
                    ta
                } else {
                    brent(|t| step.eval(t)[1], ta, tb, ya[1], yb[1])?
                };
                v_root = Some(root);
                end = root;
            }
            let xe = step.eval(end)[0] - wall;
            if s * xe >= 0.0 {
                let tw = brent(|t| step.eval(t)[0] - wall, ta, end, ya[0] - wall, xe)?;
                let grazing = v_root.map_or(false, |tv| (tv - tw).abs() <= tie);
                let v = if grazing { 0.0 } else { step.eval(tw)[1] };
                found = Some(Event {
                    kind: if s > 0.0 { EventKind::ImpactRight } else { EventKind::ImpactLeft },
                    time: tw,
                    state: PhaseState { x: wall, v, t: tw },
                    grazing,
                });
            } else if let Some(tv) = v_root {
                let x = step.eval(tv)[0];
                let grazing = (x - wall).abs() <= 1e-10;
                found = Some(Event {
                    kind: if grazing {
                        if s > 0.0 { EventKind::ImpactRight } else { EventKind::ImpactLeft }
                    } else {
                        EventKind::VelocityZero
                    },
                    time: tv,
                    state: PhaseState { x: if grazing { wall } else { x }, v: 0.0, t: tv },
                    grazing,
                });
            }
            steps.push(step);
            if found.is_some() {
                break;
            }
        }
        drop(rhs);
        self.steps = steps;
        Ok(found.unwrap_or_else(|| Event {
            kind: EventKind::Horizon,
            time: horizon,
            state: self.state_at(horizon),
            grazing: false,
        }))
    }
}

#[derive(Debug, Clone)]
pub enum FlightArc {
    Closed(ClosedArc),
    Integrated(IntegratedArc),
}

/// Build the arc leaving `start` in direction `sign`.
///
/// A start at rest is accepted when the applied force points along `sign` and
/// at least balances friction (release from a stick sits exactly on
/// `|force| = f`).
pub fn make_arc(p: &ValidatedParams, start: PhaseState, sign: Sign) -> Result<FlightArc> {
    match Sign::of(start.v) {
        Some(sv) if sv != sign => {
            return Err(Error::ContractViolation(format!(
                "arc sign {sign:?} disagrees with start velocity {}",
                start.v
            )))
        }
        Some(_) => {}
        None => {
            let force = p.applied_force(start.x, start.t);
            let slack = 1e-9 * p.friction().max(p.forcing()) + 1e-15;
            if Sign::of(force) != Some(sign) && force.abs() > slack
                || force.abs() < p.friction() - slack
            {
                return Err(Error::ContractViolation(format!(
                    "cannot leave rest in direction {sign:?}: force {force}, friction {}",
                    p.friction()
                )));
            }
        }
    }
    Ok(match p.law() {
        ForceLaw::Uniform => FlightArc::Closed(ClosedArc::new(
            start,
            sign,
            p.forcing(),
            p.omega(),
            p.friction(),
        )),
        ForceLaw::WallVanishing => {
            FlightArc::Integrated(IntegratedArc { start, sign, params: *p, steps: Vec::new() })
        }
    })
}

impl FlightArc {
    pub fn start(&self) -> PhaseState {
        match self {
            FlightArc::Closed(a) => a.start,
            FlightArc::Integrated(a) => a.start,
        }
    }

    pub fn sign(&self) -> Sign {
        match self {
            FlightArc::Closed(a) => a.sign,
            FlightArc::Integrated(a) => a.sign,
        }
    }

    pub fn state_at(&self, t: f64) -> PhaseState {
        match self {
            FlightArc::Closed(a) => a.state_at(t),
            FlightArc::Integrated(a) => a.state_at(t),
        }
    }

    pub fn accel_at(&self, t: f64) -> f64 {
        match self {
            FlightArc::Closed(a) => a.accel_at(t),
            FlightArc::Integrated(a) => a.accel_at(t),
        }
    }

    /// Linearized flight from the arc start to `t`.
    pub fn flight_matrix(&self, t: f64) -> Matrix2<f64> {
        match self {
            FlightArc::Closed(a) => Matrix2::new(1.0, t - a.start.t, 0.0, 1.0),
            FlightArc::Integrated(a) => a.flight_matrix(t),
        }
    }

    pub fn next_event(&mut self, p: &ValidatedParams, horizon: f64) -> Result<Event> {
        if horizon <= self.start().t {
            return Err(Error::ContractViolation("horizon must lie after the arc start".into()));
        }
        let tie = TIE_FRACTION * p.period();
        match self {
            FlightArc::Closed(a) => a.next_event(p.l(), p.r(), horizon, tie),
            FlightArc::Integrated(a) => a.next_event(horizon, tie),
        }
    }
}

/// First event on the arc leaving `start` in direction `sign`.
pub fn next_event(p: &ValidatedParams, arc: &mut FlightArc, horizon: f64) -> Result<Event> {
    arc.next_event(p, horizon)
}
