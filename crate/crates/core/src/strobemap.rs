//! The stroboscopic period map and its linearization.
//!
//! The Jacobian of `k` periods is the chronological product of the factor
//! matrices met along the trajectory (latest factor leftmost):
//!
//! | motion / event           | matrix                                      |
//! |--------------------------|---------------------------------------------|
//! | flight over `[t1, t2]`   | `[[1, t2 - t1], [0, 1]]`                    |
//! | sticking                 | `[[1, 0], [0, 0]]`                          |
//! | reflection at `t*`       | `[[-1, 0], [2 g(t*) / v(t*), -1]]`          |
//! | turning point at `t~`    | `[[1, 0], [0, (|g| - f) / (|g| + f)]]`      |
//!
//! where `g` is the applied force at the event. For the wall-vanishing force
//! the flight factor is the fundamental matrix of the variational equation,
//! integrated along the arc.

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PhaseState, ValidatedParams};
use crate::simulator::{simulate_with, Observer, ResolvedEvent, ResolvedKind, Segment, SimOptions};

/// Tolerance of the det-based classification.
pub const DET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Classification {
    AreaPreserving,
    Contracting,
    Singular,
    Undefined,
}

impl Classification {
    pub fn from_det(det: f64) -> Self {
        if det.abs() <= DET_TOL {
            Classification::Singular
        } else if (det.abs() - 1.0).abs() <= DET_TOL {
            Classification::AreaPreserving
        } else {
            Classification::Contracting
        }
    }

    /// Member of the dissipative part of the state space.
    pub fn is_dissipative(self) -> bool {
        matches!(self, Classification::Contracting | Classification::Singular)
    }

    pub fn code(self) -> u8 {
        match self {
            Classification::AreaPreserving => 0,
            Classification::Contracting => 1,
            Classification::Singular => 2,
            Classification::Undefined => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Classification::AreaPreserving => "area_preserving",
            Classification::Contracting => "contracting",
            Classification::Singular => "singular",
            Classification::Undefined => "undefined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FactorKind {
    Flight,
    Stick,
    Reflection,
    Turning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaltationFactor {
    pub kind: FactorKind,
    pub matrix: Matrix2<f64>,
    pub event_time: f64,
}

/// Which velocity enters the reflection factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReflectionVelocity {
    PreImpact,
    PostImpact,
}

/// Convention used by [`phi_jacobian`]; pre-impact agrees with finite differences.
pub const REFLECTION_VELOCITY: ReflectionVelocity = ReflectionVelocity::PreImpact;

pub fn flight_factor(dt: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, dt, 0.0, 1.0)
}

pub fn stick_factor() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, 0.0)
}

/// Reflection saltation matrix for force `force` and impact velocity `velocity`.
pub fn reflection_factor(force: f64, velocity: f64) -> Matrix2<f64> {
    Matrix2::new(-1.0, 0.0, 2.0 * force / velocity, -1.0)
}

pub fn turning_factor(force: f64, friction: f64) -> Matrix2<f64> {
    let g = force.abs();
    Matrix2::new(1.0, 0.0, 0.0, (g - friction) / (g + friction))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct EventSummary {
    pub impacts_left: usize,
    pub impacts_right: usize,
    pub turnings: usize,
    pub stick_starts: usize,
    pub stick_releases: usize,
    pub grazings: usize,
}

impl EventSummary {
    pub fn impacts(&self) -> usize {
        self.impacts_left + self.impacts_right
    }

    /// Any zero-velocity instant (turning, stick or grazing).
    pub fn touches_zero_velocity(&self) -> bool {
        self.turnings + self.stick_starts + self.grazings > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapResult {
    pub input: (f64, f64),
    pub t0: f64,
    pub periods: usize,
    pub output: PhaseState,
    pub summary: EventSummary,
    pub signature: Vec<ResolvedKind>,
    pub jacobian: Option<Matrix2<f64>>,
    /// Product of the factor determinants.
    pub det: Option<f64>,
    pub classification: Classification,
    /// Filled by [`phi_jacobian`] only.
    pub factors: Vec<SaltationFactor>,
}

impl MapResult {
    pub fn output_xy(&self) -> (f64, f64) {
        (self.output.x, self.output.v)
    }
}

struct Linearizer {
    friction: f64,
    convention: ReflectionVelocity,
    keep: bool,
    jacobian: Matrix2<f64>,
    det: f64,
    summary: EventSummary,
    signature: Vec<ResolvedKind>,
    factors: Vec<SaltationFactor>,
    undefined: bool,
}

impl Linearizer {
    fn push(&mut self, kind: FactorKind, matrix: Matrix2<f64>, event_time: f64) {
        self.jacobian = matrix * self.jacobian;
        self.det *= matrix.determinant();
        if self.keep {
            self.factors.push(SaltationFactor { kind, matrix, event_time });
        }
    }
}

impl Observer for Linearizer {
    fn segment(&mut self, segment: Segment) {
        if let Segment::Flight { arc, end } = segment {
            let m = arc.flight_matrix(end);
            self.push(FactorKind::Flight, m, end);
        }
    }

    fn event(&mut self, ev: &ResolvedEvent) {
        match ev.kind {
            ResolvedKind::Horizon => return,
            ResolvedKind::Impact(w) => {
                match w {
                    crate::simulator::Wall::Left => self.summary.impacts_left += 1,
                    crate::simulator::Wall::Right => self.summary.impacts_right += 1,
                }
                let v = match self.convention {
                    ReflectionVelocity::PreImpact => ev.state_before.v,
                    ReflectionVelocity::PostImpact => ev.state_after.v,
                };
                self.push(FactorKind::Reflection, reflection_factor(ev.force_at_event, v), ev.time);
            }
            ResolvedKind::Turning => {
                self.summary.turnings += 1;
                self.push(FactorKind::Turning, turning_factor(ev.force_at_event, self.friction), ev.time);
            }
            ResolvedKind::StickStart => {
                self.summary.stick_starts += 1;
                self.push(FactorKind::Stick, stick_factor(), ev.time);
            }
            ResolvedKind::StickRelease => self.summary.stick_releases += 1,
            ResolvedKind::Grazing => {
                self.summary.grazings += 1;
                self.undefined = true;
            }
        }
        self.signature.push(ev.kind);
    }
}

fn run_map(
    p: &ValidatedParams,
    state: (f64, f64),
    t0: f64,
    periods: usize,
    keep: bool,
    convention: ReflectionVelocity,
) -> Result<MapResult> {
    if periods == 0 {
        return Err(Error::ContractViolation("period count must be at least 1".into()));
    }
    let mut lin = Linearizer {
        friction: p.friction(),
        convention,
        keep,
        jacobian: Matrix2::identity(),
        det: 1.0,
        summary: EventSummary::default(),
        signature: Vec::new(),
        factors: Vec::new(),
        undefined: false,
    };
    let initial = PhaseState::new(state.0, state.1, t0);
    let output = simulate_with(p, initial, periods as f64 * p.period(), SimOptions::default(), &mut lin)?;
    let (jacobian, det, classification) = if lin.undefined {
        (None, None, Classification::Undefined)
    } else {
        (Some(lin.jacobian), Some(lin.det), Classification::from_det(lin.det))
    };
    Ok(MapResult {
        input: state,
        t0,
        periods,
        output,
        summary: lin.summary,
        signature: lin.signature,
        jacobian,
        det,
        classification,
        factors: lin.factors,
    })
}

/// `k` periods of the stroboscopic map from phase `t0`, with its Jacobian.
pub fn phi(p: &ValidatedParams, state: (f64, f64), t0: f64, k: usize) -> Result<MapResult> {
    run_map(p, state, t0, k, false, REFLECTION_VELOCITY)
}

/// Like [`phi`] but also returns the ordered factor list; fails when the
/// Jacobian is undefined (grazing).
pub fn phi_jacobian(p: &ValidatedParams, state: (f64, f64), t0: f64, k: usize) -> Result<MapResult> {
    phi_jacobian_with(p, state, t0, k, REFLECTION_VELOCITY)
}

pub fn phi_jacobian_with(
    p: &ValidatedParams,
    state: (f64, f64),
    t0: f64,
    k: usize,
    convention: ReflectionVelocity,
) -> Result<MapResult> {
    let res = run_map(p, state, t0, k, true, convention)?;
    if res.classification == Classification::Undefined {
        let time = res
            .factors
            .last()
            .map(|f| f.event_time)
            .unwrap_or(t0);
        return Err(Error::JacobianUndefined { time });
    }
    Ok(res)
}

pub const DEFAULT_FD_STEP: f64 = 1e-7;

/// Central finite-difference Jacobian of `k` periods.
///
/// Refuses when any probe sees a different ordered event list than the base
/// point, i.e. when the probes straddle a nonsmooth boundary of the map.
pub fn jacobian_fd(
    p: &ValidatedParams,
    state: (f64, f64),
    t0: f64,
    k: usize,
    h: Option<f64>,
) -> Result<Matrix2<f64>> {
    let h = h.unwrap_or(DEFAULT_FD_STEP);
    let hx = h * state.0.abs().max(1.0);
    let hv = h * state.1.abs().max(1.0);
    let base = phi(p, state, t0, k)?;
    let probe = |dx: f64, dv: f64| -> Result<(f64, f64)> {
        let z = (state.0 + dx, state.1 + dv);
        if !p.contains(z.0) {
            return Err(Error::NonsmoothProbe);
        }
        let r = phi(p, z, t0, k)?;
        if r.signature != base.signature {
            return Err(Error::NonsmoothProbe);
        }
        Ok(r.output_xy())
    };
    let xp = probe(hx, 0.0)?;
    let xm = probe(-hx, 0.0)?;
    let vp = probe(0.0, hv)?;
    let vm = probe(0.0, -hv)?;
    Ok(Matrix2::new(
        (xp.0 - xm.0) / (2.0 * hx),
        (vp.0 - vm.0) / (2.0 * hv),
        (xp.1 - xm.1) / (2.0 * hx),
        (vp.1 - vm.1) / (2.0 * hv),
    ))
}

/// Relative Frobenius distance `|a - b| / |b|`.
pub fn relative_error(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
