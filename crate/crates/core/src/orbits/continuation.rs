//! Pseudo-arclength continuation of fixed points of `Phi^k` in the friction `f`.

use std::f64::consts::PI;

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ValidatedParams;
use crate::simulator::ResolvedKind;
use crate::strobemap::{jacobian_fd, phi, phi_jacobian, MapResult};

use super::periodic::{find_periodic, OrbitKind, OrbitRecord, RESIDUAL_TOL};

#[derive(Debug, Clone, Copy)]
pub struct StepPolicy {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub shrink: f64,
    pub grow: f64,
    pub max_steps: usize,
    /// Initial direction of travel in `f`: `+1` or `-1`.
    pub direction: f64,
    pub stop_at_fold: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            initial: 1e-3,
            min: 1e-7,
            max: 0.05,
            shrink: 0.5,
            grow: 1.5,
            max_steps: 5000,
            direction: 1.0,
            stop_at_fold: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Fold,
    RangeExit,
    StickingBoundary,
    StepTooSmall,
    MaxSteps,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub f: f64,
    pub state: (f64, f64),
    pub trace: f64,
    pub det: f64,
    pub kind: OrbitKind,
}

impl BranchPoint {
    fn of(f: f64, orbit: &OrbitRecord) -> Self {
        BranchPoint { f, state: orbit.fixed_state, trace: orbit.trace, det: orbit.det, kind: orbit.kind }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub f_crit: f64,
    pub state: (f64, f64),
    /// `2F/pi` when the branch consists of symmetric two-impact orbits.
    pub analytic: Option<f64>,
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Continuation {
    pub points: Vec<BranchPoint>,
    pub fold: Option<FoldReport>,
    pub termination: Termination,
    pub k: usize,
}

struct Point {
    y: Vector3<f64>,
    tangent: Vector3<f64>,
    map: MapResult,
}

struct Ctx<'a> {
    base: &'a ValidatedParams,
    k: usize,
    t0: f64,
    signature: Vec<ResolvedKind>,
}

enum Reject {
    Sticking,
    Other,
}

impl Ctx<'_> {
    fn params(&self, f: f64) -> Result<ValidatedParams> {
        self.base.with_friction(f)
    }

    fn eval(&self, y: &Vector3<f64>) -> Result<(MapResult, Matrix2x3<f64>)> {
        let p = self.params(y.z)?;
        let z = (y.x, y.y);
        let (map, jac) = match phi_jacobian(&p, z, self.t0, self.k) {
            Ok(m) => {
                let j = m.jacobian.expect("defined jacobian");
                (m, j)
            }
            Err(Error::JacobianUndefined { .. }) => {
                (phi(&p, z, self.t0, self.k)?, jacobian_fd(&p, z, self.t0, self.k, None)?)
            }
            Err(e) => return Err(e),
        };
        let df = self.d_friction(y, &map)?;
        let a = Matrix2x3::new(
            jac.m11 - 1.0,
            jac.m12,
            df.x,
            jac.m21,
            jac.m22 - 1.0,
            df.y,
        );
        Ok((map, a))
    }

    /// `d Phi^k / d f` by central differences, one-sided at `f = 0`.
    fn d_friction(&self, y: &Vector3<f64>, map: &MapResult) -> Result<Vector2<f64>> {
        let h = 1e-7 * y.z.abs().max(1.0);
        let out = |f: f64| -> Result<Option<Vector2<f64>>> {
            let m = phi(&self.params(f)?, (y.x, y.y), self.t0, self.k)?;
            Ok((m.signature == map.signature).then(|| Vector2::new(m.output.x, m.output.v)))
        };
        let centre = Vector2::new(map.output.x, map.output.v);
        let plus = out(y.z + h)?;
        let minus = if y.z - h >= 0.0 { out(y.z - h)? } else { None };
        match (plus, minus) {
            (Some(a), Some(b)) => Ok((a - b) / (2.0 * h)),
            (Some(a), None) => Ok((a - centre) / h),
            (None, Some(b)) => Ok((centre - b) / h),
            (None, None) => Err(Error::NonsmoothProbe),
        }
    }

    fn residual(map: &MapResult) -> Vector2<f64> {
        Vector2::new(map.output.x - map.input.0, map.output.v - map.input.1)
    }

    fn tangent(a: &Matrix2x3<f64>, previous: &Vector3<f64>) -> Vector3<f64> {
        let r1 = Vector3::new(a.m11, a.m12, a.m13);
        let r2 = Vector3::new(a.m21, a.m22, a.m23);
        let t = r1.cross(&r2).normalize();
        if t.dot(previous) < 0.0 {
            -t
        } else {
            t
        }
    }

    fn correct(&self, from: &Point, ds: f64) -> std::result::Result<Point, Reject> {
        let pred = from.y + from.tangent * ds;
        let mut y = pred;
        for _ in 0..12 {
            if y.z < 0.0 || !self.base.contains(y.x) {
                return Err(Reject::Other);
            }
            let (map, a) = self.eval(&y).map_err(|_| Reject::Other)?;
            if map.signature != self.signature {
                let sticks = map
                    .signature
                    .iter()
                    .any(|k| matches!(k, ResolvedKind::Turning | ResolvedKind::StickStart));
                return Err(if sticks { Reject::Sticking } else { Reject::Other });
            }
            let g = Self::residual(&map);
            let arc = from.tangent.dot(&(y - pred));
            if g.norm() <= RESIDUAL_TOL && arc.abs() <= 1e-12 {
                let tangent = Self::tangent(&a, &from.tangent);
                return Ok(Point { y, tangent, map });
            }
            let m = Matrix3::new(
                a.m11,
                a.m12,
                a.m13,
                a.m21,
                a.m22,
                a.m23,
                from.tangent.x,
                from.tangent.y,
                from.tangent.z,
            );
            let rhs = Vector3::new(-g.x, -g.y, -arc);
            let dy = m.lu().solve(&rhs).ok_or(Reject::Other)?;
            y += dy;
            if dy.norm() > 5.0 * ds.abs().max(1e-3) {
                return Err(Reject::Other);
            }
        }
        Err(Reject::Other)
    }
}

/// Continues `orbit` in `f` within `f_range`.
pub fn continue_in_f(
    p: &ValidatedParams,
    orbit: &OrbitRecord,
    f_range: (f64, f64),
    policy: StepPolicy,
) -> Result<Continuation> {
    let (f_lo, f_hi) = (f_range.0.min(f_range.1), f_range.0.max(f_range.1));
    if f_lo < 0.0 {
        return Err(Error::InvalidParams("friction range must be non-negative".into()));
    }
    let base = p.with_friction(orbit.params.friction)?;
    let ctx = Ctx { base: &base, k: orbit.k, t0: orbit.t0, signature: orbit.signature.clone() };
    let y0 = Vector3::new(orbit.fixed_state.0, orbit.fixed_state.1, orbit.params.friction);
    let (map, a) = ctx.eval(&y0)?;
    let seed_dir = Vector3::new(0.0, 0.0, policy.direction.signum());
    let tangent = Ctx::tangent(&a, &seed_dir);
    let mut cur = Point { y: y0, tangent, map };
    let mut points = vec![BranchPoint::of(y0.z, orbit)];
    let mut ds = policy.initial;
    let mut fold = None;

    for _ in 0..policy.max_steps {
        let f_pred = cur.y.z + ds * cur.tangent.z;
        if f_pred < f_lo || f_pred > f_hi {
            let bound = if f_pred < f_lo { f_lo } else { f_hi };
            let s = (bound - cur.y.z) / cur.tangent.z;
            let guess = cur.y + cur.tangent * s;
            let end = ctx.params(bound).ok().and_then(|p| find_periodic(&p, (guess.x, guess.y), ctx.k, ctx.t0).ok());
            if let Some(end) = end {
                points.push(BranchPoint::of(bound, &end));
                return Ok(Continuation { points, fold, termination: Termination::RangeExit, k: orbit.k });
            }
        }
        let next = match ctx.correct(&cur, ds) {
            Ok(n) => n,
            Err(why) => {
                ds *= policy.shrink;
                if ds < policy.min {
                    let termination = match why {
                        Reject::Sticking => Termination::StickingBoundary,
                        Reject::Other => Termination::StepTooSmall,
                    };
                    return Ok(Continuation { points, fold, termination, k: orbit.k });
                }
                continue;
            }
        };
        if next.y.z < f_lo || next.y.z > f_hi {
            let bound = if next.y.z < f_lo { f_lo } else { f_hi };
            if let Some(end) = endpoint(&ctx, &cur, &next, bound) {
                points.push(BranchPoint::of(bound, &end));
            }
            return Ok(Continuation { points, fold, termination: Termination::RangeExit, k: orbit.k });
        }
        if fold.is_none() && cur.tangent.z * next.tangent.z < 0.0 {
            let report = refine_fold(&ctx, &cur, ds);
            let stop = policy.stop_at_fold;
            if let Some(r) = &report {
                if let Ok(o) = record(&ctx, (r.state.0, r.state.1), r.f_crit) {
                    points.push(BranchPoint::of(r.f_crit, &o));
                }
            }
            fold = report;
            if stop {
                return Ok(Continuation { points, fold, termination: Termination::Fold, k: orbit.k });
            }
        }
        if let Ok(o) = record(&ctx, (next.y.x, next.y.y), next.y.z) {
            points.push(BranchPoint::of(next.y.z, &o));
        }
        cur = next;
        ds = (ds * policy.grow).min(policy.max);
    }
    Ok(Continuation { points, fold, termination: Termination::MaxSteps, k: orbit.k })
}

fn record(ctx: &Ctx, z: (f64, f64), f: f64) -> Result<OrbitRecord> {
    let p = ctx.params(f)?;
    OrbitRecord::at(&p, z, ctx.t0, ctx.k)
}

/// Fixed point exactly at the range boundary `f = bound`.
fn endpoint(ctx: &Ctx, a: &Point, b: &Point, bound: f64) -> Option<OrbitRecord> {
    let s = (bound - a.y.z) / (b.y.z - a.y.z);
    let guess = a.y + (b.y - a.y) * s;
    let p = ctx.params(bound).ok()?;
    find_periodic(&p, (guess.x, guess.y), ctx.k, ctx.t0).ok()
}

/// Bisection on arclength for the zero of the tangent's `f` component.
fn refine_fold(ctx: &Ctx, from: &Point, ds: f64) -> Option<FoldReport> {
    let sign0 = from.tangent.z.signum();
    let (mut lo, mut hi) = (0.0, ds);
    let mut best: Option<Point> = None;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match ctx.correct(from, mid) {
            Ok(pt) => {
                if pt.tangent.z.signum() == sign0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                best = Some(pt);
            }
            Err(_) => hi = mid,
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let pt = best?;
    let summary = &pt.map.summary;
    let symmetric = ctx.k == 1
        && summary.impacts_left == 1
        && summary.impacts_right == 1
        && !summary.touches_zero_velocity();
    let analytic = symmetric.then(|| 2.0 * ctx.base.forcing() / PI);
    Some(FoldReport {
        f_crit: pt.y.z,
        state: (pt.y.x, pt.y.y),
        analytic,
        deviation: analytic.map(|a| (pt.y.z - a).abs()),
    })
}
