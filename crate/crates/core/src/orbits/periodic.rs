//! Fixed points of `Phi^k` by damped Newton iteration.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{OscillatorParams, ValidatedParams};
use crate::simulator::ResolvedKind;
use crate::strobemap::{jacobian_fd, phi, phi_jacobian, MapResult};

/// Residual `|Phi^k(z) - z|` required for convergence.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Window around `det = 1` inside which an orbit counts as conservative.
const CONSERVATIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitKind {
    Center,
    Saddle,
    AttractingNode,
    AttractingFocus,
    Degenerate,
}

impl OrbitKind {
    pub fn label(self) -> &'static str {
        match self {
            OrbitKind::Center => "center",
            OrbitKind::Saddle => "saddle",
            OrbitKind::AttractingNode => "attracting_node",
            OrbitKind::AttractingFocus => "attracting_focus",
            OrbitKind::Degenerate => "degenerate",
        }
    }

    /// Classifies a 2x2 map linearization by trace and determinant.
    pub fn classify(trace: f64, det: f64) -> OrbitKind {
        let disc = trace * trace - 4.0 * det;
        if (det - 1.0).abs() <= CONSERVATIVE_TOL {
            let gap = trace.abs() - 2.0;
            if gap.abs() <= 1e-9 {
                OrbitKind::Degenerate
            } else if gap < 0.0 {
                OrbitKind::Center
            } else {
                OrbitKind::Saddle
            }
        } else if det.abs() < 1.0 {
            let (l1, l2) = eigenvalues(trace, det);
            if l1.norm().max(l2.norm()) < 1.0 {
                if disc < 0.0 {
                    OrbitKind::AttractingFocus
                } else {
                    OrbitKind::AttractingNode
                }
            } else if l1.norm().min(l2.norm()) < 1.0 {
                OrbitKind::Saddle
            } else {
                OrbitKind::Degenerate
            }
        } else {
            OrbitKind::Degenerate
        }
    }
}

/// Roots of `lambda^2 - trace lambda + det`, smaller modulus first.
pub fn eigenvalues(trace: f64, det: f64) -> (Complex64, Complex64) {
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let sgn = if trace >= 0.0 { 1.0 } else { -1.0 };
        let big = 0.5 * (trace + sgn * s);
        let small = if big != 0.0 { det / big } else { 0.5 * (trace - s) };
        let (a, b) = if small.abs() <= big.abs() { (small, big) } else { (big, small) };
        (Complex64::new(a, 0.0), Complex64::new(b, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * trace, -im), Complex64::new(0.5 * trace, im))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord {
    pub fixed_state: (f64, f64),
    pub t0: f64,
    pub k: usize,
    pub multipliers: (Complex64, Complex64),
    pub trace: f64,
    pub det: f64,
    pub kind: OrbitKind,
    pub signature: Vec<ResolvedKind>,
    pub params: OscillatorParams,
    pub residual: f64,
    pub impacts: usize,
    pub turnings: usize,
    pub sticks: usize,
}

impl OrbitRecord {
    /// Builds the record for a point already known to be periodic.
    pub fn at(p: &ValidatedParams, state: (f64, f64), t0: f64, k: usize) -> Result<OrbitRecord> {
        let res = phi_jacobian(p, state, t0, k)?;
        let jac = res.jacobian.expect("phi_jacobian returns a defined jacobian");
        Ok(Self::from_map(p, &res, jac, res.det.unwrap_or(jac.determinant())))
    }

    fn from_map(p: &ValidatedParams, res: &MapResult, jac: Matrix2<f64>, det: f64) -> OrbitRecord {
        let trace = jac.trace();
        let out = res.output_xy();
        let residual = (out.0 - res.input.0).hypot(out.1 - res.input.1);
        OrbitRecord {
            fixed_state: res.input,
            t0: res.t0,
            k: res.periods,
            multipliers: eigenvalues(trace, det),
            trace,
            det,
            kind: OrbitKind::classify(trace, det),
            signature: res.signature.clone(),
            params: *p.raw(),
            residual,
            impacts: res.summary.impacts(),
            turnings: res.summary.turnings,
            sticks: res.summary.stick_starts,
        }
    }

    /// Multipliers as real numbers when both are real.
    pub fn real_multipliers(&self) -> Option<(f64, f64)> {
        let (a, b) = self.multipliers;
        (a.im == 0.0 && b.im == 0.0).then_some((a.re, b.re))
    }

    pub fn is_nonsticking(&self) -> bool {
        self.turnings == 0 && self.sticks == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub min_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 60, min_damping: 1.0 / 1024.0 }
    }
}

struct Linearized {
    map: MapResult,
    jac: Matrix2<f64>,
    det: f64,
}

fn linearize(p: &ValidatedParams, z: (f64, f64), t0: f64, k: usize) -> Result<Linearized> {
    match phi_jacobian(p, z, t0, k) {
        Ok(map) => {
            let jac = map.jacobian.expect("defined jacobian");
            let det = map.det.unwrap_or(jac.determinant());
            Ok(Linearized { map, jac, det })
        }
        Err(Error::JacobianUndefined { .. }) => {
            let map = phi(p, z, t0, k)?;
            let jac = jacobian_fd(p, z, t0, k, None)?;
            Ok(Linearized { det: jac.determinant(), map, jac })
        }
        Err(e) => Err(e),
    }
}

fn residual(map: &MapResult) -> Vector2<f64> {
    let out = map.output_xy();
    Vector2::new(out.0 - map.input.0, out.1 - map.input.1)
}

/// Locates a fixed point of `Phi^k` near `guess`.
pub fn find_periodic(
    p: &ValidatedParams,
    guess: (f64, f64),
    k: usize,
    t0: f64,
) -> Result<OrbitRecord> {
    find_periodic_opts(p, guess, k, t0, NewtonOptions::default())
}

pub fn find_periodic_opts(
    p: &ValidatedParams,
    guess: (f64, f64),
    k: usize,
    t0: f64,
    opts: NewtonOptions,
) -> Result<OrbitRecord> {
    if !p.contains(guess.0) {
        return Err(Error::ContractViolation(format!("guess x = {} lies outside the walls", guess.0)));
    }
    let mut cur = linearize(p, guess, t0, k)?;
    let mut g = residual(&cur.map);
    for _ in 0..opts.max_iter {
        if g.norm() <= RESIDUAL_TOL {
            return Ok(OrbitRecord::from_map(p, &cur.map, cur.jac, cur.det));
        }
        let a = cur.jac - Matrix2::identity();
        let step = a
            .try_inverse()
            .map(|inv| -(inv * g))
            .ok_or_else(|| Error::NoConvergence("singular Newton matrix (Phi' has multiplier 1)".into()))?;
        let z = Vector2::new(cur.map.input.0, cur.map.input.1);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= opts.min_damping {
            let trial = z + step * alpha;
            if p.contains(trial.x) {
                if let Ok(next) = linearize(p, (trial.x, trial.y), t0, k) {
                    let gn = residual(&next.map);
                    let same_piece = next.map.signature == cur.map.signature;
                    if same_piece && gn.norm() < g.norm() {
                        accepted = Some((next, gn));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((next, gn)) => {
                cur = next;
                g = gn;
            }
            None => {
                // The root may lie in a neighbouring smooth piece: take the
                // full step once the local piece is exhausted.
                let trial = z + step;
                if !p.contains(trial.x) {
                    return Err(Error::NoConvergence("Newton step left the walls".into()));
                }
                let next = linearize(p, (trial.x, trial.y), t0, k)?;
                let gn = residual(&next.map);
                if gn.norm() >= g.norm() {
                    return Err(Error::NoConvergence(format!(
                        "damping exhausted at residual {:.3e}",
                        g.norm()
                    )));
                }
                cur = next;
                g = gn;
            }
        }
    }
    if g.norm() <= RESIDUAL_TOL {
        return Ok(OrbitRecord::from_map(p, &cur.map, cur.jac, cur.det));
    }
    Err(Error::NoConvergence(format!(
        "{} iterations, residual {:.3e}",
        opts.max_iter,
        g.norm()
    )))
}
