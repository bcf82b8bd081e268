//! Closed-form symmetric two-impact orbits of the uniform-force oscillator.
//!
//! On the rightward flight, starting at the left wall at phase `psi`,
//!
//! ```text
//! X(s) = -(F/w^2) cos(psi + w s) - f s^2 / 2 + C s + D,    0 <= s <= pi / w,
//! ```
//!
//! and the leftward flight is its mirror image `r + l - X(s)` half a period
//! later, so `x(t) = -x(t + pi/w) + r + l`.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ForceLaw, PhaseState, ValidatedParams};

use super::periodic::OrbitRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    X1,
    X2,
}

impl Branch {
    /// `+1` for the upper signs of the coefficient formulas, `-1` for the lower.
    fn sign(self) -> f64 {
        match self {
            Branch::X1 => 1.0,
            Branch::X2 => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricOrbitFormula {
    pub branch: Branch,
    pub psi: f64,
    pub tau: f64,
    pub c: f64,
    pub d: f64,
    forcing: f64,
    friction: f64,
    omega: f64,
    l: f64,
    r: f64,
}

impl SymmetricOrbitFormula {
    /// Coefficients of the branch; `None` past the fold (`f / F > 2 / pi`).
    pub fn new(p: &ValidatedParams, branch: Branch) -> Option<Self> {
        let (big_f, f, w) = (p.forcing(), p.friction(), p.omega());
        let ratio = PI * f / (2.0 * big_f);
        if !(ratio <= 1.0) {
            return None;
        }
        let a = ratio.asin();
        let root = (4.0 * big_f * big_f - f * f * PI * PI).max(0.0).sqrt();
        let s = branch.sign();
        let psi = match branch {
            Branch::X1 => PI + a,
            Branch::X2 => -a,
        };
        Some(SymmetricOrbitFormula {
            branch,
            psi,
            tau: psi - s * PI,
            c: (f * PI * PI + s * 2.0 * root + 2.0 * p.width() * w * w) / (2.0 * PI * w),
            d: p.l() - s * root / (2.0 * w * w),
            forcing: big_f,
            friction: f,
            omega: w,
            l: p.l(),
            r: p.r(),
        })
    }

    /// Rightward flight, `s` time units after leaving the left wall.
    fn rightward(&self, s: f64) -> (f64, f64) {
        let (w, big_f, f) = (self.omega, self.forcing, self.friction);
        let phase = self.psi + w * s;
        let x = -big_f / (w * w) * phase.cos() - 0.5 * f * s * s + self.c * s + self.d;
        let v = big_f / w * phase.sin() - f * s + self.c;
        (x, v)
    }

    /// Post-impact state at time `t`.
    pub fn state_at(&self, t: f64) -> PhaseState {
        let w = self.omega;
        let theta = (w * t - self.psi).rem_euclid(TAU);
        let (x, v) = if theta < PI {
            self.rightward(theta / w)
        } else {
            let (x, v) = self.rightward((theta - PI) / w);
            (self.r + self.l - x, -v)
        };
        PhaseState::new(x, v, t)
    }

    /// Smallest speed along a flight between the walls.
    pub fn min_speed(&self) -> f64 {
        let (w, big_f, f) = (self.omega, self.forcing, self.friction);
        let half = PI / w;
        let mut best = self.rightward(0.0).1.min(self.rightward(half).1);
        if f < big_f {
            // Interior minima of the velocity sit where cos(phase) = f/F, sin(phase) < 0.
            let target = -(f / big_f).acos();
            let s = (target - self.psi).rem_euclid(TAU) / w;
            if s <= half {
                best = best.min(self.rightward(s).1);
            }
        }
        best
    }
}

/// Left-hand side of the closed-form non-sticking condition for the
/// symmetric orbits; positive when they do not stick.
pub fn nonsticking_condition(p: &ValidatedParams) -> Result<f64> {
    let (big_f, f, w) = (p.forcing(), p.friction(), p.omega());
    if f >= big_f {
        return Err(Error::InvalidParams(format!("condition needs f < F (f = {f}, F = {big_f})")));
    }
    if f / big_f > 2.0 / PI {
        return Err(Error::InvalidParams(format!("condition needs f/F <= 2/pi (f/F = {})", f / big_f)));
    }
    let a = (PI * f / (2.0 * big_f)).asin();
    Ok((4.0 * big_f * big_f - PI * PI * f * f).sqrt() - PI * (big_f * big_f - f * f).sqrt()
        + PI * f * (a - (f / big_f).asin())
        + p.width() * w * w)
}

/// The symmetric orbit of `branch` as a fixed point of the period map.
pub fn symmetric_orbit(p: &ValidatedParams, branch: Branch) -> Result<OrbitRecord> {
    let formula = symmetric_formula(p, branch)?;
    let s = formula.state_at(0.0);
    OrbitRecord::at(p, (s.x, s.v), 0.0, 1)
}

/// Checked coefficients: fails past the fold or when the orbit would stop.
pub fn symmetric_formula(p: &ValidatedParams, branch: Branch) -> Result<SymmetricOrbitFormula> {
    if p.law() != ForceLaw::Uniform {
        return Err(Error::ContractViolation("symmetric orbits need the uniform force law".into()));
    }
    let formula = SymmetricOrbitFormula::new(p, branch).ok_or_else(|| {
        Error::Nonexistence(format!("fold passed: f/F = {} > 2/pi", p.friction() / p.forcing()))
    })?;
    let min = formula.min_speed();
    if !(min > 0.0) {
        return Err(Error::Nonexistence(format!("sticking: minimum flight velocity {min:.6e}")));
    }
    Ok(formula)
}
