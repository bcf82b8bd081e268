//! Physical parameters, phase states and the external force laws.
//!
//! The oscillator is a unit mass between rigid walls at `l` and `r`, driven by
//! a harmonic force and resisted by Coulomb friction of magnitude `f`:
//!
//! ```text
//! x'' + f sgn(x') = A(x) cos(omega t),    l < x < r
//! ```
//!
//! where `A(x) = F` for [`ForceLaw::Uniform`] and `A(x) = F cos(pi x / 2)` for
//! [`ForceLaw::WallVanishing`] (walls fixed at -1 and 1).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceLaw {
    #[default]
    Uniform,
    WallVanishing,
}

impl std::str::FromStr for ForceLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform" => Ok(ForceLaw::Uniform),
            "wall_vanishing" => Ok(ForceLaw::WallVanishing),
            other => Err(Error::InvalidParams(format!("unknown force law `{other}`"))),
        }
    }
}

/// Raw physical parameters, as read from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Forcing amplitude `F`.
    #[serde(rename = "F")]
    pub forcing: f64,
    /// Kinetic (and static) friction magnitude `f`.
    #[serde(rename = "f")]
    pub friction: f64,
    pub omega: f64,
    pub l: f64,
    pub r: f64,
    #[serde(default)]
    pub force_law: ForceLaw,
}

impl OscillatorParams {
    pub fn uniform(forcing: f64, friction: f64, omega: f64, l: f64, r: f64) -> Self {
        Self { forcing, friction, omega, l, r, force_law: ForceLaw::Uniform }
    }

    pub fn wall_vanishing(forcing: f64, friction: f64, omega: f64) -> Self {
        Self { forcing, friction, omega, l: -1.0, r: 1.0, force_law: ForceLaw::WallVanishing }
    }

    pub fn validate(self) -> Result<ValidatedParams> {
        validate_params(self)
    }
}

/// Parameters that passed validation, with derived quantities cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedParams {
    raw: OscillatorParams,
    width: f64,
    period: f64,
    globally_sticking: bool,
}

pub fn validate_params(p: OscillatorParams) -> Result<ValidatedParams> {
    let finite = [p.forcing, p.friction, p.omega, p.l, p.r].iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidParams("parameters must be finite".into()));
    }
    if p.r <= p.l {
        return Err(Error::InvalidParams(format!("r = {} must exceed l = {}", p.r, p.l)));
    }
    if p.omega <= 0.0 {
        return Err(Error::InvalidParams(format!("omega = {} must be positive", p.omega)));
    }
    if p.forcing < 0.0 || p.friction < 0.0 {
        return Err(Error::InvalidParams("F and f must be non-negative".into()));
    }
    if p.force_law == ForceLaw::WallVanishing && (p.l != -1.0 || p.r != 1.0) {
        return Err(Error::InvalidParams(
            "the wall-vanishing force law requires walls at l = -1, r = 1".into(),
        ));
    }
    Ok(ValidatedParams {
        raw: p,
        width: p.r - p.l,
        period: 2.0 * PI / p.omega,
        globally_sticking: p.friction >= p.forcing,
    })
}

impl ValidatedParams {
    pub fn raw(&self) -> &OscillatorParams {
        &self.raw
    }
    pub fn forcing(&self) -> f64 {
        self.raw.forcing
    }
    pub fn friction(&self) -> f64 {
        self.raw.friction
    }
    pub fn omega(&self) -> f64 {
        self.raw.omega
    }
    pub fn l(&self) -> f64 {
        self.raw.l
    }
    pub fn r(&self) -> f64 {
        self.raw.r
    }
    pub fn law(&self) -> ForceLaw {
        self.raw.force_law
    }
    /// Wall separation `R = r - l`.
    pub fn width(&self) -> f64 {
        self.width
    }
    /// Forcing period `T = 2 pi / omega`.
    pub fn period(&self) -> f64 {
        self.period
    }
    /// `f >= F`: no motion can be sustained (for the uniform law every rest
    /// state is permanent).
    pub fn globally_sticking(&self) -> bool {
        self.globally_sticking
    }

    /// Same geometry and forcing with a different friction value.
    pub fn with_friction(&self, friction: f64) -> Result<ValidatedParams> {
        validate_params(OscillatorParams { friction, ..self.raw })
    }

    /// Spatial envelope `A(x)` of the force, `force = A(x) cos(omega t)`.
    #[inline]
    pub fn amplitude_at(&self, x: f64) -> f64 {
        match self.raw.force_law {
            ForceLaw::Uniform => self.raw.forcing,
            ForceLaw::WallVanishing => self.raw.forcing * (FRAC_PI_2 * x).cos(),
        }
    }

    /// `dA/dx`, used by the variational equations of the wall-vanishing law.
    #[inline]
    pub fn amplitude_slope(&self, x: f64) -> f64 {
        match self.raw.force_law {
            ForceLaw::Uniform => 0.0,
            ForceLaw::WallVanishing => -self.raw.forcing * FRAC_PI_2 * (FRAC_PI_2 * x).sin(),
        }
    }

    #[inline]
    pub fn applied_force(&self, x: f64, t: f64) -> f64 {
        self.amplitude_at(x) * (self.raw.omega * t).cos()
    }

    pub fn force_sample(&self, x: f64, t: f64) -> ForceSample {
        ForceSample {
            value: self.applied_force(x, t),
            wall_vanishing_eta: self.sticking_band().ok().map(|b| b.eta),
        }
    }

    pub fn sticking_band(&self) -> Result<StickingBand> {
        sticking_band(self)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.raw.l <= x && x <= self.raw.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceSample {
    pub value: f64,
    pub wall_vanishing_eta: Option<f64>,
}

/// Rest set of the wall-vanishing law, `[-1, -eta]` and `[eta, 1]`: the points
/// where `|F cos(pi x / 2)| <= f`, so friction holds a resting particle forever.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StickingBand {
    pub eta: f64,
    pub left: (f64, f64),
    pub right: (f64, f64),
}

impl StickingBand {
    pub fn contains(&self, x: f64) -> bool {
        (self.left.0 <= x && x <= self.left.1) || (self.right.0 <= x && x <= self.right.1)
    }
}

pub fn sticking_band(p: &ValidatedParams) -> Result<StickingBand> {
    if p.law() != ForceLaw::WallVanishing {
        return Err(Error::InvalidParams(
            "the sticking band is only defined for the wall-vanishing force law".into(),
        ));
    }
    let (big_f, f) = (p.forcing(), p.friction());
    // f >= F: friction beats the force everywhere and eta = 0.
    let ratio = if big_f > 0.0 { (f / big_f).min(1.0) } else { 1.0 };
    let eta = (2.0 / PI) * ratio.acos();
    Ok(StickingBand { eta, left: (-1.0, -eta), right: (eta, 1.0) })
}

/// Position, velocity and absolute time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub v: f64,
    pub t: f64,
}

impl PhaseState {
    pub fn new(x: f64, v: f64, t: f64) -> Self {
        Self { x, v, t }
    }

    /// Same (x, v) and forcing phase.
    pub fn phase_equivalent(&self, other: &PhaseState, period: f64, tol: f64) -> bool {
        let cycles = (other.t - self.t) / period;
        (cycles - cycles.round()).abs() * period <= tol
            && (self.x - other.x).abs() <= tol
            && (self.v - other.v).abs() <= tol
    }
}

/// Velocity direction of a flight arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub fn of(v: f64) -> Option<Sign> {
        if v > 0.0 {
            Some(Sign::Pos)
        } else if v < 0.0 {
            Some(Sign::Neg)
        } else {
            None
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_reference_case() {
        let p = OscillatorParams::uniform(1.0, 0.0, 1.0, 0.0, 0.8).validate().unwrap();
        assert!((p.width() - 0.8).abs() < 1e-15);
        assert!((p.period() - 2.0 * PI).abs() < 1e-15);
        assert!(!p.globally_sticking());
    }

    #[test]
    fn flags_globally_sticking() {
        let p = OscillatorParams::uniform(1.0, 1.5, 1.0, 0.0, 1.0).validate().unwrap();
        assert!(p.globally_sticking());
    }

    #[test]
    fn rejects_bad_geometry_and_frequency() {
        assert!(OscillatorParams::uniform(1.0, 0.1, 1.0, 1.0, 0.0).validate().is_err());
        assert!(OscillatorParams::uniform(1.0, 0.1, 0.0, 0.0, 1.0).validate().is_err());
        assert!(OscillatorParams::uniform(-1.0, 0.1, 1.0, 0.0, 1.0).validate().is_err());
        assert!(OscillatorParams::uniform(1.0, -0.1, 1.0, 0.0, 1.0).validate().is_err());
        let bad = OscillatorParams { l: 0.0, ..OscillatorParams::wall_vanishing(1.0, 0.1, 1.0) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn force_laws() {
        let u = OscillatorParams::uniform(1.0, 0.0, 1.0, 0.0, 1.0).validate().unwrap();
        assert_eq!(u.applied_force(0.3, 0.0), 1.0);
        let w = OscillatorParams::wall_vanishing(1.0, 0.1, 2.0 * PI).validate().unwrap();
        assert!(w.applied_force(1.0, 0.3).abs() < 1e-15);
        assert!(w.applied_force(-1.0, 0.3).abs() < 1e-15);
        assert_eq!(w.applied_force(0.0, 0.0), 1.0);
    }

    #[test]
    fn band_values() {
        let w = OscillatorParams::wall_vanishing(1.0, 0.1, 2.0 * PI).validate().unwrap();
        let band = w.sticking_band().unwrap();
        // (2/pi) acos(0.1), evaluated with mpmath to 20 digits.
        assert!((band.eta - 0.936_231_439_141_480_1).abs() < 1e-12);
        assert!(band.contains(0.99) && band.contains(-0.99) && !band.contains(0.0));
        assert!(!band.contains(0.9) && !band.contains(-0.93));

        let one = OscillatorParams::wall_vanishing(1.0, 1.0, 2.0 * PI).validate().unwrap();
        let all = one.sticking_band().unwrap();
        assert_eq!(all.eta, 0.0);
        assert!(all.contains(0.0) && all.contains(0.5));
        let zero = OscillatorParams::wall_vanishing(1.0, 0.0, 2.0 * PI).validate().unwrap();
        assert!((zero.sticking_band().unwrap().eta - 1.0).abs() < 1e-15);

        let u = OscillatorParams::uniform(1.0, 0.1, 1.0, 0.0, 1.0).validate().unwrap();
        assert!(u.sticking_band().is_err());
    }

    #[test]
    fn force_is_periodic() {
        let w = OscillatorParams::wall_vanishing(1.3, 0.1, 2.0 * PI).validate().unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.0137;
            let x = -1.0 + i as f64 / 100.0;
            let a = w.applied_force(x, t);
            let b = w.applied_force(x, t + w.period());
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rest_band_matches_force_scan() {
        let w = OscillatorParams::wall_vanishing(1.0, 0.1, 2.0 * PI).validate().unwrap();
        let band = w.sticking_band().unwrap();
        for x in [-0.999, -0.95, -0.93, -0.07, 0.0, 0.5, 0.06, 0.9, 0.94, 0.97] {
            let max_force = (0..2000)
                .map(|i| w.applied_force(x, i as f64 * w.period() / 2000.0).abs())
                .fold(0.0, f64::max);
            assert_eq!(max_force <= w.friction(), band.contains(x), "x = {x}");
        }
    }
}
