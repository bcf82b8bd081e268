//! Event-driven simulation and stroboscopic-map analysis of a harmonically
//! forced particle bouncing elastically between two walls under Coulomb
//! friction.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: parameters, phase states, force laws;
//! * [`flight`]: closed-form (or integrated) free-flight arcs and event location;
//! * [`simulator`]: complete trajectories with impacts, turning points and sticking;
//! * [`strobemap`]: the period map, its Jacobian from saltation factors, and
//!   area-preservation classification;
//! * [`orbits`]: closed-form symmetric orbits, periodic-orbit solving,
//!   continuation in the friction coefficient, and the unconstrained lift;
//! * [`portrait`]: grid experiments (point clouds, region maps, basins, islands);
//! * [`oracle`]: an independent fixed-step reference integrator for validation.

pub mod config;
pub mod dopri;
pub mod error;
pub mod export;
pub mod flight;
pub mod model;
pub mod oracle;
pub mod orbits;
pub mod portrait;
pub mod roots;
pub mod simulator;
pub mod strobemap;

pub use error::{Error, Result};
pub use model::{ForceLaw, OscillatorParams, PhaseState, Sign, ValidatedParams};
