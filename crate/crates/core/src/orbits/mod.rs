//! Periodic orbits: closed-form symmetric orbits, general fixed points of the
//! period map, continuation in the friction, and the Hamiltonian lift.

pub mod continuation;
pub mod lift;
pub mod periodic;
pub mod symmetric;

pub use periodic::{eigenvalues, find_periodic, find_periodic_opts, NewtonOptions, OrbitKind, OrbitRecord};
pub use symmetric::{nonsticking_condition, symmetric_formula, symmetric_orbit, Branch, SymmetricOrbitFormula};
pub use continuation::{continue_in_f, BranchPoint, Continuation, FoldReport, StepPolicy, Termination};
pub use lift::{lift_check, tent, LiftReport, LiftState};
