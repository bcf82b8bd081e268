use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("root bracketing failed on [{lo}, {hi}]: {what}")]
    Bracketing { lo: f64, hi: f64, what: String },

    #[error("event cap of {cap} reached before t = {time} (possible chatter or degenerate configuration)")]
    EventCap { cap: usize, time: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("jacobian undefined along this trajectory (grazing at t = {time})")]
    JacobianUndefined { time: f64 },

    #[error("finite-difference probes straddle an event-topology boundary")]
    NonsmoothProbe,

    #[error("no periodic orbit found: {0}")]
    NoConvergence(String),

    #[error("orbit does not exist: {0}")]
    Nonexistence(String),

    #[error("conjugacy not applicable: {0}")]
    NotApplicable(String),

    #[error("seed is not inside an invariant island")]
    NotInIsland,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
