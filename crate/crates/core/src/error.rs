use std::path::PathBuf;

use thiserror::Error;

/// Invalid physical or numerical configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("decay rates must be non-negative (gamma_L = {gamma_l}, gamma_R = {gamma_r})")]
    NegativeRate { gamma_l: f64, gamma_r: f64 },
    #[error("total decay rate gamma_L + gamma_R must be positive")]
    ZeroTotalRate,
    #[error("chirality gamma_R/gamma_L must be non-negative, got {0}")]
    InvalidChirality(f64),
    #[error("{name} must be non-negative, got {value}")]
    NegativeDelay { name: &'static str, value: f64 },
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("emitter positions must satisfy 0 <= x1 <= x2 with v > 0")]
    InvalidPositions,
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
    #[error(
        "{count} breakpoints exceed the cap of {cap}; use a larger step, a shorter horizon \
         or raise the breakpoint cap"
    )]
    BreakpointCap { count: usize, cap: usize },
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Failure while integrating a trajectory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("non-finite amplitude at t = {time}")]
    NonFinite { time: f64 },
}

/// Failure of the k-space reference integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "horizon {horizon} reaches the recurrence time {recurrence} of the discrete mode comb; \
         increase n_modes or reduce the bandwidth"
    )]
    BeyondRecurrence { horizon: f64, recurrence: f64 },
    #[error("non-finite amplitude at t = {time}")]
    NonFinite { time: f64 },
    #[error("trajectories have no overlapping time range")]
    DisjointRanges,
}

/// Failure while writing result files.
#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Top-level error for sweeps and presets.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Emit(#[from] EmitError),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Integration(IntegrationError::Config(_)) => 1,
            Error::Oracle(OracleError::Config(_)) | Error::Oracle(OracleError::BeyondRecurrence { .. }) => 1,
            Error::Emit(_) => 1,
            Error::Integration(_) | Error::Oracle(_) => 2,
        }
    }
}
