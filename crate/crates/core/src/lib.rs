//! Two emitters chirally coupled to a mirror-terminated waveguide.
//!
//! The crate integrates the single-excitation delay equations for the
//! emitter amplitudes, computes concurrence-based entanglement metrics, and
//! cross-checks the delay equations against a brute-force integration of
//! the discretised field modes. The [`sweep`] module reproduces the standard
//! figure panels and writes CSV, JSON or SVG.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below are the types the sweeps and the command line use.

pub mod analysis;
pub mod config_file;
pub mod dde;
pub mod error;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod sweep;

pub use analysis::{
    build_matrix_a, concurrence, death_time, effective_params, entanglement_metrics, equilibrium_ratio, find_peak,
    rho12, DeathTime, EffectiveParams, EntanglementMetrics, MatrixA, Peak,
};
pub use dde::{breakpoints, integrate, HistoryBuffer, Interpolation, SolverSettings, Trajectory};
pub use error::{ConfigError, EmitError, Error, IntegrationError, OracleError};
pub use model::{
    derive_phase_delay_set, rhs_infinite, rhs_markov_limit, rhs_semi_infinite, AmplitudePair, DelayModel,
    PhaseDelaySet, SystemConfig, Variant,
};
pub use oracle::{compare, integrate_kspace, DeviationReport, FieldGrid, OracleRun, OracleSettings};
pub use scalar::Real;

pub type SystemConfigF64 = SystemConfig<f64>;
pub type SystemConfigF32 = SystemConfig<f32>;
pub type AmplitudePairF64 = AmplitudePair<f64>;
pub type AmplitudePairF32 = AmplitudePair<f32>;
pub type SolverSettingsF64 = SolverSettings<f64>;
pub type SolverSettingsF32 = SolverSettings<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type MatrixAF64 = MatrixA<f64>;
pub type OracleSettingsF64 = OracleSettings<f64>;
