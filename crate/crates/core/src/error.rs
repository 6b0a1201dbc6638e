use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation, fitting and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("control and target must differ (both are qubit {0})")]
    ControlIsTarget(usize),

    #[error("register size {0} unsupported (1 to {max} qubits)", max = crate::quantum::MAX_QUBITS)]
    UnsupportedQubitCount(usize),

    #[error("classical slot {slot} out of range ({n_slots} slots)")]
    SlotOutOfRange { slot: usize, n_slots: usize },

    #[error("classical slot {slot} is written by qubit {first} and qubit {second}")]
    SlotConflict { slot: usize, first: usize, second: usize },

    #[error("classical slot {0} is never written by a measurement")]
    UnmeasuredSlot(usize),

    #[error("reset on qubit {0} must follow a measurement of that qubit or precede every other use of it")]
    MisplacedReset(usize),

    #[error("{0} is not a unitary gate")]
    NonUnitaryOp(&'static str),

    #[error("circuit contains a mid-circuit {0}; use run_shots or run_density instead")]
    MeasurementInUnitaryRun(&'static str),

    #[error("amplitude vector of length {len} does not describe a qubit register")]
    BadAmplitudeCount { len: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("matrix dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("partial trace needs at least one kept qubit")]
    EmptyKeepSet,

    #[error("energy must be positive (got {0} GeV)")]
    NonPositiveEnergy(f64),

    #[error("baseline must be non-negative (got {0} km)")]
    NegativeBaseline(f64),

    #[error("flavor {flavor} is not available in {context}")]
    FlavorUnavailable { flavor: char, context: &'static str },

    #[error("matrix is not {property} (deviation {deviation:.3e} > {tolerance:.1e})")]
    MatrixProperty {
        property: &'static str,
        deviation: f64,
        tolerance: f64,
    },

    #[error("invalid readout noise: {0}")]
    InvalidNoise(String),

    #[error("mitigation matrix is singular (|det| = {0:.3e})")]
    SingularMitigation(f64),

    #[error("calibration needs at least {min} shots, got {got}")]
    TooFewCalibrationShots { got: u64, min: u64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("op {0} has no OpenQASM 2.0 form")]
    NotExportable(String),

    #[error("PMNS gate fit did not converge (max element error {0:.3e})")]
    FitNotConverged(f64),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
