//! Crate-wide error type.
//!
//! Errors fall into three classes, mirrored by the process exit codes of the
//! `ecodyn` binary: validation of inputs (exit 2), domain or runtime failures
//! during computation (exit 3), and I/O (exit 4).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {coordinate} = {value} violates {constraint}")]
    Inadmissible {
        coordinate: usize,
        value: f64,
        constraint: String,
    },

    #[error("growth rates incompatible: b1 + b3 - b2 = {defect:e} (must vanish)")]
    IncompatibleRates { defect: f64 },

    #[error("free parameter t = 0 rejected: c3 would vanish and no level set could be solved for x3")]
    ZeroFreeParameter,

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("empty sample set")]
    EmptySample,

    #[error("trajectory state {index} leaves the admissible domain at coordinate {coordinate}")]
    InadmissibleSample { index: usize, coordinate: usize },

    #[error("integration left the admissible domain at t = {time}: coordinate {coordinate} = {value}")]
    DomainExit {
        time: f64,
        coordinate: usize,
        value: f64,
    },

    #[error("adaptive step underflow at t = {time}: required step below h_min = {h_min:e}")]
    StepUnderflow { time: f64, h_min: f64 },

    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    #[error("verification check {check} failed: residual {residual:e} exceeds {threshold:e}")]
    Verification {
        check: String,
        residual: f64,
        threshold: f64,
    },

    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("dataset too small: need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("capacity {name} = {capacity} infeasible: must exceed the largest observed value {max_observed}")]
    InfeasibleCapacity {
        name: String,
        capacity: f64,
        max_observed: f64,
    },

    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("dataset row {row}: {message}")]
    Data { row: usize, message: String },

    #[error("dataset column {name}: {message}")]
    Column { name: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-parseable class tag printed alongside the message.
    pub fn class(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. }
            | Error::IncompatibleRates { .. }
            | Error::ZeroFreeParameter
            | Error::Singular(_)
            | Error::RankDeficient(_)
            | Error::TooFewRows { .. }
            | Error::InfeasibleCapacity { .. }
            | Error::Config { .. }
            | Error::Data { .. }
            | Error::Column { .. } => "validation",
            Error::Inadmissible { .. }
            | Error::EmptySample
            | Error::InadmissibleSample { .. }
            | Error::DomainExit { .. }
            | Error::StepUnderflow { .. }
            | Error::NonFinite { .. }
            | Error::Verification { .. } => "domain",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code used by the binary: 2 validation, 3 domain/runtime, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "validation" => 2,
            "domain" => 3,
            _ => 4,
        }
    }
}
