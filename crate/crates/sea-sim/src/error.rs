//! Error types shared across the library.

use thiserror::Error;

/// Errors from constructing or evaluating the physical model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    /// A parameter that must be strictly positive was not.
    #[error("parameter `{field}` must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },

    /// A parameter that must be non-negative was not.
    #[error("parameter `{field}` must be non-negative, got {value}")]
    Negative { field: &'static str, value: f64 },

    /// A parameter was NaN or infinite.
    #[error("parameter `{field}` must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },

    /// The moment arm at the given joint angle is too small to divide by.
    #[error(
        "singular configuration: moment arm {arm:.3e} m at phi = {phi:.6} rad \
         is below the {limit:.1e} m safety floor"
    )]
    SingularConfiguration { phi: f64, arm: f64, limit: f64 },

    /// Spring length would collapse inside its geometric floor somewhere in
    /// the configured operating range.
    #[error(
        "degenerate linkage: spring length {length:.3e} m at theta = {theta:.6} rad \
         is below the floor {floor:.3e} m"
    )]
    DegenerateLinkage { theta: f64, length: f64, floor: f64 },

    /// Motor reduction was asked for without enough parameters.
    #[error("motor reduction requires `j_eq` or the full gear/screw parameter set ({missing})")]
    MissingMotorParams { missing: &'static str },
}

/// Errors raised while running a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    /// A state component left the sane range; the run is aborted.
    #[error(
        "divergence at t = {t:.6} s: |{component}| = {value:.3e} exceeds {limit:.1e}; \
         integration aborted"
    )]
    Divergence {
        t: f64,
        component: &'static str,
        value: f64,
        limit: f64,
    },

    /// The controller hit a singular moment arm mid-run.
    #[error("at t = {t:.6} s: {source}")]
    Model {
        t: f64,
        #[source]
        source: ModelError,
    },

    /// Simulation setup was inconsistent.
    #[error("invalid simulation setup: {0}")]
    Setup(String),
}

/// Errors from configuration parsing and merging.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid value in {location}: {message}")]
    Invalid { location: String, message: String },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Errors from ingesting external trajectory files.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read trajectory file `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("trajectory file `{path}`, row {row}: {message}")]
    Row {
        path: String,
        row: usize,
        message: String,
    },

    #[error("trajectory file `{path}`: {message}")]
    File { path: String, message: String },
}
