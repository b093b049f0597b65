//! Experiment configuration, sweeps, decay fits and the verification suite.

pub mod config;
pub mod fit;
pub mod svg;
pub mod sweep;
pub mod verify;

use thiserror::Error;

pub use config::{ExperimentConfig, Scheme, SignalSource};
pub use fit::{fit_decay, fit_slope, DecayFit};
pub use sweep::{read_csv, run_sweep, write_csv, ExperimentRecord};
pub use verify::{verify, Level, VerifyOptions, VerifyReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("decay fit needs at least 3 distinct rho values, got {0}")]
    InsufficientPoints(usize),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Codec(#[from] crate::codec::CodecError),
    #[error(transparent)]
    Decimation(#[from] crate::decimation::DecimationError),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
