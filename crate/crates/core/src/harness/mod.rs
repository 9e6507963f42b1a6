//! Scenario harness: configs, runs of both models, file output, comparison and sweeps.

use thiserror::Error;

use crate::highfi::HighFiError;
use crate::ode::IntegrationError;
use crate::posture::PostureError;
use crate::trace::Trace;
use crate::tumbling::TumblingError;

pub mod compare;
pub mod config;
pub mod output;
pub mod run;
pub mod signal;
pub mod sweep;

pub use compare::{compare_traces, ComparisonReport};
pub use config::{parse_config, ConfigError, ScenarioConfig};
pub use output::{emit_csv, emit_svg, read_csv};
pub use run::{run_cascade, run_highfi, CASCADE_MODEL, CHANNELS, HIGHFI_MODEL};
pub use signal::{impulse_signal, ImpulseSignal, SignalMode};
pub use sweep::{execute_run, run_sweep, Model, RunRecord, SweepOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("contact lost at t = {t:.6} s")]
    ContactLoss { t: f64, trace: Box<Trace<f64>> },
    #[error(transparent)]
    Integration(#[from] IntegrationError<TumblingError>),
    #[error(transparent)]
    Rolling(#[from] TumblingError),
    #[error(transparent)]
    HighFi(#[from] HighFiError),
    #[error(transparent)]
    Posture(#[from] PostureError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(String),
    #[error("channel mismatch: {0}")]
    ChannelMismatch(String),
}

impl HarnessError {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::ChannelMismatch(_) | HarnessError::Csv(_) => 2,
            HarnessError::ContactLoss { .. } => 3,
            HarnessError::Integration(_)
            | HarnessError::Rolling(_)
            | HarnessError::HighFi(_)
            | HarnessError::Posture(_) => 4,
            HarnessError::Io { .. } => 1,
        }
    }
}
