//! End-to-end pipeline: configuration, the in-memory report bundle,
//! figure series and the on-disk artifact set.

mod bundle;
mod config;
mod figures;
mod pipeline;
mod write;

use std::path::PathBuf;

use thiserror::Error;

pub use bundle::{
    AggregateFits, ClosingTrend, Failure, RegimeTests, ReportBundle, ScatterFit, SemesterAggregates, SemesterSummary,
    TickerFits,
};
pub use config::{
    Exclusion, InputConfig, KurtosisTailConfig, PipelineConfig, SemesterBounds, SemesterConfig, TestConfig,
};
pub use figures::{emit_figure_series, figure_csv, FigureId, Normalizer};
pub use pipeline::{load_input, run_pipeline, run_pipeline_with_panel, LoadedInput};
pub use write::{fits_csv, write_bundle, Manifest, ManifestEntry};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("every ticker failed ({failures} recorded failures)")]
    AllTickersFailed { failures: usize },
    #[error("unknown figure `{0}` (expected fig1 .. fig16)")]
    UnknownFigure(String),
    #[error("{figure} needs {what}, which the bundle does not contain")]
    MissingUpstream { figure: String, what: String },
}

impl ReportError {
    /// Process exit code: 1 usage/configuration, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Config(_) | ReportError::UnknownFigure(_) => 1,
            ReportError::Data(_) | ReportError::Io { .. } | ReportError::AllTickersFailed { .. } => 2,
            ReportError::Numerical(_) | ReportError::MissingUpstream { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ReportError::Io { path: path.into(), source }
    }
}

impl From<crate::market_data::DataError> for ReportError {
    fn from(e: crate::market_data::DataError) -> Self {
        ReportError::Data(e.to_string())
    }
}

impl From<crate::synth::SynthError> for ReportError {
    fn from(e: crate::synth::SynthError) -> Self {
        ReportError::Config(e.to_string())
    }
}
