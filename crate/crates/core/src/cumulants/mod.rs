//! Per-minute robust cumulant profiles and their tilde/hat aggregates.
//!
//! Skewness and kurtosis come from the Gram-Charlier relations rather than
//! raw third and fourth moments:
//!
//! ```text
//! ζ = 6 (μ − m) / σ
//! κ = 24 (1 − √(π/2) · MAD / σ) + ζ²
//! ```
//!
//! where `m` is the median and `MAD` the mean absolute deviation about the
//! mean. A Gaussian sample scores ζ = κ = 0, so κ is an excess kurtosis.

mod aggregate;
mod moments;
mod profile;

use chrono::NaiveDate;
use thiserror::Error;

use crate::market_data::DataError;

pub use aggregate::{
    aggregate_hat, aggregate_tilde, mean_kurtosis_tail, variance_ratio, AggregateKind, AggregatedProfile,
    KurtosisTail,
};
pub use moments::{sample_cumulants, KurtosisReading, SampleCumulants};
pub use profile::{
    cumulants_over_companies, cumulants_over_days, CumulantEngine, CumulantProfile, ProfileAxis,
};

#[derive(Debug, Error)]
pub enum CumulantError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{ticker} is excluded in semester {semester}")]
    ExcludedPair { ticker: String, semester: u32 },
    #[error("day {day} is not in semester {semester}")]
    DayNotInSemester { day: NaiveDate, semester: u32 },
    #[error("no minute has two or more samples")]
    NoSamples,
    #[error("empty input")]
    EmptyInput,
    #[error("profile for semester {found} mixed into semester {expected}")]
    MixedSemesters { expected: u32, found: u32 },
    #[error("profile axis does not match the requested aggregate")]
    MixedAxes,
    #[error("every semester is excluded")]
    AllExcluded,
}
