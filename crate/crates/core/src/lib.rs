//! Intraday trading-volume seasonality analytics.
//!
//! The crate is organised as a pipeline over a dense minute-bar panel:
//!
//! * [`market_data`] ingests minute bars, labels semesters and tracks
//!   per-(ticker, semester) exclusions.
//! * [`cumulants`] computes robust per-minute cumulant profiles (mean, median,
//!   variance, median-based skewness, deviation-based excess kurtosis) along
//!   the day axis or the company axis, and their tilde/hat aggregates.
//! * [`fits`] fits opening/closing power laws, the quartic mean profile, the
//!   two-regime kurtosis relaxation and scatter relations, and derives the
//!   concavity and symmetry functionals.
//! * [`hypothesis`] provides Welch's t-test and the Mann-Whitney-Wilcoxon test.
//! * [`metrics`] computes activity, Garman-Klass volatility and price variation.
//! * [`synth`] generates synthetic panels with known ground truth.
//! * [`report`] runs the whole pipeline and writes plot-ready artifacts.

pub mod cumulants;
pub mod fits;
pub mod format;
pub mod hypothesis;
pub mod market_data;
pub mod metrics;
pub mod report;
pub mod synth;

pub use market_data::{LAST_MINUTE, SESSION_MINUTES};
