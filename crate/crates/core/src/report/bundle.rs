use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::cumulants::{AggregatedProfile, CumulantProfile, KurtosisTail};
use crate::fits::{FitResult, ShapeFunctionals, Split};
use crate::hypothesis::TestResult;
use crate::market_data::{LoadReport, ValidationReport};
use crate::metrics::SemesterMetrics;
use crate::synth::GroundTruth;

/// A stage that failed for one subject; the run continues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    /// A ticker, `tilde`, `hat` or `run`.
    pub subject: String,
    pub semester: Option<u32>,
    pub message: String,
}

impl Failure {
    pub(crate) fn new(stage: &str, subject: &str, semester: Option<u32>, message: impl ToString) -> Self {
        Self { stage: stage.into(), subject: subject.into(), semester, message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemesterSummary {
    pub label: u32,
    pub first: NaiveDate,
    pub last: NaiveDate,
    pub trading_days: usize,
    pub included_tickers: Vec<String>,
}

/// A polynomial relation between two aggregate profiles on one half of the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterFit {
    /// `variance-vs-mean`, `skewness-vs-time` or `kurtosis-vs-mean`.
    pub relation: String,
    pub split: Split,
    pub fit: FitResult,
}

/// Fits to the aggregate profiles of one semester.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateFits {
    pub opening: Option<FitResult>,
    pub closing: Option<FitResult>,
    pub quartic: Option<FitResult>,
    pub shapes: Option<ShapeFunctionals>,
    pub kurtosis_morning: Option<FitResult>,
    pub kurtosis_afternoon: Option<FitResult>,
    pub variance_quartic_tilde: Option<FitResult>,
    pub variance_shapes_tilde: Option<ShapeFunctionals>,
    pub variance_quartic_hat: Option<FitResult>,
    pub variance_shapes_hat: Option<ShapeFunctionals>,
    pub scatter: Vec<ScatterFit>,
}

impl AggregateFits {
    pub fn scatter(&self, relation: &str, split: Split) -> Option<&FitResult> {
        self.scatter.iter().find(|s| s.relation == relation && s.split == split).map(|s| &s.fit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemesterAggregates {
    pub semester: u32,
    pub tilde: Option<AggregatedProfile>,
    pub hat: Option<AggregatedProfile>,
    /// σ̃² / σ̂² per minute.
    pub variance_ratio: Option<Vec<Option<f64>>>,
    pub fits: AggregateFits,
}

/// Fits to one ticker's own profile in one semester.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickerFits {
    pub ticker: String,
    pub semester: u32,
    pub opening: Option<FitResult>,
    pub closing: Option<FitResult>,
    pub quartic: Option<FitResult>,
    pub shapes: Option<ShapeFunctionals>,
}

/// Opening-exponent series split at the regime boundary and tested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTests {
    pub boundary: u32,
    /// (semester, α) from the tilde opening fits.
    pub series: Vec<(u32, f64)>,
    pub branch_means: (Option<f64>, Option<f64>),
    pub welch: Option<TestResult>,
    pub mww: Option<TestResult>,
}

/// Two straight-line trends of the company-mean closing exponent; the
/// break semester belongs to both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosingTrend {
    pub break_semester: u32,
    pub first: Option<FitResult>,
    pub second: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub version: String,
    pub config_hash: String,
    /// The configuration without output directory and thread count.
    pub config: PipelineConfig,
    pub tickers: Vec<String>,
    pub semesters: Vec<SemesterSummary>,
    pub load: Vec<LoadReport>,
    pub validation: ValidationReport,
    pub aggregates: Vec<SemesterAggregates>,
    pub ticker_fits: Vec<TickerFits>,
    pub metrics: Vec<SemesterMetrics>,
    /// Concavity on rescaled activity across semesters, per ticker.
    pub regressions: Vec<(String, FitResult)>,
    pub closing_trend: Option<ClosingTrend>,
    pub tests: Option<RegimeTests>,
    pub kurtosis_tail: Option<KurtosisTail>,
    pub ground_truth: Option<GroundTruth>,
    pub failures: Vec<Failure>,
    /// Per-ticker profiles; written only on request and not serialised.
    #[serde(skip)]
    pub individual_profiles: Vec<CumulantProfile>,
}

impl ReportBundle {
    pub fn aggregate(&self, semester: u32) -> Option<&SemesterAggregates> {
        self.aggregates.iter().find(|a| a.semester == semester)
    }

    pub fn semester_labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.semesters.iter().map(|s| s.label)
    }

    pub fn regression(&self, ticker: &str) -> Option<&FitResult> {
        self.regressions.iter().find(|(t, _)| t == ticker).map(|(_, f)| f)
    }
}
