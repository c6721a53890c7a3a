//! Regime-difference tests: Welch's t-test and the Mann-Whitney-Wilcoxon
//! rank test.

mod dist;
mod mww;
mod welch;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dist::{normal_quantile, student_t_cdf, student_t_quantile};
pub use mww::{mww_critical_table, mww_exact_critical, mww_test, mww_test_with, rank_sums};
pub use welch::{welch_from_summary, welch_test, welch_test_with, SampleSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Welch,
    Mww,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tails {
    #[default]
    Two,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    pub confidence: f64,
    pub tails: Tails,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self { confidence: 0.95, tails: Tails::Two }
    }
}

impl TestOptions {
    pub fn new(confidence: f64, tails: Tails) -> Self {
        Self { confidence, tails }
    }

    fn check(&self) -> Result<(), HypothesisError> {
        if self.confidence > 0.0 && self.confidence < 1.0 {
            Ok(())
        } else {
            Err(HypothesisError::InvalidConfidence(self.confidence))
        }
    }

    /// Upper-tail probability used for the critical value.
    fn tail_probability(&self) -> f64 {
        let alpha = 1.0 - self.confidence;
        match self.tails {
            Tails::Two => alpha / 2.0,
            Tails::One => alpha,
        }
    }
}

/// How an MWW critical value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalSource {
    StudentT,
    Table,
    ExactDistribution,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestKind,
    /// t for Welch, U_min for MWW.
    pub statistic: f64,
    pub dof: Option<f64>,
    /// `None` when no value of the statistic can be significant (tiny MWW samples).
    pub critical_value: Option<f64>,
    pub critical_source: CriticalSource,
    pub confidence: f64,
    pub tails: Tails,
    pub reject_null: bool,
    pub sample_sizes: (usize, usize),
    /// MWW only: (U_1, U_2) and rank sums (T_1, T_2).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u_values: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rank_sums: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HypothesisError {
    #[error("samples of size {n1} and {n2}; each needs at least {need}")]
    TooSmall { n1: usize, n2: usize, need: usize },
    #[error("both samples have zero variance")]
    BothZeroVariance,
    #[error("empty sample")]
    EmptySample,
    #[error("confidence must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("non-finite value in sample")]
    NonFinite,
}
