use serde::{Deserialize, Serialize};

use super::dist::student_t_quantile;
use super::{CriticalSource, HypothesisError, TestKind, TestOptions, TestResult};

/// Size, mean and sample variance (divisor n − 1) of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl SampleSummary {
    pub fn of(sample: &[f64]) -> Result<Self, HypothesisError> {
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(HypothesisError::NonFinite);
        }
        let n = sample.len();
        let mean = sample.iter().sum::<f64>() / n as f64;
        let ss: f64 = sample.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok(Self { n, mean, variance: if n > 1 { ss / (n - 1) as f64 } else { 0.0 } })
    }
}

/// Two-tailed Welch test at the given confidence.
pub fn welch_test(sample_1: &[f64], sample_2: &[f64], confidence: f64) -> Result<TestResult, HypothesisError> {
    welch_test_with(sample_1, sample_2, &TestOptions { confidence, ..Default::default() })
}

pub fn welch_test_with(sample_1: &[f64], sample_2: &[f64], options: &TestOptions) -> Result<TestResult, HypothesisError> {
    if sample_1.len() < 2 || sample_2.len() < 2 {
        return Err(HypothesisError::TooSmall { n1: sample_1.len(), n2: sample_2.len(), need: 2 });
    }
    welch_from_summary(SampleSummary::of(sample_1)?, SampleSummary::of(sample_2)?, options)
}

/// Welch test from summary statistics. The degrees of freedom follow the
/// Welch-Satterthwaite equation
/// `(v1/n1 + v2/n2)² / ((v1/n1)²/(n1−1) + (v2/n2)²/(n2−1))`.
pub fn welch_from_summary(
    s1: SampleSummary,
    s2: SampleSummary,
    options: &TestOptions,
) -> Result<TestResult, HypothesisError> {
    options.check()?;
    if s1.n < 2 || s2.n < 2 {
        return Err(HypothesisError::TooSmall { n1: s1.n, n2: s2.n, need: 2 });
    }
    let (q1, q2) = (s1.variance / s1.n as f64, s2.variance / s2.n as f64);
    let se2 = q1 + q2;
    if !(se2 > 0.0) {
        return Err(HypothesisError::BothZeroVariance);
    }
    let t = (s1.mean - s2.mean) / se2.sqrt();
    let dof = se2 * se2 / (q1 * q1 / (s1.n - 1) as f64 + q2 * q2 / (s2.n - 1) as f64);
    let critical = student_t_quantile(1.0 - options.tail_probability(), dof);
    Ok(TestResult {
        test: TestKind::Welch,
        statistic: t,
        dof: Some(dof),
        critical_value: Some(critical),
        critical_source: CriticalSource::StudentT,
        confidence: options.confidence,
        tails: options.tails,
        reject_null: t.abs() > critical,
        sample_sizes: (s1.n, s2.n),
        u_values: None,
        rank_sums: None,
    })
}
