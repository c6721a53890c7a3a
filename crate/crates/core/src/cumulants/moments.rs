use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

/// How the deviation term of the kurtosis estimator is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KurtosisReading {
    /// Mean absolute deviation about the mean.
    #[default]
    MeanAbsoluteDeviation,
    /// `|mean(v) − μ|`, which vanishes identically and leaves κ = 24 + ζ².
    /// Kept only to audit the formula's typographic ambiguity.
    Literal,
}

/// Cumulants of one sample. `skewness`/`kurtosis` are absent when σ = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleCumulants {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

/// Computes the robust cumulants of `values`, which is sorted in place.
///
/// Returns `None` for fewer than two values. Sums run over the sorted values,
/// so the result does not depend on input order.
pub fn sample_cumulants(values: &mut [f64], reading: KurtosisReading) -> Option<SampleCumulants> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let median = if n.is_multiple_of(2) {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    } else {
        values[n / 2]
    };
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let sigma = variance.sqrt();
    let (skewness, kurtosis) = if sigma > 0.0 {
        let skew = 6.0 * (mean - median) / sigma;
        let deviation = match reading {
            KurtosisReading::MeanAbsoluteDeviation => values.iter().map(|v| (v - mean).abs()).sum::<f64>() / nf,
            KurtosisReading::Literal => (values.iter().sum::<f64>() / nf - mean).abs(),
        };
        let kurt = 24.0 * (1.0 - FRAC_PI_2.sqrt() * deviation / sigma) + skew * skew;
        (Some(skew), Some(kurt))
    } else {
        (None, None)
    };
    Some(SampleCumulants { n, mean, median, variance, skewness, kurtosis })
}
