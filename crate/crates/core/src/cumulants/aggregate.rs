use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::profile::{profile_csv, CumulantProfile, ProfileAxis};
use super::CumulantError;
use crate::market_data::SESSION_MINUTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregateKind {
    /// Per-ticker profiles averaged over companies.
    Tilde,
    /// Per-day cross-sectional profiles averaged over days.
    Hat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedProfile {
    pub semester: u32,
    pub kind: AggregateKind,
    pub mean: Vec<Option<f64>>,
    pub median: Vec<Option<f64>>,
    pub variance: Vec<Option<f64>>,
    pub skewness: Vec<Option<f64>>,
    pub kurtosis: Vec<Option<f64>>,
    /// Number of input profiles with a mean at each minute.
    pub contributing_count: Vec<usize>,
}

impl AggregatedProfile {
    pub fn to_csv(&self) -> String {
        profile_csv(
            [&self.mean, &self.median, &self.variance, &self.skewness, &self.kurtosis],
            &self.contributing_count,
        )
    }
}

/// Average of the present entries, summed in input order.
fn mean_present(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    ((n > 0).then(|| sum / n as f64), n)
}

fn aggregate(
    profiles: &[CumulantProfile],
    s: u32,
    kind: AggregateKind,
) -> Result<AggregatedProfile, CumulantError> {
    if profiles.is_empty() {
        return Err(CumulantError::EmptyInput);
    }
    for p in profiles {
        if p.semester != s {
            return Err(CumulantError::MixedSemesters { expected: s, found: p.semester });
        }
        let axis_ok = match (kind, &p.axis) {
            (AggregateKind::Tilde, ProfileAxis::OverDays { .. }) => true,
            (AggregateKind::Hat, ProfileAxis::OverCompanies { .. }) => true,
            _ => false,
        };
        if !axis_ok {
            return Err(CumulantError::MixedAxes);
        }
    }
    let column = |pick: fn(&CumulantProfile) -> &Vec<Option<f64>>| -> (Vec<Option<f64>>, Vec<usize>) {
        (0..SESSION_MINUTES).map(|t| mean_present(profiles.iter().map(|p| pick(p)[t]))).unzip()
    };
    let (mean, contributing_count) = column(|p| &p.mean);
    Ok(AggregatedProfile {
        semester: s,
        kind,
        mean,
        median: column(|p| &p.median).0,
        variance: column(|p| &p.variance).0,
        skewness: column(|p| &p.skewness).0,
        kurtosis: column(|p| &p.kurtosis).0,
        contributing_count,
    })
}

/// Tilde aggregate: average of per-ticker (over-days) profiles.
pub fn aggregate_tilde(profiles: &[CumulantProfile], s: u32) -> Result<AggregatedProfile, CumulantError> {
    aggregate(profiles, s, AggregateKind::Tilde)
}

/// Hat aggregate: average of per-day (over-companies) profiles.
pub fn aggregate_hat(profiles: &[CumulantProfile], s: u32) -> Result<AggregatedProfile, CumulantError> {
    aggregate(profiles, s, AggregateKind::Hat)
}

/// Per-minute σ̃²/σ̂², missing where either side is missing or σ̂² = 0.
pub fn variance_ratio(tilde: &AggregatedProfile, hat: &AggregatedProfile) -> Result<Vec<Option<f64>>, CumulantError> {
    if tilde.semester != hat.semester {
        return Err(CumulantError::MixedSemesters { expected: tilde.semester, found: hat.semester });
    }
    Ok(tilde
        .variance
        .iter()
        .zip(&hat.variance)
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) if *b != 0.0 => Some(a / b),
            _ => None,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KurtosisTail {
    /// Time average of κ̂ over t > t_min, per semester.
    pub per_semester: BTreeMap<u32, Option<f64>>,
    /// Per-minute κ̂ averaged over the non-excluded semesters.
    pub curve: Vec<Option<f64>>,
}

/// Kurtosis summaries: per-semester tail averages and the cross-semester curve.
pub fn mean_kurtosis_tail(
    hat_profiles: &BTreeMap<u32, AggregatedProfile>,
    t_min: usize,
    excluded: &BTreeSet<u32>,
) -> Result<KurtosisTail, CumulantError> {
    let included: Vec<&AggregatedProfile> =
        hat_profiles.iter().filter(|(s, _)| !excluded.contains(s)).map(|(_, p)| p).collect();
    if included.is_empty() {
        return Err(CumulantError::AllExcluded);
    }
    let per_semester = hat_profiles
        .iter()
        .map(|(&s, p)| (s, mean_present(p.kurtosis.iter().skip(t_min + 1).copied()).0))
        .collect();
    let curve = (0..SESSION_MINUTES)
        .map(|t| mean_present(included.iter().map(|p| p.kurtosis[t])).0)
        .collect();
    Ok(KurtosisTail { per_semester, curve })
}
