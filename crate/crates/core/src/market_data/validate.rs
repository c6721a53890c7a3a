use serde::{Deserialize, Serialize};

use super::bar::{LAST_MINUTE, SESSION_MINUTES};
use super::panel::MinutePanel;
use super::semester::SemesterIndex;

/// Coverage of one (ticker, semester) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub ticker: String,
    pub semester: u32,
    /// Days with at least one present minute.
    pub days: usize,
    pub semester_days: usize,
    /// Present cells over `391 * semester_days`.
    pub coverage: f64,
    pub included: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub min_day_coverage: f64,
    pub records: Vec<CoverageRecord>,
}

impl ValidationReport {
    pub fn excluded(&self) -> impl Iterator<Item = &CoverageRecord> {
        self.records.iter().filter(|r| !r.included)
    }

    /// Marks every failing pair as excluded in `index`.
    pub fn apply(&self, index: &mut SemesterIndex) {
        for r in self.excluded() {
            index.exclude(r.semester, r.ticker.clone());
        }
    }
}

pub fn validate_panel(panel: &MinutePanel, index: &SemesterIndex, min_day_coverage: f64) -> ValidationReport {
    let mut records = Vec::new();
    for semester in index.labels() {
        let days = index.day_range(semester).unwrap_or(0..0);
        for (c, ticker) in panel.companies().iter().enumerate() {
            let mut present = 0usize;
            let mut active_days = 0usize;
            for d in days.clone() {
                let n = (0..=LAST_MINUTE).filter(|&t| panel.volume(c, d, t).is_some()).count();
                present += n;
                active_days += usize::from(n > 0);
            }
            let possible = days.len() * SESSION_MINUTES;
            let coverage = if possible == 0 { 0.0 } else { present as f64 / possible as f64 };
            let reason = if index.is_excluded(semester, ticker) {
                Some("excluded by configuration".to_string())
            } else if coverage < min_day_coverage {
                Some(format!("coverage {coverage:.4} below {min_day_coverage}"))
            } else {
                None
            };
            records.push(CoverageRecord {
                ticker: ticker.clone(),
                semester,
                days: active_days,
                semester_days: days.len(),
                coverage,
                included: reason.is_none(),
                reason,
            });
        }
    }
    ValidationReport { min_day_coverage, records }
}
