use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::panel::MinutePanel;
use super::DataError;

/// One labelled, inclusive date range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemesterRange {
    pub label: u32,
    pub first: NaiveDate,
    pub last: NaiveDate,
}

/// Semester labels for every panel day, plus per-semester ticker exclusions.
#[derive(Debug, Clone, PartialEq)]
pub struct SemesterIndex {
    ranges: Vec<SemesterRange>,
    day_labels: Vec<u32>,
    day_ranges: BTreeMap<u32, Range<usize>>,
    exclusions: BTreeMap<u32, BTreeSet<String>>,
}

/// Calendar half-years (Jan 1 - Jun 30, Jul 1 - Dec 31) spanning `first..=last`.
pub fn default_semester_ranges(first: NaiveDate, last: NaiveDate) -> Vec<(NaiveDate, NaiveDate)> {
    let half_start = |d: NaiveDate| {
        let month = if d.month() <= 6 { 1 } else { 7 };
        NaiveDate::from_ymd_opt(d.year(), month, 1).expect("valid half-year start")
    };
    let mut out = Vec::new();
    let mut start = half_start(first);
    while start <= last {
        let next = if start.month() == 1 {
            NaiveDate::from_ymd_opt(start.year(), 7, 1)
        } else {
            NaiveDate::from_ymd_opt(start.year() + 1, 1, 1)
        }
        .expect("valid half-year start");
        out.push((start, next.pred_opt().expect("date has predecessor")));
        start = next;
    }
    out
}

/// Labels the given ranges 1..S in date order and assigns every panel day.
pub fn assign_semesters(
    panel: &MinutePanel,
    ranges: &[(NaiveDate, NaiveDate)],
) -> Result<SemesterIndex, DataError> {
    let mut sorted = ranges.to_vec();
    sorted.sort();
    for &(first, last) in &sorted {
        if last < first {
            return Err(DataError::EmptyRange { first, last });
        }
    }
    for w in sorted.windows(2) {
        let (prev, next) = (w[0], w[1]);
        if next.0 <= prev.1 {
            return Err(DataError::OverlappingRanges { first: prev.0, second: next.0 });
        }
        if prev.1.succ_opt() != Some(next.0) {
            return Err(DataError::NonContiguousRanges { after: prev.1, before: next.0 });
        }
    }
    let ranges: Vec<SemesterRange> = sorted
        .into_iter()
        .zip(1u32..)
        .map(|((first, last), label)| SemesterRange { label, first, last })
        .collect();

    let mut day_labels = Vec::with_capacity(panel.n_days());
    let mut day_ranges: BTreeMap<u32, Range<usize>> = BTreeMap::new();
    for (i, &day) in panel.days().iter().enumerate() {
        let pos = ranges.partition_point(|r| r.last < day);
        let range = ranges
            .get(pos)
            .filter(|r| r.first <= day)
            .ok_or(DataError::UncoveredDate(day))?;
        day_labels.push(range.label);
        day_ranges
            .entry(range.label)
            .and_modify(|r| r.end = i + 1)
            .or_insert(i..i + 1);
    }
    for r in &ranges {
        day_ranges.entry(r.label).or_insert(0..0);
    }
    Ok(SemesterIndex {
        ranges,
        day_labels,
        day_ranges,
        exclusions: BTreeMap::new(),
    })
}

impl SemesterIndex {
    pub fn ranges(&self) -> &[SemesterRange] {
        &self.ranges
    }

    pub fn labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.ranges.iter().map(|r| r.label)
    }

    pub fn range(&self, semester: u32) -> Option<&SemesterRange> {
        self.ranges.iter().find(|r| r.label == semester)
    }

    /// Label of the panel day at `day_index`.
    pub fn label_of_day(&self, day_index: usize) -> u32 {
        self.day_labels[day_index]
    }

    pub fn semester_of(&self, date: NaiveDate) -> Option<u32> {
        self.ranges
            .iter()
            .find(|r| r.first <= date && date <= r.last)
            .map(|r| r.label)
    }

    /// Panel day indices belonging to `semester`.
    pub fn day_range(&self, semester: u32) -> Option<Range<usize>> {
        self.day_ranges.get(&semester).cloned()
    }

    pub fn day_counts(&self) -> BTreeMap<u32, usize> {
        self.day_ranges.iter().map(|(&s, r)| (s, r.len())).collect()
    }

    pub fn exclude(&mut self, semester: u32, ticker: impl Into<String>) {
        self.exclusions.entry(semester).or_default().insert(ticker.into());
    }

    pub fn is_excluded(&self, semester: u32, ticker: &str) -> bool {
        self.exclusions
            .get(&semester)
            .is_some_and(|set| set.contains(ticker))
    }

    pub fn exclusions(&self) -> &BTreeMap<u32, BTreeSet<String>> {
        &self.exclusions
    }
}
