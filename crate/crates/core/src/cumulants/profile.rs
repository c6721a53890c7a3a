use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moments::{sample_cumulants, KurtosisReading};
use super::CumulantError;
use crate::market_data::{MinutePanel, SemesterIndex, SemesterView, LAST_MINUTE, SESSION_MINUTES};

/// Which axis a profile averages over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "kebab-case")]
pub enum ProfileAxis {
    /// Statistics over the semester's days for one ticker (individual analysis).
    OverDays { ticker: String },
    /// Statistics over companies for one day (cross-sectional analysis).
    OverCompanies { day: NaiveDate },
}

/// Per-minute cumulants; every array has 391 entries and `None` marks a
/// minute without enough data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantProfile {
    pub semester: u32,
    #[serde(flatten)]
    pub axis: ProfileAxis,
    pub kurtosis_reading: KurtosisReading,
    pub mean: Vec<Option<f64>>,
    pub median: Vec<Option<f64>>,
    pub variance: Vec<Option<f64>>,
    pub skewness: Vec<Option<f64>>,
    pub kurtosis: Vec<Option<f64>>,
    pub sample_count: Vec<usize>,
}

impl CumulantProfile {
    fn empty(semester: u32, axis: ProfileAxis, reading: KurtosisReading) -> Self {
        Self {
            semester,
            axis,
            kurtosis_reading: reading,
            mean: vec![None; SESSION_MINUTES],
            median: vec![None; SESSION_MINUTES],
            variance: vec![None; SESSION_MINUTES],
            skewness: vec![None; SESSION_MINUTES],
            kurtosis: vec![None; SESSION_MINUTES],
            sample_count: vec![0; SESSION_MINUTES],
        }
    }

    fn set_minute(&mut self, t: usize, sample: &mut [f64]) {
        self.sample_count[t] = sample.len();
        if let Some(c) = sample_cumulants(sample, self.kurtosis_reading) {
            self.mean[t] = Some(c.mean);
            self.median[t] = Some(c.median);
            self.variance[t] = Some(c.variance);
            self.skewness[t] = c.skewness;
            self.kurtosis[t] = c.kurtosis;
        }
    }

    fn has_data(&self) -> bool {
        self.mean.iter().any(Option::is_some)
    }

    /// CSV with columns `t,mean,median,variance,skewness,kurtosis,n`;
    /// missing values are empty fields.
    pub fn to_csv(&self) -> String {
        profile_csv(
            [&self.mean, &self.median, &self.variance, &self.skewness, &self.kurtosis],
            &self.sample_count,
        )
    }
}

pub(super) fn profile_csv(columns: [&Vec<Option<f64>>; 5], counts: &[usize]) -> String {
    use crate::format::opt_float;
    let mut out = String::from("t,mean,median,variance,skewness,kurtosis,n\n");
    for t in 0..SESSION_MINUTES {
        let row: Vec<String> = columns.iter().map(|c| opt_float(c[t])).collect();
        out.push_str(&format!("{t},{},{}\n", row.join(","), counts[t]));
    }
    out
}

/// Cumulant computations with a fixed kurtosis reading.
#[derive(Debug, Clone, Copy, Default)]
pub struct CumulantEngine {
    pub reading: KurtosisReading,
}

impl CumulantEngine {
    pub fn new(reading: KurtosisReading) -> Self {
        Self { reading }
    }

    /// Profile of one ticker over the days of semester `s`.
    pub fn over_days(
        &self,
        panel: &MinutePanel,
        index: &SemesterIndex,
        ticker: &str,
        s: u32,
    ) -> Result<CumulantProfile, CumulantError> {
        let view = SemesterView::new(panel, index, s)?;
        self.over_days_in(&view, ticker)
    }

    pub fn over_days_in(&self, view: &SemesterView<'_>, ticker: &str) -> Result<CumulantProfile, CumulantError> {
        let s = view.semester();
        let company = view.panel().company_index(ticker).ok_or_else(|| {
            CumulantError::Data(crate::market_data::DataError::UnknownTicker(ticker.to_string()))
        })?;
        if !view.includes(company) {
            return Err(CumulantError::ExcludedPair { ticker: ticker.to_string(), semester: s });
        }
        let mut profile = CumulantProfile::empty(s, ProfileAxis::OverDays { ticker: ticker.to_string() }, self.reading);
        let mut sample = Vec::with_capacity(view.days().len());
        for t in 0..=LAST_MINUTE {
            sample.clear();
            sample.extend(view.days().filter_map(|d| view.volume(company, d, t)).map(|v| v as f64));
            profile.set_minute(t as usize, &mut sample);
        }
        if !profile.has_data() {
            return Err(CumulantError::NoSamples);
        }
        Ok(profile)
    }

    /// Cross-sectional profile of one day of semester `s`.
    pub fn over_companies(
        &self,
        panel: &MinutePanel,
        index: &SemesterIndex,
        day: NaiveDate,
        s: u32,
    ) -> Result<CumulantProfile, CumulantError> {
        let view = SemesterView::new(panel, index, s)?;
        let d = panel
            .day_index(day)
            .filter(|d| view.days().contains(d))
            .ok_or(CumulantError::DayNotInSemester { day, semester: s })?;
        self.over_companies_at(&view, d)
    }

    /// Cross-sectional profile for the panel day index `d` of the view.
    pub fn over_companies_at(&self, view: &SemesterView<'_>, d: usize) -> Result<CumulantProfile, CumulantError> {
        let day = view.panel().days()[d];
        let mut profile = CumulantProfile::empty(view.semester(), ProfileAxis::OverCompanies { day }, self.reading);
        let mut sample = Vec::with_capacity(view.companies().len());
        for t in 0..=LAST_MINUTE {
            sample.clear();
            sample.extend(view.companies().iter().filter_map(|&c| view.volume(c, d, t)).map(|v| v as f64));
            profile.set_minute(t as usize, &mut sample);
        }
        if !profile.has_data() {
            return Err(CumulantError::NoSamples);
        }
        Ok(profile)
    }

    /// Profiles of every included ticker, in panel order. Tickers without
    /// data are reported as errors in place.
    pub fn all_over_days(&self, view: &SemesterView<'_>) -> Vec<(String, Result<CumulantProfile, CumulantError>)> {
        view.companies()
            .par_iter()
            .map(|&c| {
                let ticker = view.panel().companies()[c].clone();
                let profile = self.over_days_in(view, &ticker);
                (ticker, profile)
            })
            .collect()
    }

    /// Cross-sectional profiles of every day of the view, in date order.
    pub fn all_over_companies(&self, view: &SemesterView<'_>) -> Vec<(NaiveDate, Result<CumulantProfile, CumulantError>)> {
        view.days()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&d| (view.panel().days()[d], self.over_companies_at(view, d)))
            .collect()
    }
}

/// [`CumulantEngine::over_days`] with the default kurtosis reading.
pub fn cumulants_over_days(
    panel: &MinutePanel,
    index: &SemesterIndex,
    ticker: &str,
    s: u32,
) -> Result<CumulantProfile, CumulantError> {
    CumulantEngine::default().over_days(panel, index, ticker, s)
}

/// [`CumulantEngine::over_companies`] with the default kurtosis reading.
pub fn cumulants_over_companies(
    panel: &MinutePanel,
    index: &SemesterIndex,
    day: NaiveDate,
    s: u32,
) -> Result<CumulantProfile, CumulantError> {
    CumulantEngine::default().over_companies(panel, index, day, s)
}
