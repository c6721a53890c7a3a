use std::collections::BTreeMap;
use std::ops::Range;

use chrono::NaiveDate;

use super::bar::{Bar, MinuteBar, LAST_MINUTE, SESSION_MINUTES};
use super::semester::SemesterIndex;
use super::DataError;

const MISSING: u64 = u64::MAX;

/// Dense (company, day, minute) store of volumes and OHLC prices.
///
/// Both axes are sorted and duplicate-free. Absent cells carry an explicit
/// missing marker; a zero volume is a present observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MinutePanel {
    companies: Vec<String>,
    days: Vec<NaiveDate>,
    volume: Vec<u64>,
    prices: Vec<[f64; 4]>,
}

impl MinutePanel {
    pub fn from_bars<I: IntoIterator<Item = MinuteBar>>(bars: I) -> Result<Self, DataError> {
        let mut builder = PanelBuilder::default();
        for bar in bars {
            builder.push(bar)?;
        }
        Ok(builder.build())
    }

    /// Builds a panel from dense arrays laid out as
    /// `(company * n_days + day) * 391 + minute`; absent cells carry
    /// `None` volume.
    pub(crate) fn from_parts(
        companies: Vec<String>,
        days: Vec<NaiveDate>,
        volume: Vec<Option<u64>>,
        prices: Vec<[f64; 4]>,
    ) -> Self {
        assert_eq!(volume.len(), companies.len() * days.len() * SESSION_MINUTES);
        assert_eq!(volume.len(), prices.len());
        debug_assert!(companies.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(days.windows(2).all(|w| w[0] < w[1]));
        let volume = volume.into_iter().map(|v| v.unwrap_or(MISSING)).collect();
        Self { companies, days, volume, prices }
    }

    pub fn companies(&self) -> &[String] {
        &self.companies
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn n_companies(&self) -> usize {
        self.companies.len()
    }

    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    pub fn company_index(&self, ticker: &str) -> Option<usize> {
        self.companies.binary_search_by(|c| c.as_str().cmp(ticker)).ok()
    }

    pub fn day_index(&self, day: NaiveDate) -> Option<usize> {
        self.days.binary_search(&day).ok()
    }

    fn offset(&self, company: usize, day: usize, minute: u16) -> usize {
        (company * self.days.len() + day) * SESSION_MINUTES + minute as usize
    }

    pub fn volume(&self, company: usize, day: usize, minute: u16) -> Option<u64> {
        let v = self.volume[self.offset(company, day, minute)];
        (v != MISSING).then_some(v)
    }

    pub fn bar(&self, company: usize, day: usize, minute: u16) -> Option<Bar> {
        let i = self.offset(company, day, minute);
        let v = self.volume[i];
        (v != MISSING).then(|| {
            let [open, high, low, close] = self.prices[i];
            Bar { volume: v, open, high, low, close }
        })
    }

    pub fn present_cells(&self) -> usize {
        self.volume.iter().filter(|&&v| v != MISSING).count()
    }

    /// Every present cell in (company, day, minute) order.
    pub fn bars(&self) -> impl Iterator<Item = MinuteBar> + '_ {
        (0..self.companies.len()).flat_map(move |c| {
            (0..self.days.len()).flat_map(move |d| {
                (0..=LAST_MINUTE).filter_map(move |t| {
                    self.bar(c, d, t).map(|b| MinuteBar {
                        ticker: self.companies[c].clone(),
                        date: self.days[d],
                        minute: t,
                        volume: b.volume,
                        open: b.open,
                        high: b.high,
                        low: b.low,
                        close: b.close,
                    })
                })
            })
        })
    }
}

/// Accumulates bars, rejecting duplicates, then lays them out densely.
#[derive(Debug, Default)]
pub struct PanelBuilder {
    cells: BTreeMap<(String, NaiveDate, u16), Bar>,
}

impl PanelBuilder {
    pub fn push(&mut self, bar: MinuteBar) -> Result<(), DataError> {
        bar.check().map_err(|reason| DataError::InvalidBar {
            ticker: bar.ticker.clone(),
            date: bar.date,
            minute: bar.minute,
            reason,
        })?;
        let cell = bar.bar();
        let key = (bar.ticker, bar.date, bar.minute);
        if self.cells.contains_key(&key) {
            let (ticker, date, minute) = key;
            return Err(DataError::DuplicateCell { ticker, date, minute });
        }
        self.cells.insert(key, cell);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn build(self) -> MinutePanel {
        let mut companies: Vec<String> = self.cells.keys().map(|k| k.0.clone()).collect();
        companies.dedup();
        let mut days: Vec<NaiveDate> = self.cells.keys().map(|k| k.1).collect();
        days.sort_unstable();
        days.dedup();
        let n = companies.len() * days.len() * SESSION_MINUTES;
        let mut panel = MinutePanel {
            volume: vec![MISSING; n],
            prices: vec![[f64::NAN; 4]; n],
            companies,
            days,
        };
        for ((ticker, date, minute), b) in self.cells {
            let c = panel.company_index(&ticker).expect("ticker indexed");
            let d = panel.day_index(date).expect("day indexed");
            let i = panel.offset(c, d, minute);
            panel.volume[i] = b.volume;
            panel.prices[i] = [b.open, b.high, b.low, b.close];
        }
        panel
    }
}

/// Read-only window on one semester of a panel that hides excluded
/// (ticker, semester) pairs.
#[derive(Debug, Clone)]
pub struct SemesterView<'a> {
    panel: &'a MinutePanel,
    semester: u32,
    companies: Vec<usize>,
    days: Range<usize>,
}

impl<'a> SemesterView<'a> {
    pub fn new(panel: &'a MinutePanel, index: &SemesterIndex, semester: u32) -> Result<Self, DataError> {
        let days = index
            .day_range(semester)
            .ok_or(DataError::UnknownSemester(semester))?;
        let companies = (0..panel.n_companies())
            .filter(|&c| !index.is_excluded(semester, &panel.companies()[c]))
            .collect();
        Ok(Self { panel, semester, companies, days })
    }

    pub fn panel(&self) -> &'a MinutePanel {
        self.panel
    }

    pub fn semester(&self) -> u32 {
        self.semester
    }

    /// Panel indices of the companies included in this semester.
    pub fn companies(&self) -> &[usize] {
        &self.companies
    }

    /// Panel indices of the semester's days.
    pub fn days(&self) -> Range<usize> {
        self.days.clone()
    }

    /// Looks up an included company by ticker.
    pub fn company(&self, ticker: &str) -> Result<usize, DataError> {
        let c = self
            .panel
            .company_index(ticker)
            .ok_or_else(|| DataError::UnknownTicker(ticker.to_string()))?;
        self.companies
            .binary_search(&c)
            .map(|_| c)
            .map_err(|_| DataError::UnknownTicker(format!("{ticker} (excluded in semester {})", self.semester)))
    }

    pub fn includes(&self, company: usize) -> bool {
        self.companies.binary_search(&company).is_ok()
    }

    pub fn volume(&self, company: usize, day: usize, minute: u16) -> Option<u64> {
        if !self.includes(company) || !self.days.contains(&day) {
            return None;
        }
        self.panel.volume(company, day, minute)
    }

    pub fn bar(&self, company: usize, day: usize, minute: u16) -> Option<Bar> {
        if !self.includes(company) || !self.days.contains(&day) {
            return None;
        }
        self.panel.bar(company, day, minute)
    }
}
