//! Per-(ticker, semester) scalar metrics: activity, Garman-Klass
//! volatility, semester price variation, and the concavity-activity
//! relation.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fits::{fit_line, FitError, FitResult, ShapeFunctionals, HALF_SESSION};
use crate::format::opt_float;
use crate::market_data::{DataError, MinutePanel, SemesterIndex, SemesterView, LAST_MINUTE, SESSION_MINUTES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("{0}")]
    Data(String),
    #[error("no data for {ticker} in semester {semester}")]
    NoData { ticker: String, semester: u32 },
    #[error("non-positive price")]
    NonPositivePrice,
    #[error("daily high below low on {0}")]
    InvalidRange(NaiveDate),
    #[error("variance sum is negative ({0})")]
    NegativeVariance(f64),
    #[error("{n} usable semesters, need at least 3")]
    TooFewPoints { n: usize },
    #[error(transparent)]
    Fit(#[from] FitError),
}

impl From<DataError> for MetricsError {
    fn from(e: DataError) -> Self {
        MetricsError::Data(e.to_string())
    }
}

/// Denominator used by [`semester_return`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReturnConvention {
    /// `100 (close − open) / close`.
    #[default]
    ClosingDenominator,
    /// `100 (close − open) / open`, the conventional return.
    OpenDenominator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsOptions {
    pub trading_days_per_year: f64,
    pub return_convention: ReturnConvention,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self { trading_days_per_year: 252.0, return_convention: ReturnConvention::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyOhlc {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

/// Daily bars from minute bars: first open, last close, extreme high and low
/// over the present minutes. Days without bars are skipped.
pub fn daily_ohlc(view: &SemesterView<'_>, company: usize) -> Vec<DailyOhlc> {
    let panel = view.panel();
    view.days()
        .filter_map(|d| {
            let mut bars = (0..=LAST_MINUTE).filter_map(|t| view.bar(company, d, t));
            let first = bars.next()?;
            let mut day = DailyOhlc {
                date: panel.days()[d],
                open: first.open,
                high: first.high,
                low: first.low,
                close: first.close,
            };
            for bar in bars {
                day.high = day.high.max(bar.high);
                day.low = day.low.min(bar.low);
                day.close = bar.close;
            }
            Some(day)
        })
        .collect()
}

/// Per-minute mean volume over the present days and its count.
fn mean_profile(view: &SemesterView<'_>, company: usize) -> Vec<Option<f64>> {
    (0..=LAST_MINUTE)
        .map(|t| {
            let (sum, n) = view
                .days()
                .filter_map(|d| view.volume(company, d, t))
                .fold((0.0, 0usize), |(s, n), v| (s + v as f64, n + 1));
            (n > 0).then(|| sum / n as f64)
        })
        .collect()
}

/// Average daily volume `V = Σ_t μ(t)`, where μ(t) averages the days on
/// which minute t is present.
pub fn activity(panel: &MinutePanel, index: &SemesterIndex, ticker: &str, s: u32) -> Result<f64, MetricsError> {
    let view = SemesterView::new(panel, index, s)?;
    let company = view.company(ticker)?;
    let profile = mean_profile(&view, company);
    if profile.iter().all(Option::is_none) {
        return Err(MetricsError::NoData { ticker: ticker.to_string(), semester: s });
    }
    Ok(activity_from_profile(&profile))
}

/// `Σ_t μ(t)` over the present minutes.
pub fn activity_from_profile(mean: &[Option<f64>]) -> f64 {
    mean.iter().flatten().sum()
}

/// Activity in rescaled time: the trapezoid integral of μ over
/// `x = t/195 − 1 ∈ [−1, 1]`. Needs every minute.
pub fn rescaled_activity(mean: &[Option<f64>]) -> Option<f64> {
    if mean.len() != SESSION_MINUTES {
        return None;
    }
    let values: Vec<f64> = mean.iter().copied().collect::<Option<_>>()?;
    let interior: f64 = values[1..SESSION_MINUTES - 1].iter().sum();
    Some((interior + 0.5 * (values[0] + values[SESSION_MINUTES - 1])) / HALF_SESSION)
}

/// Annualised Garman-Klass volatility
/// `√((D/N) Σ_d [½ ln(H/L)² − (2 ln 2 − 1) ln(C/O)²])`.
pub fn garman_klass_volatility(days: &[DailyOhlc], trading_days_per_year: f64) -> Result<f64, MetricsError> {
    if days.is_empty() {
        return Err(MetricsError::NoData { ticker: String::new(), semester: 0 });
    }
    let k = 2.0 * std::f64::consts::LN_2 - 1.0;
    let mut total = 0.0;
    for day in days {
        if [day.open, day.high, day.low, day.close].iter().any(|p| !(*p > 0.0)) {
            return Err(MetricsError::NonPositivePrice);
        }
        if day.high < day.low {
            return Err(MetricsError::InvalidRange(day.date));
        }
        let range = (day.high / day.low).ln();
        let drift = (day.close / day.open).ln();
        total += 0.5 * range * range - k * drift * drift;
    }
    if total < 0.0 {
        return Err(MetricsError::NegativeVariance(total));
    }
    Ok((trading_days_per_year / days.len() as f64 * total).sqrt())
}

/// Semester price variation in percent.
pub fn semester_return(open: f64, close: f64, convention: ReturnConvention) -> Result<f64, MetricsError> {
    if !(open > 0.0 && close > 0.0) {
        return Err(MetricsError::NonPositivePrice);
    }
    let denominator = match convention {
        ReturnConvention::ClosingDenominator => close,
        ReturnConvention::OpenDenominator => open,
    };
    Ok(100.0 * (close - open) / denominator)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemesterMetrics {
    pub ticker: String,
    pub semester: u32,
    pub trading_days: usize,
    /// Shares per day.
    pub activity: f64,
    /// Activity integrated over rescaled time.
    pub rescaled_activity: Option<f64>,
    pub volatility: Option<f64>,
    /// Percent.
    pub price_variation: Option<f64>,
    pub concavity: Option<f64>,
    pub symmetry: Option<f64>,
}

/// All metrics of one included (ticker, semester) pair; shape functionals
/// are copied from the quartic fit when supplied.
pub fn semester_metrics(
    view: &SemesterView<'_>,
    ticker: &str,
    shapes: Option<&ShapeFunctionals>,
    options: &MetricsOptions,
) -> Result<SemesterMetrics, MetricsError> {
    let company = view.company(ticker)?;
    let no_data = || MetricsError::NoData { ticker: ticker.to_string(), semester: view.semester() };
    let profile = mean_profile(view, company);
    if profile.iter().all(Option::is_none) {
        return Err(no_data());
    }
    let days = daily_ohlc(view, company);
    let volatility = garman_klass_volatility(&days, options.trading_days_per_year).ok();
    let price_variation = match (days.first(), days.last()) {
        (Some(first), Some(last)) => semester_return(first.open, last.close, options.return_convention).ok(),
        _ => None,
    };
    Ok(SemesterMetrics {
        ticker: ticker.to_string(),
        semester: view.semester(),
        trading_days: days.len(),
        activity: activity_from_profile(&profile),
        rescaled_activity: rescaled_activity(&profile),
        volatility,
        price_variation,
        concavity: shapes.map(|s| s.concavity),
        symmetry: shapes.map(|s| s.symmetry),
    })
}

/// OLS of concavity on rescaled activity across semesters. For profiles
/// dominated by the quartic term the slope is 10.
pub fn concavity_activity_regression(metrics: &[SemesterMetrics]) -> Result<FitResult, MetricsError> {
    let (v, c): (Vec<f64>, Vec<f64>) =
        metrics.iter().filter_map(|m| Some((m.rescaled_activity?, m.concavity?))).unzip();
    if v.len() < 3 {
        return Err(MetricsError::TooFewPoints { n: v.len() });
    }
    Ok(fit_line(&v, &c)?)
}

pub const METRICS_CSV_HEADER: &str =
    "ticker,semester,trading_days,activity,rescaled_activity,volatility,price_variation,concavity,symmetry";

pub fn metrics_csv(rows: &[SemesterMetrics]) -> String {
    let mut out = format!("{METRICS_CSV_HEADER}\n");
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            m.ticker,
            m.semester,
            m.trading_days,
            opt_float(Some(m.activity)),
            opt_float(m.rescaled_activity),
            opt_float(m.volatility),
            opt_float(m.price_variation),
            opt_float(m.concavity),
            opt_float(m.symmetry),
        ));
    }
    out
}
