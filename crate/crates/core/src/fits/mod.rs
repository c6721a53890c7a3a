//! Intraday profile fits and shape functionals.
//!
//! Power laws are fitted by ordinary least squares in log-log space, the
//! mean profile by a quartic in rescaled time `x = t/195 − 1`, and the
//! afternoon kurtosis rise by multi-start Gauss-Newton.

mod kurtosis;
mod lstsq;
mod powerlaw;
mod quartic;
mod scatter;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{LAST_MINUTE, SESSION_MINUTES};

pub use kurtosis::{fit_kurtosis_afternoon, fit_kurtosis_morning, fit_kurtosis_relaxation, KurtosisFitOptions};
pub use lstsq::pearson;
pub use powerlaw::{fit_closing_powerlaw, fit_opening_powerlaw, half_volume_time};
pub use quartic::{fit_cubic, fit_quartic, rescaled_time, HALF_SESSION, shape_functionals, MidpointHalf, ShapeFunctionals};
pub use scatter::{fit_line, scatter_relation, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    OpeningPowerLaw,
    ClosingPowerLaw,
    Quartic,
    Cubic,
    KurtosisMorning,
    KurtosisAfternoon,
    Linear,
    Parabola,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            FitModel::OpeningPowerLaw => "opening-power-law",
            FitModel::ClosingPowerLaw => "closing-power-law",
            FitModel::Quartic => "quartic",
            FitModel::Cubic => "cubic",
            FitModel::KurtosisMorning => "kurtosis-morning",
            FitModel::KurtosisAfternoon => "kurtosis-afternoon",
            FitModel::Linear => "linear",
            FitModel::Parabola => "parabola",
        }
    }
}

/// Inclusive range of session minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: u16,
    pub hi: u16,
}

impl FitWindow {
    pub const fn new(lo: u16, hi: u16) -> Self {
        Self { lo, hi }
    }

    pub fn check(self) -> Result<Self, FitError> {
        if self.lo < self.hi && self.hi <= LAST_MINUTE {
            Ok(self)
        } else {
            Err(FitError::InvalidWindow { lo: self.lo, hi: self.hi })
        }
    }

    pub fn minutes(self) -> impl Iterator<Item = u16> {
        self.lo..=self.hi
    }

    pub fn len(self) -> usize {
        usize::from(self.hi - self.lo) + 1
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
    /// NaN (serialised as null) when the fit's covariance is singular.
    #[serde(deserialize_with = "nullable_f64")]
    pub standard_error: f64,
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: Vec<Coefficient>,
    /// Correlation coefficient: Pearson r of the regression variables for
    /// straight-line fits, r(fitted, observed) otherwise; 0 when undefined.
    pub r: f64,
    pub window: FitWindow,
    pub n_points: usize,
    /// Residual sum of squares in the space the fit minimises (log space for
    /// power laws).
    pub residual_sum_squares: f64,
    /// Shift applied to `t` before the model's transform: power laws use
    /// `ln(t + offset)` or `ln(391 − t)`, the afternoon kurtosis law uses
    /// `(t + offset)^β`.
    #[serde(default)]
    pub time_offset: f64,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().find(|c| c.name == name).map(|c| c.value)
    }

    pub fn standard_error(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().find(|c| c.name == name).map(|c| c.standard_error)
    }

    fn values(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.value).collect()
    }

    /// The fitted curve at `input`: a session minute for time models, the
    /// regressor value for `Linear` and `Parabola`.
    pub fn evaluate(&self, input: f64) -> f64 {
        let c = self.values();
        let poly = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        match self.model {
            FitModel::OpeningPowerLaw | FitModel::KurtosisMorning => {
                (c[2] + c[1] * (input + self.time_offset).ln()).exp()
            }
            FitModel::ClosingPowerLaw => (c[2] + c[1] * (SESSION_MINUTES as f64 - input).ln()).exp(),
            FitModel::Quartic | FitModel::Cubic => poly(rescaled_time(input)),
            FitModel::KurtosisAfternoon => c[0] - c[1] * (input + self.time_offset).powf(c[2]),
            FitModel::Linear | FitModel::Parabola => poly(input),
        }
    }
}

/// Fit windows and offsets used by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub opening_window: FitWindow,
    /// Added to `t` before taking the log in the opening fit.
    pub opening_time_offset: f64,
    pub closing_window: FitWindow,
    pub kurtosis: KurtosisFitOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            opening_window: FitWindow::new(1, 100),
            opening_time_offset: 0.0,
            closing_window: FitWindow::new(331, 390),
            kurtosis: KurtosisFitOptions::default(),
        }
    }
}

impl FitConfig {
    pub fn check(&self) -> Result<(), FitError> {
        self.opening_window.check()?;
        self.closing_window.check()?;
        self.kurtosis.morning_window.check()?;
        self.kurtosis.afternoon_window.check()?;
        if self.opening_window.lo as f64 + self.opening_time_offset <= 0.0 {
            return Err(FitError::InvalidWindow { lo: self.opening_window.lo, hi: self.opening_window.hi });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("profile has {0} minutes, expected 391")]
    ProfileLength(usize),
    #[error("invalid fit window [{lo}, {hi}]")]
    InvalidWindow { lo: u16, hi: u16 },
    #[error("non-positive values at minutes {minutes:?}")]
    NonPositiveValue { minutes: Vec<u16> },
    #[error("window has {n} usable points, need at least {need}")]
    WindowTooSmall { n: usize, need: usize },
    #[error("exponent must be positive, got {0}")]
    NonPositiveExponent(f64),
    #[error("points do not span both halves of the session")]
    InsufficientSpan,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("expected a {expected} fit, got {found}")]
    WrongModel { expected: &'static str, found: &'static str },
    #[error("morning kurtosis is non-positive at minutes {minutes:?}")]
    MorningNonPositive { minutes: Vec<u16> },
    #[error("afternoon kurtosis fit failed after {starts} starts (best residual {best_rss})")]
    AfternoonNoConverge { best_rss: f64, starts: usize },
    #[error("regressor is constant")]
    DegenerateX,
    #[error("{n} points, need at least {need}")]
    TooFewPoints { n: usize, need: usize },
}

pub(crate) fn check_len(profile: &[Option<f64>]) -> Result<(), FitError> {
    if profile.len() == SESSION_MINUTES {
        Ok(())
    } else {
        Err(FitError::ProfileLength(profile.len()))
    }
}
