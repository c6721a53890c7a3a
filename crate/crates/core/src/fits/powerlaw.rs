use nalgebra::DMatrix;

use super::lstsq::{ols, pearson};
use super::{check_len, Coefficient, FitError, FitModel, FitResult, FitWindow};
use crate::market_data::SESSION_MINUTES;

pub(crate) const MIN_POINTS: usize = 5;

/// Log-log OLS of the profile against `ln(regressor(t))` over the window.
/// The exponent is reported as the negated slope, so decay is positive.
pub(crate) fn loglog_fit(
    profile: &[Option<f64>],
    window: FitWindow,
    regressor: impl Fn(u16) -> f64,
    model: FitModel,
    exponent_name: &str,
    time_offset: f64,
) -> Result<FitResult, FitError> {
    check_len(profile)?;
    window.check()?;
    let mut bad = Vec::new();
    let (mut xs, mut ys) = (Vec::with_capacity(window.len()), Vec::with_capacity(window.len()));
    for t in window.minutes() {
        match profile[usize::from(t)] {
            Some(v) if v > 0.0 => {
                xs.push(regressor(t).ln());
                ys.push(v.ln());
            }
            Some(_) => bad.push(t),
            None => {}
        }
    }
    if !bad.is_empty() {
        return Err(FitError::NonPositiveValue { minutes: bad });
    }
    if xs.len() < MIN_POINTS {
        return Err(FitError::WindowTooSmall { n: xs.len(), need: MIN_POINTS });
    }
    let design = DMatrix::from_fn(xs.len(), 2, |i, k| if k == 0 { 1.0 } else { xs[i] });
    let fit = ols(design, &ys)?;
    let (intercept, slope) = (fit.coef[0], fit.coef[1]);
    let coefficient = |name: &str, value: f64, se: f64| Coefficient { name: name.to_string(), value, standard_error: se };
    Ok(FitResult {
        model,
        coefficients: vec![
            coefficient(exponent_name, -slope, fit.se[1]),
            coefficient("slope", slope, fit.se[1]),
            coefficient("log_amplitude", intercept, fit.se[0]),
        ],
        r: pearson(&xs, &ys),
        window,
        n_points: xs.len(),
        residual_sum_squares: fit.rss,
        time_offset,
    })
}

/// Opening relaxation `μ ∝ (t + offset)^(−α)`; `alpha` is positive for a
/// profile decaying after the open.
pub fn fit_opening_powerlaw(profile: &[Option<f64>], window: FitWindow, time_offset: f64) -> Result<FitResult, FitError> {
    if f64::from(window.lo) + time_offset <= 0.0 {
        return Err(FitError::InvalidWindow { lo: window.lo, hi: window.hi });
    }
    loglog_fit(profile, window, |t| f64::from(t) + time_offset, FitModel::OpeningPowerLaw, "alpha", time_offset)
}

/// Closing rise `μ ∝ (391 − t)^(−α′)`; `alpha_prime` is positive for a
/// profile rising into the close.
pub fn fit_closing_powerlaw(profile: &[Option<f64>], window: FitWindow) -> Result<FitResult, FitError> {
    let end = SESSION_MINUTES as f64;
    loglog_fit(profile, window, |t| end - f64::from(t), FitModel::ClosingPowerLaw, "alpha_prime", 0.0)
}

/// Minutes for `t^(−α)` to halve from its value at t = 1.
pub fn half_volume_time(alpha: f64) -> Result<f64, FitError> {
    if alpha > 0.0 {
        Ok(2f64.powf(1.0 / alpha))
    } else {
        Err(FitError::NonPositiveExponent(alpha))
    }
}
