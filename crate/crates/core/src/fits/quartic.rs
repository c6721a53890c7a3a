use serde::{Deserialize, Serialize};

use super::lstsq::{ols_poly, pearson};
use super::{check_len, Coefficient, FitError, FitModel, FitResult, FitWindow};
use crate::market_data::SESSION_MINUTES;

/// Half-session length in minutes; `x = t/195 − 1` maps the session onto [−1, 1].
pub const HALF_SESSION: f64 = 195.0;

pub fn rescaled_time(t: f64) -> f64 {
    t / HALF_SESSION - 1.0
}

fn fit_polynomial(profile: &[Option<f64>], degree: usize, model: FitModel) -> Result<FitResult, FitError> {
    check_len(profile)?;
    let points: Vec<(usize, f64)> = profile.iter().enumerate().filter_map(|(t, v)| v.map(|v| (t, v))).collect();
    let need = degree + 2;
    if points.len() < need {
        return Err(FitError::TooFewPoints { n: points.len(), need });
    }
    let mid = HALF_SESSION as usize;
    if points.iter().all(|&(t, _)| t < mid) || points.iter().all(|&(t, _)| t >= mid) {
        return Err(FitError::InsufficientSpan);
    }
    let x: Vec<f64> = points.iter().map(|&(t, _)| rescaled_time(t as f64)).collect();
    let y: Vec<f64> = points.iter().map(|&(_, v)| v).collect();
    let fit = ols_poly(&x, &y, degree)?;
    Ok(FitResult {
        model,
        coefficients: (0..=degree)
            .map(|k| Coefficient { name: format!("c{k}"), value: fit.coef[k], standard_error: fit.se[k] })
            .collect(),
        r: pearson(&fit.fitted, &y),
        window: FitWindow::new(points[0].0 as u16, points[points.len() - 1].0 as u16),
        n_points: points.len(),
        residual_sum_squares: fit.rss,
        time_offset: 0.0,
    })
}

/// Least-squares quartic in rescaled time, coefficients `c0..c4`. Missing
/// minutes are skipped.
pub fn fit_quartic(profile: &[Option<f64>]) -> Result<FitResult, FitError> {
    fit_polynomial(profile, 4, FitModel::Quartic)
}

/// Least-squares cubic in rescaled time, the reference the quartic is compared against.
pub fn fit_cubic(profile: &[Option<f64>]) -> Result<FitResult, FitError> {
    fit_polynomial(profile, 3, FitModel::Cubic)
}

/// Which half of the session the odd middle minute (t = 195) belongs to in
/// the symmetry functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MidpointHalf {
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunctionals {
    /// Mean over the 391 minutes of the fitted curve's second derivative in
    /// rescaled time.
    pub concavity: f64,
    /// `(1/391)·(Σ_{t ≥ 195} p − Σ_{t < 195} p)` over the fitted curve.
    pub symmetry: f64,
    pub coefficients: [f64; 5],
    pub midpoint_half: MidpointHalf,
}

pub fn shape_functionals(fit: &FitResult) -> Result<ShapeFunctionals, FitError> {
    if fit.model != FitModel::Quartic {
        return Err(FitError::WrongModel { expected: FitModel::Quartic.name(), found: fit.model.name() });
    }
    let mut c = [0.0; 5];
    for (k, slot) in c.iter_mut().enumerate() {
        *slot = fit.coefficient(&format!("c{k}")).ok_or(FitError::WrongModel {
            expected: FitModel::Quartic.name(),
            found: fit.model.name(),
        })?;
    }
    let p = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4])));
    let p2 = |x: f64| 2.0 * c[2] + 6.0 * c[3] * x + 12.0 * c[4] * x * x;
    let n = SESSION_MINUTES as f64;
    let mid = HALF_SESSION as usize;
    let (mut curvature, mut first, mut second) = (0.0, 0.0, 0.0);
    for t in 0..SESSION_MINUTES {
        let x = rescaled_time(t as f64);
        curvature += p2(x);
        if t < mid {
            first += p(x);
        } else {
            second += p(x);
        }
    }
    Ok(ShapeFunctionals {
        concavity: curvature / n,
        symmetry: (second - first) / n,
        coefficients: c,
        midpoint_half: MidpointHalf::Second,
    })
}
