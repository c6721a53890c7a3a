use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lstsq::{ols, pearson};
use super::powerlaw::loglog_fit;
use super::{check_len, Coefficient, FitError, FitModel, FitResult, FitWindow};

/// Settings for the two-branch kurtosis relaxation fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KurtosisFitOptions {
    pub morning_window: FitWindow,
    pub afternoon_window: FitWindow,
    /// The afternoon law is `A − B (t − origin)^β`.
    pub afternoon_origin: f64,
    pub max_iterations: usize,
    /// Relative change of the residual sum of squares that ends refinement.
    pub tolerance: f64,
}

impl Default for KurtosisFitOptions {
    fn default() -> Self {
        Self {
            morning_window: FitWindow::new(1, 99),
            afternoon_window: FitWindow::new(291, 390),
            afternoon_origin: 290.0,
            max_iterations: 200,
            tolerance: 1e-10,
        }
    }
}

const START_EXPONENTS: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
const AFTERNOON_MIN_POINTS: usize = 8;
const MAX_HALVINGS: usize = 60;

/// Morning `κ ∝ t^(−β_m)` by log-log OLS and afternoon `κ = A − B (t − origin)^β_a`
/// by multi-start Gauss-Newton.
pub fn fit_kurtosis_relaxation(
    kappa: &[Option<f64>],
    options: &KurtosisFitOptions,
) -> Result<(FitResult, FitResult), FitError> {
    Ok((fit_kurtosis_morning(kappa, options)?, fit_kurtosis_afternoon(kappa, options)?))
}

pub fn fit_kurtosis_morning(kappa: &[Option<f64>], options: &KurtosisFitOptions) -> Result<FitResult, FitError> {
    loglog_fit(kappa, options.morning_window, f64::from, FitModel::KurtosisMorning, "beta_m", 0.0).map_err(|e| match e {
        FitError::NonPositiveValue { minutes } => FitError::MorningNonPositive { minutes },
        other => other,
    })
}

struct Afternoon<'a> {
    u: &'a [f64],
    y: &'a [f64],
}

impl Afternoon<'_> {
    fn model(&self, p: [f64; 3], u: f64) -> f64 {
        p[0] - p[1] * u.powf(p[2])
    }

    fn rss(&self, p: [f64; 3]) -> f64 {
        self.u.iter().zip(self.y).map(|(&u, &y)| (y - self.model(p, u)).powi(2)).sum()
    }

    fn jacobian(&self, p: [f64; 3]) -> DMatrix<f64> {
        DMatrix::from_fn(self.u.len(), 3, |i, k| {
            let u = self.u[i];
            match k {
                0 => 1.0,
                1 => -u.powf(p[2]),
                _ => -p[1] * u.powf(p[2]) * u.ln(),
            }
        })
    }

    /// Linear least squares for (A, B) at fixed β.
    fn linear_start(&self, beta: f64) -> Option<[f64; 3]> {
        let design = DMatrix::from_fn(self.u.len(), 2, |i, k| if k == 0 { 1.0 } else { -self.u[i].powf(beta) });
        let fit = ols(design, self.y).ok()?;
        Some([fit.coef[0], fit.coef[1], beta])
    }

    /// Gauss-Newton with step halving; returns the final point and its RSS.
    fn refine(&self, mut p: [f64; 3], options: &KurtosisFitOptions) -> Option<([f64; 3], f64)> {
        let mut rss = self.rss(p);
        if !rss.is_finite() {
            return None;
        }
        let scale: f64 = self.y.iter().map(|y| y * y).sum();
        for _ in 0..options.max_iterations {
            let residual = DVector::from_iterator(self.u.len(), self.u.iter().zip(self.y).map(|(&u, &y)| y - self.model(p, u)));
            let step = self.jacobian(p).svd(true, true).solve(&residual, 1e-14).ok()?;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial = [p[0] + lambda * step[0], p[1] + lambda * step[1], p[2] + lambda * step[2]];
                let trial_rss = self.rss(trial);
                if trial_rss.is_finite() && trial_rss < rss {
                    accepted = Some((trial, trial_rss));
                    break;
                }
                lambda *= 0.5;
            }
            let Some((next, next_rss)) = accepted else { break };
            let change = (rss - next_rss) / rss;
            p = next;
            rss = next_rss;
            if change < options.tolerance || rss <= 1e-30 * scale {
                break;
            }
        }
        Some((p, rss))
    }
}

pub fn fit_kurtosis_afternoon(kappa: &[Option<f64>], options: &KurtosisFitOptions) -> Result<FitResult, FitError> {
    check_len(kappa)?;
    let window = options.afternoon_window.check()?;
    if f64::from(window.lo) <= options.afternoon_origin {
        return Err(FitError::InvalidWindow { lo: window.lo, hi: window.hi });
    }
    let (u, y): (Vec<f64>, Vec<f64>) = window
        .minutes()
        .filter_map(|t| kappa[usize::from(t)].map(|k| (f64::from(t) - options.afternoon_origin, k)))
        .unzip();
    if u.len() < AFTERNOON_MIN_POINTS {
        return Err(FitError::WindowTooSmall { n: u.len(), need: AFTERNOON_MIN_POINTS });
    }
    let problem = Afternoon { u: &u, y: &y };
    let starts: Vec<[f64; 3]> = START_EXPONENTS
        .iter()
        .filter_map(|&beta| problem.linear_start(beta))
        .flat_map(|[a, b, beta]| [[a, b, beta], [a, -b, beta]])
        .collect();
    let n_starts = START_EXPONENTS.len() * 2;
    let mut best: Option<([f64; 3], f64)> = None;
    for start in starts {
        if let Some((p, rss)) = problem.refine(start, options) {
            if best.is_none_or(|(_, b)| rss < b) {
                best = Some((p, rss));
            }
        }
    }
    let (p, rss) = best.ok_or(FitError::AfternoonNoConverge { best_rss: f64::INFINITY, starts: n_starts })?;
    let fitted: Vec<f64> = u.iter().map(|&u| problem.model(p, u)).collect();
    let se = standard_errors(&problem.jacobian(p), rss, u.len());
    let names = ["A", "B", "beta_a"];
    Ok(FitResult {
        model: FitModel::KurtosisAfternoon,
        coefficients: (0..3)
            .map(|k| Coefficient { name: names[k].to_string(), value: p[k], standard_error: se[k] })
            .collect(),
        r: pearson(&fitted, &y),
        window,
        n_points: u.len(),
        residual_sum_squares: rss,
        time_offset: -options.afternoon_origin,
    })
}

/// Linearised standard errors `sqrt(diag(s² (JᵀJ)⁻¹))`; NaN when JᵀJ is singular.
fn standard_errors(jacobian: &DMatrix<f64>, rss: f64, n: usize) -> [f64; 3] {
    let s2 = rss / (n - 3) as f64;
    match (jacobian.transpose() * jacobian).try_inverse() {
        Some(inv) => [0, 1, 2].map(|k| (s2 * inv[(k, k)]).max(0.0).sqrt()),
        None => [f64::NAN; 3],
    }
}
