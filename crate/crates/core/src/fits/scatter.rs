use serde::{Deserialize, Serialize};

use super::lstsq::{ols_poly, pearson};
use super::{check_len, Coefficient, FitError, FitModel, FitResult, FitWindow};

/// Session part used by a scatter relation; the split is at t = 195.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Morning,
    Afternoon,
    Whole,
}

impl Split {
    pub fn window(self) -> FitWindow {
        match self {
            Split::Morning => FitWindow::new(0, 194),
            Split::Afternoon => FitWindow::new(195, 390),
            Split::Whole => FitWindow::new(0, 390),
        }
    }
}

/// Polynomial of order 1 or 2 of `y` on `x` over the split's minutes,
/// skipping minutes where either profile is missing.
pub fn scatter_relation(
    x_profile: &[Option<f64>],
    y_profile: &[Option<f64>],
    split: Split,
    order: usize,
) -> Result<FitResult, FitError> {
    check_len(x_profile)?;
    check_len(y_profile)?;
    let model = match order {
        1 => FitModel::Linear,
        2 => FitModel::Parabola,
        _ => return Err(FitError::WrongModel { expected: "order 1 or 2", found: "other order" }),
    };
    let window = split.window();
    let (x, y): (Vec<f64>, Vec<f64>) = window
        .minutes()
        .filter_map(|t| match (x_profile[usize::from(t)], y_profile[usize::from(t)]) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        })
        .unzip();
    let need = order + 2;
    if x.len() < need {
        return Err(FitError::TooFewPoints { n: x.len(), need });
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(FitError::DegenerateX);
    }
    let fit = ols_poly(&x, &y, order)?;
    let names: &[&str] = if order == 1 { &["intercept", "slope"] } else { &["c0", "c1", "c2"] };
    Ok(FitResult {
        model,
        coefficients: names
            .iter()
            .enumerate()
            .map(|(k, name)| Coefficient { name: name.to_string(), value: fit.coef[k], standard_error: fit.se[k] })
            .collect(),
        r: if order == 1 { pearson(&x, &y) } else { pearson(&fit.fitted, &y) },
        window,
        n_points: x.len(),
        residual_sum_squares: fit.rss,
        time_offset: 0.0,
    })
}

/// Straight-line OLS of `y` on `x` for series that are not session
/// profiles (semester trends, cross-semester regressions).
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<FitResult, FitError> {
    let n = x.len().min(y.len());
    if n < 3 {
        return Err(FitError::TooFewPoints { n, need: 3 });
    }
    if x[..n].iter().all(|&v| v == x[0]) {
        return Err(FitError::DegenerateX);
    }
    let fit = ols_poly(&x[..n], &y[..n], 1)?;
    Ok(FitResult {
        model: FitModel::Linear,
        coefficients: ["intercept", "slope"]
            .iter()
            .enumerate()
            .map(|(k, name)| Coefficient { name: name.to_string(), value: fit.coef[k], standard_error: fit.se[k] })
            .collect(),
        r: pearson(&x[..n], &y[..n]),
        window: FitWindow::new(0, crate::market_data::LAST_MINUTE),
        n_points: n,
        residual_sum_squares: fit.rss,
        time_offset: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::SESSION_MINUTES;

    fn series(f: impl Fn(f64) -> f64) -> Vec<Option<f64>> {
        (0..SESSION_MINUTES).map(|t| Some(f(t as f64))).collect()
    }

    #[test]
    fn exact_parabola() {
        let x = series(|t| t / 50.0 - 3.0);
        let y: Vec<_> = x.iter().map(|v| v.map(|v| 2.0 * v * v)).collect();
        let fit = scatter_relation(&x, &y, Split::Whole, 2).unwrap();
        for (k, want) in [0.0, 0.0, 2.0].into_iter().enumerate() {
            assert!((fit.coefficients[k].value - want).abs() < 1e-10, "{fit:?}");
        }
        assert!((fit.evaluate(1.5) - 4.5).abs() < 1e-10);
    }

    #[test]
    fn identity_with_missing_minute() {
        let x = series(|t| t.sqrt());
        let mut y = x.clone();
        y[100] = None;
        let fit = scatter_relation(&x, &y, Split::Morning, 1).unwrap();
        assert!((fit.coefficient("slope").unwrap() - 1.0).abs() < 1e-12);
        assert!(fit.coefficient("intercept").unwrap().abs() < 1e-12);
        assert_eq!(fit.n_points, 194);
        assert!((fit.r - 1.0).abs() < 1e-12);
        let afternoon = scatter_relation(&x, &y, Split::Afternoon, 1).unwrap();
        assert_eq!(afternoon.n_points, 196);
    }

    #[test]
    fn negative_relation_has_negative_r() {
        let x = series(|t| t);
        let y = series(|t| 10.0 - 0.5 * t + (t * 3.1).sin());
        assert!(scatter_relation(&x, &y, Split::Whole, 1).unwrap().r < -0.99);
    }

    #[test]
    fn line_through_points() {
        let fit = fit_line(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((fit.coefficient("slope").unwrap() - 2.0).abs() < 1e-12);
        assert!((fit.coefficient("intercept").unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(fit_line(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err(), FitError::TooFewPoints { n: 2, need: 3 });
    }

    #[test]
    fn errors() {
        let x = series(|_| 1.0);
        let y = series(|t| t);
        assert_eq!(scatter_relation(&x, &y, Split::Whole, 1).unwrap_err(), FitError::DegenerateX);
        let none = vec![None; SESSION_MINUTES];
        assert!(matches!(scatter_relation(&none, &y, Split::Whole, 2), Err(FitError::TooFewPoints { n: 0, need: 4 })));
        assert!(scatter_relation(&y, &y, Split::Whole, 3).is_err());
    }
}
