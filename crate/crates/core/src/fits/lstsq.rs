use nalgebra::{DMatrix, DVector};

use super::FitError;

/// Ordinary least-squares solution with classical standard errors.
#[derive(Debug, Clone)]
pub(crate) struct Ols {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub rss: f64,
    pub fitted: Vec<f64>,
}

/// Relative size below which a diagonal entry of R marks a dependent column.
const RANK_TOL: f64 = 1e-12;

/// Householder-QR least squares of `y` on the columns of `design`.
pub(crate) fn ols(design: DMatrix<f64>, y: &[f64]) -> Result<Ols, FitError> {
    let (n, p) = design.shape();
    if n <= p {
        return Err(FitError::TooFewPoints { n, need: p + 1 });
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if !(scale > 0.0) || (0..p).any(|j| r[(j, j)].abs() <= RANK_TOL * scale) {
        return Err(FitError::RankDeficient);
    }
    let y = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &y;
    let coef = r.solve_upper_triangular(&qty).ok_or(FitError::RankDeficient)?;
    let fitted = &design * &coef;
    let rss = (&y - &fitted).norm_squared();
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(p, p)).ok_or(FitError::RankDeficient)?;
    let sigma2 = rss / (n - p) as f64;
    let se = (0..p).map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt()).collect();
    Ok(Ols { coef: coef.iter().copied().collect(), se, rss, fitted: fitted.iter().copied().collect() })
}

/// Polynomial least squares `y ≈ Σ c_k x^k`, coefficients in ascending order.
pub(crate) fn ols_poly(x: &[f64], y: &[f64], degree: usize) -> Result<Ols, FitError> {
    let design = DMatrix::from_fn(x.len(), degree + 1, |i, k| x[i].powi(k as i32));
    ols(design, y)
}

/// Pearson correlation; 0 when either side has no spread.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let constant = |v: &[f64]| v[..n].iter().all(|x| *x == v[0]);
    if n < 2 || constant(a) || constant(b) {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}
