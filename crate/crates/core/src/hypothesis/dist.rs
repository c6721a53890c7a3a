use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Student-t cumulative distribution at real-valued degrees of freedom.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof).map(|d| d.cdf(t)).unwrap_or(f64::NAN)
}

/// Inverse of [`student_t_cdf`] by bisection on the CDF, accurate to well
/// below 1e-10 in probability.
pub fn student_t_quantile(p: f64, dof: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) || !(dof > 0.0) {
        return f64::NAN;
    }
    if p == 0.5 {
        return 0.0;
    }
    let Ok(dist) = StudentsT::new(0.0, 1.0, dof) else { return f64::NAN };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while dist.cdf(lo) > p {
        lo *= 2.0;
    }
    while dist.cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if dist.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        // Two-sided 95% critical values from standard tables.
        for (dof, q) in [
            (1.0, 12.706204736),
            (5.0, 2.570581836),
            (10.0, 2.228138852),
            (30.0, 2.042272456),
            (100.0, 1.983971519),
        ] {
            let got = student_t_quantile(0.975, dof);
            assert!((got - q).abs() < 1e-7 * q, "dof {dof}: {got}");
            assert!((student_t_cdf(got, dof) - 0.975).abs() < 1e-8);
        }
    }

    #[test]
    fn cauchy_closed_form() {
        for t in [-20.0, -1.0, 0.3, 4.0] {
            let want = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn normal() {
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf_at_fractional_dof() {
        for dof in [1.0, 2.5, 5.0, 10.94, 30.0, 100.0] {
            for p in [0.001, 0.05, 0.3, 0.9, 0.995] {
                let q = student_t_quantile(p, dof);
                assert!((student_t_cdf(q, dof) - p).abs() < 1e-8, "dof {dof} p {p}");
            }
        }
    }
}
