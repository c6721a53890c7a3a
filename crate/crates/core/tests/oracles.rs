//! Monte-Carlo and constructed-panel oracles for estimators whose expected
//! values are only known in distribution.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use volseason::cumulants::{aggregate_hat, aggregate_tilde, variance_ratio, CumulantEngine};
use volseason::fits::{
    fit_closing_powerlaw, fit_kurtosis_afternoon, fit_line, fit_opening_powerlaw, fit_quartic, rescaled_time,
    scatter_relation, shape_functionals, FitWindow, KurtosisFitOptions, Split,
};
use volseason::market_data::{assign_semesters, MinuteBar, MinutePanel, SemesterView};
use volseason::metrics::{concavity_activity_regression, rescaled_activity, SemesterMetrics};
use volseason::synth::{analytic_profile, generate_panel, GeneratorSpec, Intensity, NoiseModel, SemesterOverride};
use volseason::SESSION_MINUTES;

const SEEDS: u64 = 200;
const CV: f64 = 0.3;

fn lognormal_noise() -> NoiseModel {
    NoiseModel::LogNormal { sigma: (1.0 + CV * CV).ln().sqrt() }
}

/// Order statistics bounding the central 99% of `v`.
fn envelope99(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    let k = (0.005 * v.len() as f64).floor() as usize;
    (v[k], v[v.len() - 1 - k])
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn profile(mut f: impl FnMut(f64) -> f64) -> Vec<Option<f64>> {
    (0..SESSION_MINUTES).map(|t| Some(f(t as f64))).collect()
}

/// Tilde mean profile of every semester of a synthetic panel.
fn tilde_means(spec: &GeneratorSpec) -> Vec<Vec<Option<f64>>> {
    let (panel, truth) = generate_panel(spec).expect("valid spec");
    let index = assign_semesters(&panel, &truth.semester_ranges()).expect("generator calendar");
    let engine = CumulantEngine::default();
    index
        .labels()
        .map(|s| {
            let view = SemesterView::new(&panel, &index, s).expect("label");
            let profiles: Vec<_> = engine.all_over_days(&view).into_iter().map(|(_, p)| p.expect("data")).collect();
            aggregate_tilde(&profiles, s).expect("profiles").mean
        })
        .collect()
}

/// Opening exponent of the tilde mean profile, pooling every generated
/// semester into one.
fn opening_alpha(spec: &GeneratorSpec) -> f64 {
    let (panel, truth) = generate_panel(spec).expect("valid spec");
    let ranges = truth.semester_ranges();
    let pooled = (ranges[0].0, ranges[ranges.len() - 1].1);
    let index = assign_semesters(&panel, &[pooled]).expect("pooled range");
    let view = SemesterView::new(&panel, &index, 1).expect("label");
    let profiles: Vec<_> =
        CumulantEngine::default().all_over_days(&view).into_iter().map(|(_, p)| p.expect("data")).collect();
    let mean = aggregate_tilde(&profiles, 1).expect("profiles").mean;
    fit_opening_powerlaw(&mean, FitWindow::new(1, 100), 1.0).expect("positive").coefficient("alpha").expect("alpha")
}

/// `total_days` spread over as many half-years as needed, at most 128 each.
fn pure_opening_spec(total_days: usize, seed: u64, noise: NoiseModel) -> GeneratorSpec {
    let n_semesters = total_days.div_ceil(128);
    GeneratorSpec {
        n_companies: 3,
        n_days: total_days / n_semesters,
        n_semesters: n_semesters as u32,
        seed,
        intensity: Intensity { opening_exponent: 0.3, closing_amplitude: 0.0, baseline: 0.0, ..Intensity::default() },
        noise,
        price: None,
        ..GeneratorSpec::default()
    }
}

fn weekdays(from: NaiveDate, n: usize) -> Vec<NaiveDate> {
    (0..)
        .map(|k| from.checked_add_days(Days::new(k)).expect("date"))
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(n)
        .collect()
}

#[test]
fn variance_ratio_matches_within_between_decomposition() {
    // v = Λ(t)(1 + δ_d + η_id): a day shock shared by every company with
    // variance 3τ² and an idiosyncratic term with variance τ². Over days a
    // company sees both; across companies on one day only η remains.
    let (n_companies, n_days, tau) = (30usize, 60usize, 0.05);
    let days = weekdays(NaiveDate::from_ymd_opt(2004, 1, 5).expect("date"), n_days);
    let shock = |d: usize| if d.is_multiple_of(2) { 3f64.sqrt() * tau } else { -(3f64.sqrt()) * tau };
    let eta = Normal::new(0.0, tau).expect("sd");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bars = Vec::with_capacity(n_companies * n_days * SESSION_MINUTES);
    for c in 0..n_companies {
        for (d, &date) in days.iter().enumerate() {
            for t in 0..SESSION_MINUTES as u16 {
                let lambda = 2e4 * (f64::from(t) + 1.0).powf(-0.3) + 1e4;
                let v = (lambda * (1.0 + shock(d) + eta.sample(&mut rng))).round() as u64;
                bars.push(MinuteBar {
                    ticker: format!("C{c:02}"),
                    date,
                    minute: t,
                    volume: v,
                    open: 1.0,
                    high: 1.0,
                    low: 1.0,
                    close: 1.0,
                });
            }
        }
    }
    let panel = MinutePanel::from_bars(bars).expect("panel");
    let range = (NaiveDate::from_ymd_opt(2004, 1, 1).expect("date"), NaiveDate::from_ymd_opt(2004, 6, 30).expect("date"));
    let index = assign_semesters(&panel, &[range]).expect("one semester");
    let view = SemesterView::new(&panel, &index, 1).expect("semester");
    let engine = CumulantEngine::default();
    let individual: Vec<_> = engine.all_over_days(&view).into_iter().map(|(_, p)| p.expect("data")).collect();
    let cross: Vec<_> = engine.all_over_companies(&view).into_iter().map(|(_, p)| p.expect("data")).collect();
    let ratio = variance_ratio(&aggregate_tilde(&individual, 1).unwrap(), &aggregate_hat(&cross, 1).unwrap()).unwrap();

    // Population variances: the day shock is exact, η loses (n − 1)/n.
    let nd = n_days as f64;
    let nc = n_companies as f64;
    let expected = (3.0 + (nd - 1.0) / nd) / ((nc - 1.0) / nc);
    let mut interior: Vec<f64> = ratio[1..390].iter().map(|r| r.expect("ratio")).collect();
    for &r in &interior {
        assert!((r / expected - 1.0).abs() < 0.2, "ratio {r} vs {expected}");
    }
    interior.sort_by(f64::total_cmp);
    let median = interior[interior.len() / 2];
    assert!((median / expected - 1.0).abs() < 0.02, "median ratio {median} vs {expected}");
    assert!((median - 4.0).abs() < 0.25, "median ratio {median}");
}

#[test]
fn closing_exponent_drift_is_recovered() {
    let (base, drift) = (0.30, 0.046);
    let n_semesters = 19u32;
    let overrides: Vec<SemesterOverride> = (1..=n_semesters)
        .map(|s| SemesterOverride {
            first: s,
            last: s,
            closing_exponent: Some(base + drift * f64::from(s - 1)),
            ..Default::default()
        })
        .collect();
    let intensity = Intensity { opening_amplitude: 0.0, baseline: 0.0, closing_amplitude: 1e5, ..Intensity::default() };
    let slopes: Vec<f64> = (0..SEEDS)
        .map(|seed| {
            let spec = GeneratorSpec {
                n_companies: 3,
                n_days: 12,
                n_semesters,
                seed: 300 + seed,
                intensity: intensity,
                noise: lognormal_noise(),
                price: None,
                overrides: overrides.clone(),
                ..GeneratorSpec::default()
            };
            let alphas: Vec<f64> = tilde_means(&spec)
                .iter()
                .map(|m| fit_closing_powerlaw(m, FitWindow::new(331, 390)).unwrap().coefficient("alpha_prime").unwrap())
                .collect();
            let s: Vec<f64> = (1..=n_semesters).map(f64::from).collect();
            fit_line(&s, &alphas).unwrap().coefficient("slope").unwrap()
        })
        .collect();
    let (m, sd) = mean_sd(&slopes);
    let (lo, hi) = envelope99(slopes);
    assert!((lo..=hi).contains(&drift), "drift {drift} outside [{lo}, {hi}]");
    assert!((m - drift).abs() < 3.0 * sd / (SEEDS as f64).sqrt() + 1e-3, "mean slope {m} sd {sd}");
}

#[test]
fn noisy_afternoon_kurtosis_parameters_in_envelope() {
    let (a, b, beta) = (5.0, 0.001, 2.16);
    let noise = Normal::new(0.0, 0.05 * a).expect("sd");
    let options = KurtosisFitOptions::default();
    let mut fitted = [Vec::new(), Vec::new(), Vec::new()];
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kappa = profile(|t| {
            let d = (t - 290.0).max(0.0);
            a - b * d.powf(beta) + noise.sample(&mut rng)
        });
        let fit = fit_kurtosis_afternoon(&kappa, &options).expect("converges");
        for (k, name) in ["A", "B", "beta_a"].into_iter().enumerate() {
            fitted[k].push(fit.coefficient(name).expect(name));
        }
    }
    for (values, planted) in fitted.into_iter().zip([a, b, beta]) {
        let (lo, hi) = envelope99(values);
        assert!((lo..=hi).contains(&planted), "{planted} outside [{lo}, {hi}]");
    }
}

#[test]
fn kurtosis_mean_parabola_recovered() {
    let planted = [12.2, -6.1, 1.5];
    let noise = Normal::new(0.0, 0.1).expect("sd");
    let mu = profile(|t| 1.0 + 3.0 * (t + 1.0).powf(-0.5));
    let mut fitted = [Vec::new(), Vec::new(), Vec::new()];
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kappa: Vec<Option<f64>> = mu
            .iter()
            .map(|m| m.map(|m| planted[0] + planted[1] * m + planted[2] * m * m + noise.sample(&mut rng)))
            .collect();
        let fit = scatter_relation(&mu, &kappa, Split::Morning, 2).expect("fit");
        for (k, name) in ["c0", "c1", "c2"].into_iter().enumerate() {
            fitted[k].push(fit.coefficient(name).expect(name));
        }
    }
    for (values, p) in fitted.into_iter().zip(planted) {
        let (m, sd) = mean_sd(&values);
        assert!((m - p).abs() < 4.0 * sd / (SEEDS as f64).sqrt(), "mean {m} vs planted {p}");
        let (lo, hi) = envelope99(values);
        assert!((lo..=hi).contains(&p), "{p} outside [{lo}, {hi}]");
    }
}

#[test]
fn concavity_activity_slope_under_noise() {
    let n_semesters = 19u32;
    let slopes: Vec<f64> = (0..SEEDS)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<SemesterMetrics> = (1..=n_semesters)
                .map(|s| {
                    let c = [400.0, -30.0, 120.0, 25.0, 20.0 * f64::from(s)];
                    let p: Vec<Option<f64>> = profile(|t| {
                        let x = rescaled_time(t);
                        let clean = c.iter().rev().fold(0.0, |acc, k| acc * x + k);
                        clean * (1.0 + 0.1 * Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng))
                    });
                    let shapes = shape_functionals(&fit_quartic(&p).unwrap()).unwrap();
                    SemesterMetrics {
                        ticker: "T".into(),
                        semester: s,
                        trading_days: 1,
                        activity: 0.0,
                        rescaled_activity: Some(rescaled_activity(&p).unwrap()),
                        volatility: None,
                        price_variation: None,
                        concavity: Some(shapes.concavity),
                        symmetry: Some(shapes.symmetry),
                    }
                })
                .collect();
            concavity_activity_regression(&rows).unwrap().coefficient("slope").unwrap()
        })
        .collect();
    let (lo, hi) = envelope99(slopes);
    assert!((lo..=hi).contains(&10.0), "10 outside [{lo}, {hi}]");
}

#[test]
fn seed_average_of_mean_profile_converges_to_intensity() {
    let spec = |seed| GeneratorSpec {
        n_companies: 2,
        n_days: 5,
        n_semesters: 1,
        seed,
        noise: lognormal_noise(),
        price: None,
        ..GeneratorSpec::default()
    };
    let runs: Vec<Vec<Option<f64>>> = (0..SEEDS).map(|seed| tilde_means(&spec(seed)).remove(0)).collect();
    let reference = spec(0);
    let z: Vec<f64> = (0..SESSION_MINUTES)
        .map(|t| {
            let values: Vec<f64> = runs.iter().map(|r| r[t].expect("complete")).collect();
            let (m, sd) = mean_sd(&values);
            (m - analytic_profile(&reference, t as u16).unwrap()) / (sd / (SEEDS as f64).sqrt())
        })
        .collect();
    // 391 simultaneous comparisons: 3 standard errors is exceeded about once
    // by chance, so each minute gets the Bonferroni bound for a 1% family-wise
    // level and the z-scores as a whole must look standard normal.
    let bound = 4.2;
    let worst = z.iter().fold(0.0f64, |w, v| w.max(v.abs()));
    assert!(worst < bound, "max |z| = {worst}");
    let (m, sd) = mean_sd(&z);
    assert!(m.abs() < 0.2 && (0.85..1.15).contains(&sd), "z mean {m} sd {sd}");
    let beyond3 = z.iter().filter(|v| v.abs() > 3.0).count();
    assert!(beyond3 <= 5, "{beyond3} minutes beyond 3 standard errors");
}

#[test]
fn envelope_narrows_as_days_double() {
    let seeds = 100;
    let mut widths = Vec::new();
    for n_days in [32, 64, 128, 256] {
        let alphas: Vec<f64> =
            (0..seeds).map(|seed| opening_alpha(&pure_opening_spec(n_days, 900 + seed, lognormal_noise()))).collect();
        let (lo, hi) = envelope99(alphas);
        widths.push(hi - lo);
    }
    for w in widths.windows(2) {
        assert!(w[1] < w[0], "widths {widths:?}");
    }
}

#[test]
fn exponent_robust_to_noise_law_at_matched_moments() {
    let seeds = 100;
    let run = |noise: NoiseModel| -> Vec<f64> {
        (0..seeds).map(|seed| opening_alpha(&pure_opening_spec(64, 500 + seed, noise))).collect()
    };
    let lognormal = run(lognormal_noise());
    let gamma = run(NoiseModel::Gamma { shape: 1.0 / (CV * CV) });
    let (m_ln, _) = mean_sd(&lognormal);
    let (m_g, _) = mean_sd(&gamma);
    let (lo, hi) = envelope99(lognormal);
    assert!((m_ln - m_g).abs() < hi - lo, "means {m_ln} vs {m_g}, width {}", hi - lo);
}
