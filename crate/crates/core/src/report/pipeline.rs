use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

use super::bundle::{
    AggregateFits, ClosingTrend, Failure, RegimeTests, ReportBundle, ScatterFit, SemesterAggregates, SemesterSummary,
    TickerFits,
};
use super::config::PipelineConfig;
use super::ReportError;
use crate::cumulants::{
    aggregate_hat, aggregate_tilde, mean_kurtosis_tail, variance_ratio, AggregatedProfile, CumulantEngine,
    CumulantProfile,
};
use crate::fits::{
    fit_closing_powerlaw, fit_kurtosis_afternoon, fit_kurtosis_morning, fit_line, fit_opening_powerlaw, fit_quartic,
    scatter_relation, shape_functionals, FitError, FitResult, ShapeFunctionals, Split,
};
use crate::hypothesis::{mww_test_with, welch_test_with, TestOptions};
use crate::market_data::{
    assign_semesters, default_semester_ranges, load_minute_bars, validate_panel, LoadReport, MinutePanel,
    SemesterIndex, SemesterView, ValidationReport, SESSION_MINUTES,
};
use crate::metrics::{concavity_activity_regression, semester_metrics, SemesterMetrics};
use crate::synth::{generate_panel, GroundTruth};

/// A labelled, validated panel ready for analysis.
#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub panel: MinutePanel,
    pub index: SemesterIndex,
    pub load: Vec<LoadReport>,
    pub validation: ValidationReport,
    pub ground_truth: Option<GroundTruth>,
}

/// Reads or generates the panel, labels semesters, applies configured
/// exclusions and the coverage check.
pub fn load_input(config: &PipelineConfig) -> Result<LoadedInput, ReportError> {
    config.check()?;
    let (panel, load, ground_truth) = match &config.input.synthetic {
        Some(spec) => {
            let (panel, truth) = generate_panel(spec)?;
            (panel, Vec::new(), Some(truth))
        }
        None => {
            let (panel, load) = read_paths(&config.input.paths, config)?;
            (panel, load, None)
        }
    };
    if panel.n_days() == 0 || panel.present_cells() == 0 {
        return Err(ReportError::Data("input holds no in-session minute bars".into()));
    }
    let ranges = match (&config.semesters.ranges, &ground_truth) {
        (Some(r), _) => r.iter().map(|b| (b.first, b.last)).collect(),
        (None, Some(truth)) => truth.semester_ranges(),
        (None, None) => default_semester_ranges(panel.days()[0], *panel.days().last().expect("non-empty")),
    };
    let mut index = assign_semesters(&panel, &ranges)?;
    let n_semesters = index.ranges().len() as u32;
    config.check_semesters(n_semesters)?;
    for e in &config.semesters.exclusions {
        if index.range(e.semester).is_none() {
            return Err(ReportError::Config(format!("exclusion names unknown semester {}", e.semester)));
        }
        for t in &e.tickers {
            index.exclude(e.semester, t.clone());
        }
    }
    let mut validation = validate_panel(&panel, &index, config.semesters.min_day_coverage);
    for r in &mut validation.records {
        if index.is_excluded(r.semester, &r.ticker) {
            r.included = false;
            r.reason = Some("excluded by configuration".into());
        }
    }
    validation.apply(&mut index);
    Ok(LoadedInput { panel, index, load, validation, ground_truth })
}

fn read_paths(paths: &[std::path::PathBuf], config: &PipelineConfig) -> Result<(MinutePanel, Vec<LoadReport>), ReportError> {
    let mut panels = Vec::new();
    let mut reports = Vec::new();
    for p in paths {
        let (panel, report) = load_minute_bars(Path::new(p), &config.input.schema)?;
        panels.push(panel);
        reports.push(report);
    }
    let panel = if panels.len() == 1 {
        panels.pop().expect("one panel")
    } else {
        MinutePanel::from_bars(panels.iter().flat_map(MinutePanel::bars))?
    };
    Ok((panel, reports))
}

/// Runs every stage on a thread pool of `config.jobs` workers.
pub fn run_pipeline(config: &PipelineConfig) -> Result<ReportBundle, ReportError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| ReportError::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| {
        let input = load_input(config)?;
        run_pipeline_with_panel(config, input)
    })
}

/// Everything computed for one semester.
struct SemesterOutput {
    summary: SemesterSummary,
    aggregates: SemesterAggregates,
    ticker_fits: Vec<TickerFits>,
    metrics: Vec<SemesterMetrics>,
    individual: Vec<CumulantProfile>,
    failures: Vec<Failure>,
}

/// Runs the analysis stages on an already loaded panel, in the current
/// thread pool.
pub fn run_pipeline_with_panel(config: &PipelineConfig, input: LoadedInput) -> Result<ReportBundle, ReportError> {
    let LoadedInput { panel, index, load, validation, ground_truth } = input;
    let engine = CumulantEngine::new(config.kurtosis_reading);
    let labels: Vec<u32> = index.labels().collect();
    let outputs: Vec<SemesterOutput> = labels
        .par_iter()
        .map(|&s| semester_stage(config, &engine, &panel, &index, s))
        .collect::<Result<_, _>>()?;

    let mut bundle = ReportBundle {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        config: PipelineConfig { output_dir: Default::default(), jobs: 0, ..config.clone() },
        tickers: panel.companies().to_vec(),
        semesters: Vec::new(),
        load,
        validation,
        aggregates: Vec::new(),
        ticker_fits: Vec::new(),
        metrics: Vec::new(),
        regressions: Vec::new(),
        closing_trend: None,
        tests: None,
        kurtosis_tail: None,
        ground_truth,
        failures: Vec::new(),
        individual_profiles: Vec::new(),
    };
    for out in outputs {
        bundle.semesters.push(out.summary);
        bundle.aggregates.push(out.aggregates);
        bundle.ticker_fits.extend(out.ticker_fits);
        bundle.metrics.extend(out.metrics);
        bundle.failures.extend(out.failures);
        if config.write_individual_profiles {
            bundle.individual_profiles.extend(out.individual);
        }
    }

    let succeeded: BTreeSet<&str> = bundle.metrics.iter().map(|m| m.ticker.as_str()).collect();
    if succeeded.is_empty() {
        return Err(ReportError::AllTickersFailed { failures: bundle.failures.len() });
    }

    let regressions: Vec<(String, Result<FitResult, String>)> = bundle
        .tickers
        .par_iter()
        .filter(|t| succeeded.contains(t.as_str()))
        .map(|t| {
            let rows: Vec<SemesterMetrics> = bundle.metrics.iter().filter(|m| &m.ticker == t).cloned().collect();
            (t.clone(), concavity_activity_regression(&rows).map_err(|e| e.to_string()))
        })
        .collect();
    for (ticker, r) in regressions {
        match r {
            Ok(fit) => bundle.regressions.push((ticker, fit)),
            Err(e) => bundle.failures.push(Failure::new("concavity-regression", &ticker, None, e)),
        }
    }

    bundle.closing_trend = Some(closing_trend(&bundle, config.closing_trend_break));
    if let Some(trend) = &bundle.closing_trend {
        for (part, fit) in [("first", &trend.first), ("second", &trend.second)] {
            if fit.is_none() {
                bundle.failures.push(Failure::new("closing-trend", part, None, "fewer than 3 semesters with a closing exponent"));
            }
        }
    }

    if config.tests.enabled {
        let (tests, failures) = regime_tests(&bundle, config);
        bundle.tests = Some(tests);
        bundle.failures.extend(failures);
    }

    let hats: BTreeMap<u32, AggregatedProfile> =
        bundle.aggregates.iter().filter_map(|a| Some((a.semester, a.hat.clone()?))).collect();
    match mean_kurtosis_tail(&hats, usize::from(config.kurtosis_tail.t_min), &config.kurtosis_tail.excluded_semesters) {
        Ok(tail) => bundle.kurtosis_tail = Some(tail),
        Err(e) => bundle.failures.push(Failure::new("kurtosis-tail", "hat", None, e)),
    }
    Ok(bundle)
}

fn semester_stage(
    config: &PipelineConfig,
    engine: &CumulantEngine,
    panel: &MinutePanel,
    index: &SemesterIndex,
    s: u32,
) -> Result<SemesterOutput, ReportError> {
    let view = SemesterView::new(panel, index, s)?;
    let range = index.range(s).expect("label from index");
    let mut failures = Vec::new();

    let mut individual = Vec::new();
    for (ticker, r) in engine.all_over_days(&view) {
        match r {
            Ok(p) => individual.push(p),
            Err(e) => failures.push(Failure::new("profile", &ticker, Some(s), e)),
        }
    }
    let mut cross = Vec::new();
    for (day, r) in engine.all_over_companies(&view) {
        match r {
            Ok(p) => cross.push(p),
            Err(e) => failures.push(Failure::new("cross-profile", &day.to_string(), Some(s), e)),
        }
    }
    let tilde = (!individual.is_empty()).then(|| aggregate_tilde(&individual, s)).transpose();
    let hat = (!cross.is_empty()).then(|| aggregate_hat(&cross, s)).transpose();
    let (tilde, hat) = match (tilde, hat) {
        (Ok(t), Ok(h)) => (t, h),
        (Err(e), _) | (_, Err(e)) => return Err(ReportError::Numerical(format!("semester {s}: {e}"))),
    };
    if tilde.is_none() {
        failures.push(Failure::new("aggregate", "tilde", Some(s), "no ticker profile"));
    }
    if hat.is_none() {
        failures.push(Failure::new("aggregate", "hat", Some(s), "no cross-sectional profile"));
    }
    let ratio = match (&tilde, &hat) {
        (Some(t), Some(h)) => variance_ratio(t, h).ok(),
        _ => None,
    };
    let fits = aggregate_fits(config, s, tilde.as_ref(), hat.as_ref(), &mut failures);

    let per_ticker: Vec<(TickerFits, Result<SemesterMetrics, String>, Vec<Failure>)> = individual
        .par_iter()
        .map(|p| ticker_stage(config, &view, p))
        .collect();
    let mut ticker_fits = Vec::new();
    let mut metrics = Vec::new();
    for (tf, m, f) in per_ticker {
        match m {
            Ok(m) => metrics.push(m),
            Err(e) => failures.push(Failure::new("metrics", &tf.ticker, Some(s), e)),
        }
        ticker_fits.push(tf);
        failures.extend(f);
    }

    Ok(SemesterOutput {
        summary: SemesterSummary {
            label: s,
            first: range.first,
            last: range.last,
            trading_days: view.days().len(),
            included_tickers: view.companies().iter().map(|&c| panel.companies()[c].clone()).collect(),
        },
        aggregates: SemesterAggregates { semester: s, tilde, hat, variance_ratio: ratio, fits },
        ticker_fits,
        metrics,
        individual,
        failures,
    })
}

/// Records a failed fit and turns it into `None`.
fn keep<T>(r: Result<T, FitError>, stage: &str, subject: &str, s: u32, failures: &mut Vec<Failure>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            failures.push(Failure::new(stage, subject, Some(s), e));
            None
        }
    }
}

fn quartic_with_shapes(
    profile: &[Option<f64>],
    stage: &str,
    subject: &str,
    s: u32,
    failures: &mut Vec<Failure>,
) -> (Option<FitResult>, Option<ShapeFunctionals>) {
    let fit = keep(fit_quartic(profile), stage, subject, s, failures);
    let shapes = fit.as_ref().and_then(|f| keep(shape_functionals(f), stage, subject, s, failures));
    (fit, shapes)
}

fn aggregate_fits(
    config: &PipelineConfig,
    s: u32,
    tilde: Option<&AggregatedProfile>,
    hat: Option<&AggregatedProfile>,
    failures: &mut Vec<Failure>,
) -> AggregateFits {
    let mut fits = AggregateFits::default();
    let time: Vec<Option<f64>> = (0..SESSION_MINUTES).map(|t| Some(t as f64)).collect();
    let halves = [Split::Morning, Split::Afternoon];
    if let Some(t) = tilde {
        let f = &config.fits;
        fits.opening = keep(fit_opening_powerlaw(&t.mean, f.opening_window, f.opening_time_offset), "opening", "tilde", s, failures);
        fits.closing = keep(fit_closing_powerlaw(&t.mean, f.closing_window), "closing", "tilde", s, failures);
        (fits.quartic, fits.shapes) = quartic_with_shapes(&t.mean, "quartic", "tilde", s, failures);
        fits.kurtosis_morning = keep(fit_kurtosis_morning(&t.kurtosis, &f.kurtosis), "kurtosis-morning", "tilde", s, failures);
        fits.kurtosis_afternoon =
            keep(fit_kurtosis_afternoon(&t.kurtosis, &f.kurtosis), "kurtosis-afternoon", "tilde", s, failures);
        (fits.variance_quartic_tilde, fits.variance_shapes_tilde) =
            quartic_with_shapes(&t.variance, "variance-quartic", "tilde", s, failures);
        for split in halves {
            let variance = scatter_relation(&t.mean, &t.variance, split, 2);
            if let Some(fit) = keep(variance, "variance-vs-mean", "tilde", s, failures) {
                fits.scatter.push(ScatterFit { relation: "variance-vs-mean".into(), split, fit });
            }
            let skew = scatter_relation(&time, &t.skewness, split, 1);
            if let Some(fit) = keep(skew, "skewness-vs-time", "tilde", s, failures) {
                fits.scatter.push(ScatterFit { relation: "skewness-vs-time".into(), split, fit });
            }
        }
    }
    if let Some(h) = hat {
        (fits.variance_quartic_hat, fits.variance_shapes_hat) =
            quartic_with_shapes(&h.variance, "variance-quartic", "hat", s, failures);
        for split in halves {
            if let Some(fit) = keep(scatter_relation(&h.mean, &h.kurtosis, split, 2), "kurtosis-vs-mean", "hat", s, failures) {
                fits.scatter.push(ScatterFit { relation: "kurtosis-vs-mean".into(), split, fit });
            }
        }
    }
    fits
}

fn ticker_stage(
    config: &PipelineConfig,
    view: &SemesterView<'_>,
    profile: &CumulantProfile,
) -> (TickerFits, Result<SemesterMetrics, String>, Vec<Failure>) {
    let ticker = match &profile.axis {
        crate::cumulants::ProfileAxis::OverDays { ticker } => ticker.clone(),
        crate::cumulants::ProfileAxis::OverCompanies { .. } => unreachable!("individual profiles run over days"),
    };
    let s = profile.semester;
    let f = &config.fits;
    let mut failures = Vec::new();
    let opening = keep(fit_opening_powerlaw(&profile.mean, f.opening_window, f.opening_time_offset), "opening", &ticker, s, &mut failures);
    let closing = keep(fit_closing_powerlaw(&profile.mean, f.closing_window), "closing", &ticker, s, &mut failures);
    let (quartic, shapes) = quartic_with_shapes(&profile.mean, "quartic", &ticker, s, &mut failures);
    let metrics = semester_metrics(view, &ticker, shapes.as_ref(), &config.metrics).map_err(|e| e.to_string());
    (TickerFits { ticker, semester: s, opening, closing, quartic, shapes }, metrics, failures)
}

/// Company mean of a per-ticker coefficient, per semester.
pub(crate) fn company_series(bundle: &ReportBundle, pick: impl Fn(&TickerFits) -> Option<f64>) -> Vec<(u32, f64, f64, usize)> {
    let mut by_semester: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for tf in &bundle.ticker_fits {
        if let Some(v) = pick(tf) {
            by_semester.entry(tf.semester).or_default().push(v);
        }
    }
    by_semester.into_iter().map(|(s, v)| {
        let (mean, sd) = mean_sd(&v);
        (s, mean, sd, v.len())
    }).collect()
}

/// Mean and population standard deviation, summed in input order.
pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn closing_trend(bundle: &ReportBundle, break_semester: u32) -> ClosingTrend {
    let series = company_series(bundle, |tf| tf.closing.as_ref()?.coefficient("alpha_prime"));
    let line = |keep: &dyn Fn(u32) -> bool| {
        let (x, y): (Vec<f64>, Vec<f64>) =
            series.iter().filter(|(s, ..)| keep(*s)).map(|&(s, m, _, _)| (f64::from(s), m)).unzip();
        fit_line(&x, &y).ok()
    };
    ClosingTrend {
        break_semester,
        first: line(&|s| s <= break_semester),
        second: line(&|s| s >= break_semester),
    }
}

fn regime_tests(bundle: &ReportBundle, config: &PipelineConfig) -> (RegimeTests, Vec<Failure>) {
    let boundary = config.tests.regime_boundary;
    let series: Vec<(u32, f64)> = bundle
        .aggregates
        .iter()
        .filter_map(|a| Some((a.semester, a.fits.opening.as_ref()?.coefficient("alpha")?)))
        .collect();
    let before: Vec<f64> = series.iter().filter(|(s, _)| *s < boundary).map(|p| p.1).collect();
    let after: Vec<f64> = series.iter().filter(|(s, _)| *s >= boundary).map(|p| p.1).collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| mean_sd(v).0);
    let options = TestOptions::new(config.tests.confidence, config.tests.tails);
    let mut failures = Vec::new();
    let welch = welch_test_with(&before, &after, &options)
        .map_err(|e| failures.push(Failure::new("welch", "tilde", None, e)))
        .ok();
    let mww = mww_test_with(&before, &after, &options)
        .map_err(|e| failures.push(Failure::new("mww", "tilde", None, e)))
        .ok();
    (RegimeTests { boundary, branch_means: (mean(&before), mean(&after)), series, welch, mww }, failures)
}
