use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bundle::{ReportBundle, SemesterAggregates};
use super::pipeline::{company_series, mean_sd};
use super::ReportError;
use crate::fits::{FitResult, Split, HALF_SESSION};
use crate::format::{float, opt_float};
use crate::market_data::SESSION_MINUTES;

/// The sixteen plot-ready series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FigureId(u8);

impl FigureId {
    pub fn new(number: u8) -> Option<Self> {
        (1..=16).contains(&number).then_some(Self(number))
    }

    pub fn all() -> impl Iterator<Item = FigureId> {
        (1..=16).map(FigureId)
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn name(self) -> String {
        format!("fig{}", self.0)
    }
}

impl FromStr for FigureId {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix("fig")
            .filter(|n| !n.starts_with('0'))
            .and_then(|n| n.parse::<u8>().ok())
            .and_then(FigureId::new)
            .ok_or_else(|| ReportError::UnknownFigure(s.to_string()))
    }
}

/// The reference value a normalised semester series was divided by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub figure: String,
    pub quantity: String,
    /// Earliest semester with a value.
    pub semester: u32,
    pub value: f64,
}

/// Builds one figure's CSV text and the normalisers it used.
pub fn figure_csv(bundle: &ReportBundle, id: FigureId) -> Result<(String, Vec<Normalizer>), ReportError> {
    let mut fig = Figure { id, bundle, out: String::new(), normalizers: Vec::new() };
    match id.0 {
        1 => fig.mean_profile()?,
        2 => fig.opening_exponent()?,
        3 => fig.closing_exponent()?,
        4 => fig.company_shape("concavity", |m| m.concavity)?,
        5 => fig.company_shape("symmetry", |m| m.symmetry)?,
        6 => fig.concavity_activity()?,
        7 => fig.tilde_variance()?,
        8 => fig.scatter_profile("variance-vs-mean", Side::Tilde, "mean,variance", |a, t| {
            let p = a.tilde.as_ref()?;
            Some((p.mean[t]?, p.variance[t]?))
        })?,
        9 => fig.scatter_profile("skewness-vs-time", Side::Tilde, "time,skewness", |a, t| {
            Some((t as f64, a.tilde.as_ref()?.skewness[t]?))
        })?,
        10 => fig.kurtosis_profile()?,
        11 => fig.kurtosis_exponents()?,
        12 => fig.scatter_profile("kurtosis-vs-mean", Side::Hat, "mean_hat,kurtosis_hat", |a, t| {
            let p = a.hat.as_ref()?;
            Some((p.mean[t]?, p.kurtosis[t]?))
        })?,
        13 => fig.variances()?,
        14 => fig.variance_shapes()?,
        15 => fig.kurtosis_tail()?,
        16 => fig.kurtosis_curve()?,
        _ => unreachable!("FigureId is validated"),
    }
    Ok((fig.out, fig.normalizers))
}

/// Writes one figure's CSV to `path` and returns its normalisers.
pub fn emit_figure_series(bundle: &ReportBundle, id: FigureId, path: &Path) -> Result<Vec<Normalizer>, ReportError> {
    let (csv, normalizers) = figure_csv(bundle, id)?;
    std::fs::write(path, csv).map_err(|e| ReportError::io(path, e))?;
    Ok(normalizers)
}

enum Side {
    Tilde,
    Hat,
}

fn half(t: usize) -> &'static str {
    if t < HALF_SESSION as usize { "morning" } else { "afternoon" }
}

fn split_of(t: usize) -> Split {
    if t < HALF_SESSION as usize { Split::Morning } else { Split::Afternoon }
}

fn in_window(fit: &FitResult, t: usize) -> bool {
    (usize::from(fit.window.lo)..=usize::from(fit.window.hi)).contains(&t)
}

struct Figure<'a> {
    id: FigureId,
    bundle: &'a ReportBundle,
    out: String,
    normalizers: Vec<Normalizer>,
}

impl<'a> Figure<'a> {
    fn missing(&self, what: &str) -> ReportError {
        ReportError::MissingUpstream { figure: self.id.name(), what: what.to_string() }
    }

    fn line(&mut self, fields: &[String]) {
        let _ = writeln!(self.out, "{}", fields.join(","));
    }

    fn header(&mut self, h: &str) {
        let _ = writeln!(self.out, "{h}");
    }

    /// Divides by the magnitude of the earliest value, keeping signs.
    fn normalizer(&mut self, quantity: &str, series: &[(u32, Option<f64>)]) -> Result<Option<f64>, ReportError> {
        let Some(&(semester, Some(value))) = series.iter().find(|(_, v)| v.is_some()) else {
            return Ok(None);
        };
        if value == 0.0 || !value.is_finite() {
            return Err(ReportError::Numerical(format!(
                "{}: {quantity} in semester {semester} is {value} and cannot normalise the series",
                self.id.name()
            )));
        }
        self.normalizers.push(Normalizer { figure: self.id.name(), quantity: quantity.into(), semester, value });
        Ok(Some(value.abs()))
    }

    fn with_tilde(&self) -> Result<Vec<&'a SemesterAggregates>, ReportError> {
        let bundle: &'a ReportBundle = self.bundle;
        let v: Vec<_> = bundle.aggregates.iter().filter(|a| a.tilde.is_some()).collect();
        if v.is_empty() { Err(self.missing("tilde profiles")) } else { Ok(v) }
    }

    fn with_hat(&self) -> Result<Vec<&'a SemesterAggregates>, ReportError> {
        let bundle: &'a ReportBundle = self.bundle;
        let v: Vec<_> = bundle.aggregates.iter().filter(|a| a.hat.is_some()).collect();
        if v.is_empty() { Err(self.missing("cross-sectional profiles")) } else { Ok(v) }
    }

    fn mean_profile(&mut self) -> Result<(), ReportError> {
        self.header("semester,t,half,mean,opening_fit");
        for a in self.with_tilde()? {
            let p = a.tilde.as_ref().expect("filtered");
            for t in 0..SESSION_MINUTES {
                let fit = a.fits.opening.as_ref().filter(|f| in_window(f, t)).map(|f| f.evaluate(t as f64));
                self.line(&[a.semester.to_string(), t.to_string(), half(t).into(), opt_float(p.mean[t]), opt_float(fit)]);
            }
        }
        Ok(())
    }

    fn opening_exponent(&mut self) -> Result<(), ReportError> {
        let tilde: Vec<(u32, &FitResult)> =
            self.bundle.aggregates.iter().filter_map(|a| Some((a.semester, a.fits.opening.as_ref()?))).collect();
        if tilde.is_empty() {
            return Err(self.missing("opening fits"));
        }
        let companies: BTreeMap<u32, (f64, f64, usize)> =
            company_series(self.bundle, |tf| tf.opening.as_ref()?.coefficient("alpha"))
                .into_iter()
                .map(|(s, m, sd, n)| (s, (m, sd, n)))
                .collect();
        let boundary = self.bundle.config.tests.regime_boundary;
        let before: Vec<f64> = tilde.iter().filter(|(s, _)| *s < boundary).filter_map(|(_, f)| f.coefficient("alpha")).collect();
        let after: Vec<f64> = tilde.iter().filter(|(s, _)| *s >= boundary).filter_map(|(_, f)| f.coefficient("alpha")).collect();
        let branch_mean = |v: &[f64]| (!v.is_empty()).then(|| mean_sd(v).0);
        let (mean_before, mean_after) = (branch_mean(&before), branch_mean(&after));
        self.header("semester,alpha,alpha_se,company_mean,company_sd,companies,branch,branch_mean");
        for (s, fit) in tilde {
            let c = companies.get(&s);
            let (branch, mean) = if s < boundary { ("before", mean_before) } else { ("after", mean_after) };
            self.line(&[
                s.to_string(),
                opt_float(fit.coefficient("alpha")),
                opt_float(fit.standard_error("alpha").filter(|v| v.is_finite())),
                opt_float(c.map(|c| c.0)),
                opt_float(c.map(|c| c.1)),
                c.map(|c| c.2).unwrap_or(0).to_string(),
                branch.into(),
                opt_float(mean),
            ]);
        }
        Ok(())
    }

    fn closing_exponent(&mut self) -> Result<(), ReportError> {
        let companies = company_series(self.bundle, |tf| tf.closing.as_ref()?.coefficient("alpha_prime"));
        if companies.is_empty() {
            return Err(self.missing("per-ticker closing fits"));
        }
        let trend = self.bundle.closing_trend.as_ref();
        let break_s = trend.map(|t| t.break_semester).unwrap_or(u32::MAX);
        self.header("semester,alpha_prime_tilde,alpha_prime_tilde_se,company_mean,company_sd,companies,trend_first,trend_second");
        for (s, mean, sd, n) in companies {
            let tilde = self.bundle.aggregate(s).and_then(|a| a.fits.closing.as_ref());
            let x = f64::from(s);
            let first = trend.and_then(|t| t.first.as_ref()).filter(|_| s <= break_s).map(|f| f.evaluate(x));
            let second = trend.and_then(|t| t.second.as_ref()).filter(|_| s >= break_s).map(|f| f.evaluate(x));
            self.line(&[
                s.to_string(),
                opt_float(tilde.and_then(|f| f.coefficient("alpha_prime"))),
                opt_float(tilde.and_then(|f| f.standard_error("alpha_prime")).filter(|v| v.is_finite())),
                float(mean),
                float(sd),
                n.to_string(),
                opt_float(first),
                opt_float(second),
            ]);
        }
        Ok(())
    }

    fn company_shape(
        &mut self,
        quantity: &str,
        pick: fn(&crate::metrics::SemesterMetrics) -> Option<f64>,
    ) -> Result<(), ReportError> {
        let mut by_semester: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        let mut all = Vec::new();
        for m in &self.bundle.metrics {
            if let Some(v) = pick(m) {
                by_semester.entry(m.semester).or_default().push(v);
                all.push(v);
            }
        }
        if all.is_empty() {
            return Err(self.missing(&format!("per-ticker {quantity} values")));
        }
        let stats: Vec<(u32, f64, f64, usize)> =
            by_semester.iter().map(|(&s, v)| (s, mean_sd(v).0, mean_sd(v).1, v.len())).collect();
        let series: Vec<(u32, Option<f64>)> = stats.iter().map(|&(s, m, ..)| (s, Some(m))).collect();
        let norm = self.normalizer(&format!("mean_{quantity}"), &series)?.expect("non-empty series");
        let (overall, overall_sd) = mean_sd(&all);
        self.header(&format!(
            "semester,{quantity}_mean,{quantity}_sd,companies,normalized,normalized_sd,overall_mean,overall_lower,overall_upper"
        ));
        for (s, m, sd, n) in stats {
            self.line(&[
                s.to_string(),
                float(m),
                float(sd),
                n.to_string(),
                float(m / norm),
                float(sd / norm),
                float(overall / norm),
                float((overall - overall_sd) / norm),
                float((overall + overall_sd) / norm),
            ]);
        }
        Ok(())
    }

    fn concavity_activity(&mut self) -> Result<(), ReportError> {
        let rows: Vec<_> = self
            .bundle
            .metrics
            .iter()
            .filter_map(|m| Some((m.ticker.clone(), m.semester, m.rescaled_activity?, m.concavity?)))
            .collect();
        if rows.is_empty() {
            return Err(self.missing("rescaled activity and concavity"));
        }
        self.header("ticker,semester,rescaled_activity,concavity,regression,slope,slope_se,r");
        for (ticker, s, v, c) in rows {
            let reg = self.bundle.regression(&ticker);
            let fields = [
                ticker.clone(),
                s.to_string(),
                float(v),
                float(c),
                opt_float(reg.map(|f| f.evaluate(v))),
                opt_float(reg.and_then(|f| f.coefficient("slope"))),
                opt_float(reg.and_then(|f| f.standard_error("slope")).filter(|v| v.is_finite())),
                opt_float(reg.map(|f| f.r)),
            ];
            self.line(&fields);
        }
        Ok(())
    }

    fn tilde_variance(&mut self) -> Result<(), ReportError> {
        self.header("semester,t,half,variance");
        for a in self.with_tilde()? {
            let p = a.tilde.as_ref().expect("filtered");
            for t in 0..SESSION_MINUTES {
                self.line(&[a.semester.to_string(), t.to_string(), half(t).into(), opt_float(p.variance[t])]);
            }
        }
        Ok(())
    }

    fn scatter_profile(
        &mut self,
        relation: &str,
        side: Side,
        columns: &str,
        point: impl Fn(&SemesterAggregates, usize) -> Option<(f64, f64)>,
    ) -> Result<(), ReportError> {
        let aggregates = match side {
            Side::Tilde => self.with_tilde()?,
            Side::Hat => self.with_hat()?,
        };
        self.header(&format!("semester,t,half,{columns},fit"));
        for a in aggregates {
            for t in 0..SESSION_MINUTES {
                let Some((x, y)) = point(a, t) else { continue };
                let fit = a.fits.scatter(relation, split_of(t)).map(|f| f.evaluate(x));
                self.line(&[a.semester.to_string(), t.to_string(), half(t).into(), float(x), float(y), opt_float(fit)]);
            }
        }
        Ok(())
    }

    fn kurtosis_profile(&mut self) -> Result<(), ReportError> {
        self.header("semester,t,half,kurtosis,fit");
        for a in self.with_tilde()? {
            let p = a.tilde.as_ref().expect("filtered");
            for t in 0..SESSION_MINUTES {
                let fit = [&a.fits.kurtosis_morning, &a.fits.kurtosis_afternoon]
                    .into_iter()
                    .flatten()
                    .find(|f| in_window(f, t))
                    .map(|f| f.evaluate(t as f64));
                self.line(&[a.semester.to_string(), t.to_string(), half(t).into(), opt_float(p.kurtosis[t]), opt_float(fit)]);
            }
        }
        Ok(())
    }

    fn kurtosis_exponents(&mut self) -> Result<(), ReportError> {
        let rows: Vec<_> = self
            .bundle
            .aggregates
            .iter()
            .filter(|a| a.fits.kurtosis_morning.is_some() || a.fits.kurtosis_afternoon.is_some())
            .collect();
        if rows.is_empty() {
            return Err(self.missing("kurtosis relaxation fits"));
        }
        let mut lines = Vec::new();
        for a in rows {
            let m = a.fits.kurtosis_morning.as_ref();
            let af = a.fits.kurtosis_afternoon.as_ref();
            lines.push([
                a.semester.to_string(),
                opt_float(m.and_then(|f| f.coefficient("beta_m"))),
                opt_float(m.and_then(|f| f.standard_error("beta_m")).filter(|v| v.is_finite())),
                opt_float(af.and_then(|f| f.coefficient("beta_a"))),
                opt_float(af.and_then(|f| f.standard_error("beta_a")).filter(|v| v.is_finite())),
            ]);
        }
        self.header("semester,beta_m,beta_m_se,beta_a,beta_a_se");
        for l in lines {
            self.line(&l);
        }
        Ok(())
    }

    fn variances(&mut self) -> Result<(), ReportError> {
        let aggregates = self.with_hat()?;
        self.header("semester,t,half,variance_hat,variance_tilde,ratio");
        for a in aggregates {
            let hat = a.hat.as_ref().expect("filtered");
            for t in 0..SESSION_MINUTES {
                let tilde = a.tilde.as_ref().and_then(|p| p.variance[t]);
                let ratio = a.variance_ratio.as_ref().and_then(|r| r[t]);
                self.line(&[a.semester.to_string(), t.to_string(), half(t).into(), opt_float(hat.variance[t]), opt_float(tilde), opt_float(ratio)]);
            }
        }
        Ok(())
    }

    fn variance_shapes(&mut self) -> Result<(), ReportError> {
        let aggs = &self.bundle.aggregates;
        let pick = |f: fn(&SemesterAggregates) -> Option<f64>| -> Vec<(u32, Option<f64>)> {
            aggs.iter().map(|a| (a.semester, f(a))).collect()
        };
        let columns = [
            ("concavity_tilde", pick(|a| Some(a.fits.variance_shapes_tilde.as_ref()?.concavity))),
            ("concavity_hat", pick(|a| Some(a.fits.variance_shapes_hat.as_ref()?.concavity))),
            ("symmetry_tilde", pick(|a| Some(a.fits.variance_shapes_tilde.as_ref()?.symmetry))),
            ("symmetry_hat", pick(|a| Some(a.fits.variance_shapes_hat.as_ref()?.symmetry))),
        ];
        if columns.iter().all(|(_, v)| v.iter().all(|(_, x)| x.is_none())) {
            return Err(self.missing("quartic fits of the variance profiles"));
        }
        let mut norms = Vec::new();
        for (name, series) in &columns {
            norms.push(self.normalizer(name, series)?);
        }
        let names: Vec<&str> = columns.iter().map(|c| c.0).collect();
        self.header(&format!(
            "semester,{},{}",
            names.join(","),
            names.iter().map(|n| format!("{n}_normalized")).collect::<Vec<_>>().join(",")
        ));
        for (k, a) in aggs.iter().enumerate() {
            let raw: Vec<Option<f64>> = columns.iter().map(|(_, v)| v[k].1).collect();
            let mut fields = vec![a.semester.to_string()];
            fields.extend(raw.iter().map(|v| opt_float(*v)));
            fields.extend(raw.iter().zip(&norms).map(|(v, n)| opt_float(v.zip(*n).map(|(v, n)| v / n))));
            self.line(&fields);
        }
        Ok(())
    }

    fn kurtosis_tail(&mut self) -> Result<(), ReportError> {
        let tail = self.bundle.kurtosis_tail.as_ref().ok_or_else(|| self.missing("the kurtosis tail summary"))?;
        let excluded = &self.bundle.config.kurtosis_tail.excluded_semesters;
        let rows: Vec<_> = tail.per_semester.iter().map(|(&s, &v)| (s, v, excluded.contains(&s))).collect();
        self.header("semester,kurtosis_mean,excluded");
        for (s, v, ex) in rows {
            self.line(&[s.to_string(), opt_float(v), ex.to_string()]);
        }
        Ok(())
    }

    fn kurtosis_curve(&mut self) -> Result<(), ReportError> {
        let tail = self.bundle.kurtosis_tail.as_ref().ok_or_else(|| self.missing("the kurtosis tail summary"))?;
        let curve = tail.curve.clone();
        self.header("t,half,kurtosis,gaussian");
        for (t, v) in curve.into_iter().enumerate() {
            self.line(&[t.to_string(), half(t).into(), opt_float(v), float(0.0)]);
        }
        Ok(())
    }
}
