use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bundle::ReportBundle;
use super::figures::{figure_csv, FigureId, Normalizer};
use super::ReportError;
use crate::cumulants::{AggregateKind, KurtosisReading, ProfileAxis};
use crate::fits::FitResult;
use crate::format::float;
use crate::metrics::{metrics_csv, ReturnConvention};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMetadata {
    pub median_convention: String,
    pub symmetry_midpoint_half: String,
    pub kurtosis_reading: KurtosisReading,
    pub return_convention: ReturnConvention,
    pub csv_float_format: String,
    pub normalizers: Vec<Normalizer>,
    /// Figures that could not be built, with the reason.
    pub skipped_figures: Vec<(String, String)>,
    pub failures: usize,
}

/// Lists every other file of the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub files: Vec<ManifestEntry>,
    pub metadata: ManifestMetadata,
}

const FITS_SLOTS: usize = 5;

fn fit_row(out: &mut String, subject: &str, semester: Option<u32>, relation: &str, fit: &FitResult) {
    let _ = write!(
        out,
        "{subject},{},{relation},{},{},{},{},{},{},{}",
        semester.map(|s| s.to_string()).unwrap_or_default(),
        fit.model.name(),
        fit.window.lo,
        fit.window.hi,
        fit.n_points,
        float(fit.r),
        float(fit.residual_sum_squares),
        float(fit.time_offset),
    );
    for k in 0..FITS_SLOTS {
        match fit.coefficients.get(k) {
            Some(c) => {
                let se = if c.standard_error.is_finite() { float(c.standard_error) } else { String::new() };
                let _ = write!(out, ",{},{},{se}", c.name, float(c.value));
            }
            None => out.push_str(",,,"),
        }
    }
    out.push('\n');
}

/// One row per fit: subject, semester, relation, model, window, size,
/// quality and up to five (name, value, standard error) coefficient slots.
pub fn fits_csv(bundle: &ReportBundle) -> String {
    let mut out = String::from("subject,semester,relation,model,window_lo,window_hi,n,r,rss,time_offset");
    for k in 1..=FITS_SLOTS {
        let _ = write!(out, ",name{k},value{k},se{k}");
    }
    out.push('\n');
    for a in &bundle.aggregates {
        let s = Some(a.semester);
        let f = &a.fits;
        let named = [
            ("tilde", "opening", &f.opening),
            ("tilde", "closing", &f.closing),
            ("tilde", "quartic", &f.quartic),
            ("tilde", "kurtosis-morning", &f.kurtosis_morning),
            ("tilde", "kurtosis-afternoon", &f.kurtosis_afternoon),
            ("tilde", "variance-quartic", &f.variance_quartic_tilde),
            ("hat", "variance-quartic", &f.variance_quartic_hat),
        ];
        for (subject, relation, fit) in named {
            if let Some(fit) = fit {
                fit_row(&mut out, subject, s, relation, fit);
            }
        }
        for sc in &f.scatter {
            let subject = if sc.relation == "kurtosis-vs-mean" { "hat" } else { "tilde" };
            let split = serde_json::to_value(sc.split).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            fit_row(&mut out, subject, s, &format!("{}-{split}", sc.relation), &sc.fit);
        }
    }
    for tf in &bundle.ticker_fits {
        for (relation, fit) in [("opening", &tf.opening), ("closing", &tf.closing), ("quartic", &tf.quartic)] {
            if let Some(fit) = fit {
                fit_row(&mut out, &tf.ticker, Some(tf.semester), relation, fit);
            }
        }
    }
    for (ticker, fit) in &bundle.regressions {
        fit_row(&mut out, ticker, None, "concavity-vs-activity", fit);
    }
    if let Some(t) = &bundle.closing_trend {
        for (relation, fit) in [("closing-trend-first", &t.first), ("closing-trend-second", &t.second)] {
            if let Some(fit) = fit {
                fit_row(&mut out, "companies", None, relation, fit);
            }
        }
    }
    out
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report types serialise");
    v.push(b'\n');
    v
}

/// Every artifact as (relative path, bytes), sorted by path.
fn artifacts(bundle: &ReportBundle) -> (Vec<(String, Vec<u8>)>, ManifestMetadata) {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    files.push(("bundle.json".into(), json(bundle)));
    files.push(("validation.json".into(), json(&bundle.validation)));
    files.push(("fits.csv".into(), fits_csv(bundle).into_bytes()));
    files.push(("metrics.csv".into(), metrics_csv(&bundle.metrics).into_bytes()));
    files.push(("failures.json".into(), json(&bundle.failures)));
    if let Some(t) = &bundle.tests {
        files.push(("tests.json".into(), json(t)));
    }
    if let Some(truth) = &bundle.ground_truth {
        files.push(("ground_truth.json".into(), json(truth)));
    }
    for a in &bundle.aggregates {
        for p in [&a.tilde, &a.hat].into_iter().flatten() {
            let kind = match p.kind {
                AggregateKind::Tilde => "tilde",
                AggregateKind::Hat => "hat",
            };
            files.push((format!("profiles/{kind}_s{:02}.csv", a.semester), p.to_csv().into_bytes()));
        }
    }
    for p in &bundle.individual_profiles {
        if let ProfileAxis::OverDays { ticker } = &p.axis {
            files.push((format!("profiles/individual/{ticker}_s{:02}.csv", p.semester), p.to_csv().into_bytes()));
        }
    }
    let mut normalizers = Vec::new();
    let mut skipped = Vec::new();
    for id in FigureId::all() {
        match figure_csv(bundle, id) {
            Ok((csv, norms)) => {
                files.push((format!("figures/{}.csv", id.name()), csv.into_bytes()));
                normalizers.extend(norms);
            }
            Err(e) => skipped.push((id.name(), e.to_string())),
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let metadata = ManifestMetadata {
        median_convention: "mean of the two central values for even sizes".into(),
        symmetry_midpoint_half: "second".into(),
        kurtosis_reading: bundle.config.kurtosis_reading,
        return_convention: bundle.config.metrics.return_convention,
        csv_float_format: "17 significant digits, scientific".into(),
        normalizers,
        skipped_figures: skipped,
        failures: bundle.failures.len(),
    };
    (files, metadata)
}

/// Refuses directories that hold something other than a previous report.
fn check_target(out: &Path) -> Result<(), ReportError> {
    if !out.exists() {
        return Ok(());
    }
    if !out.is_dir() {
        return Err(ReportError::Config(format!("{} exists and is not a directory", out.display())));
    }
    let mut entries = fs::read_dir(out).map_err(|e| ReportError::io(out, e))?;
    if entries.next().is_some() && !out.join("manifest.json").is_file() {
        return Err(ReportError::Config(format!(
            "{} is not empty and holds no previous report; refusing to overwrite",
            out.display()
        )));
    }
    Ok(())
}

/// Writes the bundle's artifacts and manifest into `out`, replacing a
/// previous report there. Files are staged in a sibling directory and moved
/// into place at the end, so a failure leaves no partial output.
pub fn write_bundle(bundle: &ReportBundle, out: &Path) -> Result<Manifest, ReportError> {
    check_target(out)?;
    let (files, metadata) = artifacts(bundle);
    let manifest = Manifest {
        version: bundle.version.clone(),
        config_hash: bundle.config_hash.clone(),
        files: files
            .iter()
            .map(|(path, bytes)| ManifestEntry {
                path: path.clone(),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(bytes)),
            })
            .collect(),
        metadata,
    };

    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| ReportError::io(&parent, e))?;
    let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| ReportError::io(&staging, e))?;
    }
    let result = (|| {
        let manifest_bytes = json(&manifest);
        let all = files.iter().map(|(p, b)| (p.as_str(), b.as_slice())).chain([("manifest.json", manifest_bytes.as_slice())]);
        for (path, bytes) in all {
            let target = staging.join(path);
            if let Some(dir) = target.parent() {
                fs::create_dir_all(dir).map_err(|e| ReportError::io(dir, e))?;
            }
            fs::write(&target, bytes).map_err(|e| ReportError::io(&target, e))?;
        }
        if out.exists() {
            fs::remove_dir_all(out).map_err(|e| ReportError::io(out, e))?;
        }
        fs::rename(&staging, out).map_err(|e| ReportError::io(out, e))
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result.map(|_| manifest)
}
