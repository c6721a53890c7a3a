use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ReportError;
use crate::cumulants::KurtosisReading;
use crate::fits::FitConfig;
use crate::hypothesis::Tails;
use crate::market_data::ColumnMapping;
use crate::metrics::MetricsOptions;
use crate::synth::GeneratorSpec;

/// Where the minute bars come from: CSV paths or a synthetic generator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// CSV files or directories of CSV files.
    pub paths: Vec<PathBuf>,
    pub schema: ColumnMapping,
    pub synthetic: Option<GeneratorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemesterBounds {
    pub first: NaiveDate,
    pub last: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exclusion {
    pub semester: u32,
    pub tickers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemesterConfig {
    /// Explicit boundaries; calendar half-years spanning the data otherwise.
    pub ranges: Option<Vec<SemesterBounds>>,
    pub exclusions: Vec<Exclusion>,
    /// Pairs whose fraction of present minutes falls below this are excluded.
    pub min_day_coverage: f64,
}

impl Default for SemesterConfig {
    fn default() -> Self {
        Self { ranges: None, exclusions: Vec::new(), min_day_coverage: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KurtosisTailConfig {
    /// Kurtosis time averages use minutes t > t_min.
    pub t_min: u16,
    /// Semesters left out of the cross-semester kurtosis curve.
    pub excluded_semesters: BTreeSet<u32>,
}

impl Default for KurtosisTailConfig {
    fn default() -> Self {
        Self { t_min: 60, excluded_semesters: (11..=16).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub enabled: bool,
    /// First semester of the second regime.
    pub regime_boundary: u32,
    pub confidence: f64,
    pub tails: Tails,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self { enabled: true, regime_boundary: 10, confidence: 0.95, tails: Tails::Two }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub semesters: SemesterConfig,
    pub fits: FitConfig,
    pub kurtosis_reading: KurtosisReading,
    pub kurtosis_tail: KurtosisTailConfig,
    pub tests: TestConfig,
    pub metrics: MetricsOptions,
    /// Last semester of the first closing-exponent trend and first of the second.
    pub closing_trend_break: u32,
    /// Also write every per-ticker profile.
    pub write_individual_profiles: bool,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: InputConfig::default(),
            semesters: SemesterConfig::default(),
            fits: FitConfig::default(),
            kurtosis_reading: KurtosisReading::default(),
            kurtosis_tail: KurtosisTailConfig::default(),
            tests: TestConfig::default(),
            metrics: MetricsOptions::default(),
            closing_trend_break: 7,
            write_individual_profiles: false,
            output_dir: PathBuf::from("report"),
            jobs: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ReportError> {
        toml::from_str(text).map_err(|e| ReportError::Config(e.to_string()))
    }

    /// Reads a TOML file; relative input paths are resolved against its directory.
    pub fn from_file(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            for p in &mut config.input.paths {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Checks everything that does not need the data.
    pub fn check(&self) -> Result<(), ReportError> {
        let bad = |m: String| Err(ReportError::Config(m));
        match (&self.input.synthetic, self.input.paths.is_empty()) {
            (Some(_), false) => return bad("input: give either paths or synthetic, not both".into()),
            (None, true) => return bad("input: no paths and no synthetic generator".into()),
            (Some(spec), true) => spec.validate().map_err(|e| ReportError::Config(e.to_string()))?,
            (None, false) => {}
        }
        self.fits.check().map_err(|e| ReportError::Config(format!("fits: {e}")))?;
        if !(0.0..=1.0).contains(&self.semesters.min_day_coverage) {
            return bad("semesters.min_day_coverage must lie in [0, 1]".into());
        }
        if self.kurtosis_tail.t_min >= crate::LAST_MINUTE {
            return bad("kurtosis_tail.t_min must be below 390".into());
        }
        if !(self.tests.confidence > 0.0 && self.tests.confidence < 1.0) {
            return bad("tests.confidence must lie in (0, 1)".into());
        }
        Ok(())
    }

    /// Checks that need the number of semesters.
    pub fn check_semesters(&self, n_semesters: u32) -> Result<(), ReportError> {
        if self.tests.enabled && !(2..=n_semesters).contains(&self.tests.regime_boundary) {
            return Err(ReportError::Config(format!(
                "tests.regime_boundary = {} must lie in 2..={n_semesters} (or set tests.enabled = false)",
                self.tests.regime_boundary
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring where output goes and
    /// how many threads compute it.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.jobs = 0;
        let json = serde_json::to_vec(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_toml() {
        let c = PipelineConfig::from_toml_str(
            r#"
            output_dir = "out"
            jobs = 4
            [input]
            paths = ["bars.csv"]
            [input.schema]
            ticker = "symbol"
            [[semesters.exclusions]]
            semester = 12
            tickers = ["GM"]
            [fits]
            opening_time_offset = 1.0
            [fits.kurtosis]
            afternoon_origin = 290.0
            [tests]
            regime_boundary = 10
            "#,
        )
        .unwrap();
        assert_eq!(c.input.schema.ticker, "symbol");
        assert_eq!(c.semesters.exclusions[0].tickers, vec!["GM".to_string()]);
        assert_eq!(c.fits.opening_time_offset, 1.0);
        assert_eq!(c.kurtosis_tail.excluded_semesters, (11..=16).collect());
        c.check().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(PipelineConfig::from_toml_str("bogus = 1").is_err());
        let mut c = PipelineConfig { input: InputConfig { paths: vec!["x".into()], ..Default::default() }, ..Default::default() };
        c.check().unwrap();
        c.fits.closing_window = crate::fits::FitWindow::new(300, 391);
        assert!(c.check().is_err());
        let c = PipelineConfig::default();
        assert!(c.check().is_err());
        let c = PipelineConfig { input: InputConfig { paths: vec!["x".into()], ..Default::default() }, ..Default::default() };
        assert!(c.check_semesters(19).is_ok());
        assert!(c.check_semesters(9).is_err());
    }

    #[test]
    fn hash_ignores_output_and_jobs() {
        let a = PipelineConfig::default();
        let b = PipelineConfig { output_dir: "elsewhere".into(), jobs: 8, ..Default::default() };
        let c = PipelineConfig { closing_trend_break: 8, ..Default::default() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
