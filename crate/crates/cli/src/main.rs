//! `volseason` command-line front end.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use volseason::format::{float, opt_float};
use volseason::market_data::{load_minute_bars, write_canonical_csv, TimeFormat};
use volseason::metrics::{metrics_csv, ReturnConvention};
use volseason::report::{
    figure_csv, fits_csv, load_input, run_pipeline, write_bundle, FigureId, PipelineConfig, ReportBundle,
    ReportError,
};
use volseason::synth::{generate_panel, GeneratorSpec};
use volseason::SESSION_MINUTES;

#[derive(Debug, Parser)]
#[command(name = "volseason", version, about = "Intraday trading-volume seasonality analytics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; without it single artifacts go to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Minute-bar CSV file or directory; replaces the configured input. Repeatable.
    #[arg(long, global = true, value_name = "PATH")]
    input: Vec<PathBuf>,
    /// Encoding of the time column.
    #[arg(long, global = true, value_enum)]
    time_format: Option<TimeFormatArg>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Denominator of the semester price variation.
    #[arg(long, global = true, value_enum)]
    return_convention: Option<ReturnConventionArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TimeFormatArg {
    Clock,
    Index,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReturnConventionArg {
    Closing,
    Open,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileKind {
    Tilde,
    Hat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load minute-bar CSVs and write them in canonical form.
    Ingest,
    /// Label semesters and report per (ticker, semester) coverage.
    Validate,
    /// Aggregate (or one ticker's) cumulant profiles.
    Profile {
        /// Restrict to one semester label.
        #[arg(long)]
        semester: Option<u32>,
        /// One ticker's own profile instead of an aggregate.
        #[arg(long)]
        ticker: Option<String>,
        #[arg(long, value_enum, default_value = "tilde")]
        kind: ProfileKind,
    },
    /// Every power-law, quartic, kurtosis and scatter fit.
    Fit,
    /// Concavity and symmetry of the quartic mean-profile fits.
    Shapes,
    /// Activity, volatility and price variation per (ticker, semester).
    Metrics,
    /// Welch and Mann-Whitney-Wilcoxon tests on the opening-exponent series.
    Tests,
    /// Cross-sectional profiles, variance ratio and kurtosis summaries.
    Xsection,
    /// Generate a synthetic panel with its ground truth.
    Synth {
        /// Overrides the configured generator seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of companies.
        #[arg(long)]
        companies: Option<usize>,
        /// Trading days per semester.
        #[arg(long)]
        days: Option<usize>,
        /// Number of half-year semesters.
        #[arg(long)]
        semesters: Option<u32>,
    },
    /// Run the whole pipeline and write the report directory.
    Report,
    /// Emit one figure's data series from a written report.
    Figure {
        /// fig1 .. fig16.
        id: String,
        /// Report directory holding bundle.json.
        #[arg(long, value_name = "DIR", default_value = "report")]
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn config(global: &Global) -> Result<PipelineConfig, ReportError> {
    let mut c = match &global.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if !global.input.is_empty() {
        c.input.paths = global.input.clone();
        c.input.synthetic = None;
    }
    if let Some(f) = global.time_format {
        c.input.schema.time_format = match f {
            TimeFormatArg::Clock => TimeFormat::Clock,
            TimeFormatArg::Index => TimeFormat::Index,
        };
    }
    if let Some(j) = global.jobs {
        c.jobs = j;
    }
    if let Some(r) = global.return_convention {
        c.metrics.return_convention = match r {
            ReturnConventionArg::Closing => ReturnConvention::ClosingDenominator,
            ReturnConventionArg::Open => ReturnConvention::OpenDenominator,
        };
    }
    if let Some(out) = &global.out {
        c.output_dir = out.clone();
    }
    Ok(c)
}

/// Configuration for subcommands that never run the regime tests, so the
/// boundary need not fit the panel.
fn analysis_config(global: &Global) -> Result<PipelineConfig, ReportError> {
    let mut c = config(global)?;
    c.tests.enabled = false;
    Ok(c)
}

/// Artifacts of one subcommand, written under `--out` or, when there is
/// only one, printed.
struct Output {
    files: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn one(name: &str, bytes: impl Into<Vec<u8>>) -> Self {
        Self { files: vec![(name.to_string(), bytes.into())] }
    }

    fn emit(self, out: Option<&Path>) -> Result<(), ReportError> {
        match out {
            Some(dir) => {
                for (name, bytes) in &self.files {
                    let path = dir.join(name);
                    if let Some(parent) = path.parent() {
                        std::fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
                    }
                    std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
                    eprintln!("wrote {}", path.display());
                }
                Ok(())
            }
            None if self.files.len() == 1 => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(&self.files[0].1).map_err(|e| io("<stdout>", e))
            }
            None => Err(ReportError::Config(format!(
                "{} artifacts to write; pass --out <dir> or narrow the selection",
                self.files.len()
            ))),
        }
    }
}

fn io(path: impl AsRef<Path>, e: std::io::Error) -> ReportError {
    ReportError::Io { path: path.as_ref().to_path_buf(), source: e }
}

fn json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report types serialise");
    v.push(b'\n');
    v
}

fn run(cli: Cli) -> Result<(), ReportError> {
    let global = &cli.global;
    let out = global.out.as_deref();
    match cli.command {
        Command::Ingest => {
            let c = config(global)?;
            if c.input.paths.is_empty() {
                return Err(ReportError::Config("ingest needs --input or input.paths in the config".into()));
            }
            let mut bars = Vec::new();
            let mut rows = 0;
            if c.input.paths.len() == 1 {
                let (panel, report) = load_minute_bars(&c.input.paths[0], &c.input.schema)?;
                rows += report.rows_loaded;
                write_canonical_csv(&panel, &mut bars).map_err(|e| ReportError::Data(e.to_string()))?;
            } else {
                let input = load_input(&analysis_config(global)?)?;
                rows += input.load.iter().map(|r| r.rows_loaded).sum::<usize>();
                write_canonical_csv(&input.panel, &mut bars).map_err(|e| ReportError::Data(e.to_string()))?;
            }
            eprintln!("loaded {rows} rows");
            Output::one("bars.csv", bars).emit(out)
        }
        Command::Validate => {
            let c = analysis_config(global)?;
            let input = load_input(&c)?;
            Output::one("validation.json", json(&input.validation)).emit(out)
        }
        Command::Profile { semester, ticker, kind } => {
            let mut c = analysis_config(global)?;
            c.write_individual_profiles = ticker.is_some();
            let bundle = run_pipeline(&c)?;
            profiles(&bundle, semester, ticker.as_deref(), kind)?.emit(out)
        }
        Command::Fit => Output::one("fits.csv", fits_csv(&run_pipeline(&analysis_config(global)?)?)).emit(out),
        Command::Shapes => Output::one("shapes.csv", shapes_csv(&run_pipeline(&analysis_config(global)?)?)).emit(out),
        Command::Metrics => Output::one("metrics.csv", metrics_csv(&run_pipeline(&analysis_config(global)?)?.metrics)).emit(out),
        Command::Tests => {
            let c = config(global)?;
            if !c.tests.enabled {
                return Err(ReportError::Config("tests are disabled in the configuration".into()));
            }
            let bundle = run_pipeline(&c)?;
            let tests = bundle.tests.as_ref().expect("tests enabled");
            Output::one("tests.json", json(tests)).emit(out)?;
            if tests.welch.is_none() || tests.mww.is_none() {
                let reasons: Vec<String> = bundle
                    .failures
                    .iter()
                    .filter(|f| f.stage == "welch" || f.stage == "mww")
                    .map(|f| format!("{}: {}", f.stage, f.message))
                    .collect();
                return Err(ReportError::Numerical(reasons.join("; ")));
            }
            Ok(())
        }
        Command::Xsection => {
            let bundle = run_pipeline(&analysis_config(global)?)?;
            let mut files = vec![("xsection.csv".to_string(), xsection_csv(&bundle).into_bytes())];
            if let Some(tail) = &bundle.kurtosis_tail {
                files.push(("kurtosis_tail.json".into(), json(tail)));
            }
            if out.is_none() {
                files.truncate(1);
            }
            Output { files }.emit(out)
        }
        Command::Synth { seed, companies, days, semesters } => {
            let c = config(global)?;
            let mut spec = c.input.synthetic.clone().unwrap_or_else(GeneratorSpec::default);
            spec.seed = seed.unwrap_or(spec.seed);
            spec.n_companies = companies.unwrap_or(spec.n_companies);
            spec.n_days = days.unwrap_or(spec.n_days);
            spec.n_semesters = semesters.unwrap_or(spec.n_semesters);
            let (panel, truth) = generate_panel(&spec)?;
            let mut bars = Vec::new();
            write_canonical_csv(&panel, &mut bars).map_err(|e| ReportError::Data(e.to_string()))?;
            let mut files = vec![("bars.csv".to_string(), bars)];
            if out.is_some() {
                files.push(("ground_truth.json".into(), json(&truth)));
            }
            Output { files }.emit(out)
        }
        Command::Report => {
            let c = config(global)?;
            let bundle = run_pipeline(&c)?;
            let manifest = write_bundle(&bundle, &c.output_dir)?;
            eprintln!(
                "wrote {} files to {} ({} recorded failures, config {})",
                manifest.files.len() + 1,
                c.output_dir.display(),
                bundle.failures.len(),
                &manifest.config_hash[..12]
            );
            Ok(())
        }
        Command::Figure { id, report } => {
            let id: FigureId = id.parse()?;
            let path = report.join("bundle.json");
            let text = std::fs::read(&path).map_err(|e| io(&path, e))?;
            let bundle: ReportBundle =
                serde_json::from_slice(&text).map_err(|e| ReportError::Data(format!("{}: {e}", path.display())))?;
            let (csv, _) = figure_csv(&bundle, id)?;
            Output::one(&format!("{}.csv", id.name()), csv).emit(out)
        }
    }
}

fn profiles(bundle: &ReportBundle, semester: Option<u32>, ticker: Option<&str>, kind: ProfileKind) -> Result<Output, ReportError> {
    let wanted = |s: u32| semester.is_none_or(|x| x == s);
    let mut files = Vec::new();
    match ticker {
        Some(t) => {
            for p in bundle.individual_profiles.iter().filter(|p| wanted(p.semester)) {
                if matches!(&p.axis, volseason::cumulants::ProfileAxis::OverDays { ticker } if ticker == t) {
                    files.push((format!("{t}_s{:02}.csv", p.semester), p.to_csv().into_bytes()));
                }
            }
        }
        None => {
            for a in bundle.aggregates.iter().filter(|a| wanted(a.semester)) {
                let (name, p) = match kind {
                    ProfileKind::Tilde => ("tilde", &a.tilde),
                    ProfileKind::Hat => ("hat", &a.hat),
                };
                if let Some(p) = p {
                    files.push((format!("{name}_s{:02}.csv", a.semester), p.to_csv().into_bytes()));
                }
            }
        }
    }
    if files.is_empty() {
        return Err(ReportError::Data("no profile matches the selection".into()));
    }
    Ok(Output { files })
}

fn shapes_csv(bundle: &ReportBundle) -> String {
    let mut out = String::from("subject,semester,concavity,symmetry,c0,c1,c2,c3,c4\n");
    let rows = bundle
        .aggregates
        .iter()
        .map(|a| ("tilde", a.semester, a.fits.shapes.as_ref()))
        .chain(bundle.ticker_fits.iter().map(|t| (t.ticker.as_str(), t.semester, t.shapes.as_ref())));
    for (subject, s, shapes) in rows {
        if let Some(sh) = shapes {
            let c: Vec<String> = sh.coefficients.iter().map(|&v| float(v)).collect();
            let _ = writeln!(out, "{subject},{s},{},{},{}", float(sh.concavity), float(sh.symmetry), c.join(","));
        }
    }
    out
}

fn xsection_csv(bundle: &ReportBundle) -> String {
    let mut out = String::from("semester,t,mean_hat,median_hat,variance_hat,skewness_hat,kurtosis_hat,variance_ratio\n");
    for a in &bundle.aggregates {
        let Some(h) = &a.hat else { continue };
        for t in 0..SESSION_MINUTES {
            let ratio = a.variance_ratio.as_ref().and_then(|r| r[t]);
            let _ = writeln!(
                out,
                "{},{t},{},{},{},{},{},{}",
                a.semester,
                opt_float(h.mean[t]),
                opt_float(h.median[t]),
                opt_float(h.variance[t]),
                opt_float(h.skewness[t]),
                opt_float(h.kurtosis[t]),
                opt_float(ratio)
            );
        }
    }
    out
}
