use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::bar::{clock_from_minute, minute_from_clock, MinuteBar, LAST_MINUTE};
use super::panel::{MinutePanel, PanelBuilder};
use super::DataError;

/// How the time column is encoded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeFormat {
    /// `HH:MM` wall-clock time, 09:30 = minute 0.
    #[default]
    Clock,
    /// Integer session-minute index.
    Index,
}

/// Column names used to read an input file.
///
/// A file without the ticker column is treated as a single-ticker file whose
/// ticker is the file stem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub ticker: String,
    pub date: String,
    pub time: String,
    pub volume: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub time_format: TimeFormat,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            ticker: "ticker".into(),
            date: "date".into(),
            time: "time".into(),
            volume: "volume".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            time_format: TimeFormat::Clock,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub files: Vec<PathBuf>,
    pub rows_loaded: usize,
    pub out_of_session: usize,
    /// (file, 1-based line) of the first out-of-session rows, capped at 100.
    pub out_of_session_samples: Vec<(PathBuf, u64)>,
}

/// Loads one CSV file, or every `*.csv` file of a directory in name order.
pub fn load_minute_bars(path: &Path, schema: &ColumnMapping) -> Result<(MinutePanel, LoadReport), DataError> {
    let files = input_files(path)?;
    let mut builder = PanelBuilder::default();
    let mut report = LoadReport::default();
    for file in &files {
        load_file(file, schema, &mut builder, &mut report)?;
    }
    report.files = files;
    if builder.is_empty() {
        return Err(DataError::NoInput(path.to_path_buf()));
    }
    Ok((builder.build(), report))
}

fn input_files(path: &Path) -> Result<Vec<PathBuf>, DataError> {
    let io_err = |source| DataError::Io { path: path.to_path_buf(), source };
    if !path.is_dir() {
        // Surface a missing file as an i/o error rather than an empty panel.
        std::fs::metadata(path).map_err(io_err)?;
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).map_err(io_err)? {
        let p = entry.map_err(io_err)?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn load_file(
    path: &Path,
    schema: &ColumnMapping,
    builder: &mut PanelBuilder,
    report: &mut LoadReport,
) -> Result<(), DataError> {
    let csv_err = |source| DataError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let column = |name: &str| {
        find(name).ok_or_else(|| DataError::MissingColumn {
            column: name.to_string(),
            path: path.to_path_buf(),
        })
    };
    let ticker_col = find(&schema.ticker);
    let stem_ticker = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let date_col = column(&schema.date)?;
    let time_col = column(&schema.time)?;
    let volume_col = column(&schema.volume)?;
    let price_cols = [
        column(&schema.open)?,
        column(&schema.high)?,
        column(&schema.low)?,
        column(&schema.close)?,
    ];

    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| DataError::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let field = |i: usize| record.get(i).unwrap_or("");
        let date = NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d")
            .map_err(|e| malformed(format!("date `{}`: {e}", field(date_col))))?;
        let minute = match schema.time_format {
            TimeFormat::Clock => minute_from_clock(field(time_col)).map_err(malformed)?,
            TimeFormat::Index => {
                let raw = field(time_col);
                let idx: i64 = raw
                    .parse()
                    .map_err(|_| malformed(format!("minute index `{raw}`")))?;
                (0..=LAST_MINUTE as i64).contains(&idx).then_some(idx as u16)
            }
        };
        let Some(minute) = minute else {
            report.out_of_session += 1;
            if report.out_of_session_samples.len() < 100 {
                report.out_of_session_samples.push((path.to_path_buf(), line));
            }
            continue;
        };
        let volume = parse_volume(field(volume_col)).map_err(malformed)?;
        let mut prices = [0.0; 4];
        for (p, &col) in prices.iter_mut().zip(&price_cols) {
            let raw = field(col);
            *p = raw
                .parse()
                .map_err(|_| malformed(format!("price `{raw}` is not numeric")))?;
        }
        let ticker = match ticker_col {
            Some(i) => field(i).to_string(),
            None => stem_ticker.clone(),
        };
        if ticker.is_empty() {
            return Err(malformed("empty ticker".into()));
        }
        builder.push(MinuteBar {
            ticker,
            date,
            minute,
            volume,
            open: prices[0],
            high: prices[1],
            low: prices[2],
            close: prices[3],
        })?;
        report.rows_loaded += 1;
    }
    Ok(())
}

fn parse_volume(raw: &str) -> Result<u64, String> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    match raw.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
        Ok(v) => Err(format!("volume {v} is not a non-negative integer")),
        Err(_) => Err(format!("volume `{raw}` is not numeric")),
    }
}

/// Writes the combined-layout canonical CSV (`ticker,date,time,volume,open,high,low,close`).
pub fn write_canonical_csv<W: Write>(panel: &MinutePanel, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "date", "time", "volume", "open", "high", "low", "close"])?;
    for bar in panel.bars() {
        w.write_record([
            bar.ticker,
            bar.date.format("%Y-%m-%d").to_string(),
            clock_from_minute(bar.minute),
            bar.volume.to_string(),
            bar.open.to_string(),
            bar.high.to_string(),
            bar.low.to_string(),
            bar.close.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Convenience wrapper writing the canonical CSV to a file path.
pub fn write_canonical_file(panel: &MinutePanel, path: &Path) -> Result<(), DataError> {
    let file = File::create(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    write_canonical_csv(panel, std::io::BufWriter::new(file))
        .map_err(|source| DataError::Csv { path: path.to_path_buf(), source })
}
