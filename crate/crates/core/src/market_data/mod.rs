//! Minute-bar ingestion, the dense panel store and semester bookkeeping.

mod bar;
mod io;
mod panel;
mod semester;
mod validate;

use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub use bar::{clock_from_minute, minute_from_clock, Bar, MinuteBar, LAST_MINUTE, SESSION_MINUTES};
pub use io::{load_minute_bars, write_canonical_csv, write_canonical_file, ColumnMapping, LoadReport, TimeFormat};
pub use panel::{MinutePanel, PanelBuilder, SemesterView};
pub use semester::{assign_semesters, default_semester_ranges, SemesterIndex, SemesterRange};
pub use validate::{validate_panel, CoverageRecord, ValidationReport};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("column `{column}` not found in {path}")]
    MissingColumn { column: String, path: PathBuf },
    #[error("malformed row {line} in {path}: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("duplicate cell ({ticker}, {date}, minute {minute})")]
    DuplicateCell {
        ticker: String,
        date: NaiveDate,
        minute: u16,
    },
    #[error("invalid bar ({ticker}, {date}, minute {minute}): {reason}")]
    InvalidBar {
        ticker: String,
        date: NaiveDate,
        minute: u16,
        reason: String,
    },
    #[error("no minute bars found under {0}")]
    NoInput(PathBuf),
    #[error("panel day {0} is not covered by any semester range")]
    UncoveredDate(NaiveDate),
    #[error("semester ranges overlap: {first} .. {second}")]
    OverlappingRanges { first: NaiveDate, second: NaiveDate },
    #[error("semester ranges leave a gap between {after} and {before}")]
    NonContiguousRanges { after: NaiveDate, before: NaiveDate },
    #[error("semester range {first} .. {last} is empty")]
    EmptyRange { first: NaiveDate, last: NaiveDate },
    #[error("unknown ticker {0}")]
    UnknownTicker(String),
    #[error("unknown semester {0}")]
    UnknownSemester(u32),
}
