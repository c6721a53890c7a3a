use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Number of session minutes, 09:30 (minute 0) through 16:00 (minute 390).
pub const SESSION_MINUTES: usize = 391;
pub const LAST_MINUTE: u16 = 390;

const OPEN_CLOCK_MINUTES: u32 = 9 * 60 + 30;

/// Volume and prices of one (company, day, minute) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub volume: u64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Bar {
    /// Checks positivity and the low/high envelope.
    pub fn check(&self) -> Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(format!("non-positive or non-finite price in {prices:?}"));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above min(open, close)", self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below max(open, close)", self.high));
        }
        Ok(())
    }
}

/// One parsed input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteBar {
    pub ticker: String,
    pub date: NaiveDate,
    pub minute: u16,
    pub volume: u64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl MinuteBar {
    pub fn bar(&self) -> Bar {
        Bar {
            volume: self.volume,
            open: self.open,
            high: self.high,
            low: self.low,
            close: self.close,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.minute > LAST_MINUTE {
            return Err(format!("minute {} outside 0..=390", self.minute));
        }
        self.bar().check()
    }
}

/// Parses `HH:MM` or `HH:MM:SS` clock time into a session minute.
///
/// `Ok(None)` means the time parsed but falls outside 09:30..=16:00.
pub fn minute_from_clock(s: &str) -> Result<Option<u16>, String> {
    let mut parts = s.trim().split(':');
    let mut field = |name: &str| -> Result<Option<u32>, String> {
        match parts.next() {
            None => Ok(None),
            Some(p) => p
                .parse::<u32>()
                .map(Some)
                .map_err(|_| format!("bad {name} in clock time `{s}`")),
        }
    };
    let hour = field("hour")?.ok_or_else(|| format!("empty clock time `{s}`"))?;
    let minute = field("minute")?.ok_or_else(|| format!("clock time `{s}` lacks minutes"))?;
    let second = field("second")?.unwrap_or(0);
    if parts.next().is_some() || hour > 23 || minute > 59 || second > 59 {
        return Err(format!("bad clock time `{s}`"));
    }
    let total = hour * 60 + minute;
    if total < OPEN_CLOCK_MINUTES || (second != 0 && total == OPEN_CLOCK_MINUTES + LAST_MINUTE as u32) {
        return Ok(None);
    }
    let idx = total - OPEN_CLOCK_MINUTES;
    if idx > LAST_MINUTE as u32 {
        return Ok(None);
    }
    Ok(Some(idx as u16))
}

/// Inverse of [`minute_from_clock`].
pub fn clock_from_minute(minute: u16) -> String {
    let total = OPEN_CLOCK_MINUTES + minute as u32;
    format!("{:02}:{:02}", total / 60, total % 60)
}
