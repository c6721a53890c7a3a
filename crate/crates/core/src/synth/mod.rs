//! Synthetic minute-bar panels with known ground truth.
//!
//! Volumes are `round(Λ(t)·ε)` with the intensity
//!
//! ```text
//! Λ(t) = a (t + 1)^(−α) + b (391 − t)^(−α′) + c  [+ raised-cosine bump]
//! ```
//!
//! and ε i.i.d. with mean 1. Prices follow a driftless geometric random walk;
//! each minute's high and low are exact Brownian-bridge extremes, so the
//! daily range is that of the continuous path.
//!
//! Randomness comes from ChaCha8 seeded with the spec seed; every
//! (company, day) pair draws from its own stream `(company << 32) | day`,
//! where `day` counts trading days from the start of the panel. Within a
//! minute the draws are: noise, price increment, high uniform, low uniform.

mod generate;
mod truth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_panel, semester_days};
pub use truth::{analytic_profile, analytic_profile_in, GroundTruth, SemesterTruth};

/// Raised-cosine bump `h (1 + cos(π (t − center)/half_width)) / 2` on
/// `|t − center| < half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    #[serde(default = "Bump::default_center")]
    pub center: f64,
    #[serde(default = "Bump::default_half_width")]
    pub half_width: f64,
}

impl Bump {
    fn default_center() -> f64 {
        270.0
    }

    fn default_half_width() -> f64 {
        15.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Intensity {
    pub opening_amplitude: f64,
    pub opening_exponent: f64,
    pub closing_amplitude: f64,
    pub closing_exponent: f64,
    pub baseline: f64,
    pub bump: Option<Bump>,
}

impl Default for Intensity {
    fn default() -> Self {
        Self {
            opening_amplitude: 2000.0,
            opening_exponent: 0.30,
            closing_amplitude: 1000.0,
            closing_exponent: 0.40,
            baseline: 50.0,
            bump: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseModel {
    /// `exp(σZ − σ²/2)`.
    LogNormal { sigma: f64 },
    /// Gamma with shape k and scale 1/k.
    Gamma { shape: f64 },
    Constant,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::LogNormal { sigma: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceModel {
    pub initial_price: f64,
    /// Standard deviation of the daily log return.
    pub daily_volatility: f64,
}

impl Default for PriceModel {
    fn default() -> Self {
        Self { initial_price: 100.0, daily_volatility: 0.01 }
    }
}

/// Replaces intensity parameters for semesters `first..=last`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemesterOverride {
    pub first: u32,
    pub last: u32,
    pub opening_amplitude: Option<f64>,
    pub opening_exponent: Option<f64>,
    pub closing_amplitude: Option<f64>,
    pub closing_exponent: Option<f64>,
    pub baseline: Option<f64>,
}

impl SemesterOverride {
    fn apply(&self, semester: u32, base: &mut Intensity) {
        if !(self.first..=self.last).contains(&semester) {
            return;
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut base.opening_amplitude, self.opening_amplitude);
        set(&mut base.opening_exponent, self.opening_exponent);
        set(&mut base.closing_amplitude, self.closing_amplitude);
        set(&mut base.closing_exponent, self.closing_exponent);
        set(&mut base.baseline, self.baseline);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n_companies: usize,
    /// Trading days per semester: the first `n_days` weekdays of each half-year.
    pub n_days: usize,
    pub n_semesters: u32,
    pub start_year: i32,
    /// 1 for January-June, 2 for July-December.
    pub start_half: u32,
    pub seed: u64,
    pub intensity: Intensity,
    pub noise: NoiseModel,
    /// `None` gives flat bars at the initial price and skips the price draws.
    pub price: Option<PriceModel>,
    /// Applied in order; later entries win.
    pub overrides: Vec<SemesterOverride>,
    /// Defaults to `SYN00`, `SYN01`, ….
    pub tickers: Option<Vec<String>>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            n_companies: 30,
            n_days: 126,
            n_semesters: 1,
            start_year: 2004,
            start_half: 1,
            seed: 1,
            intensity: Intensity::default(),
            noise: NoiseModel::default(),
            price: Some(PriceModel::default()),
            overrides: Vec::new(),
            tickers: None,
        }
    }
}

impl GeneratorSpec {
    /// Intensity in force for a semester label (1-based).
    pub fn intensity_for(&self, semester: u32) -> Intensity {
        let mut intensity = self.intensity;
        for o in &self.overrides {
            o.apply(semester, &mut intensity);
        }
        intensity
    }

    pub fn tickers(&self) -> Vec<String> {
        match &self.tickers {
            Some(t) => t.clone(),
            None => (0..self.n_companies).map(|i| format!("SYN{i:02}")).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.n_companies == 0 {
            return bad("n_companies must be positive".into());
        }
        if self.n_days < 2 {
            return bad("n_days must be at least 2".into());
        }
        if self.n_semesters == 0 {
            return bad("n_semesters must be positive".into());
        }
        if !(1..=2).contains(&self.start_half) {
            return bad("start_half must be 1 or 2".into());
        }
        if let Some(t) = &self.tickers {
            let mut sorted = t.clone();
            sorted.sort();
            sorted.dedup();
            if t.len() != self.n_companies || sorted.len() != t.len() || t.iter().any(String::is_empty) {
                return bad("tickers must be n_companies distinct non-empty names".into());
            }
        }
        for s in 1..=self.n_semesters {
            let i = self.intensity_for(s);
            let amplitudes = [i.opening_amplitude, i.closing_amplitude, i.baseline];
            if amplitudes.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || amplitudes.iter().all(|v| *v == 0.0) {
                return bad(format!("semester {s}: amplitudes must be non-negative and not all zero"));
            }
            if !(i.opening_exponent > 0.0 && i.closing_exponent > 0.0) {
                return bad(format!("semester {s}: exponents must be positive"));
            }
            if let Some(b) = i.bump {
                if !(b.amplitude >= 0.0 && b.half_width > 0.0 && b.center.is_finite()) {
                    return bad(format!("semester {s}: invalid bump"));
                }
            }
        }
        match self.noise {
            NoiseModel::LogNormal { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                return bad("log-normal sigma must be non-negative".into())
            }
            NoiseModel::Gamma { shape } if !(shape > 0.0 && shape.is_finite()) => {
                return bad("gamma shape must be positive".into())
            }
            _ => {}
        }
        if let Some(p) = self.price {
            if !(p.initial_price > 0.0 && p.daily_volatility >= 0.0 && p.daily_volatility.is_finite()) {
                return bad("invalid price model".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("minute {0} is outside the session")]
    OutOfSession(u16),
    #[error("semester {0} is outside the generated range")]
    UnknownSemester(u32),
}
