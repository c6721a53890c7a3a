use std::f64::consts::PI;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{GeneratorSpec, Intensity, SynthError};
use crate::market_data::{LAST_MINUTE, SESSION_MINUTES};

const END: f64 = SESSION_MINUTES as f64;
const HALF: f64 = 195.0;

fn bump_offset(b: &super::Bump, t: f64) -> Option<f64> {
    let u = t - b.center;
    (u.abs() < b.half_width).then_some(u)
}

/// Λ(t) for real t in [0, 390].
pub(crate) fn lambda(i: &Intensity, t: f64) -> f64 {
    let mut v = i.opening_amplitude * (t + 1.0).powf(-i.opening_exponent)
        + i.closing_amplitude * (END - t).powf(-i.closing_exponent)
        + i.baseline;
    if let Some(b) = &i.bump {
        if let Some(u) = bump_offset(b, t) {
            v += 0.5 * b.amplitude * (1.0 + (PI * u / b.half_width).cos());
        }
    }
    v
}

fn lambda_dt(i: &Intensity, t: f64) -> f64 {
    let mut v = -i.opening_amplitude * i.opening_exponent * (t + 1.0).powf(-i.opening_exponent - 1.0)
        + i.closing_amplitude * i.closing_exponent * (END - t).powf(-i.closing_exponent - 1.0);
    if let Some(b) = &i.bump {
        if let Some(u) = bump_offset(b, t) {
            v -= 0.5 * b.amplitude * PI / b.half_width * (PI * u / b.half_width).sin();
        }
    }
    v
}

/// `∫ x^(−p) dx` antiderivative.
fn power_antiderivative(x: f64, p: f64) -> f64 {
    if (p - 1.0).abs() < 1e-12 {
        x.ln()
    } else {
        x.powf(1.0 - p) / (1.0 - p)
    }
}

/// Antiderivative of Λ in t.
fn lambda_antiderivative(i: &Intensity, t: f64) -> f64 {
    let mut v = i.opening_amplitude * power_antiderivative(t + 1.0, i.opening_exponent)
        - i.closing_amplitude * power_antiderivative(END - t, i.closing_exponent)
        + i.baseline * t;
    if let Some(b) = &i.bump {
        let u = (t - b.center).clamp(-b.half_width, b.half_width);
        v += 0.5 * b.amplitude * (u + b.half_width / PI * (PI * u / b.half_width).sin());
    }
    v
}

fn lambda_integral(i: &Intensity, t0: f64, t1: f64) -> f64 {
    lambda_antiderivative(i, t1) - lambda_antiderivative(i, t0)
}

pub(crate) fn intensity_curve(i: &Intensity) -> Vec<f64> {
    (0..SESSION_MINUTES).map(|t| lambda(i, t as f64)).collect()
}

/// Planted values for one semester.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemesterTruth {
    pub label: u32,
    /// Calendar bounds of the half-year.
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub trading_days: usize,
    pub intensity: Intensity,
    /// Λ(t) at every session minute.
    pub profile: Vec<f64>,
    /// `Σ_t Λ(t)`, expected shares per day.
    pub activity: f64,
    /// `∫ Λ dx` over rescaled time `x = t/195 − 1`.
    pub rescaled_activity: f64,
    /// Mean of `d²Λ/dx²` over [−1, 1].
    pub concavity: f64,
    /// `½ (∫_0^1 Λ dx − ∫_{−1}^0 Λ dx)`.
    pub symmetry: f64,
}

impl SemesterTruth {
    pub(crate) fn new(label: u32, first_date: NaiveDate, last_date: NaiveDate, trading_days: usize, intensity: Intensity) -> Self {
        let profile = intensity_curve(&intensity);
        let last = f64::from(LAST_MINUTE);
        Self {
            label,
            first_date,
            last_date,
            trading_days,
            intensity,
            activity: profile.iter().sum(),
            profile,
            rescaled_activity: lambda_integral(&intensity, 0.0, last) / HALF,
            // dΛ/dx = 195 dΛ/dt, and the mean of Λ'' over an interval of length 2
            // is half the change in Λ'.
            concavity: 0.5 * HALF * (lambda_dt(&intensity, last) - lambda_dt(&intensity, 0.0)),
            symmetry: 0.5 * (lambda_integral(&intensity, HALF, last) - lambda_integral(&intensity, 0.0, HALF)) / HALF,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: GeneratorSpec,
    pub tickers: Vec<String>,
    pub semesters: Vec<SemesterTruth>,
}

impl GroundTruth {
    /// Calendar ranges suitable for `assign_semesters`.
    pub fn semester_ranges(&self) -> Vec<(NaiveDate, NaiveDate)> {
        self.semesters.iter().map(|s| (s.first_date, s.last_date)).collect()
    }

    pub fn semester(&self, label: u32) -> Option<&SemesterTruth> {
        self.semesters.iter().find(|s| s.label == label)
    }
}

/// Λ(t) for the spec's base intensity.
pub fn analytic_profile(spec: &GeneratorSpec, t: u16) -> Result<f64, SynthError> {
    analytic_profile_in(spec, 1, t)
}

/// Λ(t) for the intensity in force in `semester`.
pub fn analytic_profile_in(spec: &GeneratorSpec, semester: u32, t: u16) -> Result<f64, SynthError> {
    if t > LAST_MINUTE {
        return Err(SynthError::OutOfSession(t));
    }
    if semester == 0 || semester > spec.n_semesters {
        return Err(SynthError::UnknownSemester(semester));
    }
    Ok(lambda(&spec.intensity_for(semester), f64::from(t)))
}
