use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use super::truth::{intensity_curve, GroundTruth, SemesterTruth};
use super::{GeneratorSpec, NoiseModel, SynthError};
use crate::market_data::{MinutePanel, SESSION_MINUTES};

/// Calendar bounds of semester `k` (0-based) counted from the spec's start.
pub(crate) fn semester_bounds(spec: &GeneratorSpec, k: u32) -> (NaiveDate, NaiveDate) {
    let h = spec.start_half - 1 + k;
    let year = spec.start_year + (h / 2) as i32;
    if h.is_multiple_of(2) {
        (NaiveDate::from_ymd_opt(year, 1, 1).unwrap(), NaiveDate::from_ymd_opt(year, 6, 30).unwrap())
    } else {
        (NaiveDate::from_ymd_opt(year, 7, 1).unwrap(), NaiveDate::from_ymd_opt(year, 12, 31).unwrap())
    }
}

/// Trading days of each semester: the first `n_days` weekdays of the half-year.
pub fn semester_days(spec: &GeneratorSpec) -> Result<Vec<Vec<NaiveDate>>, SynthError> {
    (0..spec.n_semesters)
        .map(|k| {
            let (first, last) = semester_bounds(spec, k);
            let days: Vec<NaiveDate> = first
                .iter_days()
                .take_while(|d| *d <= last)
                .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
                .take(spec.n_days)
                .collect();
            if days.len() < spec.n_days {
                return Err(SynthError::InvalidSpec(format!(
                    "semester {} has only {} weekdays, n_days = {}",
                    k + 1,
                    days.len(),
                    spec.n_days
                )));
            }
            Ok(days)
        })
        .collect()
}

enum Noise {
    LogNormal { sigma: f64, shift: f64 },
    Gamma(Gamma<f64>),
    Constant,
}

impl Noise {
    fn new(model: NoiseModel) -> Self {
        match model {
            NoiseModel::LogNormal { sigma } => Noise::LogNormal { sigma, shift: -0.5 * sigma * sigma },
            NoiseModel::Gamma { shape } => Noise::Gamma(Gamma::new(shape, 1.0 / shape).expect("validated shape")),
            NoiseModel::Constant => Noise::Constant,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Noise::LogNormal { sigma, shift } => {
                let z: f64 = StandardNormal.sample(rng);
                (sigma * z + shift).exp()
            }
            Noise::Gamma(g) => g.sample(rng),
            Noise::Constant => 1.0,
        }
    }
}

/// Draws the panel and its ground truth. Output is a pure function of the
/// spec, independent of thread count.
pub fn generate_panel(spec: &GeneratorSpec) -> Result<(MinutePanel, GroundTruth), SynthError> {
    spec.validate()?;
    let calendar = semester_days(spec)?;
    let curves: Vec<Vec<f64>> = (1..=spec.n_semesters).map(|s| intensity_curve(&spec.intensity_for(s))).collect();
    let day_curve: Vec<&[f64]> = calendar
        .iter()
        .zip(&curves)
        .flat_map(|(days, curve)| std::iter::repeat_n(curve.as_slice(), days.len()))
        .collect();
    let days: Vec<NaiveDate> = calendar.iter().flatten().copied().collect();
    let mut tickers = spec.tickers();
    tickers.sort();

    let noise = Noise::new(spec.noise);
    let per_company: Vec<(Vec<Option<u64>>, Vec<[f64; 4]>)> = (0..tickers.len())
        .into_par_iter()
        .map(|company| company_block(spec, company, &day_curve, &noise))
        .collect();
    let cells = tickers.len() * days.len() * SESSION_MINUTES;
    let mut volume = Vec::with_capacity(cells);
    let mut prices = Vec::with_capacity(cells);
    for (v, p) in per_company {
        volume.extend(v);
        prices.extend(p);
    }
    let panel = MinutePanel::from_parts(tickers.clone(), days, volume, prices);

    let semesters = calendar
        .iter()
        .enumerate()
        .map(|(k, days)| {
            let label = k as u32 + 1;
            let (first, last) = semester_bounds(spec, k as u32);
            SemesterTruth::new(label, first, last, days.len(), spec.intensity_for(label))
        })
        .collect();
    Ok((panel, GroundTruth { spec: spec.clone(), tickers, semesters }))
}

fn company_block(
    spec: &GeneratorSpec,
    company: usize,
    day_curve: &[&[f64]],
    noise: &Noise,
) -> (Vec<Option<u64>>, Vec<[f64; 4]>) {
    let n = day_curve.len() * SESSION_MINUTES;
    let mut volume = Vec::with_capacity(n);
    let mut prices = Vec::with_capacity(n);
    let flat = spec.price.map_or(100.0, |p| p.initial_price);
    let minute_sd = spec.price.map_or(0.0, |p| p.daily_volatility / (SESSION_MINUTES as f64).sqrt());
    let mut log_price = flat.ln();
    for (day, curve) in day_curve.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(((company as u64) << 32) | day as u64);
        for &lambda in curve.iter() {
            let eps = noise.sample(&mut rng);
            volume.push(Some((lambda * eps).round() as u64));
            if spec.price.is_none() {
                prices.push([flat; 4]);
                continue;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            // Uniforms on (0, 1] so their logs are finite.
            let u_high = 1.0 - rng.random::<f64>();
            let u_low = 1.0 - rng.random::<f64>();
            let a = log_price;
            let b = a + minute_sd * z;
            let var = minute_sd * minute_sd;
            let d2 = (b - a) * (b - a);
            let high = (0.5 * (a + b + (d2 - 2.0 * var * u_high.ln()).sqrt())).max(a).max(b);
            let low = (0.5 * (a + b - (d2 - 2.0 * var * u_low.ln()).sqrt())).min(a).min(b);
            prices.push([a.exp(), high.exp(), low.exp(), b.exp()]);
            log_price = b;
        }
    }
    (volume, prices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{assign_semesters, LAST_MINUTE};
    use crate::synth::{Intensity, PriceModel};

    fn small(seed: u64) -> GeneratorSpec {
        GeneratorSpec { n_companies: 3, n_days: 5, n_semesters: 2, seed, ..Default::default() }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (a, _) = generate_panel(&small(7)).unwrap();
        let (b, _) = generate_panel(&small(7)).unwrap();
        let (c, _) = generate_panel(&small(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn streams_do_not_depend_on_company_count() {
        let (three, _) = generate_panel(&small(3)).unwrap();
        let (five, _) = generate_panel(&GeneratorSpec { n_companies: 5, ..small(3) }).unwrap();
        for d in 0..three.n_days() {
            for t in 0..=LAST_MINUTE {
                assert_eq!(three.bar(2, d, t), five.bar(2, d, t));
            }
        }
    }

    #[test]
    fn constant_noise_flat_intensity() {
        let spec = GeneratorSpec {
            intensity: Intensity { opening_amplitude: 0.0, closing_amplitude: 0.0, baseline: 100.0, ..Default::default() },
            noise: NoiseModel::Constant,
            ..small(1)
        };
        let (panel, _) = generate_panel(&spec).unwrap();
        assert!(panel.bars().all(|b| b.volume == 100));
    }

    #[test]
    fn calendar_and_semesters() {
        let spec = GeneratorSpec { start_half: 2, n_semesters: 3, ..small(1) };
        let (panel, truth) = generate_panel(&spec).unwrap();
        assert_eq!(panel.days()[0], NaiveDate::from_ymd_opt(2004, 7, 1).unwrap());
        assert!(panel.days().iter().all(|d| d.weekday().number_from_monday() <= 5));
        let index = assign_semesters(&panel, &truth.semester_ranges()).unwrap();
        assert_eq!(index.day_counts().values().copied().collect::<Vec<_>>(), vec![5, 5, 5]);
        assert_eq!(index.semester_of(NaiveDate::from_ymd_opt(2005, 1, 3).unwrap()), Some(2));
        let too_many = GeneratorSpec { n_days: 140, ..small(1) };
        assert!(matches!(generate_panel(&too_many), Err(SynthError::InvalidSpec(_))));
    }

    #[test]
    fn bars_are_consistent() {
        let (panel, _) = generate_panel(&small(11)).unwrap();
        for bar in panel.bars() {
            bar.check().unwrap();
        }
        // Each day opens at the previous close.
        let last = panel.bar(1, 0, LAST_MINUTE).unwrap();
        assert_eq!(panel.bar(1, 1, 0).unwrap().open, last.close);
    }

    #[test]
    fn price_free_mode() {
        let spec = GeneratorSpec { price: None, ..small(2) };
        let with_prices = generate_panel(&GeneratorSpec { price: Some(PriceModel::default()), ..small(2) }).unwrap().0;
        let (panel, _) = generate_panel(&spec).unwrap();
        assert!(panel.bars().all(|b| b.open == 100.0 && b.high == 100.0 && b.close == 100.0));
        // Noise is the first draw of each minute's stream, so the first volume agrees.
        assert_eq!(panel.volume(0, 0, 0), with_prices.volume(0, 0, 0));
    }

    #[test]
    fn invalid_specs() {
        let zero = GeneratorSpec {
            intensity: Intensity { opening_amplitude: 0.0, closing_amplitude: 0.0, baseline: 0.0, ..Default::default() },
            ..small(1)
        };
        assert!(generate_panel(&zero).is_err());
        assert!(generate_panel(&GeneratorSpec { n_days: 1, ..small(1) }).is_err());
        assert!(generate_panel(&GeneratorSpec { noise: NoiseModel::Gamma { shape: 0.0 }, ..small(1) }).is_err());
        let dup = GeneratorSpec { n_companies: 2, tickers: Some(vec!["A".into(), "A".into()]), ..small(1) };
        assert!(generate_panel(&dup).is_err());
    }
}
