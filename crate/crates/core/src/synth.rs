//! Seeded synthetic collections with planted offsets and cluster labels.
//!
//! Every random draw comes from ChaCha8 streams keyed by the spec seed:
//! stream 0 drives templates, stream `1 + i` station `i`'s noise and
//! coordinates. Gaussian variates use the Box-Muller transform, so output is
//! identical across platforms and thread counts.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::MAX_OFFSET;
use crate::error::{Error, Result};
use crate::ingest::{Collection, State, StationMeta, StationSeries};
use crate::scalar::Scalar;

pub const YEAR: usize = 365;
const PULSE_BASELINE: f64 = 0.1;
const PULSE_WIDTH: f64 = 6.0;
const PULSE_DAY_A: f64 = 60.0;
const PULSE_DAY_B: f64 = 240.0;
const TEMPLATE_B_STREAM: u64 = 1 << 40;
const OFFSET_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    /// Low baseline with one sharp pulse per 365 days; pulse heights vary by year.
    AnnualPulse,
    /// `1 + sin(2 pi t / period)`.
    Sinusoid,
    /// Unit-variance Gaussian noise around a level of 3.
    WhiteNoise,
    /// First half of the stations follow one annual pulse, the rest another
    /// pulse 180 days later with its own heights.
    TwoBlock,
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "annual_pulse" => Ok(Template::AnnualPulse),
            "sinusoid" => Ok(Template::Sinusoid),
            "white_noise" => Ok(Template::WhiteNoise),
            "two_block" => Ok(Template::TwoBlock),
            other => Err(format!("unknown template {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub days: usize,
    pub template: Template,
    /// Circular delay per station, each in `0..=365`.
    pub offsets: Vec<usize>,
    /// Noise standard deviation as a fraction of the template amplitude.
    pub noise_std: f64,
    pub seed: u64,
    /// Sinusoid period in days.
    pub period: f64,
    pub start_date: NaiveDate,
}

impl SynthSpec {
    pub fn new(n: usize, days: usize, template: Template, seed: u64) -> Self {
        Self {
            n,
            days,
            template,
            offsets: vec![0; n],
            noise_std: 0.0,
            seed,
            period: YEAR as f64,
            start_date: NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"),
        }
    }

    pub fn with_offsets(mut self, offsets: Vec<usize>) -> Self {
        self.offsets = offsets;
        self
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.days < 2 {
            return Err(Error::InvalidParameter(format!(
                "synthetic collection needs n >= 1 and at least 2 days, got n = {}, T = {}",
                self.n, self.days
            )));
        }
        if self.offsets.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "{} planted offsets for {} stations",
                self.offsets.len(),
                self.n
            )));
        }
        if let Some(&bad) = self.offsets.iter().find(|&&o| o > MAX_OFFSET) {
            return Err(Error::InvalidParameter(format!("planted offset {bad} exceeds {MAX_OFFSET}")));
        }
        if !(self.noise_std >= 0.0) || !(self.period > 0.0) {
            return Err(Error::InvalidParameter("noise_std must be >= 0 and period > 0".into()));
        }
        Ok(())
    }
}

/// Draws `n` offsets: zero with probability `zero_fraction`, otherwise
/// uniform on `0..=365`.
pub fn sample_offsets(n: usize, zero_fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&zero_fraction) {
        return Err(Error::InvalidParameter(format!("zero fraction {zero_fraction} is outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(OFFSET_STREAM);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let phi = rng.random_range(0..=MAX_OFFSET);
            if u < zero_fraction { 0 } else { phi }
        })
        .collect())
}

/// Ground truth planted by [`generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub template: Template,
    pub station_ids: Vec<String>,
    pub offsets: Vec<usize>,
    /// Block label per station (all 0 unless the template is two-block).
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Synthetic<F> {
    pub collection: Collection<F>,
    pub truth: Truth,
}

/// Standard normal variate by Box-Muller.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

fn pulse_template(days: usize, peak_day: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let years = days.div_ceil(YEAR);
    let heights: Vec<f64> = (0..years).map(|_| 0.6 + 0.8 * rng.random::<f64>()).collect();
    (0..days)
        .map(|t| {
            let doy = (t % YEAR) as f64;
            let mut d = (doy - peak_day).abs();
            d = d.min(YEAR as f64 - d);
            PULSE_BASELINE + heights[t / YEAR] * (-0.5 * (d / PULSE_WIDTH).powi(2)).exp()
        })
        .collect()
}

fn template_values(spec: &SynthSpec, block_b: bool) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.template {
        Template::AnnualPulse => pulse_template(spec.days, PULSE_DAY_A, &mut rng),
        Template::TwoBlock if !block_b => pulse_template(spec.days, PULSE_DAY_A, &mut rng),
        Template::TwoBlock => {
            rng.set_stream(TEMPLATE_B_STREAM);
            pulse_template(spec.days, PULSE_DAY_B, &mut rng)
        }
        Template::Sinusoid => (0..spec.days)
            .map(|t| 1.0 + (2.0 * PI * t as f64 / spec.period).sin())
            .collect(),
        Template::WhiteNoise => (0..spec.days).map(|_| 3.0 + gaussian(&mut rng)).collect(),
    }
}

const REGIONS: [(f64, f64, State); 3] = [
    (-33.5, 150.5, State::NSW),
    (-32.0, 116.5, State::WA),
    (-14.5, 132.5, State::NT),
];

/// Builds the collection: template circularly delayed per station, plus
/// seeded Gaussian noise, clipped at zero.
pub fn generate<F: Scalar>(spec: &SynthSpec) -> Result<Synthetic<F>> {
    spec.validate()?;
    let block_a = template_values(spec, false);
    let block_b = match spec.template {
        Template::TwoBlock => template_values(spec, true),
        _ => Vec::new(),
    };
    let split = spec.n.div_ceil(2);
    let mut stations = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for (i, &delay) in spec.offsets.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(1 + i as u64);
        let in_b = spec.template == Template::TwoBlock && i >= split;
        let template = if in_b { &block_b } else { &block_a };
        labels.push(usize::from(in_b));
        let t_len = spec.days;
        let flow = (0..t_len)
            .map(|t| {
                let base = template[(t + t_len - delay % t_len) % t_len];
                let noisy = base + spec.noise_std * gaussian(&mut rng);
                F::lit(noisy.max(0.0))
            })
            .collect();
        let (lat, lon, state) = REGIONS[i % REGIONS.len()];
        let meta = StationMeta {
            station_id: format!("SYN{:04}", i + 1),
            name: format!("Synthetic station {}", i + 1),
            latitude: lat + rng.random::<f64>() - 0.5,
            longitude: lon + rng.random::<f64>() - 0.5,
            state,
        };
        stations.push(StationSeries { meta, flow });
    }
    let collection = Collection::new(stations, spec.start_date)?;
    let truth = Truth {
        template: spec.template,
        station_ids: collection.ids().into_iter().map(String::from).collect(),
        offsets: spec.offsets.clone(),
        labels,
    };
    Ok(Synthetic { collection, truth })
}
