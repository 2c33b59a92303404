use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::PowerSpectrum;

pub const MAX_OVERLAP: f64 = 0.95;

/// Segment window applied before each segment's periodogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    /// Periodic Hann, `w(k) = sin^2(pi k / S)`.
    #[default]
    Hann,
    Rectangular,
}

impl FromStr for Taper {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hann" => Ok(Taper::Hann),
            "rectangular" | "boxcar" => Ok(Taper::Rectangular),
            other => Err(format!("unknown taper {other:?}")),
        }
    }
}

impl Taper {
    pub fn weights<F: Scalar>(self, len: usize) -> Vec<F> {
        match self {
            Taper::Rectangular => vec![F::one(); len],
            Taper::Hann => {
                let s = F::lit(len as f64);
                (0..len)
                    .map(|k| {
                        let v = (F::PI() * F::lit(k as f64) / s).sin();
                        v * v
                    })
                    .collect()
            }
        }
    }
}

/// Segment length `S` and fractional overlap `omega` for Welch's method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchParams {
    #[serde(rename = "S")]
    pub segment_len: usize,
    #[serde(rename = "omega")]
    pub overlap: f64,
}

impl WelchParams {
    pub fn new(segment_len: usize, overlap: f64) -> Result<Self> {
        let p = Self {
            segment_len,
            overlap,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segment_len < 2 {
            return Err(Error::InvalidParameter(format!(
                "segment length {} is below 2",
                self.segment_len
            )));
        }
        if !(0.0..=MAX_OVERLAP).contains(&self.overlap) {
            return Err(Error::InvalidParameter(format!(
                "overlap {} outside [0, {MAX_OVERLAP}]",
                self.overlap
            )));
        }
        if self.step() < 1 {
            return Err(Error::InvalidParameter(format!(
                "segment length {} with overlap {} gives a zero step",
                self.segment_len, self.overlap
            )));
        }
        Ok(())
    }

    /// Distance between consecutive segment starts, `round(S (1 - omega))`.
    pub fn step(&self) -> usize {
        (self.segment_len as f64 * (1.0 - self.overlap)).round() as usize
    }

    /// Number of full segments that fit in `len` samples.
    pub fn segment_count(&self, len: usize) -> usize {
        if len < self.segment_len || self.step() == 0 {
            0
        } else {
            (len - self.segment_len) / self.step() + 1
        }
    }
}

/// Welch estimate: average of tapered, mean-removed segment periodograms.
///
/// Each segment periodogram is divided by `S * mean(w^2)` so white noise of
/// variance `s^2` gives a flat spectrum at `s^2`. Trailing samples that do
/// not fill a segment are dropped.
pub fn welch_psd<F: Scalar>(x: &[F], params: &WelchParams, taper: Taper) -> Result<PowerSpectrum<F>> {
    params.validate()?;
    let s = params.segment_len;
    if s > x.len() {
        return Err(Error::InvalidParameter(format!(
            "segment length {s} exceeds series length {}",
            x.len()
        )));
    }
    let step = params.step();
    let segments = params.segment_count(x.len());
    let m = s / 2 + 1;
    let window: Vec<F> = taper.weights(s);
    let power = window.iter().map(|&w| w * w).sum::<F>() / F::lit(s as f64);
    let norm = F::lit(s as f64) * power;

    let mut acc = vec![F::zero(); m];
    let mut buf = vec![Complex::new(F::zero(), F::zero()); s];
    for k in 0..segments {
        let seg = &x[k * step..k * step + s];
        let mean = seg.iter().copied().sum::<F>() / F::lit(s as f64);
        for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((v - mean) * w, F::zero());
        }
        F::forward_fft(&mut buf);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a = *a + z.norm_sqr() / norm;
        }
    }
    let count = F::lit(segments as f64);
    let sf = F::lit(s as f64);
    Ok(PowerSpectrum {
        frequencies: (0..m).map(|j| F::lit(j as f64) / sf).collect(),
        values: acc.into_iter().map(|v| v / count).collect(),
    })
}
