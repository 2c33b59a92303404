use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::PowerSpectrum;

/// Relative floor applied to a Welch estimate before taking logarithms.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

/// Whittle deviance `sum_j [ln f_j + I_j / f_j]`.
///
/// Smaller is better; for fixed `I` the minimum is reached at `f = I`.
pub fn whittle_deviance<F: Scalar>(model: &[F], periodogram: &[F]) -> Result<F> {
    if model.len() != periodogram.len() {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} bins, periodogram has {}",
            model.len(),
            periodogram.len()
        )));
    }
    let mut total = F::zero();
    for (j, (&f, &i)) in model.iter().zip(periodogram).enumerate() {
        if !(f > F::zero()) || !f.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spectral density {f} at bin {j} is not positive"
            )));
        }
        total = total + f.ln() + i / f;
    }
    Ok(total)
}

/// Evaluates `ln f` of `spectrum` at `targets` by linear interpolation in
/// frequency, after flooring at `SPECTRUM_FLOOR * max f`. Targets outside the
/// spectrum's frequency range take the nearest end value.
pub fn interpolate_log_spectrum<F: Scalar>(spectrum: &PowerSpectrum<F>, targets: &[F]) -> Result<Vec<F>> {
    let max = spectrum.values.iter().copied().fold(F::zero(), F::max);
    if !(max > F::zero()) {
        return Err(Error::Degenerate("spectrum is identically zero".into()));
    }
    let floor = max * F::lit(SPECTRUM_FLOOR);
    let logs: Vec<F> = spectrum.values.iter().map(|&v| v.max(floor).ln()).collect();
    let freqs = &spectrum.frequencies;
    let last = freqs.len() - 1;
    Ok(targets
        .iter()
        .map(|&nu| {
            let k = freqs.partition_point(|&f| f <= nu);
            if k == 0 {
                logs[0]
            } else if k > last {
                logs[last]
            } else {
                let (f0, f1) = (freqs[k - 1], freqs[k]);
                let w = (nu - f0) / (f1 - f0);
                logs[k - 1] + (logs[k] - logs[k - 1]) * w
            }
        })
        .collect())
}

/// Deviance of a smooth estimate against a full-resolution periodogram,
/// excluding the zero-frequency bin.
pub fn welch_deviance<F: Scalar>(estimate: &PowerSpectrum<F>, periodogram: &PowerSpectrum<F>) -> Result<F> {
    let freqs = &periodogram.frequencies[1..];
    let model: Vec<F> = interpolate_log_spectrum(estimate, freqs)?
        .into_iter()
        .map(F::exp)
        .collect();
    whittle_deviance(&model, &periodogram.values[1..])
}
