//! Periodogram and Welch spectral estimation, Whittle-deviance parameter
//! search, and spectral affinity between stations.

mod dft;
mod optimize;
mod welch;
mod whittle;

pub use dft::{dft, half_spectrum_len, periodogram};
pub use optimize::{optimize_welch_params, GridEvaluation, WelchGrid, WelchOptimization};
pub use welch::{welch_psd, Taper, WelchParams, MAX_OVERLAP};
pub use whittle::{interpolate_log_spectrum, welch_deviance, whittle_deviance, SPECTRUM_FLOOR};

use rayon::prelude::*;

use crate::error::Result;
use crate::ingest::{detrend, Collection};
use crate::scalar::Scalar;
use crate::temporal::{l1_distance_matrix, normalize_rows, to_affinity, AffinityMatrix, Domain};

/// Spectral density values on an increasing grid of frequencies in cycles/day.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum<F> {
    pub frequencies: Vec<F>,
    pub values: Vec<F>,
}

impl<F: Scalar> PowerSpectrum<F> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest value, first one on ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, F)> = None;
        for (j, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Argmax ignoring the zero-frequency bin.
    pub fn peak_frequency(&self) -> Option<F> {
        let rest = PowerSpectrum {
            frequencies: self.frequencies[1.min(self.len())..].to_vec(),
            values: self.values[1.min(self.len())..].to_vec(),
        };
        rest.argmax().map(|j| rest.frequencies[j])
    }
}

/// Welch estimates of every detrended station series.
pub fn welch_spectra<F: Scalar>(
    collection: &Collection<F>,
    params: &WelchParams,
    taper: Taper,
) -> Result<Vec<PowerSpectrum<F>>> {
    collection
        .stations()
        .par_iter()
        .map(|s| welch_psd(&detrend(&s.flow), params, taper))
        .collect()
}

/// Affinity between L1-normalized Welch spectra.
pub fn spectral_affinity_from_spectra<F: Scalar>(
    ids: &[&str],
    spectra: &[PowerSpectrum<F>],
) -> Result<AffinityMatrix<F>> {
    let rows: Vec<Vec<F>> = spectra.iter().map(|s| s.values.clone()).collect();
    let normalized = normalize_rows(ids, &rows)?;
    to_affinity(&l1_distance_matrix(&normalized), Domain::Spectral)
}

pub fn spectral_affinity<F: Scalar>(
    collection: &Collection<F>,
    params: &WelchParams,
    taper: Taper,
) -> Result<AffinityMatrix<F>> {
    let spectra = welch_spectra(collection, params, taper)?;
    spectral_affinity_from_spectra(&collection.ids(), &spectra)
}
