use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{detrend, Collection};
use crate::scalar::Scalar;

use super::{periodogram, welch_deviance, welch_psd, PowerSpectrum, Taper, WelchParams};

/// Candidate segment lengths and overlaps searched exhaustively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchGrid {
    pub segment_lengths: Vec<usize>,
    pub overlaps: Vec<f64>,
}

impl Default for WelchGrid {
    fn default() -> Self {
        Self {
            segment_lengths: vec![250, 750, 1250, 1875, 2500, 3750, 4750, 7123],
            overlaps: vec![0.0, 0.2, 0.4, 0.5, 0.6, 0.75],
        }
    }
}

impl WelchGrid {
    /// Candidates with segment length outermost, in the order given.
    pub fn candidates(&self) -> Vec<WelchParams> {
        self.segment_lengths
            .iter()
            .flat_map(|&s| {
                self.overlaps.iter().map(move |&o| WelchParams {
                    segment_len: s,
                    overlap: o,
                })
            })
            .collect()
    }

    /// Checks every candidate against a series length of `days`.
    pub fn validate(&self, days: usize) -> Result<()> {
        let candidates = self.candidates();
        if candidates.is_empty() {
            return Err(Error::InvalidParameter("Welch parameter grid is empty".into()));
        }
        for p in &candidates {
            p.validate()?;
            if p.segment_len > days {
                return Err(Error::InvalidParameter(format!(
                    "grid segment length {} exceeds series length {days}",
                    p.segment_len
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation<F> {
    pub params: WelchParams,
    /// Whittle deviance summed over stations.
    pub deviance: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelchOptimization<F> {
    pub evaluations: Vec<GridEvaluation<F>>,
    pub selected: WelchParams,
}

/// Grid search for the Welch parameters minimizing the collection-wide
/// Whittle deviance against each station's periodogram.
///
/// Ties go to the smaller segment length, then the smaller overlap.
pub fn optimize_welch_params<F: Scalar>(
    collection: &Collection<F>,
    grid: &WelchGrid,
    taper: Taper,
) -> Result<WelchOptimization<F>> {
    grid.validate(collection.days())?;
    let candidates = grid.candidates();
    let series: Vec<Vec<F>> = collection.flows().map(detrend).collect();
    let periodograms: Vec<PowerSpectrum<F>> = series.par_iter().map(|x| periodogram(x)).collect();
    let ids = collection.ids();

    let n = series.len();
    let per_pair: Vec<F> = (0..candidates.len() * n)
        .into_par_iter()
        .map(|k| {
            let (c, i) = (k / n, k % n);
            let estimate = welch_psd(&series[i], &candidates[c], taper)?;
            welch_deviance(&estimate, &periodograms[i]).map_err(|e| match e {
                Error::Degenerate(msg) => Error::Degenerate(format!("station {}: {msg}", ids[i])),
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let mut evaluations = Vec::with_capacity(candidates.len());
    for (c, params) in candidates.iter().enumerate() {
        let total = per_pair[c * n..(c + 1) * n]
            .iter()
            .fold(F::zero(), |acc, &d| acc + d);
        evaluations.push(GridEvaluation {
            params: *params,
            deviance: total,
        });
    }

    let mut best: Option<&GridEvaluation<F>> = None;
    for e in &evaluations {
        let better = match best {
            None => true,
            Some(b) => {
                e.deviance < b.deviance
                    || (e.deviance == b.deviance
                        && (e.params.segment_len, e.params.overlap)
                            < (b.params.segment_len, b.params.overlap))
            }
        };
        if better {
            best = Some(e);
        }
    }
    let best = best.expect("grid validated non-empty");
    if !best.deviance.is_finite() {
        return Err(Error::Degenerate("no grid point gives a finite deviance".into()));
    }
    Ok(WelchOptimization {
        selected: best.params,
        evaluations,
    })
}
