//! Governing-process estimation by integer offset alignment.
//!
//! Each station `x_i` is shifted left by `phi_i` days so that `x_i(t + phi_i)`
//! tracks a common process `G(t)` over `t = 1..T - phi_i`. Offsets and `G`
//! are updated alternately, starting from the unshifted pointwise mean.

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Collection, State};
use crate::scalar::Scalar;

/// Upper bound on any offset, in days.
pub const MAX_OFFSET: usize = 365;

/// How a station's truncated squared error is compared across offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    /// Divide station `i`'s error by its `T - phi_i` summed terms.
    #[default]
    Normalized,
    /// The plain truncated double sum.
    Raw,
}

impl FromStr for LossMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normalized" => Ok(LossMode::Normalized),
            "raw" => Ok(LossMode::Raw),
            other => Err(format!("unknown loss mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentConfig {
    pub max_iters: usize,
    /// Relative loss decrease below which iteration stops.
    pub tol: f64,
    pub mode: LossMode,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-8,
            mode: LossMode::Normalized,
        }
    }
}

impl AlignmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} is negative", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoverningProcess<F> {
    pub g: Vec<F>,
    /// Per-station offsets in `0..=MAX_OFFSET`, in collection order.
    pub offsets: Vec<usize>,
    /// Objective after each (offsets, G) update pair.
    pub loss_history: Vec<F>,
    pub converged: bool,
}

impl<F> GoverningProcess<F> {
    pub fn iterations(&self) -> usize {
        self.loss_history.len()
    }
}

fn max_offset(days: usize) -> usize {
    MAX_OFFSET.min(days.saturating_sub(1))
}

fn check_inputs<F: Scalar>(collection: &Collection<F>, g: Option<&[F]>, offsets: Option<&[usize]>) -> Result<()> {
    if let Some(g) = g {
        if g.len() != collection.days() {
            return Err(Error::DimensionMismatch(format!(
                "governing process has length {}, collection has {} days",
                g.len(),
                collection.days()
            )));
        }
    }
    if let Some(offsets) = offsets {
        if offsets.len() != collection.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} offsets for {} stations",
                offsets.len(),
                collection.len()
            )));
        }
        let limit = max_offset(collection.days());
        if let Some(&bad) = offsets.iter().find(|&&p| p > limit) {
            return Err(Error::InvalidParameter(format!("offset {bad} exceeds {limit}")));
        }
    }
    Ok(())
}

/// `sum_{t < T - phi} (x(t + phi) - g(t))^2` with 0-based `t`.
fn shifted_sq_error<F: Scalar>(x: &[F], g: &[F], phi: usize) -> F {
    x[phi..]
        .iter()
        .zip(g)
        .fold(F::zero(), |acc, (&a, &b)| {
            let d = a - b;
            acc + d * d
        })
}

fn station_objective<F: Scalar>(x: &[F], g: &[F], phi: usize, mode: LossMode) -> F {
    let e = shifted_sq_error(x, g, phi);
    match mode {
        LossMode::Raw => e,
        LossMode::Normalized => e / F::lit((x.len() - phi) as f64),
    }
}

/// Alignment objective summed over stations in index order.
pub fn objective<F: Scalar>(collection: &Collection<F>, g: &[F], offsets: &[usize], mode: LossMode) -> Result<F> {
    check_inputs(collection, Some(g), Some(offsets))?;
    let per_station: Vec<F> = collection
        .stations()
        .par_iter()
        .zip(offsets)
        .map(|(s, &phi)| station_objective(&s.flow, g, phi, mode))
        .collect();
    Ok(per_station.into_iter().fold(F::zero(), |a, b| a + b))
}

/// The literal truncated double sum over stations and days.
pub fn alignment_loss<F: Scalar>(collection: &Collection<F>, g: &[F], offsets: &[usize]) -> Result<F> {
    objective(collection, g, offsets, LossMode::Raw)
}

/// Per-station argmin over `phi` in `0..=365`; ties go to the smallest offset.
pub fn update_offsets<F: Scalar>(collection: &Collection<F>, g: &[F], mode: LossMode) -> Result<Vec<usize>> {
    check_inputs(collection, Some(g), None)?;
    let limit = max_offset(collection.days());
    Ok(collection
        .stations()
        .par_iter()
        .map(|s| {
            let mut best = (0, station_objective(&s.flow, g, 0, mode));
            for phi in 1..=limit {
                let v = station_objective(&s.flow, g, phi, mode);
                if v < best.1 {
                    best = (phi, v);
                }
            }
            best.0
        })
        .collect())
}

/// Recomputes `G(t)` as the mean of the shifted stations covering day `t`.
///
/// Under [`LossMode::Normalized`] station `i` is weighted by `1 / (T - phi_i)`,
/// which is the exact minimizer of the normalized objective; with all offsets
/// equal this is the plain mean. Days no station covers keep the value from
/// `previous`, or the unshifted mean when there is none.
pub fn update_governing<F: Scalar>(
    collection: &Collection<F>,
    offsets: &[usize],
    mode: LossMode,
    previous: Option<&[F]>,
) -> Result<Vec<F>> {
    check_inputs(collection, previous, Some(offsets))?;
    let days = collection.days();
    let weights: Vec<F> = offsets
        .iter()
        .map(|&phi| match mode {
            LossMode::Raw => F::one(),
            LossMode::Normalized => F::one() / F::lit((days - phi) as f64),
        })
        .collect();
    let stations = collection.stations();
    Ok((0..days)
        .into_par_iter()
        .map(|t| {
            let mut num = F::zero();
            let mut den = F::zero();
            for ((s, &phi), &w) in stations.iter().zip(offsets).zip(&weights) {
                if t + phi < days {
                    num = num + w * s.flow[t + phi];
                    den = den + w;
                }
            }
            if den > F::zero() {
                num / den
            } else if let Some(prev) = previous {
                prev[t]
            } else {
                stations.iter().map(|s| s.flow[t]).sum::<F>() / F::lit(stations.len() as f64)
            }
        })
        .collect())
}

/// Alternating minimization of the alignment objective.
///
/// Stops when the offsets repeat, when the objective's relative decrease
/// falls below `tol`, or after `max_iters` update pairs. A pair that would
/// raise the objective (possible only through rounding) is discarded.
pub fn estimate_governing_process<F: Scalar>(
    collection: &Collection<F>,
    config: &AlignmentConfig,
) -> Result<GoverningProcess<F>> {
    config.validate()?;
    let n = collection.len();
    let mut offsets = vec![0usize; n];
    let mut g = update_governing(collection, &offsets, LossMode::Raw, None)?;
    let mut loss_history: Vec<F> = Vec::new();
    let mut converged = false;
    let tol = F::lit(config.tol);

    for _ in 0..config.max_iters {
        let next_offsets = update_offsets(collection, &g, config.mode)?;
        let next_g = update_governing(collection, &next_offsets, config.mode, Some(&g))?;
        let loss = objective(collection, &next_g, &next_offsets, config.mode)?;
        if let Some(&prev) = loss_history.last() {
            if loss > prev {
                converged = true;
                break;
            }
        }
        let unchanged = next_offsets == offsets;
        let small_step = loss_history
            .last()
            .is_some_and(|&prev| prev - loss <= tol * prev.abs());
        loss_history.push(loss);
        offsets = next_offsets;
        g = next_g;
        if unchanged || small_step {
            converged = true;
            break;
        }
    }
    Ok(GoverningProcess {
        g,
        offsets,
        loss_history,
        converged,
    })
}

/// Non-zero offset statistics for one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateOffsets {
    pub state: State,
    pub stations: usize,
    pub nonzero: usize,
    /// `100 * nonzero / stations`.
    pub percent_nonzero: f64,
    /// Median over non-zero offsets only.
    pub median_nonzero: Option<f64>,
}

/// Per-state offset summary for every state present in the collection.
pub fn summarize_offsets<F: Scalar>(process: &GoverningProcess<F>, collection: &Collection<F>) -> Result<Vec<StateOffsets>> {
    check_inputs(collection, None, Some(&process.offsets))?;
    let mut by_state: BTreeMap<State, Vec<usize>> = BTreeMap::new();
    for (s, &phi) in collection.stations().iter().zip(&process.offsets) {
        by_state.entry(s.meta.state).or_default().push(phi);
    }
    Ok(by_state
        .into_iter()
        .map(|(state, offsets)| {
            let mut nonzero: Vec<usize> = offsets.iter().copied().filter(|&p| p > 0).collect();
            nonzero.sort_unstable();
            let k = nonzero.len();
            let median_nonzero = match k {
                0 => None,
                _ if k % 2 == 1 => Some(nonzero[k / 2] as f64),
                _ => Some((nonzero[k / 2 - 1] + nonzero[k / 2]) as f64 / 2.0),
            };
            StateOffsets {
                state,
                stations: offsets.len(),
                nonzero: k,
                percent_nonzero: 100.0 * k as f64 / offsets.len() as f64,
                median_nonzero,
            }
        })
        .collect())
}
