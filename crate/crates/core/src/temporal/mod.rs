//! Amplitude-normalized trajectory comparison in the time domain.
//!
//! Each station is scaled by its L1 norm so that only the shape of its
//! trajectory matters, then stations are compared by L1 distance. The
//! resulting distance matrix feeds [`to_affinity`] and [`hierarchical_cluster`].

mod affinity;
mod cluster;

pub use affinity::{to_affinity, AffinityMatrix, Domain};
pub use cluster::{cut_dendrogram, hierarchical_cluster, Dendrogram, Linkage, Merge};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::Collection;
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// Station trajectories scaled to unit L1 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCollection<F> {
    pub trajectories: Vec<Vec<F>>,
}

impl<F: Scalar> TrajectoryCollection<F> {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

/// Divides each non-negative row by its sum; `ids` label errors.
pub fn normalize_rows<F: Scalar>(ids: &[&str], rows: &[Vec<F>]) -> Result<Vec<Vec<F>>> {
    rows.iter()
        .zip(ids)
        .map(|(row, id)| {
            let total: F = row.iter().copied().sum();
            if !(total > F::zero()) || !total.is_finite() {
                return Err(Error::ZeroTotal((*id).to_string()));
            }
            Ok(row.iter().map(|&v| v / total).collect())
        })
        .collect()
}

pub fn normalize_l1<F: Scalar>(collection: &Collection<F>) -> Result<TrajectoryCollection<F>> {
    let rows: Vec<Vec<F>> = collection.flows().map(<[F]>::to_vec).collect();
    let trajectories = normalize_rows(&collection.ids(), &rows)?;
    Ok(TrajectoryCollection { trajectories })
}

/// Pairwise `sum_t |a(t) - b(t)|` over equally long rows.
///
/// Each entry is computed independently, so the result does not depend on
/// the thread schedule.
pub fn l1_distance_matrix<F: Scalar>(rows: &[Vec<F>]) -> SquareMatrix<F> {
    let n = rows.len();
    let upper: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    rows[i]
                        .iter()
                        .zip(&rows[j])
                        .fold(F::zero(), |acc, (&a, &b)| acc + (a - b).abs())
                })
                .collect()
        })
        .collect();
    let mut d = SquareMatrix::zeros(n);
    for (i, row) in upper.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

pub fn temporal_distance<F: Scalar>(trajectories: &TrajectoryCollection<F>) -> SquareMatrix<F> {
    l1_distance_matrix(&trajectories.trajectories)
}
