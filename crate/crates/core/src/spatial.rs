//! Great-circle distances between stations and K-means on their coordinates.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;
/// Restarts per K in [`elbow_select`].
pub const ELBOW_RESTARTS: usize = 10;
pub const DEFAULT_MAX_ITERS: usize = 300;

/// `[latitude, longitude]` in degrees.
pub type LatLon<F> = [F; 2];

/// Haversine distance in kilometres.
pub fn geodesic_distance<F: Scalar>(a: LatLon<F>, b: LatLon<F>) -> F {
    let (p1, p2) = (a[0].to_radians(), b[0].to_radians());
    let dp = p2 - p1;
    let dl = (b[1] - a[1]).to_radians();
    let half = F::lit(0.5);
    let h = (dp * half).sin().powi(2) + p1.cos() * p2.cos() * (dl * half).sin().powi(2);
    F::lit(2.0 * EARTH_RADIUS_KM) * h.sqrt().min(F::one()).asin()
}

pub fn geodesic_matrix<F: Scalar>(points: &[LatLon<F>]) -> SquareMatrix<F> {
    let n = points.len();
    let rows: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| geodesic_distance(points[i.min(j)], points[i.max(j)])).collect())
        .collect();
    SquareMatrix::from_rows(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<F> {
    pub k: usize,
    pub centroids: Vec<LatLon<F>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared coordinate distances.
    pub inertia: F,
    /// Inertia after each Lloyd update.
    pub inertia_history: Vec<F>,
}

fn sq_dist<F: Scalar>(a: &LatLon<F>, b: &LatLon<F>) -> F {
    let (d0, d1) = (a[0] - b[0], a[1] - b[1]);
    d0 * d0 + d1 * d1
}

fn nearest<F: Scalar>(p: &LatLon<F>, centroids: &[LatLon<F>]) -> (usize, F) {
    let mut best = (0, sq_dist(p, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_seeds<F: Scalar>(points: &[LatLon<F>], k: usize, rng: &mut ChaCha8Rng) -> Vec<LatLon<F>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]]).as_f64()).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]).as_f64());
        }
    }
    chosen.into_iter().map(|i| points[i]).collect()
}

/// Lloyd's algorithm with k-means++ seeding, treating (lat, lon) as planar.
///
/// Assignment ties go to the lowest centroid index. A cluster left empty
/// takes the point farthest from its current centroid.
pub fn kmeans<F: Scalar>(points: &[LatLon<F>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeans_with_rng(points, k, max_iters, &mut rng)
}

fn kmeans_with_rng<F: Scalar>(
    points: &[LatLon<F>],
    k: usize,
    max_iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<KMeansResult<F>> {
    let n = points.len();
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={n}")));
    }
    if max_iters < 1 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    let mut centroids = plus_plus_seeds(points, k, rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut inertia_history = Vec::new();

    for _ in 0..max_iters {
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        repair_empty(points, &mut next, &mut centroids, k);
        if next == labels {
            break;
        }
        labels = next;
        let mut sums = vec![[F::zero(); 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l][0] = sums[l][0] + p[0];
            sums[l][1] = sums[l][1] + p[1];
            counts[l] += 1;
        }
        for ((c, s), &m) in centroids.iter_mut().zip(&sums).zip(&counts) {
            let m = F::lit(m as f64);
            *c = [s[0] / m, s[1] / m];
        }
        inertia_history.push(inertia(points, &labels, &centroids));
    }
    let inertia = *inertia_history.last().expect("at least one iteration");
    Ok(KMeansResult {
        k,
        centroids,
        labels,
        inertia,
        inertia_history,
    })
}

fn repair_empty<F: Scalar>(points: &[LatLon<F>], labels: &mut [usize], centroids: &mut [LatLon<F>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far: Option<(usize, F)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[labels[i]]);
            if far.is_none_or(|(_, b)| d > b) {
                far = Some((i, d));
            }
        }
        let Some((i, _)) = far else { return };
        labels[i] = empty;
        centroids[empty] = points[i];
    }
}

fn inertia<F: Scalar>(points: &[LatLon<F>], labels: &[usize], centroids: &[LatLon<F>]) -> F {
    points
        .iter()
        .zip(labels)
        .fold(F::zero(), |acc, (p, &l)| acc + sq_dist(p, &centroids[l]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElbowResult<F> {
    pub selected_k: usize,
    /// `(k, best inertia)` over the whole range.
    pub curve: Vec<(usize, F)>,
    /// Best run for each k, aligned with `curve`.
    pub runs: Vec<KMeansResult<F>>,
}

impl<F: Scalar> ElbowResult<F> {
    pub fn selected(&self) -> &KMeansResult<F> {
        let idx = self.curve.iter().position(|&(k, _)| k == self.selected_k).expect("selected k in curve");
        &self.runs[idx]
    }
}

/// Best of [`ELBOW_RESTARTS`] seeded runs, chosen by (inertia, restart index).
pub fn best_of_restarts<F: Scalar>(points: &[LatLon<F>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult<F>> {
    let runs: Vec<KMeansResult<F>> = (0..ELBOW_RESTARTS)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((k * ELBOW_RESTARTS + r) as u64);
            kmeans_with_rng(points, k, max_iters, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.inertia < runs[best].inertia {
            best = r;
        }
    }
    Ok(runs.into_iter().nth(best).expect("non-empty"))
}

/// Picks K maximizing `I(k-1) - 2 I(k) + I(k+1)` over interior k of `k_range`.
pub fn elbow_select<F: Scalar>(points: &[LatLon<F>], k_range: RangeInclusive<usize>, seed: u64) -> Result<ElbowResult<F>> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 1 || hi < lo + 2 {
        return Err(Error::InvalidParameter(format!(
            "elbow range {lo}..={hi} must start at 1 or more and hold at least 3 values"
        )));
    }
    if hi > points.len() {
        return Err(Error::InvalidParameter(format!(
            "elbow range reaches k = {hi} but there are {} points",
            points.len()
        )));
    }
    let runs: Vec<KMeansResult<F>> = k_range
        .map(|k| best_of_restarts(points, k, seed, DEFAULT_MAX_ITERS))
        .collect::<Result<_>>()?;
    let curve: Vec<(usize, F)> = runs.iter().map(|r| (r.k, r.inertia)).collect();
    let mut selected = (lo + 1, F::neg_infinity());
    for w in curve.windows(3) {
        let bend = w[0].1 - F::lit(2.0) * w[1].1 + w[2].1;
        if bend > selected.1 {
            selected = (w[1].0, bend);
        }
    }
    Ok(ElbowResult {
        selected_k: selected.0,
        curve,
        runs,
    })
}
