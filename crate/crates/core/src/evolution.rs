//! Time-varying correlation structure and rolling spectra.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{detrend, Collection, StationSeries};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;
use crate::spectral::{welch_psd, PowerSpectrum, Taper, WelchParams};

pub const DEFAULT_WINDOW: usize = 365;
pub const DEFAULT_STRIDE: usize = 7;

/// Pearson correlation of all stations over days `t - w + 1 ..= t` (1-based).
///
/// A station that is constant over the window gets correlation 0 with every
/// other station and 1 with itself.
pub fn rolling_correlation<F: Scalar>(collection: &Collection<F>, t: usize, w: usize) -> Result<SquareMatrix<F>> {
    if w < 2 || t < w || t > collection.days() {
        return Err(Error::InvalidParameter(format!(
            "window {w} ending at day {t} does not fit in {} days",
            collection.days()
        )));
    }
    let rows: Vec<&[F]> = collection.flows().map(|f| &f[t - w..t]).collect();
    let (m, degenerate) = correlation_matrix(&rows);
    for i in degenerate {
        log::warn!(
            "station {} is constant over days {}..={}; correlations set to 0",
            collection.stations()[i].id(),
            t - w + 1,
            t
        );
    }
    Ok(m)
}

/// Correlation matrix of equally long rows plus the indices of constant rows.
pub fn correlation_matrix<F: Scalar>(rows: &[&[F]]) -> (SquareMatrix<F>, Vec<usize>) {
    let n = rows.len();
    let len = rows.first().map_or(0, |r| r.len());
    let lf = F::lit(len as f64);
    let mut centered: Vec<Vec<F>> = Vec::with_capacity(n);
    let mut norms: Vec<Option<F>> = Vec::with_capacity(n);
    for r in rows {
        let mean = r.iter().copied().sum::<F>() / lf;
        let c: Vec<F> = r.iter().map(|&v| v - mean).collect();
        let ss: F = c.iter().map(|&v| v * v).sum();
        let scale = r.iter().fold(F::zero(), |a, &v| a.max(v.abs()));
        let tiny = lf * (F::lit(16.0) * F::epsilon() * scale).powi(2);
        norms.push(if ss > tiny { Some(ss.sqrt()) } else { None });
        centered.push(c);
    }
    let upper: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| match (norms[i], norms[j]) {
                    (Some(a), Some(b)) => {
                        let dot = centered[i]
                            .iter()
                            .zip(&centered[j])
                            .fold(F::zero(), |acc, (&x, &y)| acc + x * y);
                        (dot / (a * b)).max(-F::one()).min(F::one())
                    }
                    _ => F::zero(),
                })
                .collect()
        })
        .collect();
    let mut m = SquareMatrix::identity(n);
    for (i, row) in upper.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            m[(i, i + 1 + k)] = v;
            m[(i + 1 + k, i)] = v;
        }
    }
    let degenerate = (0..n).filter(|&i| norms[i].is_none()).collect();
    (m, degenerate)
}

/// Eigenvalues in descending order with matching unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen<F> {
    pub values: Vec<F>,
    /// `vectors[k]` belongs to `values[k]`; its largest-magnitude entry is positive.
    pub vectors: Vec<Vec<F>>,
}

pub fn eigen_decompose<F: Scalar>(matrix: &SquareMatrix<F>) -> Result<Eigen<F>> {
    let n = matrix.dim();
    let scale = matrix.as_slice().iter().fold(F::one(), |a, &v| a.max(v.abs()));
    if matrix.asymmetry() > F::lit(1e-10) * scale {
        return Err(Error::InvalidParameter("matrix is not symmetric".into()));
    }
    let (values, vectors) = F::symmetric_eigen(n, matrix.as_slice());
    let mut pairs: Vec<(F, Vec<F>)> = values.into_iter().zip(vectors).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let (values, vectors) = pairs
        .into_iter()
        .map(|(v, mut vec)| {
            let mut lead = 0;
            for (k, c) in vec.iter().enumerate() {
                if c.abs() > vec[lead].abs() {
                    lead = k;
                }
            }
            if vec.get(lead).is_some_and(|&c| c < F::zero()) {
                vec.iter_mut().for_each(|c| *c = -*c);
            }
            (v, vec)
        })
        .unzip();
    Ok(Eigen { values, vectors })
}

/// First-eigenpair diagnostics of rolling correlation matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingEigenSeries<F> {
    /// 1-based last day of each window.
    pub times: Vec<usize>,
    /// `lambda_1 / sum_k lambda_k` per window.
    pub lambda1_norm: Vec<F>,
    /// Sum of all eigenvalues per window; equals `n` for a correlation matrix.
    pub eigen_sum: Vec<F>,
    /// `|v_1|` coefficients per window, in station order.
    pub eigvec1_abs: Vec<Vec<F>>,
    /// Population variance of every stored `|v_1|` coefficient.
    pub coeff_variance: F,
}

pub fn rolling_eigen_series<F: Scalar>(collection: &Collection<F>, w: usize, stride: usize) -> Result<RollingEigenSeries<F>> {
    if stride < 1 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    if w < 2 || w > collection.days() {
        return Err(Error::InvalidParameter(format!(
            "window {w} does not fit in {} days",
            collection.days()
        )));
    }
    let times: Vec<usize> = (w..=collection.days()).step_by(stride).collect();
    let per_window: Vec<(F, F, Vec<F>)> = times
        .par_iter()
        .map(|&t| {
            let m = rolling_correlation(collection, t, w)?;
            let eig = eigen_decompose(&m)?;
            let sum: F = eig.values.iter().copied().sum();
            let first = eig.values[0];
            let v1: Vec<F> = eig.vectors[0].iter().map(|c| c.abs()).collect();
            Ok((first / sum, sum, v1))
        })
        .collect::<Result<_>>()?;

    let mut lambda1_norm = Vec::with_capacity(times.len());
    let mut eigen_sum = Vec::with_capacity(times.len());
    let mut eigvec1_abs = Vec::with_capacity(times.len());
    for (l, s, v) in per_window {
        lambda1_norm.push(l);
        eigen_sum.push(s);
        eigvec1_abs.push(v);
    }
    let coeff_variance = pooled_variance(&eigvec1_abs);
    Ok(RollingEigenSeries {
        times,
        lambda1_norm,
        eigen_sum,
        eigvec1_abs,
        coeff_variance,
    })
}

fn pooled_variance<F: Scalar>(rows: &[Vec<F>]) -> F {
    let count = rows.iter().map(Vec::len).sum::<usize>();
    if count == 0 {
        return F::zero();
    }
    let cf = F::lit(count as f64);
    let mean = rows.iter().flatten().copied().sum::<F>() / cf;
    rows.iter()
        .flatten()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<F>()
        / cf
}

/// Stations shifted by their offsets onto the common range `1..=T - max(phi)`.
pub fn aligned_view<F: Scalar>(collection: &Collection<F>, offsets: &[usize]) -> Result<Collection<F>> {
    if offsets.len() != collection.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} offsets for {} stations",
            offsets.len(),
            collection.len()
        )));
    }
    let max = offsets.iter().copied().max().unwrap_or(0);
    if max >= collection.days() {
        return Err(Error::InvalidParameter(format!(
            "offset {max} leaves no aligned days out of {}",
            collection.days()
        )));
    }
    let len = collection.days() - max;
    let stations = collection
        .stations()
        .iter()
        .zip(offsets)
        .map(|(s, &phi)| StationSeries {
            meta: s.meta.clone(),
            flow: s.flow[phi..phi + len].to_vec(),
        })
        .collect();
    Collection::new(stations, collection.start_date())
}

/// Rolling-window Welch spectra of a single series.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<F> {
    /// 1-based first day of each window.
    pub window_starts: Vec<usize>,
    pub window_len: usize,
    pub spectra: Vec<PowerSpectrum<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingPsdConfig {
    pub window_len: usize,
    pub stride: usize,
    pub welch: WelchParams,
    pub taper: Taper,
}

impl Default for RollingPsdConfig {
    fn default() -> Self {
        Self {
            window_len: 1460,
            stride: 365,
            welch: WelchParams {
                segment_len: 365,
                overlap: 0.5,
            },
            taper: Taper::Hann,
        }
    }
}

pub fn rolling_psd<F: Scalar>(g: &[F], config: &RollingPsdConfig) -> Result<Spectrogram<F>> {
    config.welch.validate()?;
    if config.stride < 1 {
        return Err(Error::InvalidParameter("window stride must be at least 1".into()));
    }
    if config.window_len > g.len() || config.welch.segment_len > config.window_len {
        return Err(Error::InvalidParameter(format!(
            "need segment {} <= window {} <= series length {}",
            config.welch.segment_len,
            config.window_len,
            g.len()
        )));
    }
    let starts: Vec<usize> = (0..=g.len() - config.window_len).step_by(config.stride).collect();
    let spectra = starts
        .par_iter()
        .map(|&s| {
            let x = detrend(&g[s..s + config.window_len]);
            welch_psd(&x, &config.welch, config.taper)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrogram {
        window_starts: starts.into_iter().map(|s| s + 1).collect(),
        window_len: config.window_len,
        spectra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{StationMeta, State};
    use chrono::NaiveDate;

    fn collection(rows: Vec<Vec<f64>>) -> Collection<f64> {
        let stations = rows
            .into_iter()
            .enumerate()
            .map(|(i, flow)| StationSeries {
                meta: StationMeta {
                    station_id: format!("s{i:02}"),
                    name: String::new(),
                    latitude: -30.0,
                    longitude: 140.0,
                    state: State::QLD,
                },
                flow,
            })
            .collect();
        Collection::new(stations, NaiveDate::from_ymd_opt(2000, 1, 1).unwrap()).unwrap()
    }

    fn wiggle(len: usize, phase: f64) -> Vec<f64> {
        (0..len)
            .map(|t| 10.0 + (t as f64 * 0.37 + phase).sin() + (t as f64 * 0.051).cos())
            .collect()
    }

    #[test]
    fn perfect_and_anti_correlation() {
        let a = wiggle(400, 0.0);
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        let c: Vec<f64> = a.iter().map(|v| 40.0 - v).collect();
        let col = collection(vec![a, b, c]);
        let m = rolling_correlation(&col, 365, 365).unwrap();
        assert!((m[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((m[(0, 2)] + 1.0).abs() < 1e-12);
        assert_eq!(m[(2, 2)], 1.0);
        assert!(rolling_correlation(&col, 364, 365).is_err());
        assert!(rolling_correlation(&col, 401, 365).is_err());
    }

    #[test]
    fn constant_window_is_zeroed() {
        let col = collection(vec![wiggle(50, 0.0), vec![3.3; 50], wiggle(50, 1.0)]);
        let m = rolling_correlation(&col, 50, 20).unwrap();
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
        assert_eq!(m[(1, 1)], 1.0);
        assert!(m[(0, 2)].abs() > 0.0);
    }

    #[test]
    fn eigen_closed_forms() {
        let e = eigen_decompose(&SquareMatrix::<f64>::identity(4)).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let ones = SquareMatrix::from_fn(3, |_, _| 1.0f64);
        let e = eigen_decompose(&ones).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!(e.values[1].abs() < 1e-12 && e.values[2].abs() < 1e-12);
        assert!(e.vectors[0].iter().all(|&c| (c - 1.0 / 3f64.sqrt()).abs() < 1e-12));
        let rho = 0.3f64;
        let m = SquareMatrix::from_rows(vec![vec![1.0, rho], vec![rho, 1.0]]);
        let e = eigen_decompose(&m).unwrap();
        assert!((e.values[0] - 1.3).abs() < 1e-12 && (e.values[1] - 0.7).abs() < 1e-12);
        let bad = SquareMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.1, 1.0]]);
        assert!(eigen_decompose(&bad).is_err());
    }

    #[test]
    fn sign_convention() {
        let m = SquareMatrix::from_rows(vec![vec![2.0f64, -1.0], vec![-1.0, 2.0]]);
        let e = eigen_decompose(&m).unwrap();
        for v in &e.vectors {
            let lead = v.iter().cloned().fold(0.0f64, |a, c| if c.abs() > a.abs() { c } else { a });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn identical_series_rank_one() {
        let a = wiggle(500, 0.0);
        let col = collection(vec![a.clone(), a.clone(), a]);
        let r = rolling_eigen_series(&col, 100, 50).unwrap();
        assert_eq!(r.times, vec![100, 150, 200, 250, 300, 350, 400, 450, 500]);
        for (l, s) in r.lambda1_norm.iter().zip(&r.eigen_sum) {
            assert!((l - 1.0).abs() < 1e-10);
            assert!((s - 3.0).abs() < 1e-10);
        }
        assert!(r.coeff_variance < 1e-20);
    }

    #[test]
    fn aligned_view_lengths() {
        let col = collection(vec![wiggle(100, 0.0), wiggle(100, 2.0)]);
        assert_eq!(aligned_view(&col, &[0, 0]).unwrap(), col);
        let v = aligned_view(&col, &[0, 5]).unwrap();
        assert_eq!(v.days(), 95);
        assert_eq!(v.flow(1), &col.flow(1)[5..]);
        assert_eq!(v.flow(0), &col.flow(0)[..95]);
        // offsets all 365 on the full record length
        assert_eq!(14246 - 365, 13881);
    }

    #[test]
    fn rolling_psd_stationary_and_regime_change() {
        let len = 365 * 12;
        let sine: Vec<f64> = (0..len)
            .map(|t| 5.0 + (2.0 * std::f64::consts::PI * t as f64 / 365.0).sin())
            .collect();
        let sg = rolling_psd(&sine, &RollingPsdConfig::default()).unwrap();
        let peaks: Vec<usize> = sg.spectra.iter().map(|s| s.argmax().unwrap()).collect();
        assert!(peaks.iter().all(|&p| p == peaks[0]));
        assert_eq!(peaks[0], 1);
        assert_eq!(sg.window_starts[..3], [1, 366, 731]);

        let half = len / 2;
        let change: Vec<f64> = (0..len)
            .map(|t| {
                let period = if t < half { 365.0 } else { 182.5 };
                5.0 + (2.0 * std::f64::consts::PI * t as f64 / period).sin()
            })
            .collect();
        let sg = rolling_psd(&change, &RollingPsdConfig::default()).unwrap();
        let first = sg.spectra.first().unwrap().argmax().unwrap();
        let last = sg.spectra.last().unwrap().argmax().unwrap();
        assert_eq!(first, 1);
        assert_eq!(last, 2);
    }
}
