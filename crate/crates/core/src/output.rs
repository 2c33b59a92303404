//! File formats written by the command-line front end.
//!
//! CSV numbers are written with 17 significant digits so that reruns are
//! byte-comparable and values round-trip exactly through `f64`.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::alignment::StateOffsets;
use crate::error::{Error, Result};
use crate::evolution::{RollingEigenSeries, Spectrogram};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;
use crate::spatial::LatLon;
use crate::spectral::{PowerSpectrum, WelchOptimization};
use crate::synth::Truth;
use crate::temporal::{AffinityMatrix, Dendrogram};

/// Scientific notation with 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn num<F: Scalar>(v: F) -> String {
    format_number(v.as_f64())
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// `n x n` matrix under a header row of station ids.
pub fn write_matrix<F: Scalar>(path: &Path, ids: &[&str], m: &SquareMatrix<F>) -> Result<()> {
    write_csv(path, ids, m.rows().map(|r| r.iter().map(|&v| num(v)).collect::<Vec<_>>()))
}

/// `{"domain": "...", "nu": ...}`.
pub fn write_affinity_norm<F: Scalar>(path: &Path, affinity: &AffinityMatrix<F>) -> Result<()> {
    write_json(
        path,
        &json!({ "domain": affinity.domain.as_str(), "nu": affinity.norm.as_f64() }),
    )
}

/// Linkage table `step,cluster_a,cluster_b,height,size` with 1-based steps.
pub fn write_linkage<F: Scalar>(path: &Path, d: &Dendrogram<F>) -> Result<()> {
    write_csv(
        path,
        &["step", "cluster_a", "cluster_b", "height", "size"],
        d.merges.iter().enumerate().map(|(s, m)| {
            vec![
                (s + 1).to_string(),
                m.cluster_a.to_string(),
                m.cluster_b.to_string(),
                num(m.height),
                m.size.to_string(),
            ]
        }),
    )
}

pub fn write_labels(path: &Path, ids: &[&str], labels: &[usize]) -> Result<()> {
    write_csv(
        path,
        &["station_id", "label"],
        ids.iter().zip(labels).map(|(id, l)| vec![id.to_string(), l.to_string()]),
    )
}

pub fn write_spectrum<F: Scalar>(path: &Path, s: &PowerSpectrum<F>) -> Result<()> {
    write_csv(
        path,
        &["frequency", "power"],
        s.frequencies.iter().zip(&s.values).map(|(&f, &p)| vec![num(f), num(p)]),
    )
}

pub fn write_optimization<F: Scalar>(path: &Path, opt: &WelchOptimization<F>) -> Result<()> {
    let grid: Vec<_> = opt.evaluations.iter().map(|e| e.params).collect();
    let deviance: Vec<f64> = opt.evaluations.iter().map(|e| e.deviance.as_f64()).collect();
    write_json(
        path,
        &json!({ "grid": grid, "deviance": deviance, "selected": opt.selected }),
    )
}

/// `t,g` with 1-based days.
pub fn write_governing<F: Scalar>(path: &Path, g: &[F]) -> Result<()> {
    write_csv(
        path,
        &["t", "g"],
        g.iter().enumerate().map(|(t, &v)| vec![(t + 1).to_string(), num(v)]),
    )
}

pub fn write_offsets(path: &Path, ids: &[&str], offsets: &[usize]) -> Result<()> {
    write_csv(
        path,
        &["station_id", "phi"],
        ids.iter().zip(offsets).map(|(id, p)| vec![id.to_string(), p.to_string()]),
    )
}

/// Reads an `offsets.csv` back as `(station_id, phi)` pairs.
pub fn read_offsets(path: &Path) -> Result<Vec<(String, usize)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    rdr.deserialize::<(String, usize)>()
        .map(|r| r.map_err(|e| Error::csv(path, e)))
        .collect()
}

/// Per-state table; an absent median is written as `NA`.
pub fn write_offsets_by_state(path: &Path, rows: &[StateOffsets]) -> Result<()> {
    write_csv(
        path,
        &["state", "stations", "nonzero_offsets", "percent_nonzero", "median_nonzero_offset"],
        rows.iter().map(|r| {
            vec![
                r.state.to_string(),
                r.stations.to_string(),
                r.nonzero.to_string(),
                format_number(r.percent_nonzero),
                r.median_nonzero.map_or_else(|| "NA".to_string(), format_number),
            ]
        }),
    )
}

pub fn write_loss_history<F: Scalar>(path: &Path, losses: &[F]) -> Result<()> {
    write_csv(
        path,
        &["iteration", "loss"],
        losses.iter().enumerate().map(|(k, &v)| vec![(k + 1).to_string(), num(v)]),
    )
}

pub fn write_lambda1<F: Scalar>(path: &Path, r: &RollingEigenSeries<F>) -> Result<()> {
    write_csv(
        path,
        &["t", "lambda1_norm"],
        r.times.iter().zip(&r.lambda1_norm).map(|(t, &l)| vec![t.to_string(), num(l)]),
    )
}

/// Rows are evaluation days, columns station ids.
pub fn write_eigvec1<F: Scalar>(path: &Path, ids: &[&str], r: &RollingEigenSeries<F>) -> Result<()> {
    let mut header = vec!["t"];
    header.extend_from_slice(ids);
    write_csv(
        path,
        &header,
        r.times.iter().zip(&r.eigvec1_abs).map(|(t, v)| {
            std::iter::once(t.to_string())
                .chain(v.iter().map(|&c| num(c)))
                .collect::<Vec<_>>()
        }),
    )
}

pub fn write_coeff_variance<F: Scalar>(path: &Path, raw: F, aligned: Option<F>) -> Result<()> {
    write_json(
        path,
        &json!({ "raw": raw.as_f64(), "aligned": aligned.map(Scalar::as_f64) }),
    )
}

pub fn write_spectrogram<F: Scalar>(path: &Path, s: &Spectrogram<F>) -> Result<()> {
    write_csv(
        path,
        &["window_start", "frequency", "power"],
        s.window_starts.iter().zip(&s.spectra).flat_map(|(start, spec)| {
            spec.frequencies
                .iter()
                .zip(&spec.values)
                .map(move |(&f, &p)| vec![start.to_string(), num(f), num(p)])
        }),
    )
}

pub fn write_clusters<F: Scalar>(path: &Path, ids: &[&str], labels: &[usize], points: &[LatLon<F>]) -> Result<()> {
    write_csv(
        path,
        &["station_id", "label", "lat", "lon"],
        ids.iter().zip(labels).zip(points).map(|((id, l), p)| {
            vec![id.to_string(), l.to_string(), num(p[0]), num(p[1])]
        }),
    )
}

pub fn write_elbow<F: Scalar>(path: &Path, curve: &[(usize, F)]) -> Result<()> {
    write_csv(
        path,
        &["k", "inertia"],
        curve.iter().map(|&(k, v)| vec![k.to_string(), num(v)]),
    )
}

pub fn write_truth(path: &Path, truth: &Truth) -> Result<()> {
    write_json(path, truth)
}

pub fn read_truth(path: &Path) -> Result<Truth> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&body)?)
}
