//! Subcommand implementations. Each returns after writing its files into the
//! output directory; the caller adds the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use log::{info, warn};
use serde_json::json;
use streamgov::alignment::{estimate_governing_process, summarize_offsets, GoverningProcess};
use streamgov::evolution::{aligned_view, rolling_eigen_series, rolling_psd};
use streamgov::ingest::{load_collection, write_collection, Collection};
use streamgov::output;
use streamgov::spatial::{elbow_select, geodesic_distance, geodesic_matrix, LatLon};
use streamgov::spectral::{optimize_welch_params, spectral_affinity_from_spectra, welch_spectra, WelchParams};
use streamgov::synth::generate;
use streamgov::temporal::{cut_dendrogram, hierarchical_cluster, normalize_l1, temporal_distance, to_affinity, AffinityMatrix, Domain};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    IngestCheck,
    Temporal,
    Spectral,
    OptimizeWelch,
    Align,
    Evolve,
    Spatial,
    Synth,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::IngestCheck => "ingest-check",
            Command::Temporal => "temporal",
            Command::Spectral => "spectral",
            Command::OptimizeWelch => "optimize-welch",
            Command::Align => "align",
            Command::Evolve => "evolve",
            Command::Spatial => "spatial",
            Command::Synth => "synth",
            Command::All => "all",
        }
    }
}

/// Output directory plus the relative paths written so far.
pub struct Outputs {
    pub root: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(root: PathBuf) -> Self {
        Self { root, files: Vec::new() }
    }

    fn path(&mut self, rel: &str) -> PathBuf {
        self.files.push(rel.to_string());
        self.root.join(rel)
    }
}

type Data = Collection<f64>;

pub fn run(cmd: Command, cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    if cmd == Command::Synth {
        return synth(cfg, out);
    }
    let data = load(cfg)?;
    check_against_data(cmd, cfg, &data)?;
    match cmd {
        Command::IngestCheck => ingest_check(&data, out),
        Command::Temporal => temporal(cfg, &data, out),
        Command::Spectral => spectral(cfg, &data, cfg.spectral.params, out),
        Command::OptimizeWelch => optimize(cfg, &data, out).map(drop),
        Command::Align => align(cfg, &data, out).map(drop),
        Command::Evolve => evolve(cfg, &data, None, out),
        Command::Spatial => spatial(cfg, &data, out),
        Command::All => {
            ingest_check(&data, out)?;
            temporal(cfg, &data, out)?;
            let selected = optimize(cfg, &data, out)?;
            spectral(cfg, &data, selected, out)?;
            let process = align(cfg, &data, out)?;
            evolve(cfg, &data, Some(&process), out)?;
            spatial(cfg, &data, out)
        }
        Command::Synth => unreachable!(),
    }
}

fn load(cfg: &RunConfig) -> Result<Data, CliError> {
    let dir = cfg
        .data_dir
        .as_deref()
        .ok_or_else(|| CliError::Config("data_dir is required for this subcommand".into()))?;
    let data = load_collection::<f64>(dir, &cfg.ingest)?;
    info!("loaded {} stations x {} days from {}", data.len(), data.days(), dir.display());
    Ok(data)
}

/// Parameter checks that need the collection's size, run before any analysis.
fn check_against_data(cmd: Command, cfg: &RunConfig, data: &Data) -> Result<(), CliError> {
    let (n, days) = (data.len(), data.days());
    let uses = |c: Command| cmd == c || cmd == Command::All;
    let fail = |msg: String| Err(CliError::Config(msg));
    if uses(Command::Temporal) {
        if let Some(k) = cfg.temporal.clusters {
            if k > n {
                return fail(format!("temporal.clusters = {k} exceeds {n} stations"));
            }
        }
    }
    if uses(Command::OptimizeWelch) {
        cfg.spectral.grid.validate(days).map_err(|e| CliError::Config(e.to_string()))?;
    }
    if cmd == Command::Spectral && cfg.spectral.params.segment_len > days {
        return fail(format!(
            "spectral.segment_len = {} exceeds series length {days}",
            cfg.spectral.params.segment_len
        ));
    }
    if uses(Command::Evolve) {
        if cfg.evolve.window > days || cfg.evolve.psd.window_len > days {
            return fail(format!(
                "evolve windows {} / {} exceed series length {days}",
                cfg.evolve.window, cfg.evolve.psd.window_len
            ));
        }
    }
    if uses(Command::Spatial) && cfg.spatial.k_max > n {
        return fail(format!("spatial.k_max = {} exceeds {n} stations", cfg.spatial.k_max));
    }
    Ok(())
}

fn ingest_check(data: &Data, out: &mut Outputs) -> Result<(), CliError> {
    let summary = json!({
        "stations": data.len(),
        "days": data.days(),
        "start_date": data.start_date().to_string(),
        "end_date": data.end_date().to_string(),
        "station_ids": data.ids(),
    });
    output::write_json(&out.path("ingest_summary.json"), &summary)?;
    Ok(())
}

fn write_affinity(
    cfg: &RunConfig,
    prefix: &str,
    ids: &[&str],
    affinity: &AffinityMatrix<f64>,
    out: &mut Outputs,
) -> Result<(), CliError> {
    output::write_matrix(&out.path(&format!("{prefix}_affinity.csv")), ids, &affinity.values)?;
    output::write_affinity_norm(&out.path(&format!("{prefix}_affinity.json")), affinity)?;
    let dendrogram = hierarchical_cluster(affinity, cfg.temporal.linkage);
    output::write_linkage(&out.path(&format!("{prefix}_linkage.csv")), &dendrogram)?;
    if let Some(k) = cfg.temporal.clusters {
        let labels = cut_dendrogram(&dendrogram, k)?;
        output::write_labels(&out.path(&format!("{prefix}_clusters.csv")), ids, &labels)?;
    }
    Ok(())
}

fn temporal(cfg: &RunConfig, data: &Data, out: &mut Outputs) -> Result<(), CliError> {
    let trajectories = normalize_l1(data)?;
    let affinity = to_affinity(&temporal_distance(&trajectories), Domain::Temporal)?;
    info!("temporal affinity norm {:.4}", affinity.norm);
    write_affinity(cfg, "temporal", &data.ids(), &affinity, out)
}

fn spectral(cfg: &RunConfig, data: &Data, params: WelchParams, out: &mut Outputs) -> Result<(), CliError> {
    let ids = data.ids();
    let spectra = welch_spectra(data, &params, cfg.spectral.taper)?;
    for (id, s) in ids.iter().zip(&spectra) {
        output::write_spectrum(&out.path(&format!("spectra/{id}.csv")), s)?;
    }
    let affinity = spectral_affinity_from_spectra(&ids, &spectra)?;
    info!("spectral affinity norm {:.4} at S = {}, omega = {}", affinity.norm, params.segment_len, params.overlap);
    write_affinity(cfg, "spectral", &ids, &affinity, out)
}

fn optimize(cfg: &RunConfig, data: &Data, out: &mut Outputs) -> Result<WelchParams, CliError> {
    let opt = optimize_welch_params(data, &cfg.spectral.grid, cfg.spectral.taper)?;
    info!("selected S = {}, omega = {}", opt.selected.segment_len, opt.selected.overlap);
    output::write_optimization(&out.path("welch_optimization.json"), &opt)?;
    Ok(opt.selected)
}

fn estimate(cfg: &RunConfig, data: &Data) -> Result<GoverningProcess<f64>, CliError> {
    let process = estimate_governing_process(data, &cfg.align)?;
    if !process.converged {
        warn!("alignment stopped after {} iterations without converging", process.iterations());
    }
    Ok(process)
}

fn align(cfg: &RunConfig, data: &Data, out: &mut Outputs) -> Result<GoverningProcess<f64>, CliError> {
    let process = estimate(cfg, data)?;
    let ids = data.ids();
    output::write_governing(&out.path("governing.csv"), &process.g)?;
    output::write_offsets(&out.path("offsets.csv"), &ids, &process.offsets)?;
    output::write_offsets_by_state(&out.path("offsets_by_state.csv"), &summarize_offsets(&process, data)?)?;
    output::write_loss_history(&out.path("loss_history.csv"), &process.loss_history)?;
    Ok(process)
}

fn evolve(cfg: &RunConfig, data: &Data, process: Option<&GoverningProcess<f64>>, out: &mut Outputs) -> Result<(), CliError> {
    let owned;
    let process = match process {
        Some(p) => p,
        None => {
            owned = estimate(cfg, data)?;
            &owned
        }
    };
    let ids = data.ids();
    let (w, stride) = (cfg.evolve.window, cfg.evolve.stride);

    let raw = rolling_eigen_series(data, w, stride)?;
    output::write_lambda1(&out.path("lambda1.csv"), &raw)?;
    output::write_eigvec1(&out.path("eigvec1.csv"), &ids, &raw)?;

    let view = aligned_view(data, &process.offsets)?;
    let aligned = if view.days() >= w {
        let a = rolling_eigen_series(&view, w, stride)?;
        output::write_lambda1(&out.path("lambda1_aligned.csv"), &a)?;
        output::write_eigvec1(&out.path("eigvec1_aligned.csv"), &ids, &a)?;
        Some(a.coeff_variance)
    } else {
        warn!("aligned view has {} days, fewer than the window {w}; skipping the aligned rerun", view.days());
        None
    };
    output::write_coeff_variance(&out.path("coeff_variance.json"), raw.coeff_variance, aligned)?;

    let spectrogram = rolling_psd(&process.g, &cfg.evolve.psd)?;
    output::write_spectrogram(&out.path("spectrogram.csv"), &spectrogram)?;
    Ok(())
}

fn spatial(cfg: &RunConfig, data: &Data, out: &mut Outputs) -> Result<(), CliError> {
    let ids = data.ids();
    let points: Vec<LatLon<f64>> = data
        .stations()
        .iter()
        .map(|s| [s.meta.latitude, s.meta.longitude])
        .collect();
    output::write_matrix(&out.path("geodesic_distances.csv"), &ids, &geodesic_matrix(&points))?;

    let elbow = elbow_select(&points, cfg.spatial.k_min..=cfg.spatial.k_max, cfg.spatial.seed)?;
    info!("elbow selected K = {}", elbow.selected_k);
    output::write_elbow(&out.path("elbow.csv"), &elbow.curve)?;
    let best = elbow.selected();
    output::write_clusters(&out.path("clusters.csv"), &ids, &best.labels, &points)?;

    // Mean great-circle distance between members of each pair of clusters.
    let k = best.k;
    let mut sums = vec![vec![(0.0f64, 0usize); k]; k];
    for (i, &a) in best.labels.iter().enumerate() {
        for (j, &b) in best.labels.iter().enumerate() {
            if i != j {
                let cell = &mut sums[a][b];
                cell.0 += geodesic_distance(points[i], points[j]);
                cell.1 += 1;
            }
        }
    }
    output::write_csv(
        &out.path("cluster_distances.csv"),
        &["cluster_a", "cluster_b", "mean_km"],
        (0..k).flat_map(|a| {
            let sums = &sums;
            (0..k).map(move |b| {
                let (s, c) = sums[a][b];
                let mean = if c > 0 { output::format_number(s / c as f64) } else { "NA".into() };
                vec![a.to_string(), b.to_string(), mean]
            })
        }),
    )?;
    output::write_json(
        &out.path("spatial_summary.json"),
        &json!({ "selected_k": elbow.selected_k, "inertia": best.inertia }),
    )?;
    Ok(())
}

fn synth(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let s = generate::<f64>(&cfg.synth)?;
    write_collection(&out.root, &s.collection)?;
    out.files.push(streamgov::ingest::METADATA_FILE.to_string());
    for id in s.collection.ids() {
        out.files.push(format!("{}/{id}.csv", streamgov::ingest::FLOW_DIR));
    }
    output::write_truth(&out.path("truth.json"), &s.truth)?;
    Ok(())
}

/// Rejects an output directory equal to or inside the input directory.
/// `synth` reads no input, so it may write straight into `data_dir`.
pub fn check_output_location(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let Some(data) = cfg.data_dir.as_deref().filter(|_| cmd != Command::Synth) else {
        return Ok(());
    };
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let (data, out) = (abs(data), abs(out));
    if out.starts_with(&data) {
        return Err(CliError::Config(format!(
            "output directory {} lies inside the input directory {}",
            out.display(),
            data.display()
        )));
    }
    Ok(())
}

/// Hex SHA-256 digests keyed by relative path.
pub fn file_digests(root: &Path, files: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    files
        .iter()
        .map(|rel| {
            let path = root.join(rel);
            let bytes = std::fs::read(&path).map_err(|e| streamgov::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            Ok((rel.clone(), crate::sha256_hex(&bytes)))
        })
        .collect()
}
