//! Run configuration, read from a TOML file.
//!
//! Top-level keys select the data, output and thread count; one table per
//! analysis holds its knobs. Every key is optional and unknown keys are
//! rejected, so a typo fails before any work starts.
//!
//! ```toml
//! data_dir = "data"            # relative to this file
//! out_dir = "out"              # overridden by --out
//! threads = 8                  # overridden by --threads
//! start_date = "1980-01-01"
//! end_date = "2018-12-31"
//! gap_policy = "reject"        # or "linear"
//!
//! [temporal]
//! linkage = "average"          # single | complete
//! clusters = 4                 # optional dendrogram cut
//!
//! [spectral]
//! taper = "hann"               # or "rectangular"
//! segment_len = 3750           # used by `spectral`; `all` uses the optimum
//! overlap = 0.4
//! grid_segment_lengths = [250, 750, 1250, 1875, 2500, 3750, 4750, 7123]
//! grid_overlaps = [0.0, 0.2, 0.4, 0.5, 0.6, 0.75]
//!
//! [align]
//! max_iters = 50
//! tol = 1e-8
//! loss = "normalized"          # or "raw"
//!
//! [evolve]
//! window = 365
//! stride = 7
//! psd_window = 1460
//! psd_stride = 365
//! psd_segment = 365
//! psd_overlap = 0.5
//!
//! [spatial]
//! k_min = 1
//! k_max = 10
//! seed = 0
//!
//! [synth]
//! n = 20
//! days = 3650
//! template = "annual_pulse"    # sinusoid | white_noise | two_block
//! noise_std = 0.01
//! seed = 0
//! zero_fraction = 0.75         # share of stations left unshifted
//! offsets = [0, 12, 0]         # explicit offsets instead of sampling
//! start_date = "2000-01-01"
//! period = 365.0               # sinusoid template only
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use streamgov::alignment::{AlignmentConfig, LossMode};
use streamgov::evolution::{RollingPsdConfig, DEFAULT_STRIDE, DEFAULT_WINDOW};
use streamgov::ingest::{GapPolicy, IngestConfig};
use streamgov::spectral::{Taper, WelchGrid, WelchParams};
use streamgov::synth::{sample_offsets, SynthSpec, Template};
use streamgov::temporal::Linkage;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data_dir: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    threads: Option<usize>,
    start_date: Option<String>,
    end_date: Option<String>,
    gap_policy: Option<String>,
    #[serde(default)]
    temporal: RawTemporal,
    #[serde(default)]
    spectral: RawSpectral,
    #[serde(default)]
    align: RawAlign,
    #[serde(default)]
    evolve: RawEvolve,
    #[serde(default)]
    spatial: RawSpatial,
    #[serde(default)]
    synth: RawSynth,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemporal {
    linkage: Option<String>,
    clusters: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectral {
    taper: Option<String>,
    segment_len: Option<usize>,
    overlap: Option<f64>,
    grid_segment_lengths: Option<Vec<usize>>,
    grid_overlaps: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlign {
    max_iters: Option<usize>,
    tol: Option<f64>,
    loss: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvolve {
    window: Option<usize>,
    stride: Option<usize>,
    psd_window: Option<usize>,
    psd_stride: Option<usize>,
    psd_segment: Option<usize>,
    psd_overlap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpatial {
    k_min: Option<usize>,
    k_max: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynth {
    n: Option<usize>,
    days: Option<usize>,
    template: Option<String>,
    noise_std: Option<f64>,
    seed: Option<u64>,
    zero_fraction: Option<f64>,
    offsets: Option<Vec<usize>>,
    start_date: Option<String>,
    period: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TemporalConfig {
    pub linkage: Linkage,
    pub clusters: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SpectralConfig {
    pub taper: Taper,
    pub params: WelchParams,
    pub grid: WelchGrid,
}

#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub window: usize,
    pub stride: usize,
    pub psd: RollingPsdConfig,
}

#[derive(Debug, Clone)]
pub struct SpatialConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
}

/// Fully parsed and checked configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub ingest: IngestConfig,
    pub temporal: TemporalConfig,
    pub spectral: SpectralConfig,
    pub align: AlignmentConfig,
    pub evolve: EvolveConfig,
    pub spatial: SpatialConfig,
    pub synth: SynthSpec,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_date(key: &str, s: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| config_err(format!("{key} = {s:?} is not an ISO-8601 date: {e}")))
}

fn parse_enum<T: std::str::FromStr<Err = String>>(key: &str, v: Option<&str>) -> Result<Option<T>, CliError> {
    v.map(|s| s.parse::<T>().map_err(|e| config_err(format!("{key}: {e}")))).transpose()
}

impl RunConfig {
    /// Reads `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = fs::read(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let cfg = Self::parse(text, base)?;
        Ok((cfg, bytes))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;

        let ingest = IngestConfig {
            start_date: raw.start_date.as_deref().map(|s| parse_date("start_date", s)).transpose()?,
            end_date: raw.end_date.as_deref().map(|s| parse_date("end_date", s)).transpose()?,
            gap_policy: parse_enum::<GapPolicy>("gap_policy", raw.gap_policy.as_deref())?.unwrap_or_default(),
        };
        if let (Some(a), Some(b)) = (ingest.start_date, ingest.end_date) {
            if b < a {
                return Err(config_err(format!("end_date {b} precedes start_date {a}")));
            }
        }
        if raw.threads == Some(0) {
            return Err(config_err("threads must be at least 1"));
        }

        let temporal = TemporalConfig {
            linkage: parse_enum("temporal.linkage", raw.temporal.linkage.as_deref())?.unwrap_or_default(),
            clusters: raw.temporal.clusters,
        };
        if temporal.clusters == Some(0) {
            return Err(config_err("temporal.clusters must be at least 1"));
        }

        let default_grid = WelchGrid::default();
        let spectral = SpectralConfig {
            taper: parse_enum("spectral.taper", raw.spectral.taper.as_deref())?.unwrap_or_default(),
            params: WelchParams::new(
                raw.spectral.segment_len.unwrap_or(3750),
                raw.spectral.overlap.unwrap_or(0.4),
            )
            .map_err(|e| config_err(format!("spectral: {e}")))?,
            grid: WelchGrid {
                segment_lengths: raw.spectral.grid_segment_lengths.unwrap_or(default_grid.segment_lengths),
                overlaps: raw.spectral.grid_overlaps.unwrap_or(default_grid.overlaps),
            },
        };
        if spectral.grid.candidates().is_empty() {
            return Err(config_err("spectral grid is empty"));
        }
        for p in spectral.grid.candidates() {
            p.validate().map_err(|e| config_err(format!("spectral grid: {e}")))?;
        }

        let defaults = AlignmentConfig::default();
        let align = AlignmentConfig {
            max_iters: raw.align.max_iters.unwrap_or(defaults.max_iters),
            tol: raw.align.tol.unwrap_or(defaults.tol),
            mode: parse_enum::<LossMode>("align.loss", raw.align.loss.as_deref())?.unwrap_or_default(),
        };
        align.validate().map_err(|e| config_err(format!("align: {e}")))?;

        let psd_defaults = RollingPsdConfig::default();
        let evolve = EvolveConfig {
            window: raw.evolve.window.unwrap_or(DEFAULT_WINDOW),
            stride: raw.evolve.stride.unwrap_or(DEFAULT_STRIDE),
            psd: RollingPsdConfig {
                window_len: raw.evolve.psd_window.unwrap_or(psd_defaults.window_len),
                stride: raw.evolve.psd_stride.unwrap_or(psd_defaults.stride),
                welch: WelchParams::new(
                    raw.evolve.psd_segment.unwrap_or(psd_defaults.welch.segment_len),
                    raw.evolve.psd_overlap.unwrap_or(psd_defaults.welch.overlap),
                )
                .map_err(|e| config_err(format!("evolve: {e}")))?,
                taper: spectral.taper,
            },
        };
        if evolve.window < 2 || evolve.stride < 1 || evolve.psd.stride < 1 {
            return Err(config_err("evolve: window must be at least 2 and strides at least 1"));
        }
        if evolve.psd.welch.segment_len > evolve.psd.window_len {
            return Err(config_err("evolve: psd_segment exceeds psd_window"));
        }

        let spatial = SpatialConfig {
            k_min: raw.spatial.k_min.unwrap_or(1),
            k_max: raw.spatial.k_max.unwrap_or(10),
            seed: raw.spatial.seed.unwrap_or(0),
        };
        if spatial.k_min < 1 || spatial.k_max < spatial.k_min + 2 {
            return Err(config_err(format!(
                "spatial: k range {}..={} must start at 1 or more and hold at least 3 values",
                spatial.k_min, spatial.k_max
            )));
        }

        let synth = parse_synth(raw.synth)?;

        Ok(Self {
            data_dir: raw.data_dir.map(|p| base.join(p)),
            out_dir: raw.out_dir.map(|p| base.join(p)),
            threads: raw.threads,
            ingest,
            temporal,
            spectral,
            align,
            evolve,
            spatial,
            synth,
        })
    }
}

fn parse_synth(raw: RawSynth) -> Result<SynthSpec, CliError> {
    let n = raw.n.unwrap_or(20);
    let seed = raw.seed.unwrap_or(0);
    let template = parse_enum::<Template>("synth.template", raw.template.as_deref())?.unwrap_or(Template::AnnualPulse);
    let offsets = match raw.offsets {
        Some(o) => o,
        None => sample_offsets(n, raw.zero_fraction.unwrap_or(0.75), seed)
            .map_err(|e| config_err(format!("synth: {e}")))?,
    };
    let mut spec = SynthSpec::new(n, raw.days.unwrap_or(3650), template, seed)
        .with_offsets(offsets)
        .with_noise(raw.noise_std.unwrap_or(0.01));
    if let Some(p) = raw.period {
        spec.period = p;
    }
    if let Some(d) = raw.start_date.as_deref() {
        spec.start_date = parse_date("synth.start_date", d)?;
    }
    spec.validate().map_err(|e| config_err(format!("synth: {e}")))?;
    Ok(spec)
}
