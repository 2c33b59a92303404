//! Analysis of collections of daily streamflow series.
//!
//! The crate is generic over the floating-point [`Scalar`] (`f32` or `f64`);
//! the `*64` aliases at the crate root name the usual double-precision types.
//!
//! * [`ingest`]: load, validate and detrend station collections.
//! * [`temporal`]: L1-normalized trajectories, affinity matrices, hierarchical clustering.
//! * [`spectral`]: periodogram, Welch estimation, Whittle-deviance parameter search.
//! * [`alignment`]: governing process and per-station day offsets.
//! * [`evolution`]: rolling correlation eigen-diagnostics and rolling spectra.
//! * [`spatial`]: great-circle distances and K-means with elbow selection.
//! * [`synth`]: seeded synthetic collections with known ground truth.
//! * [`output`]: the CSV/JSON file formats written by the CLI.

pub mod alignment;
pub mod error;
pub mod evolution;
pub mod ingest;
pub mod matrix;
pub mod output;
pub mod scalar;
pub mod spatial;
pub mod spectral;
pub mod synth;
pub mod temporal;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Scalar;

pub type Collection64 = ingest::Collection<f64>;
pub type Collection32 = ingest::Collection<f32>;
pub type StationSeries64 = ingest::StationSeries<f64>;
pub type SquareMatrix64 = matrix::SquareMatrix<f64>;
pub type AffinityMatrix64 = temporal::AffinityMatrix<f64>;
pub type AffinityMatrix32 = temporal::AffinityMatrix<f32>;
pub type Dendrogram64 = temporal::Dendrogram<f64>;
pub type PowerSpectrum64 = spectral::PowerSpectrum<f64>;
pub type PowerSpectrum32 = spectral::PowerSpectrum<f32>;
pub type GoverningProcess64 = alignment::GoverningProcess<f64>;
pub type GoverningProcess32 = alignment::GoverningProcess<f32>;
pub type RollingEigenSeries64 = evolution::RollingEigenSeries<f64>;
pub type Spectrogram64 = evolution::Spectrogram<f64>;
pub type KMeansResult64 = spatial::KMeansResult<f64>;
