//! Graph-frequency cepstral features for replay speech detection.
//!
//! The crate covers the whole countermeasure chain:
//!
//! * [`audio`], [`framing`], [`protocol`], [`features`]: WAV input, short-time
//!   framing, trial lists and the `GFAT` feature file format.
//! * [`graph`], [`cepstrum`], [`extract`]: graph Fourier transform of each
//!   frame and the GFCC / GFLC cepstra, optional log energy and CMVN.
//! * [`dtw`]: alignment of genuine and replayed feature sequences.
//! * [`fa`]: the device-related factor model trained on aligned pairs, and
//!   the GFDCC / GFLDC device features derived from it.
//! * [`gmm`], [`metrics`]: diagonal GMM back-end and EER evaluation.
//! * [`config`], [`synth`], [`pipeline`]: configuration files, a synthetic
//!   replay corpus generator and the end-to-end orchestration used by the
//!   `grd` command line tool.

pub mod audio;
pub mod cepstrum;
pub mod config;
pub mod dtw;
pub mod error;
pub mod extract;
pub mod fa;
pub mod features;
pub mod framing;
pub mod fsutil;
pub mod gmm;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod protocol;
pub mod seed;
pub mod synth;

pub use audio::AudioSignal;
pub use error::{Error, Result};
pub use extract::{Extractor, FrontendConfig};
pub use features::{FeatureKind, FeatureMatrix};
