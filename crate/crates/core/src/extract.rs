//! Frame -> graph transform -> cepstrum pipeline for one utterance.

use crate::audio::AudioSignal;
use crate::cepstrum::{self, CepstralConfig, DctPlan};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};
use crate::framing::{self, FrameConfig};
use crate::graph::{build_graph_basis, GftBasis, GraphSpec, Operator, Topology};

/// Everything needed to turn audio into GFCC/GFLC frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontendConfig {
    pub frame: FrameConfig,
    pub topology: Topology,
    pub operator: Operator,
    pub ceps: CepstralConfig,
    pub cmvn: bool,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            frame: FrameConfig::default(),
            topology: Topology::Path,
            operator: Operator::Laplacian,
            ceps: CepstralConfig::default(),
            cmvn: false,
        }
    }
}

impl FrontendConfig {
    pub fn graph_spec(&self) -> GraphSpec {
        GraphSpec::new(self.topology, self.frame.frame_len, self.operator)
    }

    /// Output dimension for a base kind.
    pub fn dim(&self) -> usize {
        self.ceps.n_ceps + usize::from(self.ceps.append_log_energy)
    }
}

/// Reusable extractor; the graph basis and DCT tables are built once.
#[derive(Debug, Clone)]
pub struct Extractor {
    cfg: FrontendConfig,
    basis: GftBasis,
    gfcc_plan: DctPlan,
    gflc_plan: DctPlan,
}

impl Extractor {
    pub fn new(cfg: &FrontendConfig) -> Result<Self> {
        cfg.frame.validate()?;
        cfg.ceps.validate()?;
        let n = cfg.frame.frame_len;
        if cfg.ceps.n_ceps > n {
            return Err(Error::Invalid(format!(
                "n_ceps {} exceeds frame length {n}",
                cfg.ceps.n_ceps
            )));
        }
        Ok(Self {
            cfg: *cfg,
            basis: build_graph_basis(&cfg.graph_spec())?,
            gfcc_plan: DctPlan::new(n, cfg.ceps.n_ceps)?,
            gflc_plan: DctPlan::new(2 * n, cfg.ceps.n_ceps)?,
        })
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &GftBasis {
        &self.basis
    }

    /// Graph spectra of every frame.
    pub fn spectra(&self, sig: &AudioSignal) -> Result<Vec<Vec<f64>>> {
        framing::frame_signal(sig, &self.cfg.frame)?
            .iter()
            .map(|f| self.basis.gft(f))
            .collect()
    }

    /// Cepstral features before CMVN; this is what the device transform
    /// is trained on and applied to.
    pub fn extract_raw(&self, sig: &AudioSignal, kind: FeatureKind) -> Result<FeatureMatrix> {
        let kind = kind.base();
        let floor = self.cfg.ceps.log_floor;
        let frames = framing::frame_signal(sig, &self.cfg.frame)?;
        let mut data = Vec::with_capacity(frames.len() * self.cfg.dim());
        for frame in &frames {
            let coeffs = self.basis.gft(frame)?;
            let mut row = match kind {
                FeatureKind::Gflc => cepstrum::gflc_with_plan(&coeffs, &self.gflc_plan, floor)?,
                _ => cepstrum::gfcc_with_plan(&coeffs, &self.gfcc_plan, floor)?,
            };
            if self.cfg.ceps.append_log_energy {
                cepstrum::append_log_energy(&mut row, frame, floor);
            }
            data.extend_from_slice(&row);
        }
        FeatureMatrix::new(kind, self.cfg.dim(), data)
    }

    /// Base features with the configured CMVN applied.
    pub fn extract(&self, sig: &AudioSignal, kind: FeatureKind) -> Result<FeatureMatrix> {
        let raw = self.extract_raw(sig, kind)?;
        Ok(if self.cfg.cmvn {
            cepstrum::cmvn(&raw)
        } else {
            raw
        })
    }
}

/// One-shot GFCC/GFLC extraction.
pub fn extract_features(
    sig: &AudioSignal,
    kind: FeatureKind,
    frame_cfg: &FrameConfig,
    graph_spec: &GraphSpec,
    ceps_cfg: &CepstralConfig,
    cmvn: bool,
) -> Result<FeatureMatrix> {
    if kind.is_device() {
        return Err(Error::Invalid(format!(
            "{kind} needs a device model; extract {} first",
            kind.base()
        )));
    }
    if graph_spec.size != frame_cfg.frame_len {
        return Err(Error::Dimension {
            expected: frame_cfg.frame_len,
            got: graph_spec.size,
        });
    }
    let cfg = FrontendConfig {
        frame: *frame_cfg,
        topology: graph_spec.topology,
        operator: graph_spec.operator,
        ceps: *ceps_cfg,
        cmvn,
    };
    Extractor::new(&cfg)?.extract(sig, kind)
}
