//! End-to-end orchestration: feature extraction with optional device
//! transform, FA training on parallel pairs, GMM training and scoring.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::audio::{self, AudioSignal};
use crate::cepstrum::cmvn;
use crate::config::PipelineConfig;
use crate::dtw;
use crate::error::{Error, Result};
use crate::extract::Extractor;
use crate::fa::{self, FaModel, FaTrainConfig, FaTraining, ParallelPair};
use crate::features::{FeatureKind, FeatureMatrix};
use crate::gmm::{self, GmmModel};
use crate::metrics::{self, EvalResult};
use crate::protocol::{Label, ProtocolEntry};
use crate::seed;

/// Order-preserving map, parallel when the `cli` feature pulls in rayon.
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "cli")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "cli"))]
    {
        items.iter().map(f).collect()
    }
}

/// Features of `kind` for one utterance. Device kinds need `fa_model`;
/// the device transform runs on pre-CMVN features and CMVN (if enabled)
/// is applied last.
pub fn extract_utterance(
    extractor: &Extractor,
    sig: &AudioSignal,
    kind: FeatureKind,
    fa_model: Option<&FaModel>,
) -> Result<FeatureMatrix> {
    if !kind.is_device() {
        return extractor.extract(sig, kind);
    }
    let model = fa_model.ok_or_else(|| Error::Invalid(format!("{kind} requires an FA model")))?;
    let raw = extractor.extract_raw(sig, kind.base())?;
    let dev = fa::extract_device_feature(&raw, model)?;
    Ok(if extractor.config().cmvn {
        cmvn(&dev)
    } else {
        dev
    })
}

/// `(genuine, replay)` utterance ids linked by a shared `pair_id`. Every
/// spoof entry is paired with the genuine entry of its pair; entries that
/// cannot be paired are skipped with a warning.
pub fn protocol_pairs(entries: &[ProtocolEntry]) -> Vec<(String, String)> {
    let mut groups: BTreeMap<&str, (Vec<&str>, Vec<&str>)> = BTreeMap::new();
    for e in entries {
        match &e.pair_id {
            Some(p) => {
                let g = groups.entry(p.as_str()).or_default();
                match e.label {
                    Label::Genuine => g.0.push(&e.utterance_id),
                    Label::Spoof => g.1.push(&e.utterance_id),
                }
            }
            None => warn!("utterance `{}` has no pair id; skipped", e.utterance_id),
        }
    }
    // file order of the first member decides output order
    let mut order: Vec<(usize, &str)> = groups
        .keys()
        .map(|k| {
            let first = entries
                .iter()
                .position(|e| e.pair_id.as_deref() == Some(*k))
                .unwrap_or(usize::MAX);
            (first, *k)
        })
        .collect();
    order.sort_unstable();
    let mut out = Vec::new();
    for (_, key) in order {
        let (gen, spf) = &groups[key];
        match gen.as_slice() {
            [g] if !spf.is_empty() => {
                out.extend(spf.iter().map(|s| (g.to_string(), s.to_string())));
            }
            _ => warn!(
                "pair `{key}` has {} genuine and {} spoof utterances; skipped",
                gen.len(),
                spf.len()
            ),
        }
    }
    out
}

/// DTW-aligns each pair's raw base features and expands both to the path
/// length.
pub fn aligned_pairs(
    extractor: &Extractor,
    kind: FeatureKind,
    pairs: &[(AudioSignal, AudioSignal)],
) -> Result<Vec<ParallelPair>> {
    par_map(pairs, |(g, s)| {
        let gf = extractor.extract_raw(g, kind.base())?;
        let sf = extractor.extract_raw(s, kind.base())?;
        let path = dtw::dtw_align(&gf, &sf)?;
        let (ge, se) = dtw::expand_along_path(&gf, &sf, &path)?;
        ParallelPair::new(ge, se)
    })
    .into_iter()
    .collect()
}

pub fn fa_train_config(cfg: &PipelineConfig) -> FaTrainConfig {
    FaTrainConfig {
        rank: cfg.fa_rank,
        iters: cfg.fa_iters,
        seed: seed::derive(cfg.seed, "fa"),
    }
}

pub fn train_fa_on_signals(
    extractor: &Extractor,
    kind: FeatureKind,
    pairs: &[(AudioSignal, AudioSignal)],
    cfg: &PipelineConfig,
) -> Result<FaTraining> {
    if pairs.is_empty() {
        return Err(Error::Invalid("no usable parallel pairs".into()));
    }
    let aligned = aligned_pairs(extractor, kind, pairs)?;
    let training = fa::train_fa(&aligned, &fa_train_config(cfg))?;
    for (i, ll) in training.log_likelihood.iter().enumerate() {
        info!("fa iter {i} loglik {ll:.6}");
    }
    Ok(training)
}

/// Genuine and spoof GMMs from labelled utterance features.
pub fn train_class_gmms(
    labelled: &[(Label, FeatureMatrix)],
    cfg: &PipelineConfig,
) -> Result<(GmmModel, GmmModel)> {
    let train = |label: Label, name: &str| -> Result<GmmModel> {
        let mats: Vec<&FeatureMatrix> = labelled
            .iter()
            .filter(|(l, _)| *l == label)
            .map(|(_, m)| m)
            .collect();
        if mats.is_empty() {
            return Err(Error::Invalid(format!("no {label} utterances to train on")));
        }
        let pooled = gmm::pool(mats)?;
        let t = gmm::gmm_em_train(
            &pooled,
            cfg.gmm_components,
            cfg.gmm_iters,
            seed::derive(cfg.seed, &format!("gmm/{name}")),
        )?;
        info!(
            "gmm {name}: {} frames, final loglik/frame {:.6}",
            pooled.n_frames(),
            t.log_likelihood.last().copied().unwrap_or(f64::NAN) / pooled.n_frames() as f64
        );
        Ok(t.model)
    };
    Ok((
        train(Label::Genuine, "genuine")?,
        train(Label::Spoof, "spoof")?,
    ))
}

pub fn score_utterances(
    genuine: &GmmModel,
    spoof: &GmmModel,
    utts: &[(String, FeatureMatrix)],
) -> Result<Vec<(String, f64)>> {
    par_map(utts, |(id, m)| {
        Ok((id.clone(), gmm::score_llr(genuine, spoof, m)?))
    })
    .into_iter()
    .collect()
}

pub fn wav_path(dir: &Path, utterance_id: &str) -> PathBuf {
    dir.join(format!("{utterance_id}.wav"))
}

pub fn load_signals(dir: &Path, ids: &[String]) -> Result<Vec<AudioSignal>> {
    par_map(ids, |id| audio::read_wav(wav_path(dir, id)))
        .into_iter()
        .collect()
}

/// Outcome of one feature kind in [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct KindResult {
    pub kind: FeatureKind,
    pub eval: EvalResult,
    pub scores: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub results: Vec<KindResult>,
    pub fa_log_likelihood: BTreeMap<String, Vec<f64>>,
}

/// Train on `train` protocol utterances and evaluate on `eval`, for every
/// requested kind. Device kinds train their FA model on the train pairs.
pub fn run_experiment(
    audio_dir: &Path,
    train: &[ProtocolEntry],
    eval: &[ProtocolEntry],
    kinds: &[FeatureKind],
    cfg: &PipelineConfig,
) -> Result<Experiment> {
    let extractor = Extractor::new(&cfg.frontend)?;
    let train_ids: Vec<String> = train.iter().map(|e| e.utterance_id.clone()).collect();
    let eval_ids: Vec<String> = eval.iter().map(|e| e.utterance_id.clone()).collect();
    let train_sigs = load_signals(audio_dir, &train_ids)?;
    let eval_sigs = load_signals(audio_dir, &eval_ids)?;
    let index: BTreeMap<&str, &AudioSignal> = train_ids
        .iter()
        .map(String::as_str)
        .zip(&train_sigs)
        .collect();

    let mut results = Vec::new();
    let mut fa_ll = BTreeMap::new();
    for &kind in kinds {
        let fa_model = if kind.is_device() {
            let pairs: Vec<(AudioSignal, AudioSignal)> = protocol_pairs(train)
                .into_iter()
                .map(|(g, s)| (index[g.as_str()].clone(), index[s.as_str()].clone()))
                .collect();
            let t = train_fa_on_signals(&extractor, kind, &pairs, cfg)?;
            fa_ll.insert(kind.to_string(), t.log_likelihood);
            Some(t.model)
        } else {
            None
        };
        let feats = |sigs: &[AudioSignal]| -> Result<Vec<FeatureMatrix>> {
            par_map(sigs, |s| {
                extract_utterance(&extractor, s, kind, fa_model.as_ref())
            })
            .into_iter()
            .collect()
        };
        let train_feats = feats(&train_sigs)?;
        let labelled: Vec<(Label, FeatureMatrix)> =
            train.iter().map(|e| e.label).zip(train_feats).collect();
        let (g, s) = train_class_gmms(&labelled, cfg)?;
        let eval_feats: Vec<(String, FeatureMatrix)> =
            eval_ids.iter().cloned().zip(feats(&eval_sigs)?).collect();
        let scores = score_utterances(&g, &s, &eval_feats)?;
        let trials = metrics::join_with_protocol(&scores, eval)?;
        let er = metrics::compute_eer(&trials)?;
        info!("{kind}: {}", er.report());
        results.push(KindResult {
            kind,
            eval: er,
            scores,
        });
    }
    Ok(Experiment {
        results,
        fa_log_likelihood: fa_ll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_from_protocol() {
        let p = crate::protocol::parse_protocol_str(
            "g1 genuine p1\ns1 spoof p1\ng2 genuine p2\nlone spoof\ns3 spoof p3\ns2 spoof p2\ns2b spoof p2\n",
        )
        .unwrap();
        assert_eq!(
            protocol_pairs(&p),
            vec![
                ("g1".into(), "s1".into()),
                ("g2".into(), "s2".into()),
                ("g2".into(), "s2b".into()),
            ]
        );
    }
}
