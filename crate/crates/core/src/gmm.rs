//! Diagonal-covariance Gaussian mixture back-end.

use std::f64::consts::PI;
use std::path::Path;

use log::warn;
use rand::Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::fsutil;
use crate::seed;

pub const VARIANCE_FLOOR: f64 = 1e-6;
const MAX_INIT_FRAMES: usize = 100_000;
const KMEANS_ITERS: usize = 10;
const STARVATION_MASS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    dim: usize,
    weights: Vec<f64>,
    /// `K x D`, row-major.
    means: Vec<f64>,
    /// `K x D`, row-major.
    variances: Vec<f64>,
}

impl GmmModel {
    pub fn new(
        dim: usize,
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || dim == 0 {
            return Err(Error::Invalid(
                "mixture needs components and dimension".into(),
            ));
        }
        if means.len() != k * dim || variances.len() != k * dim {
            return Err(Error::Dimension {
                expected: k * dim,
                got: means.len().min(variances.len()),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Invalid("mixture weights must be positive".into()));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("mixture weights must sum to one".into()));
        }
        if variances
            .iter()
            .any(|v| !v.is_finite() || *v < VARIANCE_FLOOR)
            || means.iter().any(|m| !m.is_finite())
        {
            return Err(Error::Invalid(
                "means must be finite and variances floored".into(),
            ));
        }
        Ok(Self {
            dim,
            weights,
            means,
            variances,
        })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn variance(&self, k: usize) -> &[f64] {
        &self.variances[k * self.dim..(k + 1) * self.dim]
    }

    fn scorer(&self) -> Scorer<'_> {
        let consts = (0..self.n_components())
            .map(|k| {
                let log_det: f64 = self.variance(k).iter().map(|v| (2.0 * PI * v).ln()).sum();
                self.weights[k].ln() - 0.5 * log_det
            })
            .collect();
        let inv_var = self.variances.iter().map(|v| 1.0 / v).collect();
        Scorer {
            model: self,
            consts,
            inv_var,
        }
    }
}

/// Per-component log weight plus Gaussian normaliser, and inverse variances.
struct Scorer<'a> {
    model: &'a GmmModel,
    consts: Vec<f64>,
    inv_var: Vec<f64>,
}

impl Scorer<'_> {
    fn component_logs(&self, x: &[f64], out: &mut [f64]) {
        let d = self.model.dim;
        for (k, o) in out.iter_mut().enumerate() {
            let mean = &self.model.means[k * d..(k + 1) * d];
            let iv = &self.inv_var[k * d..(k + 1) * d];
            let mahal: f64 = x
                .iter()
                .zip(mean)
                .zip(iv)
                .map(|((xi, mi), ivi)| (xi - mi) * (xi - mi) * ivi)
                .sum();
            *o = self.consts[k] - 0.5 * mahal;
        }
    }

    fn log_likelihood(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.component_logs(x, scratch);
        log_sum_exp(scratch)
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn check_dim(model: &GmmModel, got: usize) -> Result<()> {
    if got != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            got,
        });
    }
    Ok(())
}

/// `log sum_k w_k N(x; mean_k, diag var_k)` via log-sum-exp.
pub fn gmm_log_likelihood(model: &GmmModel, frame: &[f64]) -> Result<f64> {
    check_dim(model, frame.len())?;
    let mut scratch = vec![0.0; model.n_components()];
    Ok(model.scorer().log_likelihood(frame, &mut scratch))
}

/// Posterior component probabilities for one frame.
pub fn responsibilities(model: &GmmModel, frame: &[f64]) -> Result<Vec<f64>> {
    check_dim(model, frame.len())?;
    let mut logs = vec![0.0; model.n_components()];
    model.scorer().component_logs(frame, &mut logs);
    let lse = log_sum_exp(&logs);
    Ok(logs.iter().map(|l| (l - lse).exp()).collect())
}

/// Stacks the rows of several matrices into one pooled matrix.
pub fn pool<'a, I>(mats: I) -> Result<FeatureMatrix>
where
    I: IntoIterator<Item = &'a FeatureMatrix>,
{
    let mut it = mats.into_iter().peekable();
    let first = it
        .peek()
        .ok_or_else(|| Error::Invalid("nothing to pool".into()))?;
    let (kind, dim) = (first.kind(), first.dim());
    let mut data = Vec::new();
    for m in it {
        if m.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: m.dim(),
            });
        }
        data.extend_from_slice(m.as_slice());
    }
    FeatureMatrix::new(kind, dim, data)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &[f64], dim: usize) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

fn global_variance(data: &FeatureMatrix) -> Vec<f64> {
    let d = data.dim();
    let t = data.n_frames() as f64;
    let mut mean = vec![0.0; d];
    for r in data.rows() {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= t);
    let mut var = vec![0.0; d];
    for r in data.rows() {
        for ((acc, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    var.iter().map(|v| (v / t).max(VARIANCE_FLOOR)).collect()
}

/// k-means++ seeding and a few Lloyd passes on a seeded subsample.
pub fn gmm_init(data: &FeatureMatrix, k: usize, seed: u64) -> Result<GmmModel> {
    let n = data.n_frames();
    if k == 0 {
        return Err(Error::Invalid("need at least one component".into()));
    }
    if n < k {
        return Err(Error::Invalid(format!(
            "{n} frames cannot initialise {k} components"
        )));
    }
    let d = data.dim();
    let mut rng = seed::rng(seed, "gmm/init");
    let idx: Vec<usize> = if n > MAX_INIT_FRAMES {
        let mut v = rand::seq::index::sample(&mut rng, n, MAX_INIT_FRAMES).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..n).collect()
    };
    let sub: Vec<&[f64]> = idx.iter().map(|&i| data.row(i)).collect();

    let mut centers = Vec::with_capacity(k * d);
    centers.extend_from_slice(sub[rng.random_range(0..sub.len())]);
    let mut dist: Vec<f64> = sub.iter().map(|x| sq_dist(x, &centers[..d])).collect();
    while centers.len() < k * d {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = sub.len() - 1;
            for (i, w) in dist.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..sub.len())
        };
        let c = sub[pick].to_vec();
        for (di, x) in dist.iter_mut().zip(&sub) {
            *di = di.min(sq_dist(x, &c));
        }
        centers.extend_from_slice(&c);
    }

    let mut assign = vec![0usize; sub.len()];
    for _ in 0..KMEANS_ITERS {
        let mut changed = false;
        for (a, x) in assign.iter_mut().zip(&sub) {
            let best = nearest(x, &centers, d);
            changed |= *a != best;
            *a = best;
        }
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (&a, x) in assign.iter().zip(&sub) {
            counts[a] += 1;
            sums[a * d..(a + 1) * d]
                .iter_mut()
                .zip(*x)
                .for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..d {
                    centers[c * d + j] = sums[c * d + j] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for (a, x) in assign.iter_mut().zip(&sub) {
        *a = nearest(x, &centers, d);
    }

    let fallback = global_variance(data);
    let mut counts = vec![0usize; k];
    let mut means = vec![0.0; k * d];
    for (&a, x) in assign.iter().zip(&sub) {
        counts[a] += 1;
        means[a * d..(a + 1) * d]
            .iter_mut()
            .zip(*x)
            .for_each(|(s, v)| *s += v);
    }
    for c in 0..k {
        if counts[c] == 0 {
            means[c * d..(c + 1) * d].copy_from_slice(&centers[c * d..(c + 1) * d]);
        } else {
            means[c * d..(c + 1) * d]
                .iter_mut()
                .for_each(|m| *m /= counts[c] as f64);
        }
    }
    let mut vars = vec![0.0; k * d];
    for (&a, x) in assign.iter().zip(&sub) {
        for j in 0..d {
            let e = x[j] - means[a * d + j];
            vars[a * d + j] += e * e;
        }
    }
    for c in 0..k {
        for j in 0..d {
            vars[c * d + j] = if counts[c] == 0 {
                fallback[j]
            } else {
                (vars[c * d + j] / counts[c] as f64).max(VARIANCE_FLOOR)
            };
        }
    }
    // empty clusters keep one pseudo-frame of weight
    let denom: f64 = counts.iter().map(|&c| c.max(1) as f64).sum();
    let weights = counts.iter().map(|&c| c.max(1) as f64 / denom).collect();
    GmmModel::new(d, weights, means, vars)
}

#[derive(Debug, Clone)]
pub struct GmmTraining {
    pub model: GmmModel,
    /// Total data log-likelihood before each iteration and after the last.
    pub log_likelihood: Vec<f64>,
    /// Components re-seeded after starving.
    pub reinitialised: usize,
}

struct Accum {
    ll: f64,
    mass: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

fn e_pass(model: &GmmModel, data: &FeatureMatrix) -> Accum {
    let (k, d) = (model.n_components(), model.dim());
    let scorer = model.scorer();
    let mut acc = Accum {
        ll: 0.0,
        mass: vec![0.0; k],
        sum: vec![0.0; k * d],
        sum_sq: vec![0.0; k * d],
    };
    let mut logs = vec![0.0; k];
    for x in data.rows() {
        scorer.component_logs(x, &mut logs);
        let lse = log_sum_exp(&logs);
        acc.ll += lse;
        for (c, lc) in logs.iter().enumerate() {
            let r = (lc - lse).exp();
            if r == 0.0 {
                continue;
            }
            acc.mass[c] += r;
            let s = &mut acc.sum[c * d..(c + 1) * d];
            let s2 = &mut acc.sum_sq[c * d..(c + 1) * d];
            for j in 0..d {
                s[j] += r * x[j];
                s2[j] += r * x[j] * x[j];
            }
        }
    }
    acc
}

/// EM training from [`gmm_init`]. The variance floor is applied in every
/// M-step; a component whose responsibility mass falls below `1e-8` is
/// re-seeded on a random frame.
pub fn gmm_em_train(
    data: &FeatureMatrix,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<GmmTraining> {
    if iters < 1 {
        return Err(Error::Invalid("need at least one EM iteration".into()));
    }
    let mut model = gmm_init(data, k, seed)?;
    let d = data.dim();
    let n = data.n_frames() as f64;
    let fallback = global_variance(data);
    let mut rng = seed::rng(seed, "gmm/reseed");
    let mut history = Vec::with_capacity(iters + 1);
    let mut reinitialised = 0;
    for it in 0..=iters {
        let acc = e_pass(&model, data);
        history.push(acc.ll);
        if it == iters {
            break;
        }
        for c in 0..k {
            if acc.mass[c] < STARVATION_MASS {
                warn!("gmm component {c} starved at iteration {it}; re-seeding");
                reinitialised += 1;
                let frame = data.row(rng.random_range(0..data.n_frames()));
                model.means[c * d..(c + 1) * d].copy_from_slice(frame);
                model.variances[c * d..(c + 1) * d].copy_from_slice(&fallback);
                model.weights[c] = 1.0 / n;
                continue;
            }
            model.weights[c] = acc.mass[c] / n;
            for j in 0..d {
                let m = acc.sum[c * d + j] / acc.mass[c];
                let v = acc.sum_sq[c * d + j] / acc.mass[c] - m * m;
                model.means[c * d + j] = m;
                model.variances[c * d + j] = v.max(VARIANCE_FLOOR);
            }
        }
        let total: f64 = model.weights.iter().sum();
        model.weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(GmmTraining {
        model,
        log_likelihood: history,
        reinitialised,
    })
}

/// Frame-averaged log-likelihood ratio, genuine minus spoof.
pub fn score_llr(genuine: &GmmModel, spoof: &GmmModel, m: &FeatureMatrix) -> Result<f64> {
    check_dim(genuine, m.dim())?;
    check_dim(spoof, m.dim())?;
    if m.is_empty() {
        return Err(Error::Invalid("cannot score an empty utterance".into()));
    }
    let (sg, ss) = (genuine.scorer(), spoof.scorer());
    let mut bg = vec![0.0; genuine.n_components()];
    let mut bs = vec![0.0; spoof.n_components()];
    let total: f64 = m
        .rows()
        .map(|x| sg.log_likelihood(x, &mut bg) - ss.log_likelihood(x, &mut bs))
        .sum();
    Ok(total / m.n_frames() as f64)
}

const MAGIC: &[u8; 4] = b"GFGM";
const VERSION: u32 = 1;

/// `GFGM` layout: magic, `u32` version, `u32` K, `u32` D, then weights,
/// means and variances as little-endian `f64`.
pub fn encode_model(model: &GmmModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * (model.weights.len() * (1 + 2 * model.dim)));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.n_components() as u32).to_le_bytes());
    out.extend_from_slice(&(model.dim as u32).to_le_bytes());
    for v in model
        .weights
        .iter()
        .chain(&model.means)
        .chain(&model.variances)
    {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<GmmModel> {
    if bytes.len() < 16 {
        return Err(Error::Length {
            expected: 16,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad GMM model magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    if u32_at(4) as u32 != VERSION {
        return Err(Error::Format(format!(
            "unsupported GMM model version {}",
            u32_at(4)
        )));
    }
    let (k, d) = (u32_at(8), u32_at(12));
    let expected = 16 + 8 * (k + 2 * k * d);
    if bytes.len() != expected {
        return Err(Error::Length {
            expected,
            found: bytes.len(),
        });
    }
    let vals: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GmmModel::new(
        d,
        vals[..k].to_vec(),
        vals[k..k + k * d].to_vec(),
        vals[k + k * d..].to_vec(),
    )
    .map_err(|e| Error::Format(e.to_string()))
}

pub fn write_model(model: &GmmModel, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &encode_model(model))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<GmmModel> {
    decode_model(&fsutil::read_all(path.as_ref())?)
}
