//! Device-related linear transformation.
//!
//! Parallel genuine/replay utterances share one latent factor `h` per pair:
//! every frame of the pair is modelled as `phi = mu + F h + eps` with
//! `h ~ N(0, I)` and `eps ~ N(0, diag(sigma))`. Stacking the `K` frames of
//! a pair gives a factor-analysis model whose loading matrix repeats `F`
//! `K` times, so the posterior of `h` only needs `K` and the centred frame
//! sum. `F` and `sigma` are fitted by EM with `mu` held at the global mean.
//! Device features subtract the reconstruction `mu + F E[h]` from every
//! frame of an utterance.

use std::f64::consts::PI;
use std::path::Path;

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::fsutil;
use crate::seed;

pub const VARIANCE_FLOOR: f64 = 1e-6;
const INIT_LOADING_SCALE: f64 = 0.1;
const SINGULAR_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FaModel {
    pub mu: DVector<f64>,
    /// `D x Q` loading matrix.
    pub f: DMatrix<f64>,
    /// Diagonal residual variances.
    pub sigma: DVector<f64>,
}

impl FaModel {
    pub fn new(mu: DVector<f64>, f: DMatrix<f64>, sigma: DVector<f64>) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::Invalid("model dimension must be positive".into()));
        }
        if f.nrows() != d || sigma.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: if f.nrows() != d {
                    f.nrows()
                } else {
                    sigma.len()
                },
            });
        }
        if f.ncols() == 0 || f.ncols() > d {
            return Err(Error::Invalid(format!(
                "factor rank {} outside 1..={d}",
                f.ncols()
            )));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < VARIANCE_FLOOR) {
            return Err(Error::Invalid(
                "residual variances must be finite and floored".into(),
            ));
        }
        if mu.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("model parameters must be finite".into()));
        }
        Ok(Self { mu, f, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn rank(&self) -> usize {
        self.f.ncols()
    }

    /// `F^T diag(sigma)^-1`, `Q x D`.
    fn ft_sigma_inv(&self) -> DMatrix<f64> {
        let mut m = self.f.transpose();
        for (mut col, s) in m.column_iter_mut().zip(self.sigma.iter()) {
            col /= *s;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: DVector<f64>,
    /// `L^-1` with `L = I + K F^T sigma^-1 F`.
    pub cov: DMatrix<f64>,
}

impl Posterior {
    /// `E[h h^T] = L^-1 + E[h] E[h]^T`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        &self.cov + &self.mean * self.mean.transpose()
    }
}

/// Genuine utterance and its replayed counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPair {
    pub genuine: FeatureMatrix,
    pub replay: FeatureMatrix,
}

impl ParallelPair {
    pub fn new(genuine: FeatureMatrix, replay: FeatureMatrix) -> Result<Self> {
        if genuine.is_empty() || replay.is_empty() {
            return Err(Error::Invalid(
                "parallel pair members must be nonempty".into(),
            ));
        }
        if genuine.dim() != replay.dim() {
            return Err(Error::Dimension {
                expected: genuine.dim(),
                got: replay.dim(),
            });
        }
        Ok(Self { genuine, replay })
    }

    pub fn dim(&self) -> usize {
        self.genuine.dim()
    }

    /// Replay frames followed by genuine frames.
    pub fn stacked(&self) -> FeatureMatrix {
        let mut data = self.replay.as_slice().to_vec();
        data.extend_from_slice(self.genuine.as_slice());
        FeatureMatrix::new(self.genuine.kind(), self.dim(), data)
            .expect("members already validated")
    }
}

/// Zeroth, first and diagonal second order statistics of a stacked block
/// of frames, centred on `mu`.
#[derive(Debug, Clone)]
struct BlockStats {
    k: usize,
    sum: DVector<f64>,
    sum_sq: DVector<f64>,
}

impl BlockStats {
    fn collect(frames: &FeatureMatrix, mu: &DVector<f64>) -> Result<Self> {
        if frames.dim() != mu.len() {
            return Err(Error::Dimension {
                expected: mu.len(),
                got: frames.dim(),
            });
        }
        let d = mu.len();
        let mut sum = DVector::zeros(d);
        let mut sum_sq = DVector::zeros(d);
        for row in frames.rows() {
            for (i, v) in row.iter().enumerate() {
                let c = v - mu[i];
                sum[i] += c;
                sum_sq[i] += c * c;
            }
        }
        Ok(Self {
            k: frames.n_frames(),
            sum,
            sum_sq,
        })
    }
}

/// Posterior plus the log-determinant of `L` and `b^T L^-1 b`, the pieces
/// the marginal likelihood needs.
struct EStepOut {
    post: Posterior,
    log_det_l: f64,
    quad: f64,
}

/// Cached `F^T sigma^-1` and `F^T sigma^-1 F` for one model.
struct Precomp {
    ft_si: DMatrix<f64>,
    ft_si_f: DMatrix<f64>,
}

impl Precomp {
    fn new(model: &FaModel) -> Self {
        let ft_si = model.ft_sigma_inv();
        let ft_si_f = &ft_si * &model.f;
        Self { ft_si, ft_si_f }
    }
}

fn e_step_stats(k: usize, sum: &DVector<f64>, pre: &Precomp) -> Result<EStepOut> {
    let q = pre.ft_si_f.nrows();
    let l = DMatrix::identity(q, q) + &pre.ft_si_f * k as f64;
    let chol = Cholesky::new(l)
        .ok_or_else(|| Error::Numerical("posterior precision not positive definite".into()))?;
    let b = &pre.ft_si * sum;
    let mean = chol.solve(&b);
    let mut cov = chol.inverse();
    cov = (&cov + cov.transpose()) * 0.5;
    let log_det_l = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad = b.dot(&mean);
    Ok(EStepOut {
        post: Posterior { mean, cov },
        log_det_l,
        quad,
    })
}

/// Posterior of the shared factor given `K` stacked frames.
pub fn e_step(frames: &FeatureMatrix, model: &FaModel) -> Result<Posterior> {
    if frames.is_empty() {
        return Err(Error::Invalid("e-step needs at least one frame".into()));
    }
    let stats = BlockStats::collect(frames, &model.mu)?;
    Ok(e_step_stats(stats.k, &stats.sum, &Precomp::new(model))?.post)
}

fn block_log_likelihood(stats: &BlockStats, model: &FaModel, e: &EStepOut) -> f64 {
    let k = stats.k as f64;
    let d = model.dim() as f64;
    let log_det_sigma: f64 = model.sigma.iter().map(|s| s.ln()).sum();
    let mahal: f64 = stats
        .sum_sq
        .iter()
        .zip(model.sigma.iter())
        .map(|(s2, s)| s2 / s)
        .sum();
    -0.5 * (k * d * (2.0 * PI).ln() + e.log_det_l + k * log_det_sigma + mahal - e.quad)
}

/// Marginal log-likelihood of one stacked block under the model.
pub fn marginal_log_likelihood(frames: &FeatureMatrix, model: &FaModel) -> Result<f64> {
    let stats = BlockStats::collect(frames, &model.mu)?;
    let e = e_step_stats(stats.k, &stats.sum, &Precomp::new(model))?;
    Ok(block_log_likelihood(&stats, model, &e))
}

/// Frame-weighted mean over every frame of every matrix.
pub fn compute_global_mean<'a, I>(data: I) -> Result<DVector<f64>>
where
    I: IntoIterator<Item = &'a FeatureMatrix>,
{
    let mut sum: Option<DVector<f64>> = None;
    let mut count = 0usize;
    for m in data {
        if m.is_empty() {
            continue;
        }
        let acc = sum.get_or_insert_with(|| DVector::zeros(m.dim()));
        if acc.len() != m.dim() {
            return Err(Error::Dimension {
                expected: acc.len(),
                got: m.dim(),
            });
        }
        for row in m.rows() {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        count += m.n_frames();
    }
    match sum {
        Some(s) if count > 0 => Ok(s / count as f64),
        _ => Err(Error::Invalid("cannot average an empty corpus".into())),
    }
}

fn solve_spd_or_ridge(a: DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if let Some(c) = Cholesky::new(a.clone()) {
        return c.solve(rhs);
    }
    warn!("singular factor accumulator; adding {SINGULAR_RIDGE:e} ridge");
    let reg = a + DMatrix::identity(n, n) * SINGULAR_RIDGE;
    match Cholesky::new(reg.clone()) {
        Some(c) => c.solve(rhs),
        None => match reg.pseudo_inverse(1e-12) {
            Ok(p) => p * rhs,
            Err(_) => DMatrix::zeros(n, rhs.ncols()),
        },
    }
}

fn m_step_stats(
    stats: &[BlockStats],
    posts: &[Posterior],
    dim: usize,
    rank: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let mut cross = DMatrix::zeros(dim, rank);
    let mut acc = DMatrix::zeros(rank, rank);
    let mut total = 0usize;
    for (s, p) in stats.iter().zip(posts) {
        cross += &s.sum * p.mean.transpose();
        acc += p.second_moment() * s.k as f64;
        total += s.k;
    }
    // F_new^T = acc^-1 cross^T
    let f_new = solve_spd_or_ridge(acc, &cross.transpose()).transpose();
    let mut sigma = DVector::zeros(dim);
    for (s, p) in stats.iter().zip(posts) {
        let recon = &f_new * &p.mean;
        for d in 0..dim {
            sigma[d] += s.sum_sq[d] - recon[d] * s.sum[d];
        }
    }
    let sigma = sigma.map(|v: f64| (v / total as f64).max(VARIANCE_FLOOR));
    (f_new, sigma)
}

/// Maximum-likelihood update of `F` and `sigma` given posteriors computed
/// under the current model; `mu` is fixed.
pub fn m_step(
    pairs: &[(FeatureMatrix, Posterior)],
    mu: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let first = pairs
        .first()
        .ok_or_else(|| Error::Invalid("m-step needs at least one pair".into()))?;
    let rank = first.1.mean.len();
    let stats = pairs
        .iter()
        .map(|(m, _)| BlockStats::collect(m, mu))
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = pairs.iter().find(|(_, p)| p.mean.len() != rank) {
        return Err(Error::Dimension {
            expected: rank,
            got: p.1.mean.len(),
        });
    }
    let posts: Vec<Posterior> = pairs.iter().map(|(_, p)| p.clone()).collect();
    Ok(m_step_stats(&stats, &posts, mu.len(), rank))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaTrainConfig {
    pub rank: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for FaTrainConfig {
    fn default() -> Self {
        Self {
            rank: 10,
            iters: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FaTraining {
    pub model: FaModel,
    /// Total marginal log-likelihood before each iteration and after the
    /// last one (`iters + 1` values).
    pub log_likelihood: Vec<f64>,
}

/// Fits the device transformation on parallel pairs by EM.
pub fn train_fa(pairs: &[ParallelPair], cfg: &FaTrainConfig) -> Result<FaTraining> {
    if pairs.is_empty() {
        return Err(Error::Invalid("need at least one parallel pair".into()));
    }
    if cfg.iters < 1 {
        return Err(Error::Invalid("need at least one EM iteration".into()));
    }
    let dim = pairs[0].dim();
    if let Some(p) = pairs.iter().find(|p| p.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: p.dim(),
        });
    }
    if cfg.rank == 0 || cfg.rank > dim {
        return Err(Error::Invalid(format!(
            "factor rank {} outside 1..={dim}",
            cfg.rank
        )));
    }

    let stacked: Vec<FeatureMatrix> = pairs.iter().map(ParallelPair::stacked).collect();
    let mu = compute_global_mean(&stacked)?;
    let stats = stacked
        .iter()
        .map(|m| BlockStats::collect(m, &mu))
        .collect::<Result<Vec<_>>>()?;

    let total: usize = stats.iter().map(|s| s.k).sum();
    let sigma0 = stats
        .iter()
        .fold(DVector::zeros(dim), |acc, s| acc + &s.sum_sq)
        .map(|v| (v / total as f64).max(VARIANCE_FLOOR));
    let mut rng = seed::rng(cfg.seed, "fa/init");
    let f0 = DMatrix::from_fn(dim, cfg.rank, |_, _| {
        INIT_LOADING_SCALE * rng.sample::<f64, _>(StandardNormal)
    });
    let mut model = FaModel::new(mu, f0, sigma0)?;

    let mut history = Vec::with_capacity(cfg.iters + 1);
    for it in 0..=cfg.iters {
        let pre = Precomp::new(&model);
        let mut ll = 0.0;
        let mut posts = Vec::with_capacity(stats.len());
        for s in &stats {
            let e = e_step_stats(s.k, &s.sum, &pre)?;
            ll += block_log_likelihood(s, &model, &e);
            posts.push(e.post);
        }
        debug!("fa iter {it} loglik {ll}");
        history.push(ll);
        if it == cfg.iters {
            break;
        }
        let (f, sigma) = m_step_stats(&stats, &posts, dim, cfg.rank);
        model.f = f;
        model.sigma = sigma;
    }
    Ok(FaTraining {
        model,
        log_likelihood: history,
    })
}

/// Subtracts `mu + F E[h]` from every frame, where `E[h]` is the posterior
/// mean given all frames of this utterance.
pub fn extract_device_feature(m: &FeatureMatrix, model: &FaModel) -> Result<FeatureMatrix> {
    if m.dim() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: m.dim(),
        });
    }
    let kind = m.kind().device_variant();
    if m.is_empty() {
        return Ok(m.clone().with_kind(kind));
    }
    let post = e_step(m, model)?;
    let offset = &model.mu + &model.f * &post.mean;
    let mut data = m.as_slice().to_vec();
    for row in data.chunks_exact_mut(m.dim()) {
        for (v, o) in row.iter_mut().zip(offset.iter()) {
            *v -= o;
        }
    }
    FeatureMatrix::new(kind, m.dim(), data)
}

const MAGIC: &[u8; 4] = b"GFAM";
const VERSION: u32 = 1;

/// `GFAM` layout: magic, `u32` version, `u32` D, `u32` Q, then `mu`, `F`
/// (row-major) and `sigma` as little-endian `f64`.
pub fn encode_model(model: &FaModel) -> Vec<u8> {
    let (d, q) = (model.dim(), model.rank());
    let mut out = Vec::with_capacity(16 + 8 * (2 * d + d * q));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(q as u32).to_le_bytes());
    let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    model.mu.iter().for_each(|&v| put(v));
    for i in 0..d {
        for j in 0..q {
            put(model.f[(i, j)]);
        }
    }
    model.sigma.iter().for_each(|&v| put(v));
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<FaModel> {
    if bytes.len() < 16 {
        return Err(Error::Length {
            expected: 16,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad FA model magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    if u32_at(4) as u32 != VERSION {
        return Err(Error::Format(format!(
            "unsupported FA model version {}",
            u32_at(4)
        )));
    }
    let (d, q) = (u32_at(8), u32_at(12));
    let expected = 16 + 8 * (2 * d + d * q);
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
    let mu = DVector::from_column_slice(&vals[..d]);
    let f = DMatrix::from_row_slice(d, q, &vals[d..d + d * q]);
    let sigma = DVector::from_column_slice(&vals[d + d * q..]);
    FaModel::new(mu, f, sigma).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_model(model: &FaModel, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &encode_model(model))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<FaModel> {
    decode_model(&fsutil::read_all(path.as_ref())?)
}
