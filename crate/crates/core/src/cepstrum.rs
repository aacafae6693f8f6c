//! Cepstral coefficients over graph spectra, log energy and CMVN.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CepstralConfig {
    pub n_ceps: usize,
    /// Floor applied inside every logarithm.
    pub log_floor: f64,
    pub append_log_energy: bool,
}

impl Default for CepstralConfig {
    fn default() -> Self {
        Self {
            n_ceps: 60,
            log_floor: 1e-10,
            append_log_energy: false,
        }
    }
}

impl CepstralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ceps == 0 {
            return Err(Error::Invalid("n_ceps must be positive".into()));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return Err(Error::Invalid(
                "log_floor must be a positive finite value".into(),
            ));
        }
        Ok(())
    }
}

/// Truncated orthonormal DCT-II with the cosine table precomputed.
///
/// `out[z] = c(z) * sum_i x[i] cos((i + 1/2) pi z / n)` with
/// `c(0) = sqrt(1/n)` and `c(z) = sqrt(2/n)` otherwise.
#[derive(Debug, Clone)]
pub struct DctPlan {
    n_in: usize,
    n_out: usize,
    table: Vec<f64>,
}

impl DctPlan {
    pub fn new(n_in: usize, n_out: usize) -> Result<Self> {
        if n_in == 0 || n_out == 0 || n_out > n_in {
            return Err(Error::Invalid(format!(
                "DCT needs 0 < outputs <= inputs (inputs={n_in}, outputs={n_out})"
            )));
        }
        let nf = n_in as f64;
        let mut table = Vec::with_capacity(n_in * n_out);
        for z in 0..n_out {
            let c = if z == 0 {
                (1.0 / nf).sqrt()
            } else {
                (2.0 / nf).sqrt()
            };
            table.extend((0..n_in).map(|i| c * ((i as f64 + 0.5) * PI * z as f64 / nf).cos()));
        }
        Ok(Self { n_in, n_out, table })
    }

    pub fn input_len(&self) -> usize {
        self.n_in
    }

    pub fn output_len(&self) -> usize {
        self.n_out
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_in {
            return Err(Error::Dimension {
                expected: self.n_in,
                got: x.len(),
            });
        }
        Ok(self
            .table
            .chunks_exact(self.n_in)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Log power spectrum `ln(max(y^2, floor))`.
pub fn log_power(coeffs: &[f64], floor: f64) -> Vec<f64> {
    coeffs.iter().map(|y| (y * y).max(floor).ln()).collect()
}

/// Stacked spectrum for GFLC: `|y|` followed by `ln(max(|y|, floor))`,
/// then the log power of that length-`2N` vector.
pub fn stacked_log_power(coeffs: &[f64], floor: f64) -> Vec<f64> {
    let mags = coeffs.iter().map(|y| y.abs());
    let logs = coeffs.iter().map(|y| y.abs().max(floor).ln());
    let stacked: Vec<f64> = mags.chain(logs).collect();
    log_power(&stacked, floor)
}

pub fn gfcc_with_plan(coeffs: &[f64], plan: &DctPlan, floor: f64) -> Result<Vec<f64>> {
    plan.apply(&log_power(coeffs, floor))
}

pub fn gflc_with_plan(coeffs: &[f64], plan: &DctPlan, floor: f64) -> Result<Vec<f64>> {
    if plan.input_len() != 2 * coeffs.len() {
        return Err(Error::Dimension {
            expected: plan.input_len() / 2,
            got: coeffs.len(),
        });
    }
    plan.apply(&stacked_log_power(coeffs, floor))
}

/// Graph frequency cepstral coefficients of one transformed frame.
pub fn gfcc_frame(coeffs: &[f64], cfg: &CepstralConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let plan = DctPlan::new(coeffs.len(), cfg.n_ceps)?;
    gfcc_with_plan(coeffs, &plan, cfg.log_floor)
}

/// Graph frequency logarithmic coefficients of one transformed frame; the
/// DCT runs over the `2N`-long stacked spectrum.
pub fn gflc_frame(coeffs: &[f64], cfg: &CepstralConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let plan = DctPlan::new(2 * coeffs.len(), cfg.n_ceps)?;
    gflc_with_plan(coeffs, &plan, cfg.log_floor)
}

/// Appends `ln(max(sum y^2, floor))` of the time-domain frame.
pub fn append_log_energy(row: &mut Vec<f64>, frame: &[f64], floor: f64) {
    let energy: f64 = frame.iter().map(|y| y * y).sum();
    row.push(energy.max(floor).ln());
}

const CMVN_MIN_STD: f64 = 1e-12;

/// Per-dimension mean and variance normalization over the frames of one
/// utterance (population variance). Near-constant dimensions are only
/// mean-subtracted.
pub fn cmvn(m: &FeatureMatrix) -> FeatureMatrix {
    let t = m.n_frames();
    let d = m.dim();
    let mut out = m.clone();
    if t == 0 {
        return out;
    }
    let mut mean = vec![0.0; d];
    for row in m.rows() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|x| *x /= t as f64);
    let mut var = vec![0.0; d];
    for row in m.rows() {
        for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / t as f64).sqrt()).collect();
    for row in out.data_mut().chunks_exact_mut(d) {
        for ((v, mu), s) in row.iter_mut().zip(&mean).zip(&std) {
            *v -= mu;
            if *s >= CMVN_MIN_STD {
                *v /= s;
            }
        }
    }
    out
}
