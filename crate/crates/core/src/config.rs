//! Plain-text `key=value` pipeline configuration.
//!
//! ```text
//! # front-end
//! frame_len=512
//! hop=256
//! window=hamming
//! topology=path
//! operator=laplacian
//! n_ceps=60
//! log_floor=1e-10
//! append_log_energy=false
//! cmvn=false
//! # back-ends
//! fa_rank=10
//! fa_iters=20
//! gmm_components=512
//! gmm_iters=20
//! seed=0
//! ```
//!
//! Unknown keys, duplicate keys and invalid values are rejected.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::extract::FrontendConfig;
use crate::fsutil;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub frontend: FrontendConfig,
    pub fa_rank: usize,
    pub fa_iters: usize,
    pub gmm_components: usize,
    pub gmm_iters: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            frontend: FrontendConfig::default(),
            fa_rank: 10,
            fa_iters: 20,
            gmm_components: 512,
            gmm_iters: 20,
            seed: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "frame_len",
    "hop",
    "window",
    "topology",
    "operator",
    "n_ceps",
    "log_floor",
    "append_log_energy",
    "cmvn",
    "fa_rank",
    "fa_iters",
    "gmm_components",
    "gmm_iters",
    "seed",
];

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid value `{value}` for `{key}`")))
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected key=value")))?;
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!(
                    "line {line_no}: unknown key `{key}`"
                )));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key `{key}`"
                )));
            }
            cfg.set(key, value, line_no)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let fe = &mut self.frontend;
        match key {
            "frame_len" => fe.frame.frame_len = parse_value(key, value, line)?,
            "hop" => fe.frame.hop = parse_value(key, value, line)?,
            "window" => fe.frame.window = value.parse()?,
            "topology" => fe.topology = value.parse()?,
            "operator" => fe.operator = value.parse()?,
            "n_ceps" => fe.ceps.n_ceps = parse_value(key, value, line)?,
            "log_floor" => fe.ceps.log_floor = parse_value(key, value, line)?,
            "append_log_energy" => fe.ceps.append_log_energy = parse_value(key, value, line)?,
            "cmvn" => fe.cmvn = parse_value(key, value, line)?,
            "fa_rank" => self.fa_rank = parse_value(key, value, line)?,
            "fa_iters" => self.fa_iters = parse_value(key, value, line)?,
            "gmm_components" => self.gmm_components = parse_value(key, value, line)?,
            "gmm_iters" => self.gmm_iters = parse_value(key, value, line)?,
            "seed" => self.seed = parse_value(key, value, line)?,
            _ => unreachable!("key checked against KEYS"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        let fe = &self.frontend;
        fe.frame.validate().map_err(wrap)?;
        fe.ceps.validate().map_err(wrap)?;
        if fe.frame.frame_len < 2 {
            return Err(Error::Config("frame_len must be at least 2".into()));
        }
        if fe.ceps.n_ceps > fe.frame.frame_len {
            return Err(Error::Config(format!(
                "n_ceps {} exceeds frame_len {}",
                fe.ceps.n_ceps, fe.frame.frame_len
            )));
        }
        if self.fa_rank == 0 || self.fa_rank > fe.dim() {
            return Err(Error::Config(format!(
                "fa_rank must be in 1..={}",
                fe.dim()
            )));
        }
        if self.fa_iters == 0 || self.gmm_iters == 0 {
            return Err(Error::Config("iteration counts must be positive".into()));
        }
        if self.gmm_components == 0 {
            return Err(Error::Config("gmm_components must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = String::from_utf8(fsutil::read_all(path)?)
            .map_err(|_| Error::Config(format!("{}: not UTF-8", path.display())))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        let fe = &self.frontend;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("frame_len", &fe.frame.frame_len);
        kv("hop", &fe.frame.hop);
        kv("window", &fe.frame.window);
        kv("topology", &fe.topology);
        kv("operator", &fe.operator);
        kv("n_ceps", &fe.ceps.n_ceps);
        kv("log_floor", &fe.ceps.log_floor);
        kv("append_log_energy", &fe.ceps.append_log_energy);
        kv("cmvn", &fe.cmvn);
        kv("fa_rank", &self.fa_rank);
        kv("fa_iters", &self.fa_iters);
        kv("gmm_components", &self.gmm_components);
        kv("gmm_iters", &self.gmm_iters);
        kv("seed", &self.seed);
        s
    }
}
