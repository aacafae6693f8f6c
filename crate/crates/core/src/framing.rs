//! Short-time framing and windowing.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hamming,
}

impl Window {
    /// Window coefficients of length `n` (symmetric Hamming).
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hamming if n == 1 => vec![1.0],
            Window::Hamming => (0..n)
                .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
                .collect(),
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangular" => Ok(Window::Rectangular),
            "hamming" => Ok(Window::Hamming),
            other => Err(Error::Config(format!("unknown window `{other}`"))),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Rectangular => "rectangular",
            Window::Hamming => "hamming",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len: 512,
            hop: 256,
            window: Window::Hamming,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_len == 0 || self.hop == 0 || self.hop > self.frame_len {
            return Err(Error::Invalid(format!(
                "frame config requires 0 < hop <= frame_len (frame_len={}, hop={})",
                self.frame_len, self.hop
            )));
        }
        Ok(())
    }

    /// Number of full frames that fit in `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }
}

/// Splits `sig` into windowed frames of `cfg.frame_len` samples. Frame `t`
/// starts at `t * hop`; a trailing partial frame is dropped.
pub fn frame_signal(sig: &AudioSignal, cfg: &FrameConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if sig.len() < cfg.frame_len {
        return Err(Error::TooShort {
            len: sig.len(),
            frame_len: cfg.frame_len,
        });
    }
    let window = cfg.window.coefficients(cfg.frame_len);
    Ok((0..cfg.num_frames(sig.len()))
        .map(|t| {
            let start = t * cfg.hop;
            sig.samples[start..start + cfg.frame_len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect())
}
