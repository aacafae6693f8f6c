//! Feature matrices and the `GFAT` feature file format.
//!
//! Layout (little-endian): magic `GFAT`, `u32` version (1), `u8` kind,
//! `u32` frame count T, `u32` dimension D, then T*D `f32` values row-major.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Gfcc = 0,
    Gflc = 1,
    Gfdcc = 2,
    Gfldc = 3,
}

impl FeatureKind {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => FeatureKind::Gfcc,
            1 => FeatureKind::Gflc,
            2 => FeatureKind::Gfdcc,
            3 => FeatureKind::Gfldc,
            _ => return None,
        })
    }

    /// Device variant of a base kind; device kinds map to themselves.
    pub fn device_variant(self) -> Self {
        match self {
            FeatureKind::Gfcc | FeatureKind::Gfdcc => FeatureKind::Gfdcc,
            FeatureKind::Gflc | FeatureKind::Gfldc => FeatureKind::Gfldc,
        }
    }

    /// Base cepstral kind a device kind is computed from.
    pub fn base(self) -> Self {
        match self {
            FeatureKind::Gfcc | FeatureKind::Gfdcc => FeatureKind::Gfcc,
            FeatureKind::Gflc | FeatureKind::Gfldc => FeatureKind::Gflc,
        }
    }

    pub fn is_device(self) -> bool {
        matches!(self, FeatureKind::Gfdcc | FeatureKind::Gfldc)
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gfcc" => Ok(FeatureKind::Gfcc),
            "gflc" => Ok(FeatureKind::Gflc),
            "gfdcc" => Ok(FeatureKind::Gfdcc),
            "gfldc" => Ok(FeatureKind::Gfldc),
            other => Err(Error::Invalid(format!("unknown feature kind `{other}`"))),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Gfcc => "gfcc",
            FeatureKind::Gflc => "gflc",
            FeatureKind::Gfdcc => "gfdcc",
            FeatureKind::Gfldc => "gfldc",
        })
    }
}

/// A `T x D` sequence of per-frame feature vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    kind: FeatureKind,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(kind: FeatureKind, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 && !data.is_empty() {
            return Err(Error::Invalid("zero-dimensional matrix with data".into()));
        }
        if dim > 0 && !data.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite feature value at row {} col {}",
                i / dim,
                i % dim
            )));
        }
        Ok(Self { kind, dim, data })
    }

    pub fn from_rows(kind: FeatureKind, dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(kind, dim, data)
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: FeatureKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_frames(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on 0
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

const MAGIC: &[u8; 4] = b"GFAT";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 4 + 4;

/// Serializes to the `GFAT` layout; values are rounded to `f32`.
pub fn encode_features(m: &FeatureMatrix) -> Result<Vec<u8>> {
    let t = u32::try_from(m.n_frames()).map_err(|_| Error::Invalid("too many frames".into()))?;
    let d = u32::try_from(m.dim()).map_err(|_| Error::Invalid("dimension too large".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + m.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(m.kind as u8);
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    for &v in &m.data {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::Invalid(format!("value {v} overflows f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Length {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad feature file magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported feature file version {version}"
        )));
    }
    let kind = FeatureKind::from_code(bytes[8])
        .ok_or_else(|| Error::Format(format!("unknown feature kind code {}", bytes[8])))?;
    let t = u32_at(9) as usize;
    let d = u32_at(13) as usize;
    let expected = t
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Length {
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    if t > 0 && d == 0 {
        return Err(Error::Format(
            "nonzero frame count with zero dimension".into(),
        ));
    }
    FeatureMatrix::new(kind, d, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_features(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &encode_features(m)?)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    decode_features(&fsutil::read_all(path.as_ref())?)
}
