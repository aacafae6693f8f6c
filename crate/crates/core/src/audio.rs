//! WAV ingestion and output.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;

/// Mono audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Invalid("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Sample encoding used by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::FormatError(msg) => Error::Format(format!("{}: {msg}", path.display())),
        hound::Error::UnfinishedSample => {
            Error::Format(format!("{}: truncated sample data", path.display()))
        }
        hound::Error::TooWide => Error::Unsupported(format!("{}: sample too wide", path.display())),
        hound::Error::Unsupported => {
            Error::Unsupported(format!("{}: unsupported WAV variant", path.display()))
        }
        hound::Error::InvalidSampleFormat => {
            Error::Unsupported(format!("{}: invalid sample format", path.display()))
        }
    }
}

/// Reads channel 0 of a PCM16 or float32 WAV file. Integer PCM is scaled
/// by `1/32768`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let bytes = fsutil::read_all(path)?;
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels.max(1));
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .step_by(channels)
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (fmt, bits) => {
            return Err(Error::Unsupported(format!(
                "{}: {bits}-bit {fmt:?} samples",
                path.display()
            )))
        }
    };
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::Format(format!(
            "{}: sample {i} is not finite",
            path.display()
        )));
    }
    AudioSignal::new(samples, spec.sample_rate)
}

/// Encodes a mono WAV image in memory. PCM16 rounds to nearest and clamps.
pub fn encode_wav(sig: &AudioSignal, encoding: WavEncoding) -> Result<Vec<u8>> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sig.sample_rate,
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => hound::SampleFormat::Int,
            WavEncoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut buf = Cursor::new(Vec::new());
    let fail = |e: hound::Error| Error::Format(format!("wav encode: {e}"));
    {
        let mut w = hound::WavWriter::new(&mut buf, spec).map_err(fail)?;
        for &s in &sig.samples {
            match encoding {
                WavEncoding::Pcm16 => {
                    let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    w.write_sample(v).map_err(fail)?;
                }
                WavEncoding::Float32 => w.write_sample(s as f32).map_err(fail)?,
            }
        }
        w.finalize().map_err(fail)?;
    }
    Ok(buf.into_inner())
}

pub fn write_wav(sig: &AudioSignal, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let bytes = encode_wav(sig, encoding)?;
    fsutil::write_atomic(path.as_ref(), &bytes)
}
