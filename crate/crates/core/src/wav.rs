//! Minimal RIFF/WAVE reader and writer.
//!
//! Supports the two encodings the pipeline consumes: 16-bit integer PCM and
//! 32-bit IEEE float, mono or stereo. Stereo is averaged down to mono and
//! 16-bit samples are scaled by 1/32768. No resampling is performed; a clip
//! whose rate differs from the expected one is flagged, not converted.

use crate::error::WavError;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Sample rate the rest of the pipeline is configured for.
pub const EXPECTED_SAMPLE_RATE: u32 = 16_000;

/// Decoded mono waveform.
#[derive(Debug, Clone)]
pub struct Waveform {
    /// Mono samples in [-1, 1].
    pub samples: Vec<f32>,
    /// Sample rate from the file header, in Hz.
    pub sample_rate: u32,
    /// `samples.len() / sample_rate`.
    pub duration_s: f64,
    /// Set when the header rate differs from [`EXPECTED_SAMPLE_RATE`].
    pub rate_warning: bool,
}

impl Waveform {
    pub fn from_samples(samples: Vec<f32>, sample_rate: u32) -> Self {
        let duration_s = samples.len() as f64 / sample_rate as f64;
        Waveform {
            samples,
            sample_rate,
            duration_s,
            rate_warning: sample_rate != EXPECTED_SAMPLE_RATE,
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WavError> {
        if self.pos + n > self.buf.len() {
            return Err(WavError::Truncated(format!(
                "expected {n} bytes for {what}, {} left",
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, WavError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Read a RIFF/WAVE file into a mono [`Waveform`].
pub fn load_wav(path: &Path) -> Result<Waveform, WavError> {
    let bytes = fs::read(path)?;
    decode_wav(&bytes)
}

/// Decode an in-memory RIFF/WAVE byte stream.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform, WavError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "RIFF tag").map_err(|_| WavError::NotRiffWave)? != b"RIFF" {
        return Err(WavError::NotRiffWave);
    }
    r.u32("RIFF size")?;
    if r.take(4, "WAVE tag").map_err(|_| WavError::NotRiffWave)? != b"WAVE" {
        return Err(WavError::NotRiffWave);
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format tag, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    while r.pos < r.buf.len() {
        let id: [u8; 4] = r.take(4, "chunk id")?.try_into().unwrap();
        let size = r.u32("chunk size")? as usize;
        let body = r.take(size, "chunk body")?;
        match &id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(WavError::Truncated("fmt chunk shorter than 16 bytes".into()));
                }
                let tag = u16::from_le_bytes([body[0], body[1]]);
                let channels = u16::from_le_bytes([body[2], body[3]]);
                let rate = u32::from_le_bytes([body[4], body[5], body[6], body[7]]);
                let bits = u16::from_le_bytes([body[14], body[15]]);
                fmt = Some((tag, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {} // skip ancillary chunks (LIST, fact, ...)
        }
        // Chunks are word-aligned; odd sizes are followed by a pad byte.
        if size % 2 == 1 && r.pos < r.buf.len() {
            r.pos += 1;
        }
    }

    let (tag, channels, rate, bits) =
        fmt.ok_or_else(|| WavError::Truncated("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| WavError::Truncated("missing data chunk".into()))?;
    if channels == 0 {
        return Err(WavError::Truncated("fmt declares zero channels".into()));
    }

    let per_frame;
    let decode: fn(&[u8]) -> f32;
    match (tag, bits) {
        (1, 16) => {
            per_frame = 2usize;
            decode = |b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0;
        }
        (3, 32) => {
            per_frame = 4usize;
            decode = |b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
        (format_tag, bits) => return Err(WavError::UnsupportedCodec { format_tag, bits }),
    }

    let frame_bytes = per_frame * channels as usize;
    if data.len() % frame_bytes != 0 {
        return Err(WavError::Truncated(format!(
            "data chunk length {} is not a whole number of {}-byte frames",
            data.len(),
            frame_bytes
        )));
    }
    let n_frames = data.len() / frame_bytes;
    if n_frames == 0 {
        return Err(WavError::ZeroLength);
    }

    let mut samples = Vec::with_capacity(n_frames);
    for frame in data.chunks_exact(frame_bytes) {
        let mut acc = 0.0f32;
        for ch in frame.chunks_exact(per_frame) {
            acc += decode(ch);
        }
        samples.push(acc / channels as f32);
    }
    Ok(Waveform::from_samples(samples, rate))
}

/// Write mono samples as 16-bit PCM. Samples are clamped to [-1, 1] and
/// scaled by 32768 with rounding.
pub fn write_wav_pcm16(path: &Path, samples: &[f32], sample_rate: u32) -> Result<(), WavError> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}
