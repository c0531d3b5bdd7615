//! Binary container formats, all little-endian with a 4-byte magic and a
//! `u32` version:
//!
//! - `SEDF` feature dump: `n_mels: u32`, `n_frames: u32`, `frame_hop_s: f32`,
//!   then `n_mels * n_frames` f32 values row-major.
//! - `SEDW` weight container: `count: u32`, then per tensor a `u16` name
//!   length, UTF-8 name, `u8` rank, `u32` dims and the f32 payload.
//! - `SEDP` score dump: `n_frames: u32`, `n_classes: u32`,
//!   `frame_duration_s: f32`, the strong payload row-major, then the weak
//!   payload.
//!
//! Encode/decode round-trips are bitwise exact.

use crate::error::{ContainerError, Error, Result};
use crate::frontend::LogMelSpectrogram;
use crate::model::{FramePredictions, ModelWeights};
use crate::tensor::Tensor;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

pub const FEATURE_MAGIC: [u8; 4] = *b"SEDF";
pub const WEIGHTS_MAGIC: [u8; 4] = *b"SEDW";
pub const SCORES_MAGIC: [u8; 4] = *b"SEDP";
pub const FORMAT_VERSION: u32 = 1;

/// Write bytes through a temporary sibling file and rename into place, so a
/// crash never leaves a partial artifact and re-runs overwrite atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(e) => format!("{}.tmp", e.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> std::result::Result<&'a [u8], ContainerError> {
        if self.pos + n > self.buf.len() {
            return Err(ContainerError::Truncated(format!(
                "{what}: needed {n} bytes at offset {}, {} available",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, expected: [u8; 4]) -> std::result::Result<(), ContainerError> {
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(ContainerError::BadMagic {
                expected,
                found: got.try_into().unwrap(),
            });
        }
        Ok(())
    }

    fn version(&mut self) -> std::result::Result<(), ContainerError> {
        let v = self.u32("version")?;
        if v != FORMAT_VERSION {
            return Err(ContainerError::UnknownVersion(v));
        }
        Ok(())
    }

    fn u16(&mut self, what: &str) -> std::result::Result<u16, ContainerError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> std::result::Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> std::result::Result<u8, ContainerError> {
        Ok(self.take(1, what)?[0])
    }

    fn f32(&mut self, what: &str) -> std::result::Result<f32, ContainerError> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32_vec(&mut self, n: usize, what: &str) -> std::result::Result<Vec<f32>, ContainerError> {
        let raw = self.take(n * 4, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> std::result::Result<(), ContainerError> {
        if self.pos != self.buf.len() {
            return Err(ContainerError::Malformed(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for &v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

// ---- SEDF: feature dump ----

pub fn encode_features(mel: &LogMelSpectrogram<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + mel.values.len() * 4);
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(mel.n_mels() as u32).to_le_bytes());
    out.extend_from_slice(&(mel.n_frames() as u32).to_le_bytes());
    out.extend_from_slice(&(mel.frame_hop_s as f32).to_le_bytes());
    push_f32s(&mut out, mel.values.data());
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<LogMelSpectrogram<f32>> {
    let mut r = ByteReader::new(bytes);
    r.magic(FEATURE_MAGIC)?;
    r.version()?;
    let n_mels = r.u32("n_mels")? as usize;
    let n_frames = r.u32("n_frames")? as usize;
    let frame_hop_s = r.f32("frame_hop_s")? as f64;
    let data = r.f32_vec(n_mels * n_frames, "feature payload")?;
    r.finish()?;
    let values = Tensor::new(&[n_mels, n_frames], data)
        .map_err(|e| ContainerError::Malformed(e.to_string()))?;
    Ok(LogMelSpectrogram {
        values,
        frame_hop_s,
    })
}

pub fn write_features(path: &Path, mel: &LogMelSpectrogram<f32>) -> Result<()> {
    write_atomic(path, &encode_features(mel))
}

pub fn read_features(path: &Path) -> Result<LogMelSpectrogram<f32>> {
    decode_features(&fs::read(path)?)
}

// ---- SEDW: named weight container ----

pub fn encode_weights(weights: &ModelWeights<f32>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&WEIGHTS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(weights.len() as u32).to_le_bytes());
    for (name, tensor) in weights.iter() {
        if name.len() > u16::MAX as usize {
            return Err(Error::invalid("weights", format!("name `{name}` too long")));
        }
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(tensor.rank() as u8);
        for &d in tensor.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        push_f32s(&mut out, tensor.data());
    }
    Ok(out)
}

pub fn decode_weights(bytes: &[u8]) -> Result<ModelWeights<f32>> {
    let mut r = ByteReader::new(bytes);
    r.magic(WEIGHTS_MAGIC)?;
    r.version()?;
    let count = r.u32("tensor count")? as usize;
    let mut seen = BTreeSet::new();
    let mut weights = ModelWeights::new();
    for _ in 0..count {
        let name_len = r.u16("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| ContainerError::Malformed("name is not UTF-8".into()))?
            .to_string();
        if !seen.insert(name.clone()) {
            return Err(ContainerError::DuplicateName(name).into());
        }
        let rank = r.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        let mut elems = 1usize;
        for _ in 0..rank {
            let d = r.u32("dim")? as usize;
            elems = elems.saturating_mul(d);
            shape.push(d);
        }
        let data = r.f32_vec(elems, &format!("payload of `{name}`"))?;
        let tensor =
            Tensor::new(&shape, data).map_err(|e| ContainerError::Malformed(e.to_string()))?;
        weights.insert(name, tensor)?;
    }
    r.finish()?;
    Ok(weights)
}

pub fn save_weights(weights: &ModelWeights<f32>, path: &Path) -> Result<()> {
    write_atomic(path, &encode_weights(weights)?)
}

pub fn load_weights(path: &Path) -> Result<ModelWeights<f32>> {
    decode_weights(&fs::read(path)?)
}

// ---- SEDP: score dump ----

pub fn encode_scores(pred: &FramePredictions<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&SCORES_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(pred.n_frames() as u32).to_le_bytes());
    out.extend_from_slice(&(pred.n_classes() as u32).to_le_bytes());
    out.extend_from_slice(&(pred.frame_duration_s as f32).to_le_bytes());
    push_f32s(&mut out, pred.strong.data());
    push_f32s(&mut out, pred.weak.data());
    out
}

pub fn decode_scores(bytes: &[u8]) -> Result<FramePredictions<f32>> {
    let mut r = ByteReader::new(bytes);
    r.magic(SCORES_MAGIC)?;
    r.version()?;
    let n_frames = r.u32("n_frames")? as usize;
    let n_classes = r.u32("n_classes")? as usize;
    let frame_duration_s = r.f32("frame_duration_s")? as f64;
    let strong = r.f32_vec(n_frames * n_classes, "strong payload")?;
    let weak = r.f32_vec(n_classes, "weak payload")?;
    r.finish()?;
    Ok(FramePredictions {
        strong: Tensor::new(&[n_frames, n_classes], strong)
            .map_err(|e| ContainerError::Malformed(e.to_string()))?,
        weak: Tensor::new(&[n_classes], weak)
            .map_err(|e| ContainerError::Malformed(e.to_string()))?,
        frame_duration_s,
    })
}

pub fn write_scores(path: &Path, pred: &FramePredictions<f32>) -> Result<()> {
    write_atomic(path, &encode_scores(pred))
}

pub fn read_scores(path: &Path) -> Result<FramePredictions<f32>> {
    decode_scores(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::rng_from_seed;
    use crate::model::ModelConfig;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            channels: vec![2, 3],
            pooling: vec![(2, 2), (1, 2)],
            gru_hidden: 2,
            n_classes: 2,
            n_mels: 4,
            basis_count: 2,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn weights_round_trip_is_bitwise() {
        let mut rng = rng_from_seed(1);
        let w = ModelWeights::<f32>::random(&tiny_config(), &mut rng).unwrap();
        let bytes = encode_weights(&w).unwrap();
        let back = decode_weights(&bytes).unwrap();
        assert_eq!(back, w);
        // Re-encoding reproduces the byte stream exactly.
        assert_eq!(encode_weights(&back).unwrap(), bytes);
    }

    #[test]
    fn weights_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.sedw");
        let mut rng = rng_from_seed(2);
        let w = ModelWeights::<f32>::random(&tiny_config(), &mut rng).unwrap();
        save_weights(&w, &path).unwrap();
        assert_eq!(load_weights(&path).unwrap(), w);
    }

    #[test]
    fn single_tensor_header_layout() {
        let mut w = ModelWeights::<f32>::new();
        let payload: Vec<f32> = (0..18).map(|i| i as f32 * 0.5).collect();
        w.insert("b1.conv.w", Tensor::new(&[2, 1, 3, 3], payload.clone()).unwrap())
            .unwrap();
        let bytes = encode_weights(&w).unwrap();
        // magic(4) + version(4) + count(4) + name_len(2) + name(9) + rank(1)
        // + dims(4*4) = 40 bytes of header before the payload.
        assert_eq!(bytes.len(), 40 + 18 * 4);
        assert_eq!(&bytes[0..4], b"SEDW");
        assert_eq!(u16::from_le_bytes(bytes[12..14].try_into().unwrap()), 9);
        assert_eq!(&bytes[14..23], b"b1.conv.w");
        assert_eq!(bytes[23], 4);
        let dims: Vec<u32> = bytes[24..40]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(dims, vec![2, 1, 3, 3]);
        let first = f32::from_le_bytes(bytes[40..44].try_into().unwrap());
        assert_eq!(first, 0.0);
        let second = f32::from_le_bytes(bytes[44..48].try_into().unwrap());
        assert_eq!(second, 0.5);
    }

    #[test]
    fn weight_error_classes_are_distinct() {
        let mut rng = rng_from_seed(3);
        let w = ModelWeights::<f32>::random(&tiny_config(), &mut rng).unwrap();
        let good = encode_weights(&w).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0..4].copy_from_slice(b"NOPE");
        assert!(matches!(
            decode_weights(&bad_magic),
            Err(Error::Container(ContainerError::BadMagic { .. }))
        ));

        let mut bad_version = good.clone();
        bad_version[4..8].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            decode_weights(&bad_version),
            Err(Error::Container(ContainerError::UnknownVersion(9)))
        ));

        let truncated = &good[..good.len() - 5];
        assert!(matches!(
            decode_weights(truncated),
            Err(Error::Container(ContainerError::Truncated(_)))
        ));

        // Two tensors with the same name.
        let mut dup = Vec::new();
        dup.extend_from_slice(b"SEDW");
        dup.extend_from_slice(&1u32.to_le_bytes());
        dup.extend_from_slice(&2u32.to_le_bytes());
        for _ in 0..2 {
            dup.extend_from_slice(&4u16.to_le_bytes());
            dup.extend_from_slice(b"same");
            dup.push(1);
            dup.extend_from_slice(&1u32.to_le_bytes());
            dup.extend_from_slice(&1.0f32.to_le_bytes());
        }
        assert!(matches!(
            decode_weights(&dup),
            Err(Error::Container(ContainerError::DuplicateName(n))) if n == "same"
        ));
    }

    #[test]
    fn features_round_trip_and_errors() {
        let mel = LogMelSpectrogram {
            values: Tensor::new(&[2, 3], vec![0.5f32, -1.0, 2.0, 0.0, 1e-10, -23.0]).unwrap(),
            frame_hop_s: 0.016,
        };
        let bytes = encode_features(&mel);
        assert_eq!(&bytes[0..4], b"SEDF");
        let back = decode_features(&bytes).unwrap();
        assert_eq!(back.values, mel.values);
        assert_eq!(encode_features(&back), bytes);

        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(
            decode_features(&bad),
            Err(Error::Container(ContainerError::BadMagic { .. }))
        ));
        assert!(matches!(
            decode_features(&bytes[..10]),
            Err(Error::Container(ContainerError::Truncated(_)))
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(
            decode_features(&trailing),
            Err(Error::Container(ContainerError::Malformed(_)))
        ));
    }

    #[test]
    fn scores_round_trip() {
        let pred = FramePredictions {
            strong: Tensor::new(&[3, 2], vec![0.1f32, 0.9, 0.5, 0.5, 0.0, 1.0]).unwrap(),
            weak: Tensor::new(&[2], vec![0.25f32, 0.75]).unwrap(),
            frame_duration_s: 0.064,
        };
        let bytes = encode_scores(&pred);
        assert_eq!(&bytes[0..4], b"SEDP");
        let back = decode_scores(&bytes).unwrap();
        assert_eq!(back.strong, pred.strong);
        assert_eq!(back.weak, pred.weak);
        assert_eq!(encode_scores(&back), bytes);
    }

    #[test]
    fn atomic_write_replaces_existing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("artifact.bin");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        assert!(!path.with_extension("bin.tmp").exists());
    }
}
