//! Per-utterance feature extraction and the on-disk feature store.
//!
//! Store format (little-endian): magic "FST1", u32 frame count, u32 input
//! dimension, u32 target dimension, then input frames and target frames as
//! f32, frame-major. Extraction is deterministic per manifest entry, so a
//! rerun of data preparation is byte-identical.

use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::manifest::ManifestEntry;
use crate::dataset::mix::mix_at_snr;
use crate::dataset::pairs::{make_training_pairs, TargetKind, TrainingPair};
use crate::error::{Error, Result};
use crate::num::{scalar, Scalar};
use crate::stft::StftConfig;

const MAGIC: &[u8; 4] = b"FST1";

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceFeatures<T> {
    pub utterance_id: String,
    pub frames: usize,
    pub input_dim: usize,
    pub target_dim: usize,
    /// frames * input_dim values, frame-major.
    pub inputs: Vec<T>,
    /// frames * target_dim values, frame-major.
    pub targets: Vec<T>,
}

impl<T: Scalar> UtteranceFeatures<T> {
    pub fn input_frame(&self, t: usize) -> &[T] {
        &self.inputs[t * self.input_dim..(t + 1) * self.input_dim]
    }

    pub fn target_frame(&self, t: usize) -> &[T] {
        &self.targets[t * self.target_dim..(t + 1) * self.target_dim]
    }

    pub fn from_pairs(utterance_id: &str, pairs: &[TrainingPair<T>]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("training pairs"));
        }
        let input_dim = pairs[0].input.len();
        let target_dim = pairs[0].target.len();
        let mut inputs = Vec::with_capacity(pairs.len() * input_dim);
        let mut targets = Vec::with_capacity(pairs.len() * target_dim);
        for p in pairs {
            inputs.extend_from_slice(&p.input);
            targets.extend_from_slice(&p.target);
        }
        Ok(UtteranceFeatures {
            utterance_id: utterance_id.to_string(),
            frames: pairs.len(),
            input_dim,
            target_dim,
            inputs,
            targets,
        })
    }
}

/// Mixes an utterance at its manifest SNR and extracts frame-aligned
/// features: noisy features in, clean targets out.
pub fn extract_utterance<T: Scalar>(
    entry: &ManifestEntry,
    base_dir: &Path,
    cfg: &StftConfig,
    kind: TargetKind,
    context: usize,
    lps_eps: f64,
) -> Result<UtteranceFeatures<T>> {
    let clean = entry.load_clean::<T>(base_dir)?;
    let noise = entry.load_noise::<T>(base_dir, clean.len())?;
    let mixture = mix_at_snr(&clean, &noise, entry.snr_db, entry.seed)?;
    let pairs = make_training_pairs(&mixture.mix, &clean, cfg, kind, context, scalar(lps_eps))?;
    UtteranceFeatures::from_pairs(&entry.utterance_id, &pairs)
}

pub fn write_features<W: Write>(feat: &UtteranceFeatures<f32>, out: &mut W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(feat.frames as u32).to_le_bytes())?;
    out.write_all(&(feat.input_dim as u32).to_le_bytes())?;
    out.write_all(&(feat.target_dim as u32).to_le_bytes())?;
    for v in feat.inputs.iter().chain(feat.targets.iter()) {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_features<R: Read>(utterance_id: &str, input: &mut R) -> Result<UtteranceFeatures<f32>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Malformed {
            what: "feature file",
            detail: format!("bad magic {magic:?}"),
        });
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |input: &mut R| -> Result<u32> {
        input.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let frames = read_u32(input)? as usize;
    let input_dim = read_u32(input)? as usize;
    let target_dim = read_u32(input)? as usize;
    let read_block = |input: &mut R, n: usize| -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(n);
        let mut buf = [0u8; 4];
        for _ in 0..n {
            input.read_exact(&mut buf)?;
            out.push(f32::from_le_bytes(buf));
        }
        Ok(out)
    };
    let inputs = read_block(input, frames * input_dim)?;
    let targets = read_block(input, frames * target_dim)?;
    Ok(UtteranceFeatures {
        utterance_id: utterance_id.to_string(),
        frames,
        input_dim,
        target_dim,
        inputs,
        targets,
    })
}

pub fn save_features<P: AsRef<Path>>(feat: &UtteranceFeatures<f32>, path: P) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_features(feat, &mut f)?;
    use std::io::Write;
    f.flush()?;
    Ok(())
}

pub fn load_features<P: AsRef<Path>>(
    utterance_id: &str,
    path: P,
) -> Result<UtteranceFeatures<f32>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_features(utterance_id, &mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::manifest::parse_manifest;

    fn sample_entry() -> ManifestEntry {
        parse_manifest(
            "utterance_id,clean_path,noise_kind,snr_db,seed,split\n\
             u01,synth:vowel:5:8000,white,0,3,train\n",
        )
        .unwrap()
        .remove(0)
    }

    #[test]
    fn extraction_shapes() {
        let cfg = StftConfig::default_16k();
        let feat: UtteranceFeatures<f32> = extract_utterance(
            &sample_entry(),
            Path::new("."),
            &cfg,
            TargetKind::Ri,
            0,
            1e-8,
        )
        .unwrap();
        assert_eq!(feat.frames, cfg.frame_count(8000));
        assert_eq!(feat.input_dim, 2 * cfg.bins());
        assert_eq!(feat.target_dim, 2 * cfg.bins());
    }

    #[test]
    fn extraction_is_deterministic() {
        let cfg = StftConfig::default_16k();
        let a: UtteranceFeatures<f32> = extract_utterance(
            &sample_entry(),
            Path::new("."),
            &cfg,
            TargetKind::Ri,
            0,
            1e-8,
        )
        .unwrap();
        let b: UtteranceFeatures<f32> = extract_utterance(
            &sample_entry(),
            Path::new("."),
            &cfg,
            TargetKind::Ri,
            0,
            1e-8,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn file_round_trip_is_exact() {
        let cfg = StftConfig::default_16k();
        let feat: UtteranceFeatures<f32> = extract_utterance(
            &sample_entry(),
            Path::new("."),
            &cfg,
            TargetKind::Ri,
            1,
            1e-8,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_features(&feat, &mut buf).unwrap();
        let back = read_features("u01", &mut buf.as_slice()).unwrap();
        assert_eq!(back, feat);
        // Writing twice gives identical bytes.
        let mut buf2 = Vec::new();
        write_features(&feat, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
