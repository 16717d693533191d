//! Dataset manifest: one CSV row per utterance.
//!
//! Format: `utterance_id,clean_path,noise_kind,snr_db,seed,split` with a
//! header row. `clean_path` is either a WAV path or a synthetic reference of
//! the form `synth:vowel:<seed>[:<samples>]`, which keeps test datasets fully
//! self-contained. `noise_kind` is `white`, `engine_like`, `babble_like`, or
//! `file:<path>`.

use std::path::{Path, PathBuf};

use crate::dataset::noise::{generate_noise, NoiseKind};
use crate::dataset::speech::synth_vowel;
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::wave::{read_wav, Waveform, DEFAULT_SAMPLE_RATE};

pub const DEFAULT_SYNTH_SAMPLES: usize = 16_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Malformed {
                what: "manifest split",
                detail: format!("expected train|test, got '{other}'"),
            }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub utterance_id: String,
    pub clean_path: String,
    pub noise_kind: NoiseKind,
    pub snr_db: f64,
    pub seed: u64,
    pub split: Split,
}

impl ManifestEntry {
    /// Loads or synthesizes the clean signal for this entry.
    pub fn load_clean<T: Scalar>(&self, base_dir: &Path) -> Result<Waveform<T>> {
        if let Some(spec) = self.clean_path.strip_prefix("synth:") {
            let mut parts = spec.split(':');
            match parts.next() {
                Some("vowel") => {}
                other => {
                    return Err(Error::Malformed {
                        what: "synthetic clean reference",
                        detail: format!("unknown generator {other:?} in '{}'", self.clean_path),
                    })
                }
            }
            let seed: u64 = parts
                .next()
                .ok_or_else(|| Error::Malformed {
                    what: "synthetic clean reference",
                    detail: format!("missing seed in '{}'", self.clean_path),
                })?
                .parse()
                .map_err(|e| Error::Malformed {
                    what: "synthetic clean reference",
                    detail: format!("bad seed in '{}': {e}", self.clean_path),
                })?;
            let samples = match parts.next() {
                None => DEFAULT_SYNTH_SAMPLES,
                Some(s) => s.parse().map_err(|e| Error::Malformed {
                    what: "synthetic clean reference",
                    detail: format!("bad sample count in '{}': {e}", self.clean_path),
                })?,
            };
            Ok(synth_vowel(samples, DEFAULT_SAMPLE_RATE, seed))
        } else {
            let path = resolve(base_dir, &self.clean_path);
            read_wav(path)
        }
    }

    /// Loads or synthesizes noise covering at least `min_len` samples.
    pub fn load_noise<T: Scalar>(&self, base_dir: &Path, min_len: usize) -> Result<Waveform<T>> {
        match &self.noise_kind {
            NoiseKind::File(path) => {
                let noise: Waveform<T> = read_wav(resolve(base_dir, &path.to_string_lossy()))?;
                if noise.len() < min_len {
                    return Err(Error::InsufficientSamples {
                        needed: min_len,
                        got: noise.len(),
                    });
                }
                Ok(noise)
            }
            kind => generate_noise(kind.clone(), 2 * min_len, self.seed ^ 0x6e6f_6973_65),
        }
    }
}

fn resolve(base_dir: &Path, path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_absolute() {
        p
    } else {
        base_dir.join(p)
    }
}

pub const MANIFEST_HEADER: &str = "utterance_id,clean_path,noise_kind,snr_db,seed,split";

/// Parses a manifest CSV.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::EmptyInput("manifest"))?;
    if header.trim() != MANIFEST_HEADER {
        return Err(Error::Malformed {
            what: "manifest header",
            detail: format!("expected '{MANIFEST_HEADER}', got '{header}'"),
        });
    }
    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Malformed {
                what: "manifest row",
                detail: format!(
                    "line {}: expected 6 fields, got {}",
                    lineno + 2,
                    fields.len()
                ),
            });
        }
        let bad = |what: &'static str, e: String| Error::Malformed {
            what,
            detail: format!("line {}: {e}", lineno + 2),
        };
        entries.push(ManifestEntry {
            utterance_id: fields[0].to_string(),
            clean_path: fields[1].to_string(),
            noise_kind: NoiseKind::parse(fields[2])?,
            snr_db: fields[3]
                .parse()
                .map_err(|e| bad("manifest snr_db", format!("{e}")))?,
            seed: fields[4]
                .parse()
                .map_err(|e| bad("manifest seed", format!("{e}")))?,
            split: Split::parse(fields[5])?,
        });
    }
    Ok(entries)
}

pub fn load_manifest<P: AsRef<Path>>(path: P) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.display().to_string()));
    }
    parse_manifest(&std::fs::read_to_string(path)?)
}
