//! Deterministic synthetic noise generators.
//!
//! These stand in for recorded noise corpora: white Gaussian noise, an
//! engine-like harmonic stack over low-passed noise, and a babble-like sum of
//! amplitude-modulated band-limited streams. Given the same (kind, length,
//! seed) the output is bit-identical.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::num::{scalar, Scalar};
use crate::rng::Rng;
use crate::wave::{Waveform, DEFAULT_SAMPLE_RATE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoiseKind {
    White,
    EngineLike,
    BabbleLike,
    /// Noise loaded from a WAV file; not synthesizable by `generate_noise`.
    File(PathBuf),
}

impl NoiseKind {
    /// Parses `white`, `engine_like`, `babble_like`, or `file:<path>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(NoiseKind::White),
            "engine_like" => Ok(NoiseKind::EngineLike),
            "babble_like" => Ok(NoiseKind::BabbleLike),
            other => {
                if let Some(path) = other.strip_prefix("file:") {
                    Ok(NoiseKind::File(PathBuf::from(path)))
                } else {
                    Err(Error::InvalidArgument(format!(
                        "unknown noise kind '{other}'"
                    )))
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            NoiseKind::White => "white".into(),
            NoiseKind::EngineLike => "engine_like".into(),
            NoiseKind::BabbleLike => "babble_like".into(),
            NoiseKind::File(p) => format!("file:{}", p.display()),
        }
    }
}

/// Two-pole resonator (constant-peak-gain bandpass-ish filter).
struct Resonator {
    a1: f64,
    a2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(center_hz: f64, bandwidth_hz: f64, sample_rate: f64) -> Self {
        let theta = 2.0 * std::f64::consts::PI * center_hz / sample_rate;
        let r = (-std::f64::consts::PI * bandwidth_hz / sample_rate).exp();
        Resonator {
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn normalize_rms(samples: &mut [f64], target_rms: f64) {
    let power: f64 = samples.iter().map(|v| v * v).sum::<f64>() / samples.len().max(1) as f64;
    if power > 0.0 {
        let g = target_rms / power.sqrt();
        for v in samples.iter_mut() {
            *v *= g;
        }
    }
}

/// Generates `length` samples of the requested noise kind at 16 kHz.
pub fn generate_noise<T: Scalar>(kind: NoiseKind, length: usize, seed: u64) -> Result<Waveform<T>> {
    if length == 0 {
        return Err(Error::InvalidArgument("noise length must be > 0".into()));
    }
    let sr = f64::from(DEFAULT_SAMPLE_RATE);
    let mut rng = Rng::new(seed).derive("noise");
    let mut samples: Vec<f64> = match kind {
        NoiseKind::White => (0..length).map(|_| 0.25 * rng.normal()).collect(),
        NoiseKind::EngineLike => {
            let f0 = rng.uniform(40.0, 80.0);
            let n_harmonics = 12usize;
            let phases: Vec<f64> = (0..n_harmonics)
                .map(|_| rng.uniform(0.0, 2.0 * std::f64::consts::PI))
                .collect();
            // Low-passed noise floor under the harmonic stack.
            let alpha = 0.98;
            let mut lp = 0.0;
            let mut out = Vec::with_capacity(length);
            for n in 0..length {
                let t = n as f64 / sr;
                let mut v = 0.0;
                for (h, phase) in phases.iter().enumerate() {
                    let k = (h + 1) as f64;
                    v += (2.0 * std::f64::consts::PI * f0 * k * t + phase).sin() / (k * k);
                }
                lp = alpha * lp + (1.0 - alpha) * rng.normal();
                out.push(v + 3.0 * lp);
            }
            out
        }
        NoiseKind::BabbleLike => {
            let n_streams = 6usize;
            let mut streams: Vec<(Resonator, f64, f64)> = (0..n_streams)
                .map(|_| {
                    let center = rng.uniform(300.0, 3000.0);
                    let res = Resonator::new(center, 200.0, sr);
                    let mod_hz = rng.uniform(2.0, 8.0);
                    let mod_phase = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
                    (res, mod_hz, mod_phase)
                })
                .collect();
            let mut out = vec![0.0; length];
            for (res, mod_hz, mod_phase) in streams.iter_mut() {
                for (n, o) in out.iter_mut().enumerate() {
                    let t = n as f64 / sr;
                    let env =
                        0.5 + 0.5 * (2.0 * std::f64::consts::PI * *mod_hz * t + *mod_phase).sin();
                    *o += env * res.step(rng.normal());
                }
            }
            out
        }
        NoiseKind::File(path) => {
            return Err(Error::InvalidArgument(format!(
                "file-backed noise ({}) is read from disk, not generated",
                path.display()
            )))
        }
    };
    normalize_rms(&mut samples, 0.2);
    Waveform::new(
        samples.into_iter().map(|v| scalar(v)).collect(),
        DEFAULT_SAMPLE_RATE,
    )
}
