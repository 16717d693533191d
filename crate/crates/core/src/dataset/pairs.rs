//! Frame-aligned training pairs: noisy features in, clean targets out.

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::spectrum::RiSpectrogram;
use crate::stft::{stft, StftConfig};
use crate::synthesis::lps_from_ri;
use crate::wave::Waveform;

/// What the model regresses: stacked RI frames or log-power spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Ri,
    Lps,
}

impl TargetKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ri" => Ok(TargetKind::Ri),
            "lps" => Ok(TargetKind::Lps),
            other => Err(Error::InvalidArgument(format!(
                "unknown target kind '{other}'"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TargetKind::Ri => "ri",
            TargetKind::Lps => "lps",
        }
    }

    /// Feature dimension of a single frame (L bins).
    pub fn frame_dim(&self, bins: usize) -> usize {
        match self {
            TargetKind::Ri => 2 * bins,
            TargetKind::Lps => bins,
        }
    }
}

/// One frame-aligned (input, target) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair<T> {
    pub frame: usize,
    /// Noisy features for frames [frame-context .. frame+context],
    /// zero-padded at the edges.
    pub input: Vec<T>,
    /// Clean single-frame target.
    pub target: Vec<T>,
}

fn frame_features<T: Scalar>(
    spec: &RiSpectrogram<T>,
    frame: usize,
    kind: TargetKind,
    lps_eps: T,
) -> Result<Vec<T>> {
    let stacked = spec.frame_stacked(frame);
    match kind {
        TargetKind::Ri => Ok(stacked.values),
        TargetKind::Lps => lps_from_ri(&stacked.values, spec.bins(), lps_eps),
    }
}

/// Per-frame model inputs from a spectrogram: each frame's features with
/// `context` neighbors stacked on each side (zero-padded at the edges).
/// Shared by training-pair extraction and inference.
pub fn input_features<T: Scalar>(
    spec: &RiSpectrogram<T>,
    kind: TargetKind,
    context: usize,
    lps_eps: T,
) -> Result<Vec<Vec<T>>> {
    let frames = spec.frames();
    let dim = kind.frame_dim(spec.bins());
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let mut input = Vec::with_capacity(dim * (2 * context + 1));
        for off in -(context as isize)..=(context as isize) {
            let idx = t as isize + off;
            if idx < 0 || idx >= frames as isize {
                input.extend(std::iter::repeat_n(T::zero(), dim));
            } else {
                input.extend(frame_features(spec, idx as usize, kind, lps_eps)?);
            }
        }
        out.push(input);
    }
    Ok(out)
}

/// Extracts frame-aligned pairs from equal-length noisy/clean signals.
///
/// The input stacks `context` neighbor frames on each side of the center
/// frame (zero-padded at the utterance edges); targets are single frames.
pub fn make_training_pairs<T: Scalar>(
    noisy: &Waveform<T>,
    clean: &Waveform<T>,
    cfg: &StftConfig,
    kind: TargetKind,
    context: usize,
    lps_eps: T,
) -> Result<Vec<TrainingPair<T>>> {
    if noisy.len() != clean.len() {
        return Err(Error::DimensionMismatch {
            context: "noisy/clean lengths",
            expected: clean.len(),
            got: noisy.len(),
        });
    }
    let noisy_spec = stft(noisy, cfg)?;
    let clean_spec = stft(clean, cfg)?;
    let inputs = input_features(&noisy_spec, kind, context, lps_eps)?;
    let mut out = Vec::with_capacity(inputs.len());
    for (t, input) in inputs.into_iter().enumerate() {
        let target = frame_features(&clean_spec, t, kind, lps_eps)?;
        out.push(TrainingPair {
            frame: t,
            input,
            target,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::speech::synth_vowel;

    #[test]
    fn clean_equals_noisy_with_zero_context() {
        let w = synth_vowel::<f64>(4096, 16_000, 5);
        let cfg = StftConfig::default_16k();
        let pairs = make_training_pairs(&w, &w, &cfg, TargetKind::Ri, 0, 1e-8).unwrap();
        assert_eq!(pairs.len(), cfg.frame_count(w.len()));
        for p in &pairs {
            assert_eq!(p.input, p.target);
        }
    }

    #[test]
    fn context_triples_the_input_dimension() {
        let w = synth_vowel::<f64>(4096, 16_000, 6);
        let cfg = StftConfig::default_16k();
        let base = make_training_pairs(&w, &w, &cfg, TargetKind::Ri, 0, 1e-8).unwrap();
        let ctx = make_training_pairs(&w, &w, &cfg, TargetKind::Ri, 1, 1e-8).unwrap();
        assert_eq!(ctx[0].input.len(), 3 * base[0].input.len());
        assert_eq!(ctx[0].target.len(), base[0].target.len());
        // Edge frames are zero-padded on the missing side.
        let dim = base[0].input.len();
        assert!(ctx[0].input[..dim].iter().all(|&v| v == 0.0));
        let last = ctx.last().unwrap();
        assert!(last.input[2 * dim..].iter().all(|&v| v == 0.0));
        // Interior frames see their neighbors.
        assert_eq!(&ctx[1].input[..dim], base[0].input.as_slice());
        assert_eq!(&ctx[1].input[dim..2 * dim], base[1].input.as_slice());
    }

    #[test]
    fn target_matches_direct_dft_of_clean() {
        // Oracle: the target of frame 1 is the stacked windowed DFT of the
        // clean signal's frame 1.
        let w = synth_vowel::<f64>(2048, 16_000, 7);
        let cfg = StftConfig::default_16k();
        let pairs = make_training_pairs(&w, &w, &cfg, TargetKind::Ri, 0, 1e-8).unwrap();
        let n = cfg.fft_size;
        let bins = cfg.bins();
        let window: Vec<f64> = cfg.window.coefficients(n);
        let t = 1usize;
        for k in 0..bins {
            let mut re = 0.0;
            let mut im = 0.0;
            for m in 0..n {
                let x = w.samples[t * cfg.hop + m] * window[m];
                let ang = -2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64;
                re += x * ang.cos();
                im += x * ang.sin();
            }
            assert!((pairs[t].target[k] - re).abs() < 1e-9);
            if k != 0 && k != bins - 1 {
                assert!((pairs[t].target[bins + k] - im).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lps_targets_have_l_dims() {
        let w = synth_vowel::<f64>(4096, 16_000, 8);
        let cfg = StftConfig::default_16k();
        let pairs = make_training_pairs(&w, &w, &cfg, TargetKind::Lps, 0, 1e-8).unwrap();
        assert_eq!(pairs[0].input.len(), cfg.bins());
        assert_eq!(pairs[0].target.len(), cfg.bins());
    }

    #[test]
    fn length_mismatch_rejected() {
        let a = synth_vowel::<f64>(4096, 16_000, 9);
        let b = synth_vowel::<f64>(4097, 16_000, 9);
        let cfg = StftConfig::default_16k();
        assert!(make_training_pairs(&a, &b, &cfg, TargetKind::Ri, 0, 1e-8).is_err());
    }
}
