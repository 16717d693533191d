//! Signal quality metrics: segmental SNR (time domain) and log-spectral
//! distortion (frequency domain).

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::stft::{stft, StftConfig};
use crate::wave::Waveform;

/// Segmental SNR parameters. Per-frame SNRs are clamped into
/// [clamp_lo, clamp_hi] dB and frames whose reference energy falls below
/// `silence_floor_ratio` times the loudest frame's energy are skipped.
#[derive(Debug, Clone)]
pub struct SsnrOptions {
    pub frame_len: usize,
    pub hop: usize,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
    pub silence_floor_ratio: f64,
}

impl Default for SsnrOptions {
    fn default() -> Self {
        SsnrOptions {
            frame_len: 512,
            hop: 256,
            clamp_lo: -10.0,
            clamp_hi: 35.0,
            silence_floor_ratio: 1e-8,
        }
    }
}

/// Mean clamped per-frame SNR in dB, plus the number of frames scored.
pub fn ssnr<T: Scalar>(
    reference: &Waveform<T>,
    test: &Waveform<T>,
    opts: &SsnrOptions,
) -> Result<(f64, usize)> {
    if reference.len() != test.len() {
        return Err(Error::DimensionMismatch {
            context: "ssnr signal lengths",
            expected: reference.len(),
            got: test.len(),
        });
    }
    if opts.clamp_lo >= opts.clamp_hi {
        return Err(Error::InvalidArgument("ssnr clamp range is empty".into()));
    }
    if reference.len() < opts.frame_len {
        return Err(Error::InsufficientSamples {
            needed: opts.frame_len,
            got: reference.len(),
        });
    }
    let frames = 1 + (reference.len() - opts.frame_len) / opts.hop;
    let mut energies = Vec::with_capacity(frames);
    let mut errors = Vec::with_capacity(frames);
    for t in 0..frames {
        let start = t * opts.hop;
        let mut e_ref = 0.0f64;
        let mut e_err = 0.0f64;
        for k in start..start + opts.frame_len {
            let r = reference.samples[k].to_f64().unwrap_or(0.0);
            let d = r - test.samples[k].to_f64().unwrap_or(0.0);
            e_ref += r * r;
            e_err += d * d;
        }
        energies.push(e_ref);
        errors.push(e_err);
    }
    let max_energy = energies.iter().cloned().fold(0.0, f64::max);
    let floor = max_energy * opts.silence_floor_ratio;
    let mut sum = 0.0;
    let mut scored = 0usize;
    for (e_ref, e_err) in energies.iter().zip(&errors) {
        if max_energy == 0.0 || *e_ref <= floor {
            continue;
        }
        let snr = if *e_err == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (e_ref / e_err).log10()
        };
        sum += snr.clamp(opts.clamp_lo, opts.clamp_hi);
        scored += 1;
    }
    if scored == 0 {
        return Err(Error::EmptyInput("all frames below the silence floor"));
    }
    Ok((sum / scored as f64, scored))
}

/// Log-spectral distortion in dB: per frame, the RMS over bins of the
/// difference of 10 log10 powers (floored at eps), averaged over frames.
pub fn lsd<T: Scalar>(
    reference: &Waveform<T>,
    test: &Waveform<T>,
    cfg: &StftConfig,
    eps: f64,
) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::DimensionMismatch {
            context: "lsd signal lengths",
            expected: reference.len(),
            got: test.len(),
        });
    }
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("lsd eps must be > 0".into()));
    }
    let sr = stft(reference, cfg)?;
    let st = stft(test, cfg)?;
    let bins = cfg.bins();
    let mut total = 0.0;
    for t in 0..sr.frames() {
        let mut acc = 0.0;
        for k in 0..bins {
            let pr = power_db(sr.real.at(t, k), sr.imag.at(t, k), eps);
            let pt = power_db(st.real.at(t, k), st.imag.at(t, k), eps);
            let d = pr - pt;
            acc += d * d;
        }
        total += (acc / bins as f64).sqrt();
    }
    Ok(total / sr.frames() as f64)
}

fn power_db<T: Scalar>(re: T, im: T, eps: f64) -> f64 {
    let r = re.to_f64().unwrap_or(0.0);
    let i = im.to_f64().unwrap_or(0.0);
    10.0 * (r * r + i * i).max(eps).log10()
}

/// Per-utterance evaluation record.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub utterance_id: String,
    pub ssnr_db: f64,
    pub lsd_db: f64,
    pub frames_scored: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_wave(len: usize, seed: u64) -> Waveform<f64> {
        let mut rng = Rng::new(seed);
        Waveform::new((0..len).map(|_| 0.3 * rng.normal()).collect(), 16_000).unwrap()
    }

    #[test]
    fn identical_signals_hit_the_upper_clamp() {
        let w = random_wave(4096, 1);
        let (v, scored) = ssnr(&w, &w, &SsnrOptions::default()).unwrap();
        assert_eq!(v, 35.0);
        assert!(scored >= 1);
    }

    #[test]
    fn inverted_signal_scores_minus_six_db() {
        // test = -ref means the error is 2 ref, so each frame scores
        // 10 log10(1/4) ~= -6.0206 dB.
        let w = random_wave(4096, 2);
        let inv = Waveform::new(w.samples.iter().map(|v| -v).collect(), 16_000).unwrap();
        let (v, _) = ssnr(&w, &inv, &SsnrOptions::default()).unwrap();
        assert!((v - 10.0 * (0.25f64).log10()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn equal_power_error_scores_zero_db() {
        // test = ref + (-1)^n ref, so the error signal carries exactly the
        // reference's per-frame energy and every frame scores 0 dB.
        let w = random_wave(4096, 3);
        let test = Waveform::new(
            w.samples
                .iter()
                .enumerate()
                .map(|(n, &v)| if n % 2 == 0 { 2.0 * v } else { 0.0 })
                .collect(),
            16_000,
        )
        .unwrap();
        let (v, _) = ssnr(&w, &test, &SsnrOptions::default()).unwrap();
        assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn ssnr_scale_invariant() {
        let w = random_wave(4096, 4);
        let noisy = Waveform::new(
            w.samples.iter().map(|v| v + 0.01 * v.signum()).collect(),
            16_000,
        )
        .unwrap();
        let (a, _) = ssnr(&w, &noisy, &SsnrOptions::default()).unwrap();
        let w2 = Waveform::new(w.samples.iter().map(|v| v * 7.0).collect(), 16_000).unwrap();
        let n2 = Waveform::new(noisy.samples.iter().map(|v| v * 7.0).collect(), 16_000).unwrap();
        let (b, _) = ssnr(&w2, &n2, &SsnrOptions::default()).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch_rejected() {
        let a = random_wave(2048, 5);
        let b = random_wave(2049, 5);
        assert!(ssnr(&a, &b, &SsnrOptions::default()).is_err());
        let cfg = StftConfig::default_16k();
        assert!(lsd(&a, &b, &cfg, 1e-10).is_err());
    }

    #[test]
    fn silent_reference_errors() {
        let z = Waveform::<f64>::zeros(2048, 16_000);
        let t = random_wave(2048, 6);
        assert!(ssnr(&z, &t, &SsnrOptions::default()).is_err());
    }

    #[test]
    fn lsd_zero_for_identical() {
        let w = random_wave(4096, 7);
        let cfg = StftConfig::default_16k();
        assert_eq!(lsd(&w, &w, &cfg, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn lsd_ten_db_for_tenfold_power() {
        // Scaling the waveform by sqrt(10) scales every bin's power by 10,
        // so each bin contributes exactly 10 dB.
        let w = random_wave(4096, 8);
        let scaled = Waveform::new(
            w.samples.iter().map(|v| v * 10.0f64.sqrt()).collect(),
            16_000,
        )
        .unwrap();
        let cfg = StftConfig::default_16k();
        let v = lsd(&w, &scaled, &cfg, 1e-30).unwrap();
        assert!((v - 10.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn lsd_symmetric_and_nonnegative() {
        let a = random_wave(4096, 9);
        let b = random_wave(4096, 10);
        let cfg = StftConfig::default_16k();
        let ab = lsd(&a, &b, &cfg, 1e-10).unwrap();
        let ba = lsd(&b, &a, &cfg, 1e-10).unwrap();
        assert!(ab >= 0.0);
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn lsd_common_scaling_invariant() {
        let a = random_wave(4096, 11);
        let b = random_wave(4096, 12);
        let cfg = StftConfig::default_16k();
        let base = lsd(&a, &b, &cfg, 1e-30).unwrap();
        let a2 = Waveform::new(a.samples.iter().map(|v| v * 3.0).collect(), 16_000).unwrap();
        let b2 = Waveform::new(b.samples.iter().map(|v| v * 3.0).collect(), 16_000).unwrap();
        let scaled = lsd(&a2, &b2, &cfg, 1e-30).unwrap();
        assert!((base - scaled).abs() < 1e-9);
    }
}
