//! SNR-controlled mixing of clean speech and noise.

use crate::error::{Error, Result};
use crate::num::{scalar, Scalar};
use crate::rng::Rng;
use crate::wave::Waveform;

/// A mixture plus the bookkeeping needed to reconstruct its components.
#[derive(Debug, Clone)]
pub struct Mixture<T> {
    pub mix: Waveform<T>,
    /// Gain applied to the noise segment before adding.
    pub noise_gain: T,
    /// Post-normalization factor applied to the whole mixture; 1 unless the
    /// raw mix would exceed full scale.
    pub peak_scale: T,
    /// Offset into the noise signal of the segment that was used.
    pub noise_offset: usize,
}

/// Mixes `noise` into `clean` at the requested SNR (in dB), defined over the
/// full utterance as 10 log10(P_clean / P_scaled_noise).
///
/// The noise must be at least as long as the clean signal; a segment is
/// cropped at a seed-determined offset. The output is scaled down only if a
/// sample would leave [-1, 1], and the applied factor is recorded.
pub fn mix_at_snr<T: Scalar>(
    clean: &Waveform<T>,
    noise: &Waveform<T>,
    snr_db: f64,
    seed: u64,
) -> Result<Mixture<T>> {
    if !snr_db.is_finite() {
        return Err(Error::NonFinite { context: "snr_db" });
    }
    if clean.sample_rate != noise.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "sample rate mismatch: clean {} vs noise {}",
            clean.sample_rate, noise.sample_rate
        )));
    }
    if noise.len() < clean.len() {
        return Err(Error::InsufficientSamples {
            needed: clean.len(),
            got: noise.len(),
        });
    }
    let p_clean = clean.power().to_f64().unwrap_or(0.0);
    if p_clean <= 0.0 {
        return Err(Error::InvalidArgument("clean signal has zero power".into()));
    }
    let mut rng = Rng::new(seed).derive("mix-offset");
    let max_offset = noise.len() - clean.len();
    let offset = if max_offset == 0 {
        0
    } else {
        rng.below(max_offset + 1)
    };
    let segment = &noise.samples[offset..offset + clean.len()];
    let p_noise = segment
        .iter()
        .fold(0.0f64, |acc, &s| acc + s.to_f64().unwrap_or(0.0).powi(2))
        / clean.len() as f64;
    if p_noise <= 0.0 {
        return Err(Error::InvalidArgument(
            "noise segment has zero power".into(),
        ));
    }
    let gain = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let gain_t: T = scalar(gain);
    let mut samples: Vec<T> = clean
        .samples
        .iter()
        .zip(segment)
        .map(|(&c, &n)| c + gain_t * n)
        .collect();
    let peak = samples.iter().fold(T::zero(), |acc, &s| acc.max(s.abs()));
    let peak_scale = if peak > T::one() {
        let s = T::one() / peak;
        for v in samples.iter_mut() {
            *v *= s;
        }
        s
    } else {
        T::one()
    };
    Ok(Mixture {
        mix: Waveform::new(samples, clean.sample_rate)?,
        noise_gain: gain_t,
        peak_scale,
        noise_offset: offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::noise::{generate_noise, NoiseKind};
    use crate::dataset::speech::synth_vowel;
    use crate::rng::Rng;

    #[test]
    fn zero_db_equal_power_gives_unit_gain() {
        let clean = Waveform::new(vec![0.5f64, -0.5, 0.5, -0.5], 16_000).unwrap();
        // Same power, reordered.
        let noise = Waveform::new(vec![-0.5f64, 0.5, -0.5, 0.5], 16_000).unwrap();
        let m = mix_at_snr(&clean, &noise, 0.0, 1).unwrap();
        assert!((m.noise_gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn twenty_db_equal_power_gives_tenth_gain() {
        let clean = Waveform::new(vec![0.5f64, -0.5, 0.5, -0.5], 16_000).unwrap();
        let noise = Waveform::new(vec![-0.5f64, 0.5, -0.5, 0.5], 16_000).unwrap();
        let m = mix_at_snr(&clean, &noise, 20.0, 1).unwrap();
        assert!((m.noise_gain - 0.1).abs() < 1e-12);
    }

    #[test]
    fn achieved_snr_matches_request() {
        // Randomized check over kinds, SNRs and seeds; the achieved SNR is
        // measured from the components recovered out of the mixture.
        let mut rng = Rng::new(99);
        let clean = synth_vowel::<f64>(8000, 16_000, 42);
        for case in 0..100 {
            let kind = match case % 3 {
                0 => NoiseKind::White,
                1 => NoiseKind::EngineLike,
                _ => NoiseKind::BabbleLike,
            };
            let noise = generate_noise::<f64>(kind, 12_000, case as u64).unwrap();
            let snr_db = rng.uniform(-20.0, 25.0);
            let m = mix_at_snr(&clean, &noise, snr_db, case as u64).unwrap();
            // Undo the peak normalization, then subtract the clean part.
            let unscaled: Vec<f64> = m.mix.samples.iter().map(|v| v / m.peak_scale).collect();
            let p_clean = clean.power();
            let p_noise = unscaled
                .iter()
                .zip(&clean.samples)
                .map(|(u, c)| (u - c) * (u - c))
                .sum::<f64>()
                / clean.len() as f64;
            let achieved = 10.0 * (p_clean / p_noise).log10();
            assert!(
                (achieved - snr_db).abs() < 1e-6,
                "case {case}: requested {snr_db}, achieved {achieved}"
            );
        }
    }

    #[test]
    fn peak_normalization_only_when_needed() {
        let clean = synth_vowel::<f64>(4000, 16_000, 7);
        let noise = generate_noise::<f64>(NoiseKind::White, 8000, 3).unwrap();
        // Strong noise forces the mix over full scale.
        let loud = mix_at_snr(&clean, &noise, -30.0, 2).unwrap();
        assert!(loud.peak_scale < 1.0);
        assert!(loud.mix.peak() <= 1.0 + 1e-12);
        // Mild noise does not.
        let mild = mix_at_snr(&clean, &noise, 30.0, 2).unwrap();
        assert_eq!(mild.peak_scale, 1.0);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let clean = synth_vowel::<f64>(4000, 16_000, 7);
        let silent = Waveform::<f64>::zeros(8000, 16_000);
        assert!(mix_at_snr(&silent, &clean, 0.0, 1).is_err());
        assert!(mix_at_snr(&clean, &silent, 0.0, 1).is_err());
        let short = Waveform::new(vec![0.1f64; 100], 16_000).unwrap();
        assert!(mix_at_snr(&clean, &short, 0.0, 1).is_err());
        let noise = generate_noise::<f64>(NoiseKind::White, 8000, 3).unwrap();
        assert!(mix_at_snr(&clean, &noise, f64::NAN, 1).is_err());
    }

    #[test]
    fn deterministic_offset_per_seed() {
        let clean = synth_vowel::<f64>(4000, 16_000, 7);
        let noise = generate_noise::<f64>(NoiseKind::White, 16_000, 3).unwrap();
        let a = mix_at_snr(&clean, &noise, 5.0, 11).unwrap();
        let b = mix_at_snr(&clean, &noise, 5.0, 11).unwrap();
        assert_eq!(a.noise_offset, b.noise_offset);
        assert_eq!(a.mix.samples, b.mix.samples);
    }
}
