//! Phase spectrograms and the noisy-phase study: how much does reusing the
//! phase of a noisy mixture hurt a resynthesized signal whose magnitude is
//! clean, as a function of the mixing SNR?

use std::io::Write;

use crate::dataset::mix::mix_at_snr;
use crate::error::{Error, Result};
use crate::metrics::{ssnr, SsnrOptions};
use crate::num::{scalar, Scalar};
use crate::spectrum::{combine_magnitude_phase, Grid, RiSpectrogram};
use crate::stft::{istft, stft, StftConfig};
use crate::wave::Waveform;

/// Per-bin phase in (-pi, pi].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectrogram<T> {
    pub values: Grid<T>,
}

/// Boolean map of where two phase spectrograms agree within a threshold.
#[derive(Debug, Clone)]
pub struct PhaseDiffMask {
    pub threshold: f64,
    pub frames: usize,
    pub bins: usize,
    /// true where |wrapped phase difference| < threshold.
    pub mask: Vec<bool>,
    /// Fraction of true entries.
    pub fraction: f64,
}

/// Four-quadrant phase of each bin; the phase of an all-zero bin is 0, and
/// the -pi branch value is mapped to +pi so results stay in (-pi, pi].
pub fn phase_of<T: Scalar>(ri: &RiSpectrogram<T>) -> PhaseSpectrogram<T> {
    let mut values = Grid::zeros(ri.frames(), ri.bins());
    for (o, (&r, &i)) in values
        .data
        .iter_mut()
        .zip(ri.real.data.iter().zip(ri.imag.data.iter()))
    {
        *o = if r == T::zero() && i == T::zero() {
            T::zero()
        } else {
            let p = i.atan2(r);
            let pi: T = scalar(std::f64::consts::PI);
            if p == -pi {
                pi
            } else {
                p
            }
        };
    }
    PhaseSpectrogram { values }
}

/// Wraps an angle difference into (-pi, pi].
pub fn wrap_angle<T: Scalar>(d: T) -> T {
    let pi: T = scalar(std::f64::consts::PI);
    let two_pi: T = scalar(2.0 * std::f64::consts::PI);
    let mut w = (d + pi) % two_pi;
    if w < T::zero() {
        w += two_pi;
    }
    // w is now in [0, 2 pi); shift to (-pi, pi].
    w -= pi;
    if w == -pi {
        pi
    } else {
        w
    }
}

/// Thresholded map of the wrapped phase difference between two spectrograms.
pub fn phase_diff_mask<T: Scalar>(
    clean: &PhaseSpectrogram<T>,
    noisy: &PhaseSpectrogram<T>,
    threshold: f64,
) -> Result<PhaseDiffMask> {
    if threshold <= 0.0 {
        return Err(Error::InvalidArgument("threshold must be > 0".into()));
    }
    if clean.values.frames != noisy.values.frames || clean.values.bins != noisy.values.bins {
        return Err(Error::DimensionMismatch {
            context: "phase spectrogram shapes",
            expected: clean.values.data.len(),
            got: noisy.values.data.len(),
        });
    }
    let thr: T = scalar(threshold);
    let mask: Vec<bool> = clean
        .values
        .data
        .iter()
        .zip(noisy.values.data.iter())
        .map(|(&a, &b)| wrap_angle(a - b).abs() < thr)
        .collect();
    let hits = mask.iter().filter(|&&m| m).count();
    let fraction = hits as f64 / mask.len().max(1) as f64;
    Ok(PhaseDiffMask {
        threshold,
        frames: clean.values.frames,
        bins: clean.values.bins,
        mask,
        fraction,
    })
}

/// One row of the noisy-phase study.
#[derive(Debug, Clone)]
pub struct PhaseStudyRow {
    pub snr_db: f64,
    pub ssnr_db: f64,
    pub mask_fraction: f64,
}

/// Runs the clean-magnitude/noisy-phase resynthesis at each SNR level and
/// scores it against the clean signal.
///
/// For each level the noise is mixed in at that SNR, the clean magnitude is
/// combined with the noisy phase, and the result is synthesized back to a
/// waveform. SSNR is computed on edge-trimmed signals (one FFT length at each
/// end) because the analysis window tapers the outermost samples.
pub fn noisy_phase_study<T: Scalar>(
    clean: &Waveform<T>,
    noise: &Waveform<T>,
    snr_levels: &[f64],
    mask_threshold: f64,
    cfg: &StftConfig,
    seed: u64,
) -> Result<Vec<(PhaseStudyRow, PhaseDiffMask)>> {
    if snr_levels.is_empty() {
        return Err(Error::EmptyInput("snr_levels"));
    }
    let clean_spec = stft(clean, cfg)?;
    let clean_phase = phase_of(&clean_spec);
    let clean_mag = clean_spec.magnitude();
    let mut rows = Vec::with_capacity(snr_levels.len());
    for &snr_db in snr_levels {
        let mixture = mix_at_snr(clean, noise, snr_db, seed)?;
        let noisy_spec = stft(&mixture.mix, cfg)?;
        let noisy_phase = phase_of(&noisy_spec);
        let mask = phase_diff_mask(&clean_phase, &noisy_phase, mask_threshold)?;
        let combined = combine_magnitude_phase(&clean_mag, &noisy_phase.values)?;
        let resynth = istft(&combined, cfg, clean.sample_rate)?;
        let trim = cfg.fft_size;
        let len = resynth.len();
        if len <= 2 * trim {
            return Err(Error::InsufficientSamples {
                needed: 2 * trim + 1,
                got: len,
            });
        }
        let ref_trim = Waveform::new(clean.samples[trim..len - trim].to_vec(), clean.sample_rate)?;
        let test_trim = Waveform::new(
            resynth.samples[trim..len - trim].to_vec(),
            clean.sample_rate,
        )?;
        let (ssnr_db, _) = ssnr(&ref_trim, &test_trim, &SsnrOptions::default())?;
        rows.push((
            PhaseStudyRow {
                snr_db,
                ssnr_db,
                mask_fraction: mask.fraction,
            },
            mask,
        ));
    }
    Ok(rows)
}

/// SSNR of clean-magnitude/noisy-phase resynthesis per SNR level.
pub fn noisy_phase_ssnr_table<T: Scalar>(
    clean: &Waveform<T>,
    noise: &Waveform<T>,
    snr_levels: &[f64],
    cfg: &StftConfig,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let rows = noisy_phase_study(clean, noise, snr_levels, 0.1, cfg, seed)?;
    Ok(rows
        .into_iter()
        .map(|(row, _)| (row.snr_db, row.ssnr_db))
        .collect())
}

/// Writes the mask as an ASCII PGM (P2) image: 1 = phases agree within the
/// threshold, 0 = disagree. Rows run from the highest bin (top) to DC.
pub fn write_mask_pgm<W: Write>(mask: &PhaseDiffMask, out: &mut W) -> Result<()> {
    writeln!(out, "P2")?;
    writeln!(out, "# phase agreement mask, threshold {}", mask.threshold)?;
    writeln!(out, "{} {}", mask.frames, mask.bins)?;
    writeln!(out, "1")?;
    for row in 0..mask.bins {
        let bin = mask.bins - 1 - row;
        let mut line = String::with_capacity(2 * mask.frames);
        for t in 0..mask.frames {
            if t > 0 {
                line.push(' ');
            }
            line.push(if mask.mask[t * mask.bins + bin] {
                '1'
            } else {
                '0'
            });
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::noise::{generate_noise, NoiseKind};
    use crate::dataset::speech::synth_vowel;
    use crate::spectrum::Grid;

    fn spec_1x1(re: f64, im: f64) -> RiSpectrogram<f64> {
        // Use 3 bins so the interior bin can carry an imaginary part.
        let mut real = Grid::zeros(1, 3);
        let mut imag = Grid::zeros(1, 3);
        real.set(0, 1, re);
        imag.set(0, 1, im);
        RiSpectrogram::from_parts(real, imag).unwrap()
    }

    #[test]
    fn phase_quadrants() {
        assert_eq!(phase_of(&spec_1x1(1.0, 0.0)).values.at(0, 1), 0.0);
        assert!(
            (phase_of(&spec_1x1(0.0, 1.0)).values.at(0, 1) - std::f64::consts::FRAC_PI_2).abs()
                < 1e-15
        );
        // Just below the negative real axis: phase approaches -pi.
        let p = phase_of(&spec_1x1(-1.0, -1e-12)).values.at(0, 1);
        assert!((p + std::f64::consts::PI).abs() < 1e-11);
        assert!(p > -std::f64::consts::PI);
    }

    #[test]
    fn zero_bin_has_zero_phase() {
        let p = phase_of(&spec_1x1(0.0, 0.0));
        assert_eq!(p.values.at(0, 1), 0.0);
    }

    #[test]
    fn phase_stays_in_half_open_interval() {
        // atan2(-0.0, -1.0) would be -pi; it must come back as +pi.
        let mut real = Grid::zeros(1, 3);
        let mut imag = Grid::zeros(1, 3);
        real.set(0, 1, -1.0);
        imag.set(0, 1, -0.0);
        let spec = RiSpectrogram::from_parts(real, imag).unwrap();
        assert_eq!(phase_of(&spec).values.at(0, 1), std::f64::consts::PI);
    }

    #[test]
    fn identical_phases_give_full_mask() {
        let p = phase_of(&spec_1x1(0.3, 0.4));
        let m = phase_diff_mask(&p, &p, 0.1).unwrap();
        assert!(m.mask.iter().all(|&b| b));
        assert_eq!(m.fraction, 1.0);
    }

    #[test]
    fn opposite_phases_give_empty_mask() {
        let zeros = PhaseSpectrogram {
            values: Grid::zeros(2, 4),
        };
        let mut pi_grid = Grid::zeros(2, 4);
        for v in pi_grid.data.iter_mut() {
            *v = std::f64::consts::PI;
        }
        let pis = PhaseSpectrogram { values: pi_grid };
        let m = phase_diff_mask(&zeros, &pis, 0.1).unwrap();
        assert!(m.mask.iter().all(|&b| !b));
        assert_eq!(m.fraction, 0.0);
    }

    #[test]
    fn wrapping_handles_branch_crossing() {
        // pi - 0.01 vs -pi + 0.01 are only 0.02 apart once wrapped.
        let mut a = Grid::zeros(1, 3);
        a.set(0, 1, std::f64::consts::PI - 0.01);
        let mut b = Grid::zeros(1, 3);
        b.set(0, 1, -std::f64::consts::PI + 0.01);
        let m = phase_diff_mask(
            &PhaseSpectrogram { values: a },
            &PhaseSpectrogram { values: b },
            0.1,
        )
        .unwrap();
        assert!(m.mask[1]);
        let wrapped = wrap_angle((std::f64::consts::PI - 0.01) - (-std::f64::consts::PI + 0.01));
        assert!((wrapped - (-0.02)).abs() < 1e-12);
    }

    #[test]
    fn phase_of_combine_recovers_phase() {
        let mut rng = crate::rng::Rng::new(6);
        let bins = 9;
        let mut mag = Grid::zeros(2, bins);
        let mut phase = Grid::zeros(2, bins);
        for t in 0..2 {
            for k in 0..bins {
                mag.set(t, k, 0.1 + rng.next_f64());
                // Interior bins get arbitrary phase; DC/Nyquist stay 0.
                if k != 0 && k != bins - 1 {
                    phase.set(t, k, rng.uniform(-3.1, 3.1));
                }
            }
        }
        let spec = combine_magnitude_phase(&mag, &phase).unwrap();
        let got = phase_of(&spec);
        for t in 0..2 {
            for k in 1..bins - 1 {
                assert!((got.values.at(t, k) - phase.at(t, k)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ssnr_table_monotone_and_saturating() {
        let clean = synth_vowel::<f64>(16_000, 16_000, 11);
        let noise = generate_noise::<f64>(NoiseKind::White, 32_000, 12).unwrap();
        let cfg = StftConfig::default_16k();
        let rows = noisy_phase_ssnr_table(&clean, &noise, &[-12.0, 0.0, 12.0], &cfg, 5).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].1 < rows[1].1, "{rows:?}");
        assert!(rows[1].1 < rows[2].1, "{rows:?}");

        // Noise scaled to (almost) nothing: resynthesis is a clean round
        // trip, so the score saturates at the SSNR clamp.
        let rows = noisy_phase_ssnr_table(&clean, &noise, &[300.0], &cfg, 5).unwrap();
        assert!((rows[0].1 - SsnrOptions::default().clamp_hi).abs() < 1e-9);
    }

    #[test]
    fn mask_fraction_grows_with_snr() {
        let clean = synth_vowel::<f64>(16_000, 16_000, 3);
        let noise = generate_noise::<f64>(NoiseKind::White, 32_000, 4).unwrap();
        let cfg = StftConfig::default_16k();
        let rows = noisy_phase_study(&clean, &noise, &[-12.0, 0.0, 12.0], 0.1, &cfg, 6).unwrap();
        assert!(rows[0].0.mask_fraction <= rows[1].0.mask_fraction);
        assert!(rows[1].0.mask_fraction <= rows[2].0.mask_fraction);
    }

    #[test]
    fn pgm_export_shape() {
        let p = phase_of(&spec_1x1(0.5, 0.5));
        let m = phase_diff_mask(&p, &p, 0.1).unwrap();
        let mut buf = Vec::new();
        write_mask_pgm(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("P2"));
        let _comment = lines.next().unwrap();
        assert_eq!(lines.next(), Some("1 3"));
        assert_eq!(lines.next(), Some("1"));
        assert_eq!(text.lines().count(), 4 + 3);
    }
}
