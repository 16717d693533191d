//! Time-domain signals and 16-bit PCM WAV I/O.

use std::path::Path;

use crate::error::{Error, Result};
use crate::num::{scalar, scalar_usize, Scalar};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono waveform with amplitudes nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Scalar> Waveform<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample_rate must be > 0".into()));
        }
        let w = Waveform {
            samples,
            sample_rate,
        };
        w.check_finite()?;
        Ok(w)
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Waveform {
            samples: vec![T::zero(); len],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite {
                context: "waveform samples",
            });
        }
        Ok(())
    }

    /// Mean power (mean of squared samples).
    pub fn power(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        let sum = self.samples.iter().fold(T::zero(), |acc, &s| acc + s * s);
        sum / scalar_usize(self.samples.len())
    }

    pub fn peak(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |acc, &s| acc.max(s.abs()))
    }

    pub fn scale_in_place(&mut self, factor: T) {
        for s in &mut self.samples {
            *s *= factor;
        }
    }

    /// Converts the scalar type (e.g. f32 -> f64 for metric computation).
    pub fn convert<U: Scalar>(&self) -> Waveform<U> {
        Waveform {
            samples: self
                .samples
                .iter()
                .map(|&s| scalar(s.to_f64().unwrap_or(0.0)))
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Reads a mono 16-bit PCM WAV file. Samples map to [-1, 1) via division by
/// 32768.
pub fn read_wav<T: Scalar, P: AsRef<Path>>(path: P) -> Result<Waveform<T>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.display().to_string()));
    }
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::WavFormat(format!(
            "{}: expected mono, got {} channels",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::WavFormat(format!(
            "{}: expected 16-bit PCM, got {:?} {} bits",
            path.display(),
            spec.sample_format,
            spec.bits_per_sample
        )));
    }
    let scale: T = scalar(1.0 / 32768.0);
    let mut samples = Vec::with_capacity(reader.len() as usize);
    for s in reader.samples::<i16>() {
        let v: T = scalar(f64::from(s?));
        samples.push(v * scale);
    }
    Waveform::new(samples, spec.sample_rate)
}

/// Writes a mono 16-bit PCM WAV file. Samples are clipped to [-1, 1) and
/// quantized by multiplication with 32768.
pub fn write_wav<T: Scalar, P: AsRef<Path>>(wave: &Waveform<T>, path: P) -> Result<()> {
    wave.check_finite()?;
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in &wave.samples {
        let v = s.to_f64().unwrap_or(0.0);
        let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q)?;
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(Waveform::new(vec![0.0, f64::NAN], 16_000).is_err());
        assert!(Waveform::new(vec![0.0, 0.5], 16_000).is_ok());
    }

    #[test]
    fn rejects_zero_sample_rate() {
        assert!(Waveform::new(vec![0.0f64], 0).is_err());
    }

    #[test]
    fn power_of_known_signal() {
        let w = Waveform::new(vec![1.0f64, -1.0, 1.0, -1.0], 16_000).unwrap();
        assert!((w.power() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wav_round_trip_is_close() {
        let dir = std::env::temp_dir().join("rispec_wave_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.wav");
        let samples: Vec<f64> = (0..256)
            .map(|n| 0.5 * (2.0 * std::f64::consts::PI * n as f64 / 32.0).sin())
            .collect();
        let w = Waveform::new(samples.clone(), 16_000).unwrap();
        write_wav(&w, &path).unwrap();
        let back: Waveform<f64> = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate, 16_000);
        assert_eq!(back.len(), w.len());
        for (a, b) in back.samples.iter().zip(&samples) {
            // 16-bit quantization error bound.
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn wav_write_read_exact_quantized_levels() {
        let dir = std::env::temp_dir().join("rispec_wave_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("levels.wav");
        // Values that are exact multiples of 1/32768 survive bit-exact.
        let samples: Vec<f64> = vec![0.0, 1.0 / 32768.0, -0.5, 0.25];
        let w = Waveform::new(samples.clone(), 16_000).unwrap();
        write_wav(&w, &path).unwrap();
        let back: Waveform<f64> = read_wav(&path).unwrap();
        assert_eq!(back.samples, samples);
    }
}
