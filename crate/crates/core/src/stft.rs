//! Short-time Fourier analysis and overlap-add synthesis.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fft::{fft, Direction};
use crate::num::{scalar, Scalar};
use crate::spectrum::{Grid, RiSpectrogram};
use crate::wave::Waveform;
use crate::window::{check_cola, WindowKind};

pub const COLA_TOLERANCE: f64 = 1e-10;

/// Framing and transform parameters.
///
/// Frames are taken without zero-padding: frame t covers samples
/// [t*hop, t*hop + fft_size) and a trailing partial frame is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window: WindowKind,
    /// Overlap-add gain of the window at this hop, fixed at construction.
    cola_gain: f64,
}

impl StftConfig {
    pub fn new(fft_size: usize, hop: usize, window: WindowKind) -> Result<Self> {
        if fft_size < 2 || !fft_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "fft_size must be even and >= 2, got {fft_size}"
            )));
        }
        if hop == 0 || hop > fft_size {
            return Err(Error::InvalidConfig(format!(
                "hop must be in 1..={fft_size}, got {hop}"
            )));
        }
        let coeffs: Vec<f64> = window.coefficients(fft_size);
        let cola_gain = check_cola(&coeffs, hop, COLA_TOLERANCE)?;
        Ok(StftConfig {
            fft_size,
            hop,
            window,
            cola_gain,
        })
    }

    /// Default analysis setup: 512-point FFT, 256 hop, Hann window, which
    /// yields 257 frequency bins at 16 kHz.
    pub fn default_16k() -> Self {
        StftConfig::new(512, 256, WindowKind::Hann).expect("default config is COLA")
    }

    /// Number of half-spectrum bins L = N/2 + 1.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn cola_gain(&self) -> f64 {
        self.cola_gain
    }

    /// Number of whole frames for a signal of the given length.
    pub fn frame_count(&self, samples: usize) -> usize {
        if samples < self.fft_size {
            0
        } else {
            1 + (samples - self.fft_size) / self.hop
        }
    }

    /// Length of the waveform synthesized from `frames` whole frames.
    pub fn synthesis_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.fft_size
        }
    }
}

/// Analyzes a waveform into an RI spectrogram (half spectra, bins 0..L-1).
pub fn stft<T: Scalar>(wave: &Waveform<T>, cfg: &StftConfig) -> Result<RiSpectrogram<T>> {
    wave.check_finite()?;
    let n = cfg.fft_size;
    if wave.len() < n {
        return Err(Error::InsufficientSamples {
            needed: n,
            got: wave.len(),
        });
    }
    let frames = cfg.frame_count(wave.len());
    let bins = cfg.bins();
    let win: Vec<T> = cfg.window.coefficients(n);
    let mut real = Grid::zeros(frames, bins);
    let mut imag = Grid::zeros(frames, bins);
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    for t in 0..frames {
        let start = t * cfg.hop;
        for k in 0..n {
            re[k] = wave.samples[start + k] * win[k];
            im[k] = T::zero();
        }
        fft(&mut re, &mut im, Direction::Forward);
        let rrow = real.row_mut(t);
        rrow.copy_from_slice(&re[..bins]);
        let irow = imag.row_mut(t);
        irow.copy_from_slice(&im[..bins]);
        // Spectra of real frames are exactly real at DC and Nyquist; clear
        // the round-off residue so the invariant holds bit-exactly.
        irow[0] = T::zero();
        irow[bins - 1] = T::zero();
    }
    Ok(RiSpectrogram { real, imag })
}

/// Synthesizes a waveform by overlap-adding per-frame inverse transforms and
/// dividing by the window's constant overlap-add gain.
///
/// Round trips reconstruct interior samples exactly (up to round-off); the
/// first and last `fft_size - hop` samples keep the analysis-window taper.
pub fn istft<T: Scalar>(
    ri: &RiSpectrogram<T>,
    cfg: &StftConfig,
    sample_rate: u32,
) -> Result<Waveform<T>> {
    ri.validate()?;
    let frames = ri.frames();
    if frames == 0 {
        return Err(Error::EmptyInput("spectrogram has no frames"));
    }
    let bins = cfg.bins();
    if ri.bins() != bins {
        return Err(Error::DimensionMismatch {
            context: "spectrogram bins",
            expected: bins,
            got: ri.bins(),
        });
    }
    let n = cfg.fft_size;
    let out_len = cfg.synthesis_len(frames);
    let mut out = vec![T::zero(); out_len];
    let inv_gain: T = scalar(1.0 / cfg.cola_gain);
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    for t in 0..frames {
        // Rebuild the conjugate-symmetric full spectrum from the half bins.
        let rr = ri.real.row(t);
        let ir = ri.imag.row(t);
        re[..bins].copy_from_slice(rr);
        im[..bins].copy_from_slice(ir);
        im[0] = T::zero();
        im[bins - 1] = T::zero();
        for k in bins..n {
            re[k] = rr[n - k];
            im[k] = -ir[n - k];
        }
        fft(&mut re, &mut im, Direction::Inverse);
        let start = t * cfg.hop;
        for k in 0..n {
            out[start + k] += re[k] * inv_gain;
        }
    }
    Waveform::new(out, sample_rate)
}

/// Debug dump: one frame per row, 2L columns [real 0..L-1, imag 0..L-1],
/// scientific notation with 9 significant digits.
pub fn dump_spectrogram_csv<T: Scalar, W: Write>(ri: &RiSpectrogram<T>, out: &mut W) -> Result<()> {
    for t in 0..ri.frames() {
        let mut first = true;
        for v in ri.real.row(t).iter().chain(ri.imag.row(t).iter()) {
            if !first {
                write!(out, ",")?;
            }
            write!(out, "{:.8e}", v.to_f64().unwrap_or(f64::NAN))?;
            first = false;
        }
        writeln!(out)?;
    }
    Ok(())
}
