//! RI spectrograms and per-frame stacked RI vectors.

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Dense frames-by-bins storage (row = frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Grid {
            frames,
            bins,
            data: vec![T::zero(); frames * bins],
        }
    }

    pub fn from_data(frames: usize, bins: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != frames * bins {
            return Err(Error::DimensionMismatch {
                context: "grid data",
                expected: frames * bins,
                got: data.len(),
            });
        }
        Ok(Grid { frames, bins, data })
    }

    #[inline]
    pub fn at(&self, frame: usize, bin: usize) -> T {
        self.data[frame * self.bins + bin]
    }

    #[inline]
    pub fn set(&mut self, frame: usize, bin: usize, v: T) {
        self.data[frame * self.bins + bin] = v;
    }

    pub fn row(&self, frame: usize) -> &[T] {
        &self.data[frame * self.bins..(frame + 1) * self.bins]
    }

    pub fn row_mut(&mut self, frame: usize) -> &mut [T] {
        &mut self.data[frame * self.bins..(frame + 1) * self.bins]
    }
}

/// Real and imaginary half-spectra, one row per frame. For spectra of real
/// signals the DC and Nyquist imaginary parts are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RiSpectrogram<T> {
    pub real: Grid<T>,
    pub imag: Grid<T>,
}

impl<T: Scalar> RiSpectrogram<T> {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        RiSpectrogram {
            real: Grid::zeros(frames, bins),
            imag: Grid::zeros(frames, bins),
        }
    }

    pub fn from_parts(real: Grid<T>, imag: Grid<T>) -> Result<Self> {
        if real.frames != imag.frames || real.bins != imag.bins {
            return Err(Error::DimensionMismatch {
                context: "RI spectrogram parts",
                expected: real.data.len(),
                got: imag.data.len(),
            });
        }
        let s = RiSpectrogram { real, imag };
        s.validate()?;
        Ok(s)
    }

    pub fn frames(&self) -> usize {
        self.real.frames
    }

    pub fn bins(&self) -> usize {
        self.real.bins
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .real
            .data
            .iter()
            .chain(self.imag.data.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite {
                context: "RI spectrogram",
            });
        }
        let last = self.bins() - 1;
        for t in 0..self.frames() {
            if self.imag.at(t, 0) != T::zero() || self.imag.at(t, last) != T::zero() {
                return Err(Error::InvalidArgument(
                    "DC/Nyquist imaginary parts must be zero".into(),
                ));
            }
        }
        Ok(())
    }

    /// Forces the DC and Nyquist imaginary parts to zero (used when
    /// assembling spectra from unconstrained model outputs).
    pub fn zero_dc_nyquist_imag(&mut self) {
        let last = self.bins() - 1;
        for t in 0..self.frames() {
            self.imag.set(t, 0, T::zero());
            self.imag.set(t, last, T::zero());
        }
    }

    /// One frame as a stacked [real 0..L-1, imag 0..L-1] vector.
    pub fn frame_stacked(&self, frame: usize) -> StackedRi<T> {
        let mut values = Vec::with_capacity(2 * self.bins());
        values.extend_from_slice(self.real.row(frame));
        values.extend_from_slice(self.imag.row(frame));
        StackedRi { values }
    }

    pub fn set_frame_stacked(&mut self, frame: usize, stacked: &[T]) -> Result<()> {
        let bins = self.bins();
        if stacked.len() != 2 * bins {
            return Err(Error::DimensionMismatch {
                context: "stacked RI frame",
                expected: 2 * bins,
                got: stacked.len(),
            });
        }
        self.real.row_mut(frame).copy_from_slice(&stacked[..bins]);
        self.imag.row_mut(frame).copy_from_slice(&stacked[bins..]);
        Ok(())
    }

    pub fn magnitude(&self) -> Grid<T> {
        let mut out = Grid::zeros(self.frames(), self.bins());
        for (o, (r, i)) in out
            .data
            .iter_mut()
            .zip(self.real.data.iter().zip(self.imag.data.iter()))
        {
            *o = (*r * *r + *i * *i).sqrt();
        }
        out
    }
}

/// Length-2L vector laid out [real 0..L-1, imag 0..L-1].
#[derive(Debug, Clone, PartialEq)]
pub struct StackedRi<T> {
    pub values: Vec<T>,
}

impl<T: Scalar> StackedRi<T> {
    pub fn from_halves(real: &[T], imag: &[T]) -> Result<Self> {
        if real.len() != imag.len() {
            return Err(Error::DimensionMismatch {
                context: "stacked RI halves",
                expected: real.len(),
                got: imag.len(),
            });
        }
        let mut values = Vec::with_capacity(2 * real.len());
        values.extend_from_slice(real);
        values.extend_from_slice(imag);
        Ok(StackedRi { values })
    }

    pub fn bins(&self) -> usize {
        self.values.len() / 2
    }

    pub fn real(&self) -> &[T] {
        &self.values[..self.bins()]
    }

    pub fn imag(&self) -> &[T] {
        &self.values[self.bins()..]
    }
}

/// Builds an RI spectrogram from magnitude and phase.
///
/// real = mag cos(phase), imag = mag sin(phase), except at DC and Nyquist
/// where the imaginary part is forced to zero and the (signed) value
/// mag cos(phase) lands entirely in the real part.
pub fn combine_magnitude_phase<T: Scalar>(
    magnitude: &Grid<T>,
    phase: &Grid<T>,
) -> Result<RiSpectrogram<T>> {
    if magnitude.frames != phase.frames || magnitude.bins != phase.bins {
        return Err(Error::DimensionMismatch {
            context: "magnitude/phase shapes",
            expected: magnitude.data.len(),
            got: phase.data.len(),
        });
    }
    if magnitude.data.iter().any(|&m| m < T::zero()) {
        return Err(Error::InvalidArgument(
            "magnitude must be non-negative".into(),
        ));
    }
    let (frames, bins) = (magnitude.frames, magnitude.bins);
    let mut real = Grid::zeros(frames, bins);
    let mut imag = Grid::zeros(frames, bins);
    let last = bins - 1;
    for t in 0..frames {
        for k in 0..bins {
            let m = magnitude.at(t, k);
            let p = phase.at(t, k);
            if k == 0 || k == last {
                real.set(t, k, m * p.cos());
                // imag stays zero: these bins are real for real signals.
            } else {
                real.set(t, k, m * p.cos());
                imag.set(t, k, m * p.sin());
            }
        }
    }
    RiSpectrogram::from_parts(real, imag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::phase_of;
    use crate::rng::Rng;

    fn grid_from(frames: usize, bins: usize, f: impl Fn(usize, usize) -> f64) -> Grid<f64> {
        let mut g = Grid::zeros(frames, bins);
        for t in 0..frames {
            for k in 0..bins {
                g.set(t, k, f(t, k));
            }
        }
        g
    }

    #[test]
    fn zero_phase_gives_real_part() {
        let mag = grid_from(2, 5, |t, k| (t + k) as f64);
        let phase = Grid::zeros(2, 5);
        let s = combine_magnitude_phase(&mag, &phase).unwrap();
        assert_eq!(s.real, mag);
        assert!(s.imag.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quarter_turn_at_interior_bin() {
        let mut mag = Grid::zeros(1, 5);
        mag.set(0, 2, 1.0);
        let mut phase = Grid::zeros(1, 5);
        phase.set(0, 2, std::f64::consts::FRAC_PI_2);
        let s = combine_magnitude_phase(&mag, &phase).unwrap();
        assert!(s.real.at(0, 2).abs() < 1e-15);
        assert!((s.imag.at(0, 2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_magnitude_rejected() {
        let mut mag = Grid::zeros(1, 3);
        mag.set(0, 1, -0.5);
        let phase = Grid::zeros(1, 3);
        assert!(combine_magnitude_phase(&mag, &phase).is_err());
    }

    #[test]
    fn magnitude_phase_round_trip() {
        // combine(magnitude(X), phase(X)) == X for spectra of real signals,
        // including negative DC/Nyquist values (phase pi folds the sign back).
        let mut rng = Rng::new(77);
        let bins = 9;
        let mut real = Grid::zeros(3, bins);
        let mut imag = Grid::zeros(3, bins);
        for t in 0..3 {
            for k in 0..bins {
                real.set(t, k, rng.normal());
                if k != 0 && k != bins - 1 {
                    imag.set(t, k, rng.normal());
                }
            }
        }
        let x = RiSpectrogram::from_parts(real, imag).unwrap();
        let back = combine_magnitude_phase(&x.magnitude(), &phase_of(&x).values).unwrap();
        for (a, b) in back.real.data.iter().zip(&x.real.data) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        for (a, b) in back.imag.data.iter().zip(&x.imag.data) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn validate_rejects_nonzero_nyquist_imag() {
        let real = Grid::zeros(1, 4);
        let mut imag = Grid::zeros(1, 4);
        imag.set(0, 3, 0.1);
        assert!(RiSpectrogram::from_parts(real, imag).is_err());
    }
}
