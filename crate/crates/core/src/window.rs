//! Analysis windows and the constant-overlap-add check.

use crate::error::{Error, Result};
use crate::num::{scalar, Scalar};

/// Analysis window kind. Coefficients are generated on demand for the
/// working scalar type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Periodic Hann: w[n] = 0.5 (1 - cos(2 pi n / N)). Exactly COLA at
    /// hops that divide N.
    Hann,
    /// All-ones window; COLA only at hop == N.
    Rect,
}

impl WindowKind {
    pub fn coefficients<T: Scalar>(&self, len: usize) -> Vec<T> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| {
                    let phase = 2.0 * std::f64::consts::PI * n as f64 / len as f64;
                    scalar(0.5 * (1.0 - phase.cos()))
                })
                .collect(),
            WindowKind::Rect => vec![T::one(); len],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Rect => "rect",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(WindowKind::Hann),
            "rect" => Ok(WindowKind::Rect),
            other => Err(Error::InvalidConfig(format!("unknown window '{other}'"))),
        }
    }
}

/// Overlap-add gain of a window at the given hop: the sum of all shifted
/// window copies covering one sample, per offset class. Returns the mean
/// gain and the maximum relative deviation from it across offsets.
pub fn overlap_add_gain(window: &[f64], hop: usize) -> (f64, f64) {
    assert!(hop > 0 && hop <= window.len());
    let mut sums = vec![0.0; hop];
    for (n, w) in window.iter().enumerate() {
        sums[n % hop] += w;
    }
    let mean = sums.iter().sum::<f64>() / hop as f64;
    let max_dev = sums
        .iter()
        .map(|s| (s - mean).abs() / mean.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    (mean, max_dev)
}

/// Checks the constant-overlap-add property within the given relative
/// tolerance and returns the COLA gain.
pub fn check_cola(window: &[f64], hop: usize, tol: f64) -> Result<f64> {
    let (gain, dev) = overlap_add_gain(window, hop);
    if dev > tol {
        return Err(Error::InvalidConfig(format!(
            "window does not satisfy constant overlap-add at hop {hop}: relative deviation {dev:.3e}"
        )));
    }
    Ok(gain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hann_is_cola_at_half_overlap() {
        let w: Vec<f64> = WindowKind::Hann.coefficients(512);
        let gain = check_cola(&w, 256, 1e-10).unwrap();
        assert!((gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hann_is_cola_at_quarter_overlap() {
        let w: Vec<f64> = WindowKind::Hann.coefficients(512);
        let gain = check_cola(&w, 128, 1e-10).unwrap();
        assert!((gain - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hann_fails_cola_at_odd_hop() {
        let w: Vec<f64> = WindowKind::Hann.coefficients(512);
        assert!(check_cola(&w, 300, 1e-10).is_err());
    }

    #[test]
    fn rect_is_cola_at_full_hop() {
        let w: Vec<f64> = WindowKind::Rect.coefficients(64);
        let gain = check_cola(&w, 64, 1e-10).unwrap();
        assert!((gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f32_coefficients_match_f64() {
        let w64: Vec<f64> = WindowKind::Hann.coefficients(16);
        let w32: Vec<f32> = WindowKind::Hann.coefficients(16);
        for (a, b) in w64.iter().zip(&w32) {
            assert!((a - *b as f64).abs() < 1e-7);
        }
    }
}
