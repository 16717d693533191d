//! Per-dimension mean/variance normalization statistics.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::{scalar, scalar_usize, Scalar};

pub const STD_FLOOR: f64 = 1e-6;
const MAGIC: &[u8; 4] = b"NRM1";

/// Per-dimension mean and standard deviation (population), std floored at
/// `STD_FLOOR`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> NormStats<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Identity stats (mean 0, std 1).
    pub fn identity(dim: usize) -> Self {
        NormStats {
            mean: vec![T::zero(); dim],
            std: vec![T::one(); dim],
        }
    }

    pub fn normalize_in_place(&self, frame: &mut [T]) {
        for ((v, m), s) in frame.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - *m) / *s;
        }
    }

    pub fn denormalize_in_place(&self, frame: &mut [T]) {
        for ((v, m), s) in frame.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = *v * *s + *m;
        }
    }

    /// Serializes as: magic "NRM1", u32 dimension, f64 means, f64 stds
    /// (little-endian).
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.dim() as u32).to_le_bytes())?;
        for v in &self.mean {
            out.write_all(&v.to_f64().unwrap_or(0.0).to_le_bytes())?;
        }
        for v in &self.std {
            out.write_all(&v.to_f64().unwrap_or(0.0).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Malformed {
                what: "norm stats file",
                detail: format!("bad magic {magic:?}"),
            });
        }
        let mut dim_bytes = [0u8; 4];
        input.read_exact(&mut dim_bytes)?;
        let dim = u32::from_le_bytes(dim_bytes) as usize;
        let mut read_vec = |n: usize| -> Result<Vec<T>> {
            let mut out = Vec::with_capacity(n);
            let mut buf = [0u8; 8];
            for _ in 0..n {
                input.read_exact(&mut buf)?;
                out.push(scalar(f64::from_le_bytes(buf)));
            }
            Ok(out)
        };
        let mean = read_vec(dim)?;
        let std = read_vec(dim)?;
        Ok(NormStats { mean, std })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        use std::io::Write;
        f.flush()?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

/// Computes per-dimension population statistics over feature frames.
pub fn compute_norm_stats<T: Scalar>(frames: &[impl AsRef<[T]>]) -> Result<NormStats<T>> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 frames for statistics, got {}",
            frames.len()
        )));
    }
    let dim = frames[0].as_ref().len();
    let mut sum = vec![T::zero(); dim];
    let mut sumsq = vec![T::zero(); dim];
    for frame in frames {
        let frame = frame.as_ref();
        if frame.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "feature frame",
                expected: dim,
                got: frame.len(),
            });
        }
        for ((acc, accsq), &v) in sum.iter_mut().zip(sumsq.iter_mut()).zip(frame) {
            *acc += v;
            *accsq += v * v;
        }
    }
    let n: T = scalar_usize(frames.len());
    let floor: T = scalar(STD_FLOOR);
    let mean: Vec<T> = sum.iter().map(|&s| s / n).collect();
    let std: Vec<T> = sumsq
        .iter()
        .zip(&mean)
        .map(|(&sq, &m)| (sq / n - m * m).max(T::zero()).sqrt().max(floor))
        .collect();
    Ok(NormStats { mean, std })
}
