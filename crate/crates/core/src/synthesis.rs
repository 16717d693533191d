//! Fixed linear algebra connecting stacked RI vectors to time-domain frames
//! and log-power spectra.
//!
//! For a half-spectrum of L bins the full transform length is N = 2L - 2.
//! U1 extends the real half to its even full-length symmetry, U2 extends the
//! imaginary half to its odd symmetry, and C, S hold the cosine/sine parts of
//! the inverse DFT (with the 1/N factor). The frame recovered from a stacked
//! vector y = [y_r, y_i] is then F y with F = [C U1 | -S U2]. P = [I | I]
//! folds squared real/imag parts into per-bin power.

use crate::error::{Error, Result};
use crate::num::{scalar, Scalar};

/// Dense row-major matrix, just big enough for this module's needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = T::zero();
            for (a, b) in row.iter().zip(v) {
                acc += *a * *b;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// Transpose product: self^T v.
    pub fn t_mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "transposed matrix-vector product",
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.cols];
        for (r, &vr) in v.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (c, &m) in row.iter().enumerate() {
                out[c] += m * vr;
            }
        }
        Ok(out)
    }
}

/// The fixed matrices U1, U2, C, S, F, P for a given number of bins.
#[derive(Debug, Clone)]
pub struct SynthesisMatrices<T> {
    pub bins: usize,
    /// Full transform length N = 2 bins - 2.
    pub full_len: usize,
    pub u1: Mat<T>,
    pub u2: Mat<T>,
    pub c: Mat<T>,
    pub s: Mat<T>,
    pub f: Mat<T>,
    pub p: Mat<T>,
    /// Diagonal of F^T F; F^T F is diagonal, so the waveform-domain loss is a
    /// fixed positive reweighting of the RI loss on valid spectra.
    pub ftf_diag: Vec<T>,
}

/// Builds the synthesis matrices for `bins` half-spectrum bins (bins >= 2).
pub fn build_synthesis_matrices<T: Scalar>(bins: usize) -> Result<SynthesisMatrices<T>> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let l = bins;
    let n = 2 * l - 2;

    // U1: even extension of the real half; entries in {0, 1}.
    let mut u1 = Mat::zeros(n, l);
    // U2: odd extension of the imaginary half; entries in {-1, 0, 1}.
    let mut u2 = Mat::zeros(n, l);
    for k in 0..l {
        u1.set(k, k, T::one());
        u2.set(k, k, T::one());
    }
    for k in 1..l - 1 {
        u1.set(n - k, k, T::one());
        u2.set(n - k, k, -T::one());
    }

    // C, S: inverse-DFT cosine/sine matrices carrying the 1/N factor.
    let mut c = Mat::zeros(n, n);
    let mut s = Mat::zeros(n, n);
    for row in 0..n {
        for col in 0..n {
            let ang = 2.0 * std::f64::consts::PI * (row as f64) * (col as f64) / n as f64;
            c.set(row, col, scalar(ang.cos() / n as f64));
            s.set(row, col, scalar(ang.sin() / n as f64));
        }
    }

    // F = [C U1 | -S U2], assembled column-by-column through the (at most
    // two) unit entries of each U column; this matches the dense product
    // term for term.
    let mut f = Mat::zeros(n, 2 * l);
    for row in 0..n {
        for k in 0..l {
            let mut acc: T = c.at(row, k);
            if k >= 1 && k <= l - 2 {
                acc += c.at(row, n - k);
            }
            f.set(row, k, acc);
        }
        for k in 0..l {
            let mut acc: T = s.at(row, k);
            if k >= 1 && k <= l - 2 {
                acc -= s.at(row, n - k);
            }
            f.set(row, l + k, -acc);
        }
    }

    // P = [I | I].
    let mut p = Mat::zeros(l, 2 * l);
    for k in 0..l {
        p.set(k, k, T::one());
        p.set(k, l + k, T::one());
    }

    // diag(F^T F): column norms of F.
    let mut ftf_diag = vec![T::zero(); 2 * l];
    for (col, d) in ftf_diag.iter_mut().enumerate() {
        let mut acc = T::zero();
        for row in 0..n {
            let v = f.at(row, col);
            acc += v * v;
        }
        *d = acc;
    }

    Ok(SynthesisMatrices {
        bins: l,
        full_len: n,
        u1,
        u2,
        c,
        s,
        f,
        p,
        ftf_diag,
    })
}

/// Applies F to a stacked RI vector, producing the length-(2L-2) time frame.
pub fn frame_via_f<T: Scalar>(stacked: &[T], m: &SynthesisMatrices<T>) -> Result<Vec<T>> {
    if stacked.len() != 2 * m.bins {
        return Err(Error::DimensionMismatch {
            context: "stacked RI vector",
            expected: 2 * m.bins,
            got: stacked.len(),
        });
    }
    m.f.mul_vec(stacked)
}

/// Per-bin log power log(max(y_r^2 + y_i^2, eps)) of a stacked RI vector,
/// computed as log(P sqr(y)) with the floor.
pub fn lps_from_ri<T: Scalar>(stacked: &[T], bins: usize, eps: T) -> Result<Vec<T>> {
    if stacked.len() != 2 * bins {
        return Err(Error::DimensionMismatch {
            context: "stacked RI vector",
            expected: 2 * bins,
            got: stacked.len(),
        });
    }
    if eps <= T::zero() {
        return Err(Error::InvalidArgument("log floor eps must be > 0".into()));
    }
    let (re, im) = stacked.split_at(bins);
    Ok(re
        .iter()
        .zip(im)
        .map(|(&r, &i)| (r * r + i * i).max(eps).ln())
        .collect())
}
