//! In-place complex FFT (radix-2) with a direct-evaluation fallback for
//! non-power-of-two sizes.
//!
//! Convention: the forward transform computes X[k] = sum_n x[n] e^{-2 pi i k n / N}
//! with no scaling; the inverse uses e^{+...} and is scaled by 1/N.

use crate::num::{scalar, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Transforms (re, im) in place. Slices must have equal length; any length
/// >= 1 is accepted (direct evaluation is used when it is not a power of two).
pub fn fft<T: Scalar>(re: &mut [T], im: &mut [T], dir: Direction) {
    assert_eq!(re.len(), im.len());
    let n = re.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        fft_radix2(re, im, dir);
    } else {
        let (r, i) = dft_direct(re, im, dir);
        re.copy_from_slice(&r);
        im.copy_from_slice(&i);
    }
    if dir == Direction::Inverse {
        let inv_n: T = T::one() / scalar(n as f64);
        for v in re.iter_mut() {
            *v *= inv_n;
        }
        for v in im.iter_mut() {
            *v *= inv_n;
        }
    }
}

fn fft_radix2<T: Scalar>(re: &mut [T], im: &mut [T], dir: Direction) {
    let n = re.len();
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 0..n {
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
    }
    let sign = match dir {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut len = 2usize;
    while len <= n {
        let ang = sign * 2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi): (T, T) = (scalar(ang.cos()), scalar(ang.sin()));
        let mut base = 0usize;
        while base < n {
            let mut cr = T::one();
            let mut ci = T::zero();
            for off in 0..len / 2 {
                let a = base + off;
                let b = a + len / 2;
                let tr = re[b] * cr - im[b] * ci;
                let ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
            base += len;
        }
        len <<= 1;
    }
}

/// Direct O(N^2) evaluation; used for non-power-of-two sizes.
fn dft_direct<T: Scalar>(re: &[T], im: &[T], dir: Direction) -> (Vec<T>, Vec<T>) {
    let n = re.len();
    let sign = match dir {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut out_re = vec![T::zero(); n];
    let mut out_im = vec![T::zero(); n];
    for k in 0..n {
        let mut sr = T::zero();
        let mut si = T::zero();
        for m in 0..n {
            let ang = sign * 2.0 * std::f64::consts::PI * (k as f64) * (m as f64) / n as f64;
            let (c, s): (T, T) = (scalar(ang.cos()), scalar(ang.sin()));
            sr = sr + re[m] * c - im[m] * s;
            si = si + re[m] * s + im[m] * c;
        }
        out_re[k] = sr;
        out_im[k] = si;
    }
    (out_re, out_im)
}
