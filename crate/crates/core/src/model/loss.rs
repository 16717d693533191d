//! Reconstruction objectives on stacked RI vectors, with analytic gradients
//! with respect to the prediction.
//!
//! The combined objective is alpha * ||yhat - y||^2 plus beta times the
//! squared distance between log power spectra; the latter is what couples
//! each bin's real and imaginary estimates (the power term mixes them),
//! whereas the pure RI term treats every coordinate independently.

use crate::error::{Error, Result};
use crate::num::{scalar, Scalar};
use crate::synthesis::SynthesisMatrices;

/// Weights for the combined objective.
#[derive(Debug, Clone, PartialEq)]
pub struct MmlConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Floor inside each log of the power term.
    pub eps: f64,
}

impl Default for MmlConfig {
    fn default() -> Self {
        MmlConfig {
            alpha: 1.0,
            beta: 0.0,
            eps: 1e-8,
        }
    }
}

impl MmlConfig {
    pub fn new(alpha: f64, beta: f64, eps: f64) -> Result<Self> {
        let cfg = MmlConfig { alpha, beta, eps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha and beta must be non-negative, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return Err(Error::InvalidConfig(
                "alpha and beta cannot both be zero".into(),
            ));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must be > 0, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

fn check_same_len<T>(yhat: &[T], y: &[T]) -> Result<()> {
    if yhat.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "loss operands",
            expected: y.len(),
            got: yhat.len(),
        });
    }
    Ok(())
}

/// Squared Euclidean distance; gradient 2 (yhat - y) at the prediction.
pub fn ri_loss<T: Scalar>(yhat: &[T], y: &[T]) -> Result<(T, Vec<T>)> {
    check_same_len(yhat, y)?;
    let mut loss = T::zero();
    let two = scalar::<T>(2.0);
    let mut grad = Vec::with_capacity(yhat.len());
    for (&a, &b) in yhat.iter().zip(y) {
        let d = a - b;
        loss += d * d;
        grad.push(two * d);
    }
    Ok((loss, grad))
}

/// Time-domain distance ||F yhat - F y||^2; gradient 2 F^T F (yhat - y).
pub fn waveform_loss<T: Scalar>(
    yhat: &[T],
    y: &[T],
    m: &SynthesisMatrices<T>,
) -> Result<(T, Vec<T>)> {
    check_same_len(yhat, y)?;
    if yhat.len() != 2 * m.bins {
        return Err(Error::DimensionMismatch {
            context: "waveform loss operands",
            expected: 2 * m.bins,
            got: yhat.len(),
        });
    }
    let diff: Vec<T> = yhat.iter().zip(y).map(|(&a, &b)| a - b).collect();
    let frame_err = m.f.mul_vec(&diff)?;
    let loss = frame_err.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let two = scalar::<T>(2.0);
    let grad: Vec<T> =
        m.f.t_mul_vec(&frame_err)?
            .into_iter()
            .map(|v| two * v)
            .collect();
    Ok((loss, grad))
}

/// Squared distance between log power spectra, powers floored at eps.
///
/// grad wrt yhat_r[k] is 2 d_k * 2 yhat_r[k] / p_k (and similarly for the
/// imaginary part), zero where the floor is active.
pub fn lps_loss<T: Scalar>(yhat: &[T], y: &[T], bins: usize, eps: T) -> Result<(T, Vec<T>)> {
    check_same_len(yhat, y)?;
    if yhat.len() != 2 * bins {
        return Err(Error::DimensionMismatch {
            context: "lps loss operands",
            expected: 2 * bins,
            got: yhat.len(),
        });
    }
    if eps <= T::zero() {
        return Err(Error::InvalidArgument("log floor eps must be > 0".into()));
    }
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); 2 * bins];
    let two = scalar::<T>(2.0);
    for k in 0..bins {
        let (hr, hi) = (yhat[k], yhat[bins + k]);
        let (tr, ti) = (y[k], y[bins + k]);
        let p_hat_raw = hr * hr + hi * hi;
        let p_hat = p_hat_raw.max(eps);
        let p_ref = (tr * tr + ti * ti).max(eps);
        let d = p_hat.ln() - p_ref.ln();
        loss += d * d;
        if p_hat_raw > eps {
            let coeff = two * d * two / p_hat;
            grad[k] = coeff * hr;
            grad[bins + k] = coeff * hi;
        }
    }
    Ok((loss, grad))
}

/// alpha * RI term + beta * log-power term. Terms with zero weight are not
/// evaluated, so beta = 0 reproduces the plain RI objective exactly.
pub fn mml_loss<T: Scalar>(
    yhat: &[T],
    y: &[T],
    bins: usize,
    cfg: &MmlConfig,
) -> Result<(T, Vec<T>)> {
    cfg.validate()?;
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); yhat.len()];
    if cfg.alpha > 0.0 {
        let a: T = scalar(cfg.alpha);
        let (l, g) = ri_loss(yhat, y)?;
        loss += a * l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += a * v;
        }
    }
    if cfg.beta > 0.0 {
        let b: T = scalar(cfg.beta);
        let (l, g) = lps_loss(yhat, y, bins, scalar(cfg.eps))?;
        loss += b * l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += b * v;
        }
    }
    Ok((loss, grad))
}

/// The two weighted component values (RI term, log-power term), for logging.
pub fn mml_terms<T: Scalar>(yhat: &[T], y: &[T], bins: usize, cfg: &MmlConfig) -> Result<(T, T)> {
    let ri = if cfg.alpha > 0.0 {
        scalar::<T>(cfg.alpha) * ri_loss(yhat, y)?.0
    } else {
        T::zero()
    };
    let lps = if cfg.beta > 0.0 {
        scalar::<T>(cfg.beta) * lps_loss(yhat, y, bins, scalar(cfg.eps))?.0
    } else {
        T::zero()
    };
    Ok((ri, lps))
}
