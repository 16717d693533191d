//! Adam with bias-corrected moment estimates.

use crate::error::{Error, Result};
use crate::model::network::{Gradients, Network};
use crate::num::{scalar, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state: step counter plus first/second moment buffers shaped
/// like the parameter list.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn for_network(net: &Network<T>) -> Self {
        let shapes: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
        AdamState {
            step: 0,
            m: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }
}

/// One bias-corrected update over every parameter tensor.
pub fn adam_step<T: Scalar>(
    state: &mut AdamState<T>,
    net: &mut Network<T>,
    grads: &Gradients<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    if grads.has_non_finite() {
        return Err(Error::NonFinite {
            context: "parameter gradients",
        });
    }
    let grad_slices = grads.slices();
    let mut params = net.param_slices_mut();
    if grad_slices.len() != params.len() {
        return Err(Error::DimensionMismatch {
            context: "gradient/parameter tensor count",
            expected: params.len(),
            got: grad_slices.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let b1: T = scalar(cfg.beta1);
    let b2: T = scalar(cfg.beta2);
    let lr: T = scalar(cfg.lr);
    let eps: T = scalar(cfg.eps);
    let bc1 = T::one() - b1.powi(t);
    let bc2 = T::one() - b2.powi(t);
    for ((param, grad), (m, v)) in params
        .iter_mut()
        .zip(&grad_slices)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        if param.len() != grad.len() {
            return Err(Error::DimensionMismatch {
                context: "gradient/parameter shape",
                expected: param.len(),
                got: grad.len(),
            });
        }
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (T::one() - b1) * g;
            v[i] = b2 * v[i] + (T::one() - b2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
