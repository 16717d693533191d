//! Mini-batch training loop.
//!
//! The network regresses normalized targets, but the objective is evaluated
//! in denormalized target units (gradients flow back through the fixed
//! affine denormalization), so the loss weights keep their meaning in
//! spectrogram space. Per-frame losses are summed and averaged per batch.

use crate::dataset::norm::NormStats;
use crate::error::{Error, Result};
use crate::model::adam::{adam_step, AdamConfig, AdamState};
use crate::model::layers::Batch;
use crate::model::loss::{mml_loss, mml_terms, ri_loss, MmlConfig};
use crate::model::network::{Mode, Network};
use crate::num::{scalar, scalar_usize, Scalar};
use crate::rng::Rng;

/// Training corpus already reduced to frames.
#[derive(Debug, Clone)]
pub struct TrainData<T> {
    /// Normalized input frames.
    pub inputs: Vec<Vec<T>>,
    /// Raw (unnormalized) target frames.
    pub targets: Vec<Vec<T>>,
    pub target_stats: NormStats<T>,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            batch_size: 32,
            adam: AdamConfig::default(),
        }
    }
}

/// One loss-log row (per optimization step).
#[derive(Debug, Clone)]
pub struct LossRecord {
    pub epoch: usize,
    pub step: u64,
    pub alpha: f64,
    pub beta: f64,
    pub ri_term: f64,
    pub lps_term: f64,
    pub total: f64,
}

/// Trains in place. `bins` is the half-spectrum size of the targets (the
/// log-power term needs it); for log-power-target baselines the objective
/// falls back to plain squared error and `mml.beta` must be zero.
/// `on_epoch` runs after each epoch (checkpointing etc.).
pub fn fit<T: Scalar, F>(
    net: &mut Network<T>,
    data: &TrainData<T>,
    mml: &MmlConfig,
    bins: usize,
    opts: &TrainOptions,
    rng: &mut Rng,
    mut on_epoch: F,
) -> Result<Vec<LossRecord>>
where
    F: FnMut(usize, &Network<T>) -> Result<()>,
{
    mml.validate()?;
    if data.inputs.is_empty() {
        return Err(Error::EmptyInput("training frames"));
    }
    if data.inputs.len() != data.targets.len() {
        return Err(Error::DimensionMismatch {
            context: "training inputs/targets",
            expected: data.inputs.len(),
            got: data.targets.len(),
        });
    }
    // Log-power-target baselines train on plain squared error.
    let plain_mse = net.output_dim != 2 * bins;
    if plain_mse && mml.beta != 0.0 {
        return Err(Error::InvalidConfig(
            "the log-power objective term requires stacked RI targets".into(),
        ));
    }
    if opts.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
    }
    let mut shuffle_rng = rng.derive("shuffle");
    let mut state = AdamState::for_network(net);
    let mut records = Vec::new();
    let mut step: u64 = 0;
    let n = data.inputs.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=opts.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut start = 0usize;
        while start < n {
            let end = (start + opts.batch_size).min(n);
            let idx = &order[start..end];
            start = end;
            // Batch statistics need at least two samples.
            if idx.len() < 2 && net.config.use_batch_norm {
                continue;
            }
            let rows: Vec<&[T]> = idx.iter().map(|&i| data.inputs[i].as_slice()).collect();
            let input = Batch::from_rows(&rows, net.input_channels)?;
            let (output, caches) = net.forward(&input, Mode::Train)?;
            let batch_len = idx.len();
            let inv_b: T = T::one() / scalar_usize(batch_len);
            let mut grad_out = Batch::zeros(batch_len, output.channels, output.len);
            let mut ri_sum = 0.0f64;
            let mut lps_sum = 0.0f64;
            let mut total_sum = 0.0f64;
            for (row, &i) in idx.iter().enumerate() {
                let mut yhat = output.sample(row).to_vec();
                data.target_stats.denormalize_in_place(&mut yhat);
                let target = &data.targets[i];
                let (loss, grad, terms) = if plain_mse {
                    let (l, g) = ri_loss(&yhat, target)?;
                    let la: T = scalar::<T>(mml.alpha) * l;
                    let ga: Vec<T> = g.into_iter().map(|v| scalar::<T>(mml.alpha) * v).collect();
                    let t = (la.to_f64().unwrap_or(0.0), 0.0);
                    (la, ga, t)
                } else {
                    let (l, g) = mml_loss(&yhat, target, bins, mml)?;
                    let (tr, tl) = mml_terms(&yhat, target, bins, mml)?;
                    (
                        l,
                        g,
                        (tr.to_f64().unwrap_or(0.0), tl.to_f64().unwrap_or(0.0)),
                    )
                };
                ri_sum += terms.0;
                lps_sum += terms.1;
                total_sum += loss.to_f64().unwrap_or(f64::NAN);
                // Chain through the denormalization and the batch average.
                let gslot = grad_out.sample_mut(row);
                for ((gs, g), s) in gslot.iter_mut().zip(&grad).zip(&data.target_stats.std) {
                    *gs = *g * *s * inv_b;
                }
            }
            let total = total_sum / batch_len as f64;
            if !total.is_finite() {
                return Err(Error::NumericalDivergence(format!(
                    "training loss at epoch {epoch}, step {step}"
                )));
            }
            let grads = net.backward(&caches, &grad_out)?;
            adam_step(&mut state, net, &grads, &opts.adam)?;
            net.update_running_stats(&caches);
            step += 1;
            records.push(LossRecord {
                epoch,
                step,
                alpha: mml.alpha,
                beta: mml.beta,
                ri_term: ri_sum / batch_len as f64,
                lps_term: lps_sum / batch_len as f64,
                total,
            });
        }
        on_epoch(epoch, net)?;
    }
    Ok(records)
}

/// Runs inference over frames (normalized in, normalized out), batched only
/// for throughput; results do not depend on the batch split.
pub fn infer_frames<T: Scalar>(net: &Network<T>, frames: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let mut out = Vec::with_capacity(frames.len());
    const CHUNK: usize = 64;
    let mut start = 0;
    while start < frames.len() {
        let end = (start + CHUNK).min(frames.len());
        let rows: Vec<&[T]> = frames[start..end].iter().map(|f| f.as_slice()).collect();
        let input = Batch::from_rows(&rows, net.input_channels)?;
        let (output, _) = net.forward(&input, Mode::Infer)?;
        for b in 0..rows.len() {
            out.push(output.sample(b).to_vec());
        }
        start = end;
    }
    Ok(out)
}
