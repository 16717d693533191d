//! Core library for complex-spectrogram speech enhancement.
//!
//! The signal path works on real/imaginary (RI) spectrograms: noisy waveforms
//! are analyzed with a short-time Fourier transform, a small convolutional or
//! dense network maps noisy RI frames to clean ones, and the result is
//! synthesized back to a waveform. The training objective can mix a plain RI
//! reconstruction term with a log-power-spectrogram term, both expressed
//! through fixed linear "synthesis" matrices so that analytic gradients flow
//! through the whole stack.
//!
//! All numeric code is generic over the scalar type (`f32` or `f64`) via
//! [`num::Scalar`]; concrete aliases for the common instantiations live at
//! the crate root.

pub mod dataset;
pub mod error;
pub mod fft;
pub mod io;
pub mod metrics;
pub mod model;
pub mod num;
pub mod phase;
pub mod rng;
pub mod spectrum;
pub mod stft;
pub mod synthesis;
pub mod wave;
pub mod window;

pub use error::{Error, Result};
pub use num::Scalar;

/// Waveform in single precision, the training/runtime type.
pub type Waveform32 = wave::Waveform<f32>;
/// Waveform in double precision, used by oracles and metric code.
pub type Waveform64 = wave::Waveform<f64>;
/// RI spectrogram in single precision.
pub type RiSpectrogram32 = spectrum::RiSpectrogram<f32>;
/// RI spectrogram in double precision.
pub type RiSpectrogram64 = spectrum::RiSpectrogram<f64>;
/// Synthesis matrices in double precision (the default for loss algebra tests).
pub type SynthesisMatrices64 = synthesis::SynthesisMatrices<f64>;
