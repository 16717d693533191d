//! Data preparation: noise and clean-speech synthesis, SNR mixing, feature
//! extraction, normalization statistics, and the dataset manifest.

pub mod features;
pub mod manifest;
pub mod mix;
pub mod noise;
pub mod norm;
pub mod pairs;
pub mod speech;

pub use manifest::{load_manifest, ManifestEntry, Split};
pub use mix::{mix_at_snr, Mixture};
pub use noise::{generate_noise, NoiseKind};
pub use norm::{compute_norm_stats, NormStats};
pub use pairs::{input_features, make_training_pairs, TargetKind, TrainingPair};
pub use speech::synth_vowel;
