//! Minimal differentiable compute stack: frequency-axis convolution, dense
//! layers, PReLU, batch normalization, the combined RI/log-power objective,
//! and Adam. Gradients are written out analytically layer by layer; there is
//! no general autodiff.

pub mod adam;
pub mod checkpoint;
pub mod layers;
pub mod loss;
pub mod network;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use layers::Batch;
pub use loss::{lps_loss, mml_loss, ri_loss, waveform_loss, MmlConfig};
pub use network::{Gradients, Mode, Network};
pub use train::{fit, LossRecord, TrainData, TrainOptions};

use crate::error::{Error, Result};

/// Network family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    /// Frequency convolutions over RI channels, then dense layers.
    RiCnn,
    /// Fully connected on stacked RI frames.
    RiDnn,
    /// Fully connected on log-power spectra (magnitude-only baseline).
    LpsDnnBaseline,
}

impl Arch {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ri_cnn" => Ok(Arch::RiCnn),
            "ri_dnn" => Ok(Arch::RiDnn),
            "lps_dnn_baseline" => Ok(Arch::LpsDnnBaseline),
            other => Err(Error::InvalidConfig(format!("unknown arch '{other}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Arch::RiCnn => "ri_cnn",
            Arch::RiDnn => "ri_dnn",
            Arch::LpsDnnBaseline => "lps_dnn_baseline",
        }
    }

    pub fn tag(&self) -> u32 {
        match self {
            Arch::RiCnn => 0,
            Arch::RiDnn => 1,
            Arch::LpsDnnBaseline => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(Arch::RiCnn),
            1 => Ok(Arch::RiDnn),
            2 => Ok(Arch::LpsDnnBaseline),
            other => Err(Error::Malformed {
                what: "arch tag",
                detail: format!("{other}"),
            }),
        }
    }

    /// RI targets have 2L dims, LPS targets L.
    pub fn target_kind(&self) -> crate::dataset::TargetKind {
        match self {
            Arch::RiCnn | Arch::RiDnn => crate::dataset::TargetKind::Ri,
            Arch::LpsDnnBaseline => crate::dataset::TargetKind::Lps,
        }
    }
}

/// Architecture hyperparameters. The defaults follow the full-scale setup:
/// four 50-filter convolution layers with 25-tap kernels and two 512-wide
/// dense layers for the CNN; six 1000-wide hidden layers for the DNNs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub conv_layers: usize,
    pub filters_per_layer: usize,
    pub filter_len: usize,
    pub dense_layers: usize,
    pub dense_width: usize,
    pub dnn_hidden_layers: usize,
    pub dnn_width: usize,
    pub use_batch_norm: bool,
    pub input_channels: usize,
}

impl ModelConfig {
    pub fn default_for(arch: Arch) -> Self {
        ModelConfig {
            arch,
            conv_layers: 4,
            filters_per_layer: 50,
            filter_len: 25,
            dense_layers: 2,
            dense_width: 512,
            dnn_hidden_layers: 6,
            dnn_width: 1000,
            use_batch_norm: true,
            input_channels: match arch {
                Arch::RiCnn | Arch::RiDnn => 2,
                Arch::LpsDnnBaseline => 1,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("conv_layers", self.conv_layers),
            ("filters_per_layer", self.filters_per_layer),
            ("filter_len", self.filter_len),
            ("dense_layers", self.dense_layers),
            ("dense_width", self.dense_width),
            ("dnn_hidden_layers", self.dnn_hidden_layers),
            ("dnn_width", self.dnn_width),
            ("input_channels", self.input_channels),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 1, got {v}"
                )));
            }
        }
        if self.filter_len.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "filter_len must be odd for symmetric same-padding, got {}",
                self.filter_len
            )));
        }
        Ok(())
    }
}
