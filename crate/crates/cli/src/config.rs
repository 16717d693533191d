//! Experiment configuration: flat `key = value` text grouped into sections.
//!
//! The format is intentionally diff-able; `rispec print-config` emits the
//! effective configuration in exactly this shape.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rispec_core::model::{AdamConfig, MmlConfig, TrainOptions};
use rispec_core::model::{Arch, ModelConfig};
use rispec_core::stft::StftConfig;
use rispec_core::window::WindowKind;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub window: WindowKind,

    pub model: ModelConfig,
    pub context: usize,

    pub mml: MmlConfig,

    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,

    pub manifest: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sample_rate: 16_000,
            fft_size: 512,
            hop: 256,
            window: WindowKind::Hann,
            model: ModelConfig::default_for(Arch::RiCnn),
            context: 0,
            mml: MmlConfig::default(),
            epochs: 10,
            batch_size: 32,
            lr: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 17,
            manifest: PathBuf::from("data/manifests/smoke.csv"),
        }
    }
}

impl ExperimentConfig {
    pub fn stft(&self) -> Result<StftConfig> {
        StftConfig::new(self.fft_size, self.hop, self.window)
            .map_err(|e| anyhow!("invalid stft configuration: {e}"))
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.adam_beta1,
                beta2: self.adam_beta2,
                eps: self.adam_eps,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stft()?;
        self.model.validate().map_err(|e| anyhow!("{e}"))?;
        self.mml.validate().map_err(|e| anyhow!("{e}"))?;
        if self.batch_size == 0 {
            bail!("batch_size must be >= 1");
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key = value` assignments grouped under `[section]` headers.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| anyhow!("line {}: unterminated section header", lineno + 1))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value'", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            self.set(&section, key, value)
                .with_context(|| format!("line {}: [{section}] {key}", lineno + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow!("bad value '{value}': {e}"))
        }
        match (section, key) {
            ("stft", "sample_rate") => self.sample_rate = num(value)?,
            ("stft", "fft_size") => self.fft_size = num(value)?,
            ("stft", "hop") => self.hop = num(value)?,
            ("stft", "window") => {
                self.window = WindowKind::parse(value).map_err(|e| anyhow!("{e}"))?
            }
            ("model", "arch") => {
                let arch = Arch::parse(value).map_err(|e| anyhow!("{e}"))?;
                let preserved = self.model.clone();
                self.model = ModelConfig {
                    arch,
                    input_channels: match arch {
                        Arch::RiCnn | Arch::RiDnn => 2,
                        Arch::LpsDnnBaseline => 1,
                    },
                    ..preserved
                };
            }
            ("model", "conv_layers") => self.model.conv_layers = num(value)?,
            ("model", "filters_per_layer") => self.model.filters_per_layer = num(value)?,
            ("model", "filter_len") => self.model.filter_len = num(value)?,
            ("model", "dense_layers") => self.model.dense_layers = num(value)?,
            ("model", "dense_width") => self.model.dense_width = num(value)?,
            ("model", "dnn_hidden_layers") => self.model.dnn_hidden_layers = num(value)?,
            ("model", "dnn_width") => self.model.dnn_width = num(value)?,
            ("model", "use_batch_norm") => {
                self.model.use_batch_norm = match value {
                    "true" => true,
                    "false" => false,
                    other => bail!("bad boolean '{other}'"),
                }
            }
            ("model", "context") => self.context = num(value)?,
            ("mml", "alpha") => self.mml.alpha = num(value)?,
            ("mml", "beta") => self.mml.beta = num(value)?,
            ("mml", "eps") => self.mml.eps = num(value)?,
            ("train", "epochs") => self.epochs = num(value)?,
            ("train", "batch_size") => self.batch_size = num(value)?,
            ("train", "lr") => self.lr = num(value)?,
            ("train", "adam_beta1") => self.adam_beta1 = num(value)?,
            ("train", "adam_beta2") => self.adam_beta2 = num(value)?,
            ("train", "adam_eps") => self.adam_eps = num(value)?,
            ("train", "seed") => self.seed = num(value)?,
            ("data", "manifest") => self.manifest = PathBuf::from(value),
            (section, key) => bail!("unknown configuration key [{section}] {key}"),
        }
        Ok(())
    }

    /// Renders the configuration in the same format `apply_text` parses.
    pub fn render(&self) -> String {
        let mut sections: Vec<(&str, BTreeMap<&str, String>)> = Vec::new();
        sections.push((
            "stft",
            BTreeMap::from([
                ("sample_rate", self.sample_rate.to_string()),
                ("fft_size", self.fft_size.to_string()),
                ("hop", self.hop.to_string()),
                ("window", self.window.name().to_string()),
            ]),
        ));
        sections.push((
            "model",
            BTreeMap::from([
                ("arch", self.model.arch.label().to_string()),
                ("conv_layers", self.model.conv_layers.to_string()),
                (
                    "filters_per_layer",
                    self.model.filters_per_layer.to_string(),
                ),
                ("filter_len", self.model.filter_len.to_string()),
                ("dense_layers", self.model.dense_layers.to_string()),
                ("dense_width", self.model.dense_width.to_string()),
                (
                    "dnn_hidden_layers",
                    self.model.dnn_hidden_layers.to_string(),
                ),
                ("dnn_width", self.model.dnn_width.to_string()),
                ("use_batch_norm", self.model.use_batch_norm.to_string()),
                ("context", self.context.to_string()),
            ]),
        ));
        sections.push((
            "mml",
            BTreeMap::from([
                ("alpha", format!("{}", self.mml.alpha)),
                ("beta", format!("{}", self.mml.beta)),
                ("eps", format!("{:e}", self.mml.eps)),
            ]),
        ));
        sections.push((
            "train",
            BTreeMap::from([
                ("epochs", self.epochs.to_string()),
                ("batch_size", self.batch_size.to_string()),
                ("lr", format!("{:e}", self.lr)),
                ("adam_beta1", format!("{}", self.adam_beta1)),
                ("adam_beta2", format!("{}", self.adam_beta2)),
                ("adam_eps", format!("{:e}", self.adam_eps)),
                ("seed", self.seed.to_string()),
            ]),
        ));
        sections.push((
            "data",
            BTreeMap::from([("manifest", self.manifest.display().to_string())]),
        ));
        let mut out = String::new();
        for (name, keys) in sections {
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in keys {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn render_parse_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.model.conv_layers = 2;
        cfg.mml.beta = 0.25;
        cfg.seed = 99;
        let text = cfg.render();
        let mut back = ExperimentConfig::default();
        back.apply_text(&text).unwrap();
        assert_eq!(back.model.conv_layers, 2);
        assert_eq!(back.mml.beta, 0.25);
        assert_eq!(back.seed, 99);
        assert_eq!(back.render(), text);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_text("[train]\nwarp_speed = 9\n").is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("# hello\n\n[train]\n# inner\nepochs = 3\n")
            .unwrap();
        assert_eq!(cfg.epochs, 3);
    }

    #[test]
    fn arch_switch_updates_input_channels() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("[model]\narch = lps_dnn_baseline\n")
            .unwrap();
        assert_eq!(cfg.model.input_channels, 1);
        cfg.apply_text("[model]\narch = ri_dnn\n").unwrap();
        assert_eq!(cfg.model.input_channels, 2);
    }
}
