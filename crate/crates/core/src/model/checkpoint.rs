//! Checkpoint serialization.
//!
//! Layout (little-endian): magic "RIML", format version u32, the model
//! configuration and framing metadata as u32 fields, input and target
//! normalization statistics (each in the "NRM1" layout), then every tensor
//! in declaration order as u32 rank, rank u32 dims, and f32 data. Tensors
//! cover the optimizer parameters plus batch-norm running statistics, so a
//! loaded checkpoint reproduces inference bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::norm::NormStats;
use crate::error::{Error, Result};
use crate::model::network::Network;
use crate::model::Arch;
use crate::model::ModelConfig;
use crate::rng::Rng;
use crate::stft::StftConfig;
use crate::window::WindowKind;

const MAGIC: &[u8; 4] = b"RIML";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub bins: usize,
    pub context: usize,
    pub sample_rate: u32,
    pub stft: StftConfig,
    pub input_stats: NormStats<f32>,
    pub target_stats: NormStats<f32>,
    pub tensors: Vec<(Vec<usize>, Vec<f32>)>,
}

impl Checkpoint {
    pub fn from_network(
        net: &Network<f32>,
        stft: &StftConfig,
        sample_rate: u32,
        context: usize,
        input_stats: &NormStats<f32>,
        target_stats: &NormStats<f32>,
    ) -> Self {
        let tensors = net
            .tensors()
            .into_iter()
            .map(|(dims, data)| (dims, data.into_iter().map(|v| v as f32).collect()))
            .collect();
        Checkpoint {
            model: net.config.clone(),
            bins: net.input_len,
            context,
            sample_rate,
            stft: stft.clone(),
            input_stats: input_stats.clone(),
            target_stats: target_stats.clone(),
            tensors,
        }
    }

    /// Rebuilds the network with the stored weights.
    pub fn instantiate(&self) -> Result<Network<f32>> {
        let mut rng = Rng::new(0);
        let mut net = Network::build(&self.model, self.bins, self.context, &mut rng)?;
        let tensors64: Vec<(Vec<usize>, Vec<f64>)> = self
            .tensors
            .iter()
            .map(|(dims, data)| (dims.clone(), data.iter().map(|&v| f64::from(v)).collect()))
            .collect();
        net.load_tensors(&tensors64)?;
        Ok(net)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(MAGIC)?;
        let u = |v: usize| (v as u32).to_le_bytes();
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&self.model.arch.tag().to_le_bytes())?;
        out.write_all(&u(self.model.conv_layers))?;
        out.write_all(&u(self.model.filters_per_layer))?;
        out.write_all(&u(self.model.filter_len))?;
        out.write_all(&u(self.model.dense_layers))?;
        out.write_all(&u(self.model.dense_width))?;
        out.write_all(&u(self.model.dnn_hidden_layers))?;
        out.write_all(&u(self.model.dnn_width))?;
        out.write_all(&u(usize::from(self.model.use_batch_norm)))?;
        out.write_all(&u(self.model.input_channels))?;
        out.write_all(&u(self.bins))?;
        out.write_all(&u(self.context))?;
        out.write_all(&self.sample_rate.to_le_bytes())?;
        out.write_all(&u(self.stft.fft_size))?;
        out.write_all(&u(self.stft.hop))?;
        let window_tag: u32 = match self.stft.window {
            WindowKind::Hann => 0,
            WindowKind::Rect => 1,
        };
        out.write_all(&window_tag.to_le_bytes())?;
        self.input_stats.write_to(out)?;
        self.target_stats.write_to(out)?;
        out.write_all(&u(self.tensors.len()))?;
        for (dims, data) in &self.tensors {
            out.write_all(&u(dims.len()))?;
            for d in dims {
                out.write_all(&u(*d))?;
            }
            for v in data {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Malformed {
                what: "checkpoint",
                detail: format!("bad magic {magic:?}"),
            });
        }
        let mut buf4 = [0u8; 4];
        let mut next_u32 = |input: &mut R| -> Result<u32> {
            input.read_exact(&mut buf4)?;
            Ok(u32::from_le_bytes(buf4))
        };
        let version = next_u32(input)?;
        if version != VERSION {
            return Err(Error::Malformed {
                what: "checkpoint version",
                detail: format!("expected {VERSION}, got {version}"),
            });
        }
        let arch = Arch::from_tag(next_u32(input)?)?;
        let model = ModelConfig {
            arch,
            conv_layers: next_u32(input)? as usize,
            filters_per_layer: next_u32(input)? as usize,
            filter_len: next_u32(input)? as usize,
            dense_layers: next_u32(input)? as usize,
            dense_width: next_u32(input)? as usize,
            dnn_hidden_layers: next_u32(input)? as usize,
            dnn_width: next_u32(input)? as usize,
            use_batch_norm: next_u32(input)? != 0,
            input_channels: next_u32(input)? as usize,
        };
        let bins = next_u32(input)? as usize;
        let context = next_u32(input)? as usize;
        let sample_rate = next_u32(input)?;
        let fft_size = next_u32(input)? as usize;
        let hop = next_u32(input)? as usize;
        let window = match next_u32(input)? {
            0 => WindowKind::Hann,
            1 => WindowKind::Rect,
            other => {
                return Err(Error::Malformed {
                    what: "checkpoint window tag",
                    detail: format!("{other}"),
                })
            }
        };
        let stft = StftConfig::new(fft_size, hop, window)?;
        let input_stats = NormStats::<f32>::read_from(input)?;
        let target_stats = NormStats::<f32>::read_from(input)?;
        let n_tensors = next_u32(input)? as usize;
        let mut tensors = Vec::with_capacity(n_tensors);
        for _ in 0..n_tensors {
            let rank = next_u32(input)? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(next_u32(input)? as usize);
            }
            let count: usize = dims.iter().product();
            let mut data = Vec::with_capacity(count);
            let mut fbuf = [0u8; 4];
            for _ in 0..count {
                input.read_exact(&mut fbuf)?;
                data.push(f32::from_le_bytes(fbuf));
            }
            tensors.push((dims, data));
        }
        Ok(Checkpoint {
            model,
            bins,
            context,
            sample_rate,
            stft,
            input_stats,
            target_stats,
            tensors,
        })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.display().to_string()));
        }
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}
