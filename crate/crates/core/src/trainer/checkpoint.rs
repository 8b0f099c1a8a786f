use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::models::{ModelKind, ModelNets};
use crate::nn::{AdamConfig, AdamState, Mlp, Tensor};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AFG1";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serializable position of a ChaCha8 stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    /// 32-byte key, hex encoded.
    pub seed: String,
    pub stream: u64,
    /// 128-bit word position, decimal.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed().iter().map(|b| format!("{b:02x}")).collect(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn to_rng(&self) -> Result<ChaCha8Rng> {
        let bad = |d: &str| Error::format("rng state", d.to_owned());
        if self.seed.len() != 64 {
            return Err(bad("seed must be 64 hex digits"));
        }
        let mut key = [0u8; 32];
        for (i, k) in key.iter_mut().enumerate() {
            *k = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad("seed is not hex"))?;
        }
        let pos: u128 = self.word_pos.parse().map_err(|_| bad("word_pos is not an integer"))?;
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

/// Everything needed to resume or sample from a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub nets: ModelNets,
    /// One optimizer per network, in [`ModelNets::networks`] order.
    pub adam: Vec<AdamState>,
    pub rng: RngState,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed minibatch updates across all epochs.
    pub step: u64,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct NetworkEntry {
    name: String,
    widths: Vec<usize>,
    slope: f64,
    shapes: Vec<Vec<usize>>,
    adam: AdamConfig,
    adam_step: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    latent_dim: usize,
    architecture: crate::models::Architecture,
    epoch: usize,
    step: u64,
    rng: RngState,
    config: TrainConfig,
    networks: Vec<NetworkEntry>,
}

impl Checkpoint {
    /// Freshly initialized networks for `config`.
    pub fn init(config: &TrainConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let nets = ModelNets::new(config.model, config.latent_dim, config.architecture.clone(), &mut rng)?;
        let adam = nets
            .networks()
            .iter()
            .map(|n| AdamState::new(config.adam, n.params()))
            .collect();
        Ok(Self {
            nets,
            adam,
            rng: RngState::capture(&rng),
            epoch: 0,
            step: 0,
            config: config.clone(),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.nets.kind
    }

    pub fn latent_dim(&self) -> usize {
        self.nets.latent_dim
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let networks = self.nets.networks();
        let header = Header {
            kind: self.nets.kind,
            latent_dim: self.nets.latent_dim,
            architecture: self.nets.arch.clone(),
            epoch: self.epoch,
            step: self.step,
            rng: self.rng.clone(),
            config: self.config.clone(),
            networks: networks
                .iter()
                .zip(&self.adam)
                .map(|(n, a)| NetworkEntry {
                    name: n.name().to_owned(),
                    widths: n.widths().to_vec(),
                    slope: n.slope(),
                    shapes: n.params().iter().map(|p| p.shape().to_vec()).collect(),
                    adam: a.config,
                    adam_step: a.step,
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (n, a) in networks.iter().zip(&self.adam) {
            for block in [n.params(), &a.m[..], &a.v[..]] {
                for t in block {
                    for v in t.data() {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |d: String| Error::format("checkpoint", d);
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4).map_err(&bad)? != CHECKPOINT_MAGIC {
            return Err(bad("missing AFG1 magic".into()));
        }
        let version = u32::from_le_bytes(cur.take(4).map_err(&bad)?.try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let len = u64::from_le_bytes(cur.take(8).map_err(&bad)?.try_into().expect("8 bytes"));
        let len = usize::try_from(len).map_err(|_| bad("header length overflow".into()))?;
        let header: Header = serde_json::from_slice(cur.take(len).map_err(&bad)?)?;

        let expected = [
            header.kind.has_encoder(),
            true,
            header.kind.has_critic(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if header.networks.len() != expected {
            return Err(bad(format!(
                "{} networks for kind {}, expected {expected}",
                header.networks.len(),
                header.kind
            )));
        }
        let mut mlps = Vec::new();
        let mut adam = Vec::new();
        for entry in &header.networks {
            let read_block = |cur: &mut Cursor| -> Result<Vec<Tensor>> {
                entry
                    .shapes
                    .iter()
                    .map(|shape| {
                        let n: usize = shape.iter().product();
                        let raw = cur.take(n * 8).map_err(&bad)?;
                        let data = raw
                            .chunks_exact(8)
                            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                            .collect();
                        Tensor::new(shape.clone(), data)
                    })
                    .collect()
            };
            let params = read_block(&mut cur)?;
            let m = read_block(&mut cur)?;
            let v = read_block(&mut cur)?;
            mlps.push(Mlp::from_params(&entry.name, &entry.widths, entry.slope, params)?);
            adam.push(AdamState {
                config: entry.adam,
                step: entry.adam_step,
                m,
                v,
            });
        }
        if cur.pos != bytes.len() {
            return Err(bad(format!("{} trailing bytes", bytes.len() - cur.pos)));
        }
        let mut it = mlps.into_iter();
        let encoder = if header.kind.has_encoder() { it.next() } else { None };
        let decoder = it.next().expect("decoder present");
        let critic = if header.kind.has_critic() { it.next() } else { None };
        header.rng.to_rng()?;
        Ok(Self {
            nets: ModelNets {
                kind: header.kind,
                latent_dim: header.latent_dim,
                arch: header.architecture,
                encoder,
                decoder,
                critic,
            },
            adam,
            rng: header.rng,
            epoch: header.epoch,
            step: header.step,
            config: header.config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(format!("truncated at byte {}", self.pos)),
        }
    }
}
