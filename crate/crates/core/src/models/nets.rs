use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelKind;
use crate::nn::{Mlp, DEFAULT_LEAKY_SLOPE};
use crate::{Error, Result};

/// Layer widths for every network role, excluding the conditioning column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub data_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub leaky_slope: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            data_dim: crate::geometry::COORD_LEN,
            encoder_hidden: vec![512, 256, 128, 64],
            decoder_hidden: vec![64, 128, 256, 512],
            critic_hidden: vec![512, 256],
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }
}

impl Architecture {
    /// Encoder: `data + 1 -> hidden... -> 2d` (mean and log-variance heads).
    pub fn encoder_widths(&self, latent_dim: usize) -> Vec<usize> {
        let mut w = vec![self.data_dim + 1];
        w.extend(&self.encoder_hidden);
        w.push(2 * latent_dim);
        w
    }

    /// Decoder / generator: `d + 1 -> hidden... -> data`.
    pub fn decoder_widths(&self, latent_dim: usize) -> Vec<usize> {
        let mut w = vec![latent_dim + 1];
        w.extend(&self.decoder_hidden);
        w.push(self.data_dim);
        w
    }

    /// Critic / discriminator: `data + 1 -> hidden... -> 1`.
    pub fn critic_widths(&self) -> Vec<usize> {
        let mut w = vec![self.data_dim + 1];
        w.extend(&self.critic_hidden);
        w.push(1);
        w
    }
}

/// The networks a model kind owns.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelNets {
    pub kind: ModelKind,
    pub latent_dim: usize,
    pub arch: Architecture,
    pub encoder: Option<Mlp>,
    pub decoder: Mlp,
    pub critic: Option<Mlp>,
}

impl ModelNets {
    pub fn new<R: Rng + ?Sized>(
        kind: ModelKind,
        latent_dim: usize,
        arch: Architecture,
        rng: &mut R,
    ) -> Result<Self> {
        if latent_dim == 0 {
            return Err(Error::Config("latent dimension must be at least 1".into()));
        }
        let slope = arch.leaky_slope;
        let encoder = if kind.has_encoder() {
            Some(Mlp::new("encoder", &arch.encoder_widths(latent_dim), slope, rng)?)
        } else {
            None
        };
        let decoder = Mlp::new(
            Self::decoder_name(kind),
            &arch.decoder_widths(latent_dim),
            slope,
            rng,
        )?;
        let critic = if kind.has_critic() {
            Some(Mlp::new(
                Self::critic_name(kind),
                &arch.critic_widths(),
                slope,
                rng,
            )?)
        } else {
            None
        };
        Ok(Self {
            kind,
            latent_dim,
            arch,
            encoder,
            decoder,
            critic,
        })
    }

    pub fn decoder_name(kind: ModelKind) -> &'static str {
        if kind.has_encoder() {
            "decoder"
        } else {
            "generator"
        }
    }

    pub fn critic_name(kind: ModelKind) -> &'static str {
        if kind.is_wasserstein() {
            "critic"
        } else {
            "discriminator"
        }
    }

    /// Networks in checkpoint order: encoder, decoder, critic.
    pub fn networks(&self) -> Vec<&Mlp> {
        self.encoder
            .iter()
            .chain(std::iter::once(&self.decoder))
            .chain(self.critic.iter())
            .collect()
    }
}
