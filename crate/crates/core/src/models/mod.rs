//! The four conditional models and their losses.
//!
//! Conditioning is done by appending the lift-coefficient label as one extra
//! input column to the encoder, the decoder (generator) and the critic
//! (discriminator).

mod losses;
mod nets;

pub use losses::{
    cvae_wgan_gp_losses, dis_feature_reconstruction_loss, gan_loss, kl_divergence,
    vae_reconstruction_loss, wgan_gp_critic_loss, wgan_gp_from_outputs, CriticLoss, GanLoss,
    VaeGanLosses, VaeGanNets, GAN_LOG_EPS,
};
pub use nets::{Architecture, ModelNets};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Cgan,
    CwganGp,
    Cvae,
    CvaeWganGp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Cgan,
        ModelKind::CwganGp,
        ModelKind::Cvae,
        ModelKind::CvaeWganGp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Cgan => "cgan",
            ModelKind::CwganGp => "cwgan-gp",
            ModelKind::Cvae => "cvae",
            ModelKind::CvaeWganGp => "cvae-wgan-gp",
        }
    }

    /// Name as printed in comparison tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Cgan => "cGAN",
            ModelKind::CwganGp => "cWGAN-gp",
            ModelKind::Cvae => "CVAE",
            ModelKind::CvaeWganGp => "CVAE-WGAN-gp",
        }
    }

    pub fn has_encoder(self) -> bool {
        matches!(self, ModelKind::Cvae | ModelKind::CvaeWganGp)
    }

    pub fn has_critic(self) -> bool {
        !matches!(self, ModelKind::Cvae)
    }

    pub fn is_wasserstein(self) -> bool {
        matches!(self, ModelKind::CwganGp | ModelKind::CvaeWganGp)
    }

    /// 4 for the VAE family, 3 for the GAN-only models.
    pub fn default_latent_dim(self) -> usize {
        if self.has_encoder() {
            4
        } else {
            3
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model kind `{s}` (expected cgan, cwgan-gp, cvae or cvae-wgan-gp)"
                ))
            })
    }
}

/// Where the gradient penalty is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GpSampling {
    /// `u * real + (1 - u) * fake`, `u ~ U(0, 1)` per sample.
    #[default]
    Interpolated,
    /// At the real samples themselves.
    RealPoints,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub lambda: f64,
    pub sampling: GpSampling,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            sampling: GpSampling::Interpolated,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub gp: GpConfig,
    /// Weight of the feature reconstruction term in the decoder loss.
    pub gamma: f64,
    /// Use `-log D(G(z))` instead of `log(1 - D(G(z)))` for the cGAN generator.
    pub non_saturating: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            gp: GpConfig::default(),
            gamma: 1.0,
            non_saturating: false,
        }
    }
}
