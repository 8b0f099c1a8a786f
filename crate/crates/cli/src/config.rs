//! Flat experiment configuration.
//!
//! Every key is optional in the file; missing keys take the defaults below and
//! command-line flags override both. The resolved copy (with every default
//! filled in) is what gets written to provenance files.

use std::path::{Path, PathBuf};

use afgl_core::aero::{SolverBackend, SolverSpec, XfoilConfig, DEFAULT_ALPHA_DEG};
use afgl_core::geometry::{GridRange, GridSpec, N_POINTS};
use afgl_core::latent::TsneConfig;
use afgl_core::models::{Architecture, GpSampling, ModelKind};
use afgl_core::parallel::Execution;
use afgl_core::trainer::TrainConfig;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    #[default]
    Panel,
    Xfoil,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out_dir: Option<PathBuf>,
    pub execution: Execution,

    /// `[min, max, step]` for camber, camber position and thickness.
    pub grid_m: [f64; 3],
    pub grid_p: [f64; 3],
    pub grid_t: [f64; 3],
    pub n_points: usize,
    pub dataset_seed: u64,
    pub subsample: Option<usize>,

    pub alpha_deg: f64,
    pub solver: SolverName,
    /// Falls back to `AFGL_XFOIL_BIN`.
    pub xfoil_binary: Option<PathBuf>,
    pub xfoil_reynolds: Option<f64>,
    pub xfoil_iterations: u32,
    pub xfoil_timeout_secs: f64,

    pub model: ModelKind,
    /// Defaults to 4 for the VAE family and 3 otherwise.
    pub latent_dim: Option<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub lambda: f64,
    pub gp_sampling: GpSampling,
    pub gamma: f64,
    pub non_saturating: bool,
    pub n_critic: usize,
    pub seed: u64,
    pub checkpoint_interval: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,

    pub labels: Vec<f64>,
    pub count: usize,
    pub gen_seed: u64,

    pub perplexity: f64,
    pub tsne_iterations: usize,
    pub tsne_learning_rate: f64,
    pub tsne_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let grid = GridSpec::default();
        let train = TrainConfig::new(ModelKind::CvaeWganGp);
        let arch = Architecture::default();
        let tsne = TsneConfig::default();
        let range = |r: GridRange| [r.min, r.max, r.step];
        Self {
            out_dir: None,
            execution: Execution::Parallel,
            grid_m: range(grid.m),
            grid_p: range(grid.p),
            grid_t: range(grid.t),
            n_points: N_POINTS,
            dataset_seed: 0,
            subsample: None,
            alpha_deg: DEFAULT_ALPHA_DEG,
            solver: SolverName::Panel,
            xfoil_binary: None,
            xfoil_reynolds: None,
            xfoil_iterations: 100,
            xfoil_timeout_secs: 10.0,
            model: train.model,
            latent_dim: None,
            epochs: train.epochs,
            batch_size: train.batch_size,
            lr: train.adam.lr,
            beta1: train.adam.beta1,
            beta2: train.adam.beta2,
            lambda: train.loss.gp.lambda,
            gp_sampling: train.loss.gp.sampling,
            gamma: train.loss.gamma,
            non_saturating: train.loss.non_saturating,
            n_critic: train.n_critic,
            seed: train.seed,
            checkpoint_interval: train.checkpoint_interval,
            encoder_hidden: arch.encoder_hidden,
            decoder_hidden: arch.decoder_hidden,
            critic_hidden: arch.critic_hidden,
            labels: vec![0.0, 0.5, 1.0, 1.5],
            count: 25,
            gen_seed: 0,
            perplexity: tsne.perplexity,
            tsne_iterations: tsne.iterations,
            tsne_learning_rate: tsne.learning_rate,
            tsne_seed: tsne.seed,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fill every derived default so the saved copy is self-contained.
    pub fn resolve(mut self) -> Self {
        self.latent_dim = Some(self.latent_dim.unwrap_or(self.model.default_latent_dim()));
        self
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        self.out_dir
            .clone()
            .context("no output directory: pass --out or set out_dir in the config")
    }

    pub fn grid(&self) -> GridSpec {
        let r = |v: [f64; 3]| GridRange::new(v[0], v[1], v[2]);
        GridSpec {
            m: r(self.grid_m),
            p: r(self.grid_p),
            t: r(self.grid_t),
            n_points: self.n_points,
        }
    }

    pub fn solver(&self) -> Result<SolverSpec> {
        let backend = match self.solver {
            SolverName::Panel => SolverBackend::Panel,
            SolverName::Xfoil => {
                let mut cfg = match &self.xfoil_binary {
                    Some(bin) => XfoilConfig::new(bin),
                    None => XfoilConfig::from_env().with_context(|| {
                        format!(
                            "solver xfoil needs xfoil_binary or the {} environment variable",
                            afgl_core::aero::XFOIL_BIN_ENV
                        )
                    })?,
                };
                if !cfg.binary.is_file() {
                    bail!("xfoil binary not found at {}", cfg.binary.display());
                }
                cfg.reynolds = self.xfoil_reynolds;
                cfg.iterations = self.xfoil_iterations;
                cfg.timeout_secs = self.xfoil_timeout_secs;
                SolverBackend::Xfoil(cfg)
            }
        };
        Ok(SolverSpec {
            alpha_deg: self.alpha_deg,
            backend,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut c = TrainConfig::new(self.model);
        c.latent_dim = self.latent_dim.unwrap_or(self.model.default_latent_dim());
        c.epochs = self.epochs;
        c.batch_size = self.batch_size;
        c.adam.lr = self.lr;
        c.adam.beta1 = self.beta1;
        c.adam.beta2 = self.beta2;
        c.loss.gp.lambda = self.lambda;
        c.loss.gp.sampling = self.gp_sampling;
        c.loss.gamma = self.gamma;
        c.loss.non_saturating = self.non_saturating;
        c.n_critic = self.n_critic;
        c.seed = self.seed;
        c.checkpoint_interval = self.checkpoint_interval;
        c.architecture.encoder_hidden = self.encoder_hidden.clone();
        c.architecture.decoder_hidden = self.decoder_hidden.clone();
        c.architecture.critic_hidden = self.critic_hidden.clone();
        c.architecture.data_dim = 2 * self.n_points;
        c
    }

    pub fn tsne(&self) -> TsneConfig {
        TsneConfig {
            perplexity: self.perplexity,
            iterations: self.tsne_iterations,
            learning_rate: self.tsne_learning_rate,
            seed: self.tsne_seed,
            ..TsneConfig::default()
        }
    }
}

/// `MIN:MAX:STEP`, or a single value.
pub fn parse_range(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [v] => Ok([*v, *v, 1.0]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(format!("expected MIN:MAX:STEP or a single value, got `{s}`")),
    }
}
