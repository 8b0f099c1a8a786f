//! `afgl`: dataset generation, training, generation, evaluation and latent
//! analysis for lift-conditioned airfoil generators.

mod commands;
mod config;
mod outputs;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use afgl_core::models::ModelKind;
use afgl_core::parallel::Execution;
use clap::{Args, Parser, Subcommand};

use config::{parse_range, ExperimentConfig, SolverName};

#[derive(Parser)]
#[command(name = "afgl", version, about = "Lift-conditioned airfoil generation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a labeled NACA 4-digit dataset.
    GenDataset {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Train a model on a dataset CSV.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Labeled shape CSV from `gen-dataset`.
        #[arg(long)]
        dataset: PathBuf,
        /// Continue from this checkpoint up to `--epochs` total.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Decode shapes for requested lift coefficients.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// CSV of latent vectors (`z1..zd` header optional); overrides `--count`.
        #[arg(long)]
        latents: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Score generated shapes against their requested labels.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Shape CSV whose label column holds the requested lift coefficients.
        #[arg(long)]
        shapes: PathBuf,
        /// Model name recorded in the report; read from the generate
        /// provenance next to the shapes when omitted.
        #[arg(long)]
        model: Option<ModelKind>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Extract latents, project them with t-SNE and score their structure.
    Latent {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        tsne: TsneArgs,
    },
    /// Compare evaluated models side by side.
    Table1 {
        /// Directory whose subdirectories hold `report.json` files.
        #[arg(long)]
        dir: PathBuf,
        /// Where to write the table; defaults to `--dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    execution: Option<ExecArg>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

#[derive(Args)]
struct GridArgs {
    /// Camber range `MIN:MAX:STEP` or a single value.
    #[arg(long, value_parser = parse_range)]
    grid_m: Option<[f64; 3]>,
    /// Camber position range.
    #[arg(long, value_parser = parse_range)]
    grid_p: Option<[f64; 3]>,
    /// Thickness range.
    #[arg(long, value_parser = parse_range)]
    grid_t: Option<[f64; 3]>,
    #[arg(long)]
    n_points: Option<usize>,
    /// Keep a seeded random subset of this many airfoils.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long)]
    dataset_seed: Option<u64>,
}

#[derive(Args)]
struct SolverArgs {
    /// Angle of attack in degrees.
    #[arg(long, allow_hyphen_values = true)]
    alpha_deg: Option<f64>,
    #[arg(long, value_enum)]
    solver: Option<SolverName>,
    #[arg(long)]
    xfoil_binary: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n_critic: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint_interval: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    /// Comma-separated lift coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    labels: Option<Vec<f64>>,
    /// Shapes per label.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    gen_seed: Option<u64>,
}

#[derive(Args)]
struct TsneArgs {
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    tsne_iterations: Option<usize>,
    #[arg(long)]
    tsne_seed: Option<u64>,
}

macro_rules! apply {
    ($cfg:ident, $args:expr, $($field:ident),+) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })+
    };
}

impl CommonArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref())?;
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        if let Some(e) = self.execution {
            cfg.execution = match e {
                ExecArg::Sequential => Execution::Sequential,
                ExecArg::Parallel => Execution::Parallel,
            };
        }
        Ok(cfg)
    }
}

impl GridArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        apply!(cfg, self, grid_m, grid_p, grid_t, n_points, dataset_seed);
        if self.subsample.is_some() {
            cfg.subsample = self.subsample;
        }
    }
}

impl SolverArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        apply!(cfg, self, alpha_deg, solver);
        if self.xfoil_binary.is_some() {
            cfg.xfoil_binary = self.xfoil_binary.clone();
        }
    }
}

impl TrainArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.model {
            if cfg.model != m && self.latent_dim.is_none() {
                cfg.latent_dim = None;
            }
            cfg.model = m;
        }
        if self.latent_dim.is_some() {
            cfg.latent_dim = self.latent_dim;
        }
        apply!(cfg, self, epochs, batch_size, lr, lambda, gamma, n_critic, seed, checkpoint_interval);
    }
}

impl GenArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        apply!(cfg, self, labels, count, gen_seed);
    }
}

impl TsneArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        apply!(cfg, self, perplexity, tsne_iterations, tsne_seed);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenDataset { common, grid, solver } => {
            let mut cfg = common.config()?;
            grid.apply(&mut cfg);
            solver.apply(&mut cfg);
            commands::gen_dataset(cfg.resolve())
        }
        Command::Train { common, dataset, resume, train } => {
            let mut cfg = common.config()?;
            train.apply(&mut cfg);
            commands::train(cfg.resolve(), &dataset, resume.as_deref())
        }
        Command::Generate { common, checkpoint, latents, gen, solver } => {
            let mut cfg = common.config()?;
            gen.apply(&mut cfg);
            solver.apply(&mut cfg);
            commands::generate(cfg.resolve(), &checkpoint, latents.as_deref())
        }
        Command::Evaluate { common, shapes, model, solver } => {
            let mut cfg = common.config()?;
            solver.apply(&mut cfg);
            commands::evaluate(cfg.resolve(), &shapes, model)
        }
        Command::Latent { common, checkpoint, dataset, tsne } => {
            let mut cfg = common.config()?;
            tsne.apply(&mut cfg);
            commands::latent(cfg.resolve(), &checkpoint, &dataset)
        }
        Command::Table1 { dir, out } => table::table1(&dir, out.as_deref().unwrap_or(&dir)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
