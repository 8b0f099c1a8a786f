//! Deterministic minibatch training for the four model kinds.
//!
//! All randomness in a run (initial weights, shuffling, latent noise and
//! penalty interpolation weights) comes from one ChaCha8 stream seeded by
//! [`TrainConfig::seed`]. Its position is stored in every checkpoint, so a
//! resumed run continues the exact same sequence.
//!
//! Critic-bearing kinds update the critic on every minibatch. The
//! generator, or encoder and decoder, update on every `n_critic`-th critic
//! update, counted globally across epochs.

mod checkpoint;
mod generate;

pub use checkpoint::{Checkpoint, RngState, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use generate::{
    decode, encode_means, evaluate_generation, generate, generate_with_latents, sample_normal,
    Generated, GenerationRequest,
};

use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{format_g17, Dataset};
use crate::models::{
    cvae_wgan_gp_losses, gan_loss, kl_divergence, vae_reconstruction_loss, wgan_gp_from_outputs,
    Architecture, LossConfig, ModelKind, VaeGanNets,
};
use crate::nn::{adam_step, AdamConfig, AdamState, BoundMlp, Graph, Mlp, Tensor, Var};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub latent_dim: usize,
    /// Total passes over the dataset.
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub loss: LossConfig,
    /// Critic updates per generator update for critic-bearing kinds.
    pub n_critic: usize,
    pub seed: u64,
    /// Emit an intermediate checkpoint every this many epochs; 0 disables.
    pub checkpoint_interval: usize,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::new(ModelKind::CvaeWganGp)
    }
}

impl TrainConfig {
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            latent_dim: model.default_latent_dim(),
            epochs: 100,
            batch_size: 64,
            adam: AdamConfig::default(),
            loss: LossConfig::default(),
            n_critic: 5,
            seed: 0,
            checkpoint_interval: 0,
            architecture: Architecture::default(),
        }
    }

    pub fn validate(&self, n_data: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.latent_dim == 0 {
            return fail("latent_dim must be at least 1".into());
        }
        if self.batch_size == 0 || self.batch_size > n_data {
            return fail(format!(
                "batch_size {} must be in 1..={n_data} (dataset size)",
                self.batch_size
            ));
        }
        if self.n_critic == 0 {
            return fail("n_critic must be at least 1".into());
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return fail(format!("learning rate {} must be positive", self.adam.lr));
        }
        if !(self.loss.gp.lambda >= 0.0) || !self.loss.gamma.is_finite() {
            return fail("gradient penalty weight must be >= 0 and gamma finite".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub component: String,
    pub value: f64,
}

/// Per-epoch minibatch means of every loss component.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossLog {
    pub rows: Vec<LossRow>,
}

impl LossLog {
    pub fn components(kind: ModelKind) -> &'static [&'static str] {
        match kind {
            ModelKind::Cvae => &["reconstruction", "kl", "total"],
            ModelKind::Cgan => &["discriminator", "generator"],
            ModelKind::CwganGp => &["critic", "em", "penalty", "generator"],
            ModelKind::CvaeWganGp => &[
                "critic",
                "em",
                "penalty",
                "kl",
                "feature",
                "adversarial",
                "encoder",
                "decoder",
            ],
        }
    }

    /// Values of one component in epoch order.
    pub fn series(&self, component: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.component == component)
            .map(|r| r.value)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,component,value\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.component, format_g17(r.value)));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    pub log: LossLog,
}

/// Train from scratch.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutput> {
    train_with(dataset, Checkpoint::init(config)?, |_| Ok(()))
}

/// Continue `checkpoint` until `total_epochs` have completed.
pub fn resume(dataset: &Dataset, mut checkpoint: Checkpoint, total_epochs: usize) -> Result<TrainOutput> {
    checkpoint.config.epochs = total_epochs;
    train_with(dataset, checkpoint, |_| Ok(()))
}

/// Run from `start` to `start.config.epochs`, handing every intermediate
/// checkpoint to `on_checkpoint`.
pub fn train_with<F>(dataset: &Dataset, start: Checkpoint, mut on_checkpoint: F) -> Result<TrainOutput>
where
    F: FnMut(&Checkpoint) -> Result<()>,
{
    let mut ck = start;
    ck.config.validate(dataset.len())?;
    if ck.epoch > ck.config.epochs {
        return Err(Error::Config(format!(
            "checkpoint is at epoch {}, past the requested {}",
            ck.epoch, ck.config.epochs
        )));
    }
    let (x_all, c_all) = dataset.to_tensors()?;
    if x_all.cols() != ck.nets.arch.data_dim {
        return Err(Error::shape("train", &[ck.nets.arch.data_dim], &[x_all.cols()]));
    }
    let mut rng = ck.rng.to_rng()?;
    let components = LossLog::components(ck.nets.kind);
    let mut log = LossLog::default();
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    while ck.epoch < ck.config.epochs {
        let epoch = ck.epoch + 1;
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut sums = vec![0.0; components.len()];
        let mut batches = 0usize;
        for idx in order.chunks(ck.config.batch_size) {
            let x = x_all.gather_rows(idx);
            let c = c_all.gather_rows(idx);
            let values = step(&mut ck, &mut rng, x, c)?;
            for ((s, v), name) in sums.iter_mut().zip(&values).zip(components) {
                if !v.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        component: (*name).to_owned(),
                    });
                }
                *s += v;
            }
            batches += 1;
        }
        for (name, s) in components.iter().zip(sums) {
            log.rows.push(LossRow {
                epoch,
                component: (*name).to_owned(),
                value: s / batches as f64,
            });
        }
        ck.epoch = epoch;
        ck.rng = RngState::capture(&rng);
        let interval = ck.config.checkpoint_interval;
        if interval > 0 && epoch % interval == 0 && epoch < ck.config.epochs {
            on_checkpoint(&ck)?;
        }
    }
    ck.rng = RngState::capture(&rng);
    Ok(TrainOutput { checkpoint: ck, log })
}

fn grads_of(g: &mut Graph, loss: Var, net: &BoundMlp) -> Result<Vec<Tensor>> {
    let vars = g.grad(loss, &net.params)?;
    Ok(vars.into_iter().map(|v| g.value(v).clone()).collect())
}

fn apply(net: &mut Mlp, grads: &[Tensor], state: &mut AdamState) -> Result<()> {
    let names = net.param_names();
    adam_step(net.params_mut(), grads, &names, state)
}

/// Adam state slots in checkpoint order: encoder, decoder, critic.
fn slots(kind: ModelKind) -> (Option<usize>, usize, Option<usize>) {
    let enc = kind.has_encoder().then_some(0);
    let dec = usize::from(kind.has_encoder());
    let critic = kind.has_critic().then_some(dec + 1);
    (enc, dec, critic)
}

/// One minibatch; returns the logged components in [`LossLog::components`] order.
fn step(ck: &mut Checkpoint, rng: &mut ChaCha8Rng, x: Tensor, c: Tensor) -> Result<Vec<f64>> {
    let kind = ck.nets.kind;
    let d = ck.nets.latent_dim;
    let batch = x.rows();
    let (enc_slot, dec_slot, critic_slot) = slots(kind);
    let cfg = ck.config.loss;
    let n_critic = ck.config.n_critic as u64;

    match kind {
        ModelKind::Cvae => {
            let encoder = ck.nets.encoder.as_mut().expect("cvae has an encoder");
            let mut g = Graph::new();
            let enc = encoder.bind(&mut g);
            let dec = ck.nets.decoder.bind(&mut g);
            let xv = g.leaf(x);
            let cv = g.leaf(c);
            let enc_in = g.concat_cols(xv, cv)?;
            let heads = enc.forward(&mut g, enc_in)?;
            let mu = g.slice_cols(heads, 0, d)?;
            let log_var = g.slice_cols(heads, d, 2 * d)?;
            let eps = g.leaf(sample_normal(rng, batch, d));
            let z = g.reparameterize(mu, log_var, eps)?;
            let dec_in = g.concat_cols(z, cv)?;
            let x_prime = dec.forward(&mut g, dec_in)?;
            let rec = vae_reconstruction_loss(&mut g, xv, x_prime)?;
            let kl = kl_divergence(&mut g, mu, log_var)?;
            let total = g.add(rec, kl)?;
            let ge = grads_of(&mut g, total, &enc)?;
            let gd = grads_of(&mut g, total, &dec)?;
            apply(encoder, &ge, &mut ck.adam[enc_slot.expect("encoder slot")])?;
            apply(&mut ck.nets.decoder, &gd, &mut ck.adam[dec_slot])?;
            ck.step += 1;
            Ok(vec![g.scalar(rec), g.scalar(kl), g.scalar(total)])
        }
        ModelKind::Cgan => {
            let critic_slot = critic_slot.expect("discriminator slot");
            let (disc_value, gen_value) = {
                let critic = ck.nets.critic.as_mut().expect("cgan has a discriminator");
                let mut g = Graph::new();
                let gen = ck.nets.decoder.bind(&mut g);
                let disc = critic.bind(&mut g);
                let xv = g.leaf(x.clone());
                let cv = g.leaf(c.clone());
                let fake = generate_fake(&mut g, &gen, cv, sample_normal(rng, batch, d))?;
                let (real_logits, fake_logits) = critic_pair(&mut g, &disc, xv, fake, cv)?;
                let l = gan_loss(&mut g, real_logits, fake_logits, cfg.non_saturating)?;
                let gd = grads_of(&mut g, l.disc, &disc)?;
                apply(critic, &gd, &mut ck.adam[critic_slot])?;
                (g.scalar(l.disc), g.scalar(l.gen))
            };
            let critic = ck.nets.critic.as_ref().expect("cgan has a discriminator");
            let mut g = Graph::new();
            let gen = ck.nets.decoder.bind(&mut g);
            let disc = critic.bind(&mut g);
            let xv = g.leaf(x);
            let cv = g.leaf(c);
            let fake = generate_fake(&mut g, &gen, cv, sample_normal(rng, batch, d))?;
            let (real_logits, fake_logits) = critic_pair(&mut g, &disc, xv, fake, cv)?;
            let l = gan_loss(&mut g, real_logits, fake_logits, cfg.non_saturating)?;
            let gg = grads_of(&mut g, l.gen, &gen)?;
            apply(&mut ck.nets.decoder, &gg, &mut ck.adam[dec_slot])?;
            ck.step += 1;
            Ok(vec![disc_value, gen_value])
        }
        ModelKind::CwganGp => {
            let critic_slot = critic_slot.expect("critic slot");
            let values = {
                let critic = ck.nets.critic.as_mut().expect("cwgan-gp has a critic");
                let mut g = Graph::new();
                let gen = ck.nets.decoder.bind(&mut g);
                let crit = critic.bind(&mut g);
                let xv = g.leaf(x.clone());
                let cv = g.leaf(c.clone());
                let fake = generate_fake(&mut g, &gen, cv, sample_normal(rng, batch, d))?;
                let (out_real, out_fake) = critic_pair(&mut g, &crit, xv, fake, cv)?;
                let loss = wgan_gp_from_outputs(&mut g, &crit, out_real, out_fake, xv, fake, cv, &cfg.gp, rng)?;
                let m_fake = g.mean(out_fake);
                let gen_loss = g.neg(m_fake);
                let gc = grads_of(&mut g, loss.total, &crit)?;
                apply(critic, &gc, &mut ck.adam[critic_slot])?;
                vec![
                    g.scalar(loss.total),
                    g.scalar(loss.em),
                    g.scalar(loss.penalty),
                    g.scalar(gen_loss),
                ]
            };
            ck.step += 1;
            if ck.step % n_critic == 0 {
                let critic = ck.nets.critic.as_ref().expect("cwgan-gp has a critic");
                let mut g = Graph::new();
                let gen = ck.nets.decoder.bind(&mut g);
                let crit = critic.bind(&mut g);
                let cv = g.leaf(c);
                let fake = generate_fake(&mut g, &gen, cv, sample_normal(rng, batch, d))?;
                let fake_in = g.concat_cols(fake, cv)?;
                let out = crit.forward(&mut g, fake_in)?;
                let m = g.mean(out);
                let loss = g.neg(m);
                let gg = grads_of(&mut g, loss, &gen)?;
                apply(&mut ck.nets.decoder, &gg, &mut ck.adam[dec_slot])?;
            }
            Ok(values)
        }
        ModelKind::CvaeWganGp => {
            let update_vae = (ck.step + 1) % n_critic == 0;
            let mut g = Graph::new();
            let encoder = ck.nets.encoder.as_mut().expect("cvae-wgan-gp has an encoder");
            let critic = ck.nets.critic.as_mut().expect("cvae-wgan-gp has a critic");
            let enc = encoder.bind(&mut g);
            let dec = ck.nets.decoder.bind(&mut g);
            let crit = critic.bind(&mut g);
            let xv = g.leaf(x);
            let cv = g.leaf(c);
            let nets = VaeGanNets {
                encoder: &enc,
                decoder: &dec,
                critic: &crit,
            };
            let noise = sample_normal(rng, batch, d);
            let l = cvae_wgan_gp_losses(&mut g, &nets, xv, cv, noise, &cfg, rng)?;
            let gc = grads_of(&mut g, l.critic.total, &crit)?;
            let vae_grads = if update_vae {
                Some((grads_of(&mut g, l.encoder, &enc)?, grads_of(&mut g, l.decoder, &dec)?))
            } else {
                None
            };
            apply(critic, &gc, &mut ck.adam[critic_slot.expect("critic slot")])?;
            if let Some((ge, gd)) = vae_grads {
                apply(encoder, &ge, &mut ck.adam[enc_slot.expect("encoder slot")])?;
                apply(&mut ck.nets.decoder, &gd, &mut ck.adam[dec_slot])?;
            }
            ck.step += 1;
            Ok(vec![
                g.scalar(l.critic.total),
                g.scalar(l.critic.em),
                g.scalar(l.critic.penalty),
                g.scalar(l.kl),
                g.scalar(l.feature),
                g.scalar(l.adversarial),
                g.scalar(l.encoder),
                g.scalar(l.decoder),
            ])
        }
    }
}

fn generate_fake(g: &mut Graph, gen: &BoundMlp, labels: Var, noise: Tensor) -> Result<Var> {
    let z = g.leaf(noise);
    let input = g.concat_cols(z, labels)?;
    gen.forward(g, input)
}

fn critic_pair(g: &mut Graph, critic: &BoundMlp, real: Var, fake: Var, labels: Var) -> Result<(Var, Var)> {
    let real_in = g.concat_cols(real, labels)?;
    let out_real = critic.forward(g, real_in)?;
    let fake_in = g.concat_cols(fake, labels)?;
    let out_fake = critic.forward(g, fake_in)?;
    Ok((out_real, out_fake))
}
