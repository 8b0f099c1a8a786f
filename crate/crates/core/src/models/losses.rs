use rand::Rng;

use super::{GpConfig, GpSampling, LossConfig};
use crate::nn::{BoundMlp, Graph, Tensor, Var};
use crate::{Error, Result};

/// Probability clamp applied before every `log` in the cGAN loss.
pub const GAN_LOG_EPS: f64 = 1e-7;

// Keeps the gradient-norm square root differentiable at zero.
const NORM_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct GanLoss {
    pub gen: Var,
    pub disc: Var,
}

/// Conditional GAN cross-entropy losses from discriminator logits.
///
/// `disc = -mean(log D(x)) - mean(log(1 - D(G(z))))`. The generator loss is
/// the saturating `mean(log(1 - D(G(z))))`, or `-mean(log D(G(z)))` when
/// `non_saturating` is set.
pub fn gan_loss(g: &mut Graph, real_logits: Var, fake_logits: Var, non_saturating: bool) -> Result<GanLoss> {
    let lo = GAN_LOG_EPS;
    let hi = 1.0 - GAN_LOG_EPS;
    let clamped_log = |g: &mut Graph, p: Var| {
        let c = g.clamp(p, lo, hi);
        g.log(c)
    };

    let p_real = g.sigmoid(real_logits);
    let log_real = clamped_log(g, p_real);
    let neg_fake = g.neg(fake_logits);
    // 1 - sigmoid(x) == sigmoid(-x)
    let p_not_fake = g.sigmoid(neg_fake);
    let log_not_fake = clamped_log(g, p_not_fake);

    let m_real = g.mean(log_real);
    let m_not_fake = g.mean(log_not_fake);
    let s = g.add(m_real, m_not_fake)?;
    let disc = g.neg(s);

    let gen = if non_saturating {
        let p_fake = g.sigmoid(fake_logits);
        let log_fake = clamped_log(g, p_fake);
        let m = g.mean(log_fake);
        g.neg(m)
    } else {
        m_not_fake
    };
    Ok(GanLoss { gen, disc })
}

#[derive(Clone, Copy, Debug)]
pub struct CriticLoss {
    /// `em + lambda * penalty`.
    pub total: Var,
    /// `mean(critic(fake)) - mean(critic(real))`, the negated EM estimate.
    pub em: Var,
    /// Unweighted `mean((|grad critic(x_hat)| - 1)^2)`.
    pub penalty: Var,
}

/// WGAN-gp critic loss.
///
/// `real` and `fake` are `batch x data` coordinate blocks and `labels` is the
/// `batch x 1` condition column appended to each critic input.
pub fn wgan_gp_critic_loss<R: Rng + ?Sized>(
    g: &mut Graph,
    critic: &BoundMlp,
    real: Var,
    fake: Var,
    labels: Var,
    cfg: &GpConfig,
    rng: &mut R,
) -> Result<CriticLoss> {
    let real_in = g.concat_cols(real, labels)?;
    let out_real = critic.forward(g, real_in)?;
    let fake_in = g.concat_cols(fake, labels)?;
    let out_fake = critic.forward(g, fake_in)?;
    wgan_gp_from_outputs(g, critic, out_real, out_fake, real, fake, labels, cfg, rng)
}

/// [`wgan_gp_critic_loss`] reusing critic outputs already on the graph.
#[allow(clippy::too_many_arguments)]
pub fn wgan_gp_from_outputs<R: Rng + ?Sized>(
    g: &mut Graph,
    critic: &BoundMlp,
    out_real: Var,
    out_fake: Var,
    real: Var,
    fake: Var,
    labels: Var,
    cfg: &GpConfig,
    rng: &mut R,
) -> Result<CriticLoss> {
    if g.value(real).dims() != g.value(fake).dims() {
        return Err(Error::shape(
            "wgan_gp_critic_loss",
            g.value(real).shape(),
            g.value(fake).shape(),
        ));
    }
    if cfg.lambda < 0.0 {
        return Err(Error::Config(format!("gradient penalty weight {} < 0", cfg.lambda)));
    }
    let m_fake = g.mean(out_fake);
    let m_real = g.mean(out_real);
    let em = g.sub(m_fake, m_real)?;

    let x_hat = match cfg.sampling {
        GpSampling::RealPoints => real,
        GpSampling::Interpolated => {
            let (rows, cols) = g.value(real).dims();
            let mut mix = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let u: f64 = rng.random();
                mix.extend(std::iter::repeat_n(u, cols));
            }
            let u = g.leaf(Tensor::matrix(rows, cols, mix)?);
            let diff = g.sub(real, fake)?;
            let step = g.mul(u, diff)?;
            g.add(fake, step)?
        }
    };
    let penalty = gradient_penalty(g, critic, x_hat, labels)?;
    if !g.scalar(penalty).is_finite() {
        return Err(Error::NonFinitePenalty);
    }
    let weighted = g.scale(penalty, cfg.lambda);
    let total = g.add(em, weighted)?;
    Ok(CriticLoss { total, em, penalty })
}

/// `mean((|d critic(x_hat) / d x_hat|_2 - 1)^2)`, recorded for double backprop.
fn gradient_penalty(g: &mut Graph, critic: &BoundMlp, x_hat: Var, labels: Var) -> Result<Var> {
    let input = g.concat_cols(x_hat, labels)?;
    let out = critic.forward(g, input)?;
    // Rows are independent, so the gradient of the summed output gives the
    // per-sample input gradients.
    let total = g.sum(out);
    let grad = g.grad(total, &[x_hat])?[0];
    let sq = g.square(grad);
    let row_sq = g.sum_cols(sq);
    let row_sq = g.add_scalar(row_sq, NORM_EPS);
    let norm = g.sqrt(row_sq);
    let dev = g.add_scalar(norm, -1.0);
    let dev_sq = g.square(dev);
    Ok(g.mean(dev_sq))
}

/// Closed-form KL divergence from `N(mu, exp(log_var))` to `N(0, I)`,
/// summed over latent dimensions and averaged over the batch.
pub fn kl_divergence(g: &mut Graph, mu: Var, log_var: Var) -> Result<Var> {
    let batch = g.value(mu).rows() as f64;
    let mu_sq = g.square(mu);
    let var = g.exp(log_var);
    let a = g.add(mu_sq, var)?;
    let b = g.sub(a, log_var)?;
    let c = g.add_scalar(b, -1.0);
    let total = g.sum(c);
    Ok(g.scale(total, 0.5 / batch))
}

/// Mean squared error over batch and coordinates.
pub fn vae_reconstruction_loss(g: &mut Graph, x: Var, x_prime: Var) -> Result<Var> {
    let d = g.sub(x, x_prime)?;
    let sq = g.square(d);
    Ok(g.mean(sq))
}

/// Mean squared error between the critic's second hidden-layer activations
/// of `x` and `x_prime` under the same labels.
pub fn dis_feature_reconstruction_loss(
    g: &mut Graph,
    critic: &BoundMlp,
    x: Var,
    x_prime: Var,
    labels: Var,
) -> Result<Var> {
    let real_in = g.concat_cols(x, labels)?;
    let fake_in = g.concat_cols(x_prime, labels)?;
    let f_real = critic_features(g, critic, real_in)?;
    let f_fake = critic_features(g, critic, fake_in)?;
    vae_reconstruction_loss(g, f_real.hidden2, f_fake.hidden2)
}

struct CriticFeatures {
    hidden2: Var,
    out: Var,
}

fn critic_features(g: &mut Graph, critic: &BoundMlp, input: Var) -> Result<CriticFeatures> {
    if critic.params.len() < 6 {
        return Err(Error::Config(
            "feature reconstruction needs a critic with at least two hidden layers".into(),
        ));
    }
    let feats = critic.forward_features(g, input)?;
    Ok(CriticFeatures {
        hidden2: feats[1],
        out: *feats.last().expect("non-empty"),
    })
}

/// Encoder, decoder and critic bound to one graph.
pub struct VaeGanNets<'a> {
    pub encoder: &'a BoundMlp,
    pub decoder: &'a BoundMlp,
    pub critic: &'a BoundMlp,
}

#[derive(Clone, Copy, Debug)]
pub struct VaeGanLosses {
    /// `kl + feature`.
    pub encoder: Var,
    /// `gamma * feature + adversarial`.
    pub decoder: Var,
    pub critic: CriticLoss,
    pub kl: Var,
    pub feature: Var,
    /// `-mean(critic(x'))`.
    pub adversarial: Var,
    pub mu: Var,
    pub log_var: Var,
    pub reconstruction: Var,
}

/// All three CVAE-WGAN-gp losses on one minibatch with shared forward passes.
///
/// `noise` is the `batch x d` standard-normal draw for the reparameterization.
pub fn cvae_wgan_gp_losses<R: Rng + ?Sized>(
    g: &mut Graph,
    nets: &VaeGanNets<'_>,
    x: Var,
    labels: Var,
    noise: Tensor,
    cfg: &LossConfig,
    rng: &mut R,
) -> Result<VaeGanLosses> {
    let d = noise.cols();
    let enc_in = g.concat_cols(x, labels)?;
    let heads = nets.encoder.forward(g, enc_in)?;
    if g.value(heads).cols() != 2 * d {
        return Err(Error::LatentDim {
            expected: g.value(heads).cols() / 2,
            found: d,
        });
    }
    let mu = g.slice_cols(heads, 0, d)?;
    let log_var = g.slice_cols(heads, d, 2 * d)?;
    let eps = g.leaf(noise);
    let z = g.reparameterize(mu, log_var, eps)?;
    let dec_in = g.concat_cols(z, labels)?;
    let x_prime = nets.decoder.forward(g, dec_in)?;

    let real_in = g.concat_cols(x, labels)?;
    let fake_in = g.concat_cols(x_prime, labels)?;
    let f_real = critic_features(g, nets.critic, real_in)?;
    let f_fake = critic_features(g, nets.critic, fake_in)?;

    let feature = vae_reconstruction_loss(g, f_real.hidden2, f_fake.hidden2)?;
    let kl = kl_divergence(g, mu, log_var)?;
    let m_fake = g.mean(f_fake.out);
    let adversarial = g.neg(m_fake);
    let encoder = g.add(kl, feature)?;
    let weighted = g.scale(feature, cfg.gamma);
    let decoder = g.add(weighted, adversarial)?;
    let critic = wgan_gp_from_outputs(
        g,
        nets.critic,
        f_real.out,
        f_fake.out,
        x,
        x_prime,
        labels,
        &cfg.gp,
        rng,
    )?;
    Ok(VaeGanLosses {
        encoder,
        decoder,
        critic,
        kl,
        feature,
        adversarial,
        mu,
        log_var,
        reconstruction: x_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Mlp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn col(g: &mut Graph, v: &[f64]) -> Var {
        g.leaf(Tensor::matrix(v.len(), 1, v.to_vec()).unwrap())
    }

    #[test]
    fn gan_loss_at_half() {
        let mut g = Graph::new();
        let r = col(&mut g, &[0.0, 0.0]);
        let f = col(&mut g, &[0.0, 0.0]);
        let l = gan_loss(&mut g, r, f, false).unwrap();
        assert!((g.scalar(l.disc) - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((g.scalar(l.gen) + 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gan_loss_perfect_discriminator_limit() {
        let mut g = Graph::new();
        let r = col(&mut g, &[40.0]);
        let f = col(&mut g, &[-40.0]);
        let l = gan_loss(&mut g, r, f, false).unwrap();
        // both probabilities clamp at 1 - eps
        assert!(g.scalar(l.disc) < 3e-7);
        let ns = gan_loss(&mut g, r, f, true).unwrap();
        assert!((g.scalar(ns.gen) + GAN_LOG_EPS.ln()).abs() < 1e-9);
    }

    #[test]
    fn kl_cases() {
        let mut g = Graph::new();
        let mu = g.leaf(Tensor::zeros(&[3, 4]));
        let lv = g.leaf(Tensor::zeros(&[3, 4]));
        let kl = kl_divergence(&mut g, mu, lv).unwrap();
        assert_eq!(g.scalar(kl), 0.0);
        let mu = g.leaf(Tensor::from_rows(&[[1.0]]).unwrap());
        let lv = g.leaf(Tensor::zeros(&[1, 1]));
        let kl = kl_divergence(&mut g, mu, lv).unwrap();
        assert_eq!(g.scalar(kl), 0.5);
    }

    #[test]
    fn reconstruction_cases() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_rows(&[[0.0, 0.0]]).unwrap());
        let y = g.leaf(Tensor::from_rows(&[[1.0, 1.0]]).unwrap());
        let l = vae_reconstruction_loss(&mut g, x, y).unwrap();
        assert_eq!(g.scalar(l), 1.0);
        let l = vae_reconstruction_loss(&mut g, x, x).unwrap();
        assert_eq!(g.scalar(l), 0.0);
    }

    #[test]
    fn unit_gradient_linear_critic_has_no_penalty() {
        // critic(x, c) = a.x with |a| = 1 and zero weight on the label column
        let w = vec![0.6, 0.0, -0.8, 0.0];
        let net = Mlp::from_params(
            "critic",
            &[4, 1],
            0.2,
            vec![Tensor::matrix(4, 1, w).unwrap(), Tensor::new(vec![1], vec![0.3]).unwrap()],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for sampling in [GpSampling::Interpolated, GpSampling::RealPoints] {
            let mut g = Graph::new();
            let c = net.bind(&mut g);
            let real = g.leaf(Tensor::from_rows(&[[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]]).unwrap());
            let fake = g.leaf(Tensor::from_rows(&[[0.0, 0.4, -0.3], [2.0, 0.0, 0.1]]).unwrap());
            let labels = col(&mut g, &[0.5, 1.0]);
            let cfg = GpConfig { lambda: 7.0, sampling };
            let l = wgan_gp_critic_loss(&mut g, &c, real, fake, labels, &cfg, &mut rng).unwrap();
            assert!(g.scalar(l.penalty).abs() < 1e-20);
            assert!((g.scalar(l.total) - g.scalar(l.em)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_lambda_is_em_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new("critic", &[3, 6, 4, 1], 0.2, &mut rng).unwrap();
        let mut g = Graph::new();
        let c = net.bind(&mut g);
        let real = g.leaf(Tensor::from_rows(&[[0.1, 0.2], [0.3, -0.4]]).unwrap());
        let fake = g.leaf(Tensor::from_rows(&[[0.5, 0.1], [0.0, 0.9]]).unwrap());
        let labels = col(&mut g, &[0.2, 0.8]);
        let cfg = GpConfig {
            lambda: 0.0,
            ..GpConfig::default()
        };
        let l = wgan_gp_critic_loss(&mut g, &c, real, fake, labels, &cfg, &mut rng).unwrap();
        assert_eq!(g.scalar(l.total), g.scalar(l.em));
        assert!(g.scalar(l.penalty) >= 0.0);
    }

    #[test]
    fn feature_loss_zero_for_identical_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::new("critic", &[4, 5, 5, 1], 0.2, &mut rng).unwrap();
        let mut g = Graph::new();
        let c = net.bind(&mut g);
        let x = g.leaf(Tensor::from_rows(&[[0.1, 0.2, 0.3]]).unwrap());
        let y = g.leaf(Tensor::from_rows(&[[0.1, 0.2, 0.35]]).unwrap());
        let labels = col(&mut g, &[0.4]);
        let same = dis_feature_reconstruction_loss(&mut g, &c, x, x, labels).unwrap();
        assert_eq!(g.scalar(same), 0.0);
        let diff = dis_feature_reconstruction_loss(&mut g, &c, x, y, labels).unwrap();
        assert!(g.scalar(diff) >= 0.0);

        let shallow = Mlp::new("critic", &[4, 5, 1], 0.2, &mut rng).unwrap();
        let c = shallow.bind(&mut g);
        assert!(dis_feature_reconstruction_loss(&mut g, &c, x, y, labels).is_err());
    }
}
