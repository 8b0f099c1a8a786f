//! Acceptance criteria. Each prints one `criterion N: PASS|FAIL` line.
//! Runs without the libtest harness so the lines are never captured.

mod common;

use std::f64::consts::PI;

use afgl_core::aero::{lift_curve_slope, panel_solve, FlowCondition};
use afgl_core::geometry::{build_dataset, Airfoil, GridSpec};
use afgl_core::latent::{tsne, TsneConfig};
use afgl_core::metrics::{cl_mse, phi_mean, polygon_phi, smoothness_phi, variety_mu};
use afgl_core::models::{
    cvae_wgan_gp_losses, dis_feature_reconstruction_loss, gan_loss, kl_divergence,
    vae_reconstruction_loss, wgan_gp_critic_loss, GpConfig, GpSampling, LossConfig, ModelKind,
    VaeGanNets,
};
use afgl_core::nn::{BoundMlp, Graph, Tensor, Var};
use afgl_core::parallel::Execution;
use afgl_core::trainer::{evaluate_generation, generate, resume, train, Checkpoint, GenerationRequest, TrainConfig};
use afgl_core::latent::{extract_latents, label_structure_score};
use afgl_core::geometry::Dataset;
use afgl_core::aero::SolverSpec;
use afgl_core::models::Architecture;
use std::sync::OnceLock;
use common::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn report(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

/// Desk-scale trend criteria are reported without aborting the suite.
fn report_trend(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

const SLOPE: f64 = 0.2;

fn bound(vars: &[Var]) -> BoundMlp {
    BoundMlp {
        params: vars.to_vec(),
        slope: SLOPE,
    }
}

/// `[w0, b0, w1, b1, ...]` for the given widths, scaled to keep activations
/// away from the LeakyReLU kink on average.
fn mlp_params(r: &mut rand_chacha::ChaCha8Rng, widths: &[usize]) -> Vec<Tensor> {
    widths
        .windows(2)
        .flat_map(|w| {
            let s = 1.0 / (w[0] as f64).sqrt();
            [random_tensor(r, &[w[0], w[1]], s), random_tensor(r, &[w[1]], s)]
        })
        .collect()
}

fn criterion_1_gradients_match_finite_differences() {
    const INSTANCES: u64 = 20;
    let mut worst_first: f64 = 0.0;
    let mut worst_second: f64 = 0.0;
    let mut track = |name: &str, err: f64, second: bool| {
        if second {
            worst_second = worst_second.max(err);
        } else {
            worst_first = worst_first.max(err);
        }
        if err >= if second { 1e-3 } else { 1e-4 } {
            println!("  {name}: rel err {err:e}");
        }
    };
    for seed in 0..INSTANCES {
        let mut r = rng(1000 + seed);
        let (batch, data, d) = (4, 5, 2);

        // affine layer
        let inputs = vec![
            random_tensor(&mut r, &[batch, data], 1.0),
            random_tensor(&mut r, &[data, 3], 1.0),
            random_tensor(&mut r, &[3], 1.0),
            random_tensor(&mut r, &[batch, 3], 1.0),
        ];
        track("affine", fd_rel_err(&inputs, |g, v| {
            let y = g.affine(v[0], v[1], v[2])?;
            let w = g.mul(y, v[3])?;
            Ok(g.sum(w))
        }), false);

        // leaky relu, inputs kept away from the kink
        let mut x = random_tensor(&mut r, &[batch, data], 1.0);
        for v in x.data_mut() {
            if v.abs() < 0.05 {
                *v += 0.1_f64.copysign(*v);
            }
        }
        let weights = random_tensor(&mut r, &[batch, data], 1.0);
        track("leaky_relu", fd_rel_err(&[x, weights], |g, v| {
            let y = g.leaky_relu(v[0], SLOPE);
            let w = g.mul(y, v[1])?;
            Ok(g.sum(w))
        }), false);

        // cGAN losses through a discriminator
        let disc = mlp_params(&mut r, &[data + 1, 6, 1]);
        let n_disc = disc.len();
        let mut inputs = disc.clone();
        inputs.push(random_tensor(&mut r, &[batch, data], 1.0));
        inputs.push(random_tensor(&mut r, &[batch, data], 1.0));
        inputs.push(random_tensor(&mut r, &[batch, 1], 1.0));
        for which in 0..2 {
            track("gan", fd_rel_err(&inputs, |g, v| {
                let net = bound(&v[..n_disc]);
                let real_in = g.concat_cols(v[n_disc], v[n_disc + 2])?;
                let fake_in = g.concat_cols(v[n_disc + 1], v[n_disc + 2])?;
                let real = net.forward(g, real_in)?;
                let fake = net.forward(g, fake_in)?;
                let l = gan_loss(g, real, fake, false)?;
                Ok(if which == 0 { l.disc } else { l.gen })
            }), false);
        }

        // WGAN-gp critic loss including the penalty's second-order term
        let critic = mlp_params(&mut r, &[data + 1, 6, 5, 1]);
        let n_c = critic.len();
        let mut inputs = critic.clone();
        inputs.push(random_tensor(&mut r, &[batch, data], 1.0));
        inputs.push(random_tensor(&mut r, &[batch, data], 1.0));
        inputs.push(random_tensor(&mut r, &[batch, 1], 1.0));
        for sampling in [GpSampling::Interpolated, GpSampling::RealPoints] {
            let cfg = GpConfig { lambda: 10.0, sampling };
            track("wgan-gp", fd_rel_err(&inputs, |g, v| {
                let net = bound(&v[..n_c]);
                let mut u = rng(seed);
                Ok(wgan_gp_critic_loss(g, &net, v[n_c], v[n_c + 1], v[n_c + 2], &cfg, &mut u)?.total)
            }), true);
        }

        // VAE reconstruction and KL
        let inputs = vec![
            random_tensor(&mut r, &[batch, data], 1.0),
            random_tensor(&mut r, &[batch, data], 1.0),
        ];
        track("reconstruction", fd_rel_err(&inputs, |g, v| vae_reconstruction_loss(g, v[0], v[1])), false);
        let inputs = vec![
            random_tensor(&mut r, &[batch, d], 1.0),
            random_tensor(&mut r, &[batch, d], 1.0),
        ];
        track("kl", fd_rel_err(&inputs, |g, v| kl_divergence(g, v[0], v[1])), false);

        // discriminator-feature reconstruction
        let mut inputs = critic.clone();
        inputs.push(random_tensor(&mut r, &[batch, data], 1.0));
        inputs.push(random_tensor(&mut r, &[batch, data], 1.0));
        inputs.push(random_tensor(&mut r, &[batch, 1], 1.0));
        track("feature", fd_rel_err(&inputs, |g, v| {
            let net = bound(&v[..n_c]);
            dis_feature_reconstruction_loss(g, &net, v[n_c], v[n_c + 1], v[n_c + 2])
        }), false);

        // full CVAE-WGAN-gp losses with respect to each subnetwork
        let enc = mlp_params(&mut r, &[data + 1, 6, 2 * d]);
        let dec = mlp_params(&mut r, &[d + 1, 6, data]);
        let (ne, nd) = (enc.len(), dec.len());
        let mut inputs = enc.clone();
        inputs.extend(dec.clone());
        inputs.extend(critic.clone());
        let x = random_tensor(&mut r, &[batch, data], 1.0);
        let c = random_tensor(&mut r, &[batch, 1], 1.0);
        let noise = random_tensor(&mut r, &[batch, d], 1.0);
        for which in 0..3 {
            let (x, c, noise) = (x.clone(), c.clone(), noise.clone());
            track("cvae-wgan-gp", fd_rel_err(&inputs, |g, v| {
                let (e, rest) = v.split_at(ne);
                let (dd, cc) = rest.split_at(nd);
                let (e, dd, cc) = (bound(e), bound(dd), bound(cc));
                let nets = VaeGanNets { encoder: &e, decoder: &dd, critic: &cc };
                let xv = g.leaf(x.clone());
                let cv = g.leaf(c.clone());
                let mut u = rng(seed);
                let l = cvae_wgan_gp_losses(g, &nets, xv, cv, noise.clone(), &LossConfig::default(), &mut u)?;
                Ok([l.encoder, l.decoder, l.critic.total][which])
            }), which == 2);
        }
    }
    report(
        1,
        worst_first < 1e-4 && worst_second < 1e-3,
        &format!("worst first-order rel err {worst_first:.2e} (< 1e-4), second-order {worst_second:.2e} (< 1e-3), {INSTANCES} instances"),
    );
}

fn criterion_2_kl_matches_monte_carlo() {
    const SAMPLES: usize = 1_000_000;
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let d = 3;
        let mu: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let lv: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let mut g = Graph::new();
        let m = g.leaf(Tensor::matrix(1, d, mu.clone()).unwrap());
        let l = g.leaf(Tensor::matrix(1, d, lv.clone()).unwrap());
        let kl = kl_divergence(&mut g, m, l).unwrap();
        let closed = g.scalar(kl);
        // E_q[log q(z) - log p(z)]
        let mut acc = 0.0;
        for _ in 0..SAMPLES {
            let mut s = 0.0;
            for i in 0..d {
                let e: f64 = r.sample(StandardNormal);
                let sd = (0.5 * lv[i]).exp();
                let z = mu[i] + sd * e;
                s += -0.5 * e * e - 0.5 * lv[i] + 0.5 * z * z;
            }
            acc += s;
        }
        let mc = acc / SAMPLES as f64;
        worst = worst.max((mc - closed).abs() / closed);
    }
    report(2, worst < 0.01, &format!("worst relative gap {worst:.4} (< 0.01) over 10 draws"));
}

fn criterion_3_panel_solver_oracles() {
    let zero = panel_solve(&naca("0012"), &FlowCondition::new(0.0).unwrap()).cl().unwrap();
    let alphas: Vec<f64> = [-2.0f64, -1.0, 0.0, 1.0, 2.0].iter().map(|d| d.to_radians()).collect();
    let s0012 = lift_curve_slope(&naca("0012"), &alphas).unwrap();
    let s4412 = lift_curve_slope(&naca("4412"), &alphas).unwrap();
    let two_pi = 2.0 * PI;
    let a = naca("2412");
    let flow = FlowCondition::from_degrees(3.0).unwrap();
    let base = panel_solve(&a, &flow).cl().unwrap();
    let scale_gap = [0.1, 3.0, 50.0]
        .iter()
        .map(|k| (panel_solve(&a.scaled(*k), &flow).cl().unwrap() - base).abs())
        .fold(0.0, f64::max);
    let pass = zero.abs() < 1e-3
        && (s0012 - two_pi).abs() / two_pi < 0.15
        && (s4412 - two_pi).abs() / two_pi < 0.15
        && scale_gap < 1e-6;
    report(
        3,
        pass,
        &format!(
            "|C_L(0012, 0)| = {:.1e}; slope/2pi: 0012 {:.3}, 4412 {:.3}; scale gap {scale_gap:.1e}",
            zero.abs(),
            s0012 / two_pi,
            s4412 / two_pi
        ),
    );
}

fn criterion_4_metric_oracles() {
    let gon: Vec<(f64, f64)> = (0..100)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 100.0;
            (t.cos(), t.sin())
        })
        .collect();
    let circle = (polygon_phi(&gon).unwrap() - 2.0 * PI).abs();
    let square = (polygon_phi(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap() - 2.0 * PI).abs();
    let a = naca("2412");
    let same = variety_mu(&[a.clone(), a.clone(), a]).unwrap();

    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(2..12);
        let shapes: Vec<Airfoil> = (0..n)
            .map(|_| {
                let base = afgl_core::geometry::discretize(&random_naca(&mut r), 248).unwrap();
                let noise = r.random_range(0.0..0.01);
                let coords = base.coords().iter().map(|v| v + noise * r.random_range(-1.0..1.0)).collect();
                Airfoil::from_vector(coords, None).unwrap()
            })
            .collect();
        for s in &shapes {
            worst = worst.max((smoothness_phi(s).unwrap() - phi_oracle(&s.points())).abs());
        }
        let vecs: Vec<Vec<f64>> = shapes.iter().map(|s| s.coords().to_vec()).collect();
        worst = worst.max((variety_mu(&shapes).unwrap() - mu_oracle(&vecs)).abs());
        let pairs: Vec<(f64, f64)> = (0..n).map(|_| (r.random_range(0.0..1.5), r.random_range(0.0..1.5))).collect();
        worst = worst.max((cl_mse(&pairs).unwrap() - mse_oracle(&pairs)).abs());
    }
    report(
        4,
        circle < 1e-9 && square < 1e-12 && same == 0.0 && worst < 1e-12,
        &format!("100-gon gap {circle:.1e}; square gap {square:.1e}; mu(identical) {same}; oracle gap {worst:.1e}"),
    );
}

fn tiny_arch() -> Architecture {
    Architecture {
        encoder_hidden: vec![32, 16],
        decoder_hidden: vec![16, 32],
        critic_hidden: vec![32, 16],
        ..Architecture::default()
    }
}

fn criterion_5_determinism_and_resume() {
    let data = toy_dataset(12, 5);
    let mut all = true;
    let mut detail = Vec::new();
    for kind in ModelKind::ALL {
        let mut cfg = TrainConfig::new(kind);
        cfg.architecture = tiny_arch();
        cfg.batch_size = 5;
        cfg.epochs = 7;
        cfg.n_critic = 2;
        cfg.seed = 42;
        let a = train(&data, &cfg).unwrap().checkpoint.to_bytes().unwrap();
        let b = train(&data, &cfg).unwrap().checkpoint.to_bytes().unwrap();
        let mut short = cfg.clone();
        short.epochs = 3;
        let mid = train(&data, &short).unwrap().checkpoint;
        let reloaded = afgl_core::trainer::Checkpoint::from_bytes(&mid.to_bytes().unwrap()).unwrap();
        let resumed = resume(&data, reloaded, 7).unwrap().checkpoint.to_bytes().unwrap();
        let ok = a == b && a == resumed;
        all &= ok;
        detail.push(format!("{kind}={}", if ok { "identical" } else { "differs" }));
    }
    report(5, all, &detail.join(", "));
}

fn criterion_6_tsne_sanity() {
    let mut r = rng(6);
    let mut rows = Vec::new();
    let mut clusters = Vec::new();
    for c in 0..3 {
        let mut centre = [0.0; 4];
        centre[c] = 10.0;
        for _ in 0..50 {
            let p: Vec<f64> = centre.iter().map(|m| m + 0.01 * r.sample::<f64, _>(StandardNormal)).collect();
            rows.push(p);
            clusters.push(c);
        }
    }
    let points = Tensor::from_rows(&rows).unwrap();
    let proj = tsne(&points, &TsneConfig::default(), Execution::Parallel).unwrap();
    let sil = silhouette(&proj.points, &clusters);
    let h = &proj.kl_history;
    let worst_rise = h[h.len() - 101..]
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    report(
        6,
        sil > 0.8 && worst_rise <= 1e-3,
        &format!("silhouette {sil:.3} (> 0.8); largest KL rise over final 100 iterations {worst_rise:.1e} (<= 1e-3)"),
    );
}

fn criterion_7_dataset_smoothness() {
    let ds = full_dataset();
    let phi = phi_mean(&ds.airfoils, Execution::Parallel).unwrap() / PI;
    report(
        7,
        (2.0..=2.3).contains(&phi),
        &format!("phi_mean = {phi:.3} pi over {} airfoils (band [2.0, 2.3])", ds.len()),
    );
}

fn full_dataset() -> &'static Dataset {
    static DATA: OnceLock<Dataset> = OnceLock::new();
    DATA.get_or_init(|| build_dataset(&GridSpec::default(), &SolverSpec::default(), 0, Execution::Parallel).unwrap())
}

// Reduced trend experiment: 500-airfoil subsample, 2000 epochs, three seeds.
const TREND_SUBSAMPLE: usize = 500;
const TREND_EPOCHS: usize = 2000;
const TREND_BATCH: usize = 32;
const TREND_LR: f64 = 1e-4;
const TREND_SEEDS: [u64; 3] = [0, 1, 2];
const TREND_LABELS: [f64; 4] = [0.0, 0.5, 1.0, 1.5];
const TREND_PER_LABEL: usize = 25;

#[derive(Debug)]
struct RunResult {
    phi: f64,
    mse: Option<f64>,
    mu: f64,
    converged: f64,
    score: f64,
}

struct Trend {
    runs: Vec<(ModelKind, u64, RunResult)>,
}

impl Trend {
    fn of(&self, kind: ModelKind) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(move |(k, _, _)| *k == kind).map(|(_, _, r)| r)
    }

    /// Seed median; a run with no converged shapes counts as infinite MSE.
    fn median(&self, kind: ModelKind, f: impl Fn(&RunResult) -> f64) -> f64 {
        let mut v: Vec<f64> = self.of(kind).map(f).collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    fn seed0(&self, kind: ModelKind) -> &RunResult {
        self.runs.iter().find(|(k, s, _)| *k == kind && *s == TREND_SEEDS[0]).map(|(_, _, r)| r).unwrap()
    }
}

fn trend() -> &'static Trend {
    static TREND: OnceLock<Trend> = OnceLock::new();
    TREND.get_or_init(|| {
        let data = full_dataset().subsample(TREND_SUBSAMPLE, 1);
        let solver = SolverSpec::default();
        let mut runs = Vec::new();
        for seed in TREND_SEEDS {
            for kind in ModelKind::ALL {
                let mut cfg = TrainConfig::new(kind);
                cfg.epochs = TREND_EPOCHS;
                cfg.batch_size = TREND_BATCH;
                cfg.adam.lr = TREND_LR;
                cfg.seed = seed;
                let ck: Checkpoint = train(&data, &cfg).unwrap().checkpoint;
                let req = GenerationRequest::new(TREND_LABELS.to_vec(), TREND_PER_LABEL, 1000 + seed);
                let shapes = generate(&ck, &req).unwrap();
                let requested: Vec<f64> = shapes.iter().map(|s| s.label().unwrap()).collect();
                let m = evaluate_generation(&shapes, &solver, &requested, Execution::Parallel).unwrap();
                let score = label_structure_score(&extract_latents(&ck, &data, seed).unwrap()).unwrap();
                let r = RunResult {
                    phi: m.phi_mean_over_pi,
                    mse: m.cl_mse,
                    mu: m.mu,
                    converged: m.rates.converged,
                    score,
                };
                println!("trend {kind} seed {seed}: {r:?}");
                runs.push((kind, seed, r));
            }
        }
        Trend { runs }
    })
}

fn list(t: &Trend, kind: ModelKind, f: impl Fn(&RunResult) -> f64) -> String {
    let v: Vec<String> = t.of(kind).map(|r| format!("{:.4}", f(r))).collect();
    format!("{}[{}]", kind, v.join(", "))
}

fn criterion_8_smoothness_ordering() {
    let t = trend();
    let phi = |k| t.median(k, |r| r.phi);
    let vae = phi(ModelKind::CvaeWganGp) < phi(ModelKind::Cvae);
    let gan = phi(ModelKind::CwganGp) < phi(ModelKind::Cgan);
    report_trend(
        8,
        vae && gan,
        &format!(
            "median phi/pi: cvae-wgan-gp {:.3} vs cvae {:.3} ({}); cwgan-gp {:.3} vs cgan {:.3} ({}); runs {} {} {} {}",
            phi(ModelKind::CvaeWganGp),
            phi(ModelKind::Cvae),
            if vae { "holds" } else { "reversed" },
            phi(ModelKind::CwganGp),
            phi(ModelKind::Cgan),
            if gan { "holds" } else { "reversed" },
            list(t, ModelKind::CvaeWganGp, |r| r.phi),
            list(t, ModelKind::Cvae, |r| r.phi),
            list(t, ModelKind::CwganGp, |r| r.phi),
            list(t, ModelKind::Cgan, |r| r.phi),
        ),
    );
}

fn criterion_9_mse_ordering() {
    let t = trend();
    let mse = |k| t.median(k, |r| r.mse.unwrap_or(f64::INFINITY));
    let conv = |k| t.median(k, |r| r.converged);
    let (a, b) = (mse(ModelKind::CvaeWganGp), mse(ModelKind::CwganGp));
    report_trend(
        9,
        a < b,
        &format!(
            "median mse: cvae-wgan-gp {a:.4} vs cwgan-gp {b:.4} (median converged {:.2} vs {:.2})",
            conv(ModelKind::CvaeWganGp),
            conv(ModelKind::CwganGp)
        ),
    );
}

fn criterion_10_variety_ordering() {
    let t = trend();
    let mu = |k| t.median(k, |r| r.mu);
    let (a, b) = (mu(ModelKind::CvaeWganGp), mu(ModelKind::Cvae));
    report_trend(10, a > b, &format!("median mu: cvae-wgan-gp {a:.4} vs cvae {b:.4}"));
}

fn criterion_11_latent_structure() {
    let t = trend();
    let a = t.seed0(ModelKind::CvaeWganGp).score;
    let b = t.seed0(ModelKind::CwganGp).score;
    report_trend(
        11,
        a - b >= 0.2,
        &format!("structure score: cvae-wgan-gp encoder {a:.3} vs cwgan-gp noise {b:.3} (margin {:.3}, need 0.2)", a - b),
    );
}

fn main() {
    let criteria: [(u32, fn()); 11] = [
        (1, criterion_1_gradients_match_finite_differences),
        (2, criterion_2_kl_matches_monte_carlo),
        (3, criterion_3_panel_solver_oracles),
        (4, criterion_4_metric_oracles),
        (5, criterion_5_determinism_and_resume),
        (6, criterion_6_tsne_sanity),
        (7, criterion_7_dataset_smoothness),
        (8, criterion_8_smoothness_ordering),
        (9, criterion_9_mse_ordering),
        (10, criterion_10_variety_ordering),
        (11, criterion_11_latent_structure),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, f) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        if std::panic::catch_unwind(f).is_err() {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
