use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pca;
use crate::nn::Tensor;
use crate::parallel::{self, Execution};
use crate::trainer::sample_normal;
use crate::{Error, Result};

const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection2D {
    /// `N x 2`.
    pub points: Tensor,
    /// KL(P || Q) after the last iteration.
    pub kl: f64,
    /// KL(P || Q) after every iteration, against the unexaggerated P.
    pub kl_history: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
}

/// Row `i` of the conditional affinities, with the Gaussian bandwidth
/// bisected until the row entropy matches `ln(perplexity)`.
fn conditional_row(d2: &[f64], i: usize, target: f64) -> Vec<f64> {
    let n = d2.len();
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut p = vec![0.0; n];
    for _ in 0..MAX_BISECTIONS {
        let dmin = d2
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, d)| *d)
            .fold(f64::INFINITY, f64::min);
        let mut sum = 0.0;
        for (j, (pj, &dj)) in p.iter_mut().zip(d2).enumerate() {
            *pj = if j == i { 0.0 } else { (-(dj - dmin) * beta).exp() };
            sum += *pj;
        }
        let mut weighted = 0.0;
        for (pj, &dj) in p.iter_mut().zip(d2) {
            *pj /= sum;
            weighted += *pj * (dj - dmin);
        }
        // H = ln(sum) + beta * E[d - dmin]
        let h = sum.ln() + beta * weighted;
        let diff = h - target;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    p
}

/// Symmetrized joint affinities `P` as a dense row-major `n x n` matrix.
pub(crate) fn joint_affinities(points: &Tensor, perplexity: f64, exec: Execution) -> Vec<f64> {
    let n = points.rows();
    let target = perplexity.ln();
    let rows = parallel::map_range(n, exec, |i| {
        let xi = points.row(i);
        let d2: Vec<f64> = (0..n)
            .map(|j| {
                points
                    .row(j)
                    .iter()
                    .zip(xi)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            })
            .collect();
        conditional_row(&d2, i, target)
    });
    let mut p = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((rows[i][j] + rows[j][i]) / denom).max(P_FLOOR);
        }
        p[i * n + i] = 0.0;
    }
    p
}

/// Exact t-SNE to two dimensions.
pub fn tsne(points: &Tensor, cfg: &TsneConfig, exec: Execution) -> Result<Projection2D> {
    let (n, d) = points.dims();
    if !(cfg.perplexity > 0.0) || (n as f64) <= 3.0 * cfg.perplexity {
        return Err(Error::Perplexity {
            perplexity: cfg.perplexity,
            n,
        });
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("t-SNE input needs d >= 2, got {d}")));
    }
    if !points.is_finite() {
        return Err(Error::InvalidParameter("t-SNE input has non-finite values".into()));
    }
    // canonical row order makes the result independent of input order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points
            .row(a)
            .iter()
            .zip(points.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let canonical = points.gather_rows(&order);
    let points = &canonical;
    let p = joint_affinities(points, cfg.perplexity, exec);

    let mut y = initial_layout(points, cfg.seed)?;
    let mut update = vec![0.0f64; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![0.0; 2 * n];
    let mut kl_history = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let exag = if it < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if it < cfg.momentum_switch {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };
        let mut zsum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[2 * i] - y[2 * j];
                let dy = y[2 * i + 1] - y[2 * j + 1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = q;
                num[j * n + i] = q;
                zsum += 2.0 * q;
            }
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..n {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = num[i * n + j];
                let w = (exag * p[i * n + j] - q / zsum) * q;
                gx += w * (y[2 * i] - y[2 * j]);
                gy += w * (y[2 * i + 1] - y[2 * j + 1]);
            }
            grad[2 * i] = 4.0 * gx;
            grad[2 * i + 1] = 4.0 * gy;
        }
        for k in 0..2 * n {
            gains[k] = if (grad[k] > 0.0) != (update[k] > 0.0) {
                gains[k] + 0.2
            } else {
                (gains[k] * 0.8).max(MIN_GAIN)
            };
            update[k] = momentum * update[k] - cfg.learning_rate * gains[k] * grad[k];
            y[k] += update[k];
        }
        let (mx, my) = centroid(&y);
        for i in 0..n {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
        kl_history.push(kl_divergence(&p, &y));
    }
    let mut out = vec![0.0; 2 * n];
    for (k, &i) in order.iter().enumerate() {
        out[2 * i] = y[2 * k];
        out[2 * i + 1] = y[2 * k + 1];
    }
    let points = Tensor::matrix(n, 2, out)?;
    if !points.is_finite() {
        return Err(Error::InvalidParameter("t-SNE diverged".into()));
    }
    Ok(Projection2D {
        points,
        kl: kl_history.last().copied().unwrap_or_else(|| f64::NAN),
        kl_history,
        iterations: cfg.iterations,
        seed: cfg.seed,
    })
}

fn centroid(y: &[f64]) -> (f64, f64) {
    let n = (y.len() / 2) as f64;
    let sx: f64 = y.iter().step_by(2).sum();
    let sy: f64 = y.iter().skip(1).step_by(2).sum();
    (sx / n, sy / n)
}

/// PCA layout scaled to a standard deviation of 1e-4 along the first axis.
/// Degenerate inputs fall back to seeded Gaussian noise of the same scale.
fn initial_layout(points: &Tensor, seed: u64) -> Result<Vec<f64>> {
    let pcs = pca(points, 2)?;
    let n = pcs.rows() as f64;
    let std = (pcs.data().iter().step_by(2).map(|v| v * v).sum::<f64>() / n).sqrt();
    if std > 0.0 && std.is_finite() {
        let k = 1e-4 / std;
        Ok(pcs.data().iter().map(|v| v * k).collect())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(sample_normal(&mut rng, pcs.rows(), 2)
            .into_data()
            .into_iter()
            .map(|v| v * 1e-4)
            .collect())
    }
}

fn kl_divergence(p: &[f64], y: &[f64]) -> f64 {
    let n = y.len() / 2;
    let mut zsum = 0.0f64;
    let mut q = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dx = y[2 * i] - y[2 * j];
                let dy = y[2 * i + 1] - y[2 * j + 1];
                q[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
                zsum += q[i * n + j];
            }
        }
    }
    let mut kl = 0.0;
    for k in 0..n * n {
        if p[k] > 0.0 {
            kl += p[k] * (p[k] / (q[k] / zsum).max(f64::MIN_POSITIVE)).ln();
        }
    }
    kl
}
