use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Checkpoint;
use crate::aero::SolverSpec;
use crate::geometry::Airfoil;
use crate::metrics::MetricsReport;
use crate::models::ModelNets;
use crate::nn::{Graph, Tensor};
use crate::parallel::{self, Execution};
use crate::{Error, Result};

/// `rows x cols` standard-normal draws.
pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Tensor::matrix(rows, cols, data).expect("length matches")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub labels: Vec<f64>,
    /// Shapes per label. Ignored when `latents` is given.
    pub count: usize,
    pub seed: u64,
    /// Explicit latent vectors, each decoded once per label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latents: Option<Vec<Vec<f64>>>,
}

impl GenerationRequest {
    pub fn new(labels: Vec<f64>, count: usize, seed: u64) -> Self {
        Self {
            labels,
            count,
            seed,
            latents: None,
        }
    }
}

/// Decoded shapes with the latent vector each came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub shapes: Vec<Airfoil>,
    pub latents: Tensor,
    pub labels: Vec<f64>,
}

/// Decoder output for latent rows `z` and one label per row.
pub fn decode(nets: &ModelNets, z: &Tensor, labels: &[f64]) -> Result<Tensor> {
    if z.cols() != nets.latent_dim {
        return Err(Error::LatentDim {
            expected: nets.latent_dim,
            found: z.cols(),
        });
    }
    if labels.len() != z.rows() {
        return Err(Error::shape("decode", &[z.rows()], &[labels.len()]));
    }
    let mut g = Graph::new();
    let dec = nets.decoder.bind(&mut g);
    let zv = g.leaf(z.clone());
    let cv = g.leaf(Tensor::matrix(labels.len(), 1, labels.to_vec())?);
    let input = g.concat_cols(zv, cv)?;
    let out = dec.forward(&mut g, input)?;
    Ok(g.value(out).clone())
}

/// Encoder means for coordinate rows `x` and their labels.
pub fn encode_means(nets: &ModelNets, x: &Tensor, labels: &[f64]) -> Result<Tensor> {
    let Some(encoder) = &nets.encoder else {
        return Err(Error::Config(format!("model kind {} has no encoder", nets.kind)));
    };
    if labels.len() != x.rows() {
        return Err(Error::shape("encode_means", &[x.rows()], &[labels.len()]));
    }
    let d = nets.latent_dim;
    let mut g = Graph::new();
    let enc = encoder.bind(&mut g);
    let xv = g.leaf(x.clone());
    let cv = g.leaf(Tensor::matrix(labels.len(), 1, labels.to_vec())?);
    let input = g.concat_cols(xv, cv)?;
    let heads = enc.forward(&mut g, input)?;
    let mu = g.slice_cols(heads, 0, d)?;
    Ok(g.value(mu).clone())
}

/// Shapes for every requested label, label-major.
pub fn generate(checkpoint: &Checkpoint, request: &GenerationRequest) -> Result<Vec<Airfoil>> {
    Ok(generate_with_latents(checkpoint, request)?.shapes)
}

pub fn generate_with_latents(checkpoint: &Checkpoint, request: &GenerationRequest) -> Result<Generated> {
    let d = checkpoint.latent_dim();
    if request.labels.is_empty() {
        return Err(Error::InvalidParameter("no labels requested".into()));
    }
    if let Some(bad) = request.labels.iter().find(|l| !l.is_finite()) {
        return Err(Error::InvalidParameter(format!("label {bad} is not finite")));
    }
    let per_label = match &request.latents {
        Some(zs) => {
            if zs.is_empty() {
                return Err(Error::InvalidParameter("empty latent list".into()));
            }
            if let Some(z) = zs.iter().find(|z| z.len() != d) {
                return Err(Error::LatentDim {
                    expected: d,
                    found: z.len(),
                });
            }
            Tensor::from_rows(zs)?
        }
        None => {
            if request.count == 0 {
                return Err(Error::InvalidParameter("count must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
            let mut data = Vec::with_capacity(request.labels.len() * request.count * d);
            for _ in &request.labels {
                data.extend(sample_normal(&mut rng, request.count, d).into_data());
            }
            Tensor::matrix(request.labels.len() * request.count, d, data)?
        }
    };
    let (z, labels) = if request.latents.is_some() {
        let n = per_label.rows();
        let mut data = Vec::with_capacity(request.labels.len() * n * d);
        let mut labels = Vec::with_capacity(request.labels.len() * n);
        for &l in &request.labels {
            data.extend_from_slice(per_label.data());
            labels.extend(std::iter::repeat_n(l, n));
        }
        (Tensor::matrix(labels.len(), d, data)?, labels)
    } else {
        let labels = request
            .labels
            .iter()
            .flat_map(|&l| std::iter::repeat_n(l, request.count))
            .collect();
        (per_label, labels)
    };
    let out = decode(&checkpoint.nets, &z, &labels)?;
    let shapes = (0..out.rows())
        .map(|i| Airfoil::from_vector(out.row(i).to_vec(), Some(labels[i])))
        .collect::<Result<Vec<_>>>()?;
    Ok(Generated {
        shapes,
        latents: z,
        labels,
    })
}

/// Solve every shape and score the batch.
pub fn evaluate_generation(
    shapes: &[Airfoil],
    solver: &SolverSpec,
    requested: &[f64],
    exec: Execution,
) -> Result<MetricsReport> {
    solver.flow()?;
    let outcomes = parallel::map(shapes, exec, |s| solver.solve(s))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::compute(shapes, &outcomes, requested, exec)
}
