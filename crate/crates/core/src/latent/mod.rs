//! Latent clouds, projections to the plane, and SVG output.

mod pca;
mod svg;
mod tsne;

pub use pca::{pca, symmetric_eigen};
pub use svg::{airfoil_grid_svg, emit_airfoil_grid_svg, emit_scatter_svg, scatter_svg};
pub use tsne::{tsne, Projection2D, TsneConfig};

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{format_g17, Dataset};
use crate::nn::Tensor;
use crate::trainer::{encode_means, sample_normal, Checkpoint};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatentSource {
    EncoderMean,
    SampledNoise,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentCloud {
    /// `N x d`.
    pub points: Tensor,
    pub labels: Vec<f64>,
    pub source: LatentSource,
}

impl LatentCloud {
    pub fn new(points: Tensor, labels: Vec<f64>, source: LatentSource) -> Result<Self> {
        if points.rows() != labels.len() {
            return Err(Error::shape("LatentCloud", &[points.rows()], &[labels.len()]));
        }
        if points.rows() < 2 {
            return Err(Error::InvalidParameter("latent cloud needs at least 2 points".into()));
        }
        if !points.is_finite() || labels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("latent cloud has non-finite values".into()));
        }
        Ok(Self {
            points,
            labels,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    /// CSV with header `z1,...,zd,cl`.
    pub fn to_csv(&self) -> String {
        let mut out: Vec<String> = (1..=self.dim()).map(|i| format!("z{i}")).collect();
        out.push("cl".into());
        let mut text = out.join(",");
        text.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            let mut row: Vec<String> = self.points.row(i).iter().map(|v| format_g17(*v)).collect();
            row.push(format_g17(*l));
            text.push_str(&row.join(","));
            text.push('\n');
        }
        text
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Encoder means over `dataset` for encoder-bearing kinds. Generator-only
/// kinds get one standard-normal draw per dataset item, seeded by `seed`.
pub fn extract_latents(checkpoint: &Checkpoint, dataset: &Dataset, seed: u64) -> Result<LatentCloud> {
    let labels = dataset.labels();
    let nets = &checkpoint.nets;
    if nets.kind.has_encoder() {
        let (x, _) = dataset.to_tensors()?;
        let mu = encode_means(nets, &x, &labels)?;
        LatentCloud::new(mu, labels, LatentSource::EncoderMean)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = sample_normal(&mut rng, dataset.len(), nets.latent_dim);
        LatentCloud::new(z, labels, LatentSource::SampledNoise)
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Largest |Spearman correlation| between the labels and any latent axis
/// or either of the first two principal components.
pub fn label_structure_score(cloud: &LatentCloud) -> Result<f64> {
    if cloud.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "structure score needs at least 10 points, got {}",
            cloud.len()
        )));
    }
    let mut best: f64 = 0.0;
    let column = |t: &Tensor, j: usize| (0..t.rows()).map(|i| t.get(i, j)).collect::<Vec<_>>();
    for j in 0..cloud.dim() {
        best = best.max(spearman(&column(&cloud.points, j), &cloud.labels).abs());
    }
    let k = cloud.dim().min(2);
    let pcs = pca(&cloud.points, k)?;
    for j in 0..k {
        best = best.max(spearman(&column(&pcs, j), &cloud.labels).abs());
    }
    Ok(best.min(1.0))
}
