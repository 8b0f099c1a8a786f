use rand::Rng;

use super::{Graph, Tensor, Var};
use crate::{Error, Result};

/// Fully connected network: affine layers with LeakyReLU between them and a
/// linear final layer. Parameters are stored as `[w0, b0, w1, b1, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    name: String,
    widths: Vec<usize>,
    slope: f64,
    params: Vec<Tensor>,
}

impl Mlp {
    /// Uniform fan-in initialization, `U(-1/sqrt(n_in), 1/sqrt(n_in))` for
    /// weights and biases alike.
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        widths: &[usize],
        slope: f64,
        rng: &mut R,
    ) -> Result<Self> {
        check_widths(widths, slope)?;
        let mut params = Vec::with_capacity(2 * (widths.len() - 1));
        for pair in widths.windows(2) {
            let (n_in, n_out) = (pair[0], pair[1]);
            let bound = 1.0 / (n_in as f64).sqrt();
            let mut draw = |n: usize| -> Vec<f64> {
                (0..n).map(|_| rng.random_range(-bound..bound)).collect()
            };
            params.push(Tensor::matrix(n_in, n_out, draw(n_in * n_out))?);
            params.push(Tensor::new(vec![n_out], draw(n_out))?);
        }
        Ok(Self {
            name: name.to_owned(),
            widths: widths.to_vec(),
            slope,
            params,
        })
    }

    pub fn from_params(name: &str, widths: &[usize], slope: f64, params: Vec<Tensor>) -> Result<Self> {
        check_widths(widths, slope)?;
        if params.len() != 2 * (widths.len() - 1) {
            return Err(Error::format(
                "network parameters",
                format!("{name}: expected {} tensors, got {}", 2 * (widths.len() - 1), params.len()),
            ));
        }
        for (l, pair) in widths.windows(2).enumerate() {
            let w = &params[2 * l];
            let b = &params[2 * l + 1];
            if w.dims() != (pair[0], pair[1]) || b.len() != pair[1] {
                return Err(Error::shape("Mlp::from_params", w.shape(), &[pair[0], pair[1]]));
            }
        }
        Ok(Self {
            name: name.to_owned(),
            widths: widths.to_vec(),
            slope,
            params,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<Tensor> {
        self.params
    }

    pub fn param_names(&self) -> Vec<String> {
        (0..self.n_layers())
            .flat_map(|l| {
                [
                    format!("{}.{l}.weight", self.name),
                    format!("{}.{l}.bias", self.name),
                ]
            })
            .collect()
    }

    /// Place the parameters on `g` as leaves.
    pub fn bind(&self, g: &mut Graph) -> BoundMlp {
        BoundMlp {
            params: self.params.iter().map(|p| g.leaf(p.clone())).collect(),
            slope: self.slope,
        }
    }
}

fn check_widths(widths: &[usize], slope: f64) -> Result<()> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(Error::Config(format!("invalid layer widths {widths:?}")));
    }
    if !(slope > 0.0 && slope < 1.0) {
        return Err(Error::Config(format!("LeakyReLU slope {slope} outside (0, 1)")));
    }
    Ok(())
}

/// An [`Mlp`] whose parameters live on a particular graph.
#[derive(Clone, Debug)]
pub struct BoundMlp {
    pub params: Vec<Var>,
    pub slope: f64,
}

impl BoundMlp {
    pub fn forward(&self, g: &mut Graph, x: Var) -> Result<Var> {
        Ok(*self.forward_features(g, x)?.last().expect("at least one layer"))
    }

    /// Output of every layer: post-activation for hidden layers, then the
    /// linear output.
    pub fn forward_features(&self, g: &mut Graph, x: Var) -> Result<Vec<Var>> {
        let n = self.params.len() / 2;
        let mut out = Vec::with_capacity(n);
        let mut h = x;
        for l in 0..n {
            h = g.affine(h, self.params[2 * l], self.params[2 * l + 1])?;
            if l + 1 < n {
                h = g.leaky_relu(h, self.slope);
            }
            out.push(h);
        }
        Ok(out)
    }
}
