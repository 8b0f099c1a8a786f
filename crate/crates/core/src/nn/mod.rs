//! Tensor, reverse-mode autodiff with second-order support, MLPs and Adam.

mod adam;
mod graph;
mod mlp;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use graph::{Gradients, Graph, Var};
pub use mlp::{BoundMlp, Mlp};
pub use tensor::Tensor;


/// LeakyReLU negative slope used unless configured otherwise.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;
