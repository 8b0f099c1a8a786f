//! Conditional generative models for airfoil inverse design.
//!
//! The crate bundles everything needed to train and score lift-conditioned
//! airfoil generators:
//!
//! - [`nn`]: a small tensor type with a reverse-mode autodiff graph that can
//!   differentiate its own backward pass, plus MLPs and Adam.
//! - [`models`]: cGAN, cWGAN-gp, CVAE and CVAE-WGAN-gp networks and losses.
//! - [`trainer`]: deterministic minibatch training, checkpoints, generation.
//! - [`geometry`]: NACA 4-digit synthesis and labeled datasets.
//! - [`aero`]: a linear-vortex panel solver and an external XFoil driver.
//! - [`metrics`]: smoothness, lift error and variety indices.
//! - [`latent`]: latent extraction, exact t-SNE, structure scores and SVG output.
//! - [`parallel`]: data-parallel helpers with a sequential fallback.

pub mod aero;
pub mod error;
pub mod geometry;
pub mod latent;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod parallel;
pub mod trainer;

pub use error::{Error, Result};

/// Toolkit version recorded in provenance files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
