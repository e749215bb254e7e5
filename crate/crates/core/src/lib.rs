//! Desk-scale study of how policy networks organize their hidden state:
//! a rasterized grasping task, a denoising VAE, Monte Carlo actor-critic
//! agents on pixels or latent codes, and PCA-based activation probing.

pub mod agent;
pub mod checkpoint;
pub mod env;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod probe;
pub mod tensor;
pub mod vae;

pub use error::{Error, Result};
pub use tensor::Tensor;
