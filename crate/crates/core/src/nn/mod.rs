//! Minimal neural-network substrate: layers, reverse-mode gradients,
//! initializers and optimizers.

pub(crate) mod gemm;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod network;
pub mod optim;
pub mod softmax;

pub use init::{init_weights, InitKind, InitScheme, LayerSpec};
pub use layers::{conv_output_size, relu, sigmoid, Conv2d, Dense, Param, Relu, Reshape, Sigmoid, Upsample};
pub use network::{Layer, Sequential};
pub use optim::{Optimizer, OptimizerKind};
pub use softmax::{softmax, softmax_logprob};

use rand::Rng;

use crate::error::Result;

/// Re-draws the weights of every dense/conv layer with `kind` and zeroes biases.
pub fn initialize<R: Rng + ?Sized>(net: &mut Sequential, kind: InitKind, rng: &mut R) -> Result<()> {
    for layer in &mut net.layers {
        match layer {
            Layer::Dense(d) => init_dense(d, kind, rng)?,
            Layer::Conv2d(c) => {
                let spec = LayerSpec::Conv2d {
                    in_channels: c.in_channels(),
                    out_channels: c.out_channels(),
                    kernel: c.kernel(),
                    stride: c.stride,
                    padding: c.padding,
                };
                c.weight.value = init_weights(&spec, kind, rng)?;
                c.bias.value.fill(0.0);
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn init_dense<R: Rng + ?Sized>(d: &mut Dense, kind: InitKind, rng: &mut R) -> Result<()> {
    let spec = LayerSpec::Dense {
        inputs: d.inputs(),
        outputs: d.outputs(),
    };
    d.weight.value = init_weights(&spec, kind, rng)?;
    d.bias.value.fill(0.0);
    Ok(())
}
