//! Weight initialization schemes.
//!
//! Biases always start at zero; only weight tensors are drawn here.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nn::layers::conv_output_size;
use crate::tensor::Tensor;

/// Declarative description of one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    Softmax,
}

impl LayerSpec {
    /// The policy/encoder convolution: 3×3 kernel, stride 2, no padding.
    pub fn strided_conv(in_channels: usize, out_channels: usize) -> Self {
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel: 3,
            stride: 2,
            padding: 0,
        }
    }

    pub fn weight_dims(&self) -> Option<Vec<usize>> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => Some(vec![outputs, inputs]),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => Some(vec![out_channels, in_channels, kernel, kernel]),
            _ => None,
        }
    }

    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, .. } => inputs,
            LayerSpec::Conv2d {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
            _ => 0,
        }
    }

    pub fn fan_out(&self) -> usize {
        match *self {
            LayerSpec::Dense { outputs, .. } => outputs,
            LayerSpec::Conv2d { out_channels, .. } => out_channels,
            _ => 0,
        }
    }

    /// Spatial output size of a conv layer for a square input of side `n`.
    pub fn output_side(&self, n: usize) -> Result<usize> {
        match *self {
            LayerSpec::Conv2d {
                kernel,
                stride,
                padding,
                ..
            } => conv_output_size(n, kernel, stride, padding),
            _ => Ok(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitKind {
    HeNormal,
    Orthogonal,
    /// Beta(1, 3): one-sided, long right tail.
    BetaOneThree,
    /// Beta(0.5, 0.5): U-shaped.
    BetaHalfHalf,
}

impl InitKind {
    pub const ALL: [InitKind; 4] = [
        InitKind::HeNormal,
        InitKind::Orthogonal,
        InitKind::BetaOneThree,
        InitKind::BetaHalfHalf,
    ];

    pub fn code(self) -> u8 {
        match self {
            InitKind::HeNormal => 0,
            InitKind::Orthogonal => 1,
            InitKind::BetaOneThree => 2,
            InitKind::BetaHalfHalf => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitKind::HeNormal => "he",
            InitKind::Orthogonal => "orthogonal",
            InitKind::BetaOneThree => "beta-1-3",
            InitKind::BetaHalfHalf => "beta-0.5-0.5",
        })
    }
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "he" | "he_normal" | "he-normal" => Ok(InitKind::HeNormal),
            "orthogonal" => Ok(InitKind::Orthogonal),
            "beta-1-3" | "beta(1,3)" => Ok(InitKind::BetaOneThree),
            "beta-0.5-0.5" | "beta(0.5,0.5)" => Ok(InitKind::BetaHalfHalf),
            other => Err(Error::invalid(format!("unknown init scheme '{other}'"))),
        }
    }
}

/// An init variant plus the seed that drives it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InitScheme {
    pub kind: InitKind,
    pub seed: u64,
}

/// Draws a weight tensor for `spec`.
pub fn init_weights<R: Rng + ?Sized>(spec: &LayerSpec, kind: InitKind, rng: &mut R) -> Result<Tensor> {
    let dims = spec
        .weight_dims()
        .ok_or_else(|| Error::invalid(format!("{spec:?} has no weights")))?;
    let rows = spec.fan_out();
    let cols = spec.fan_in();
    let data = match kind {
        InitKind::HeNormal => {
            let std = (2.0 / cols as f64).sqrt();
            (0..rows * cols)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    (z * std) as f32
                })
                .collect()
        }
        InitKind::Orthogonal => orthogonal(rows, cols, rng),
        InitKind::BetaOneThree => beta_samples(1.0, 3.0, rows * cols, rng)?,
        InitKind::BetaHalfHalf => beta_samples(0.5, 0.5, rows * cols, rng)?,
    };
    Tensor::new(dims, data)
}

fn beta_samples<R: Rng + ?Sized>(a: f64, b: f64, n: usize, rng: &mut R) -> Result<Vec<f32>> {
    let dist = Beta::new(a, b).map_err(|e| Error::invalid(format!("beta({a},{b}): {e}")))?;
    Ok((0..n).map(|_| dist.sample(rng) as f32).collect())
}

/// `rows × cols` matrix whose rows (if `rows <= cols`) or columns are orthonormal.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f32> {
    let (short, long) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| StandardNormal.sample(rng)).collect();
        // Gram-Schmidt twice for f64-level orthogonality
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    let mut out = vec![0.0f32; rows * cols];
    for (i, q) in basis.iter().enumerate() {
        for (j, &v) in q.iter().enumerate() {
            if rows <= cols {
                out[i * cols + j] = v as f32;
            } else {
                out[j * cols + i] = v as f32;
            }
        }
    }
    out
}
