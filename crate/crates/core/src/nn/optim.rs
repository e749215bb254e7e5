use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::layers::Param;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    /// `θ ← θ − α g`
    PlainSgd,
    /// Bias-corrected first/second moment update (Adam).
    AdaptiveMoments,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::PlainSgd => "sgd",
            OptimizerKind::AdaptiveMoments => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::PlainSgd),
            "adam" => Ok(OptimizerKind::AdaptiveMoments),
            other => Err(Error::invalid(format!("unknown optimizer {other:?} (sgd|adam)"))),
        }
    }
}

/// Optimizer with its per-parameter state.
///
/// Moment buffers are allocated on the first step and keyed by the position of
/// each parameter in the slice handed to [`Optimizer::step`]; callers must pass
/// parameters in a stable order.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    steps: u32,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f32) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
        }
        Ok(Self {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn sgd(lr: f32) -> Result<Self> {
        Self::new(OptimizerKind::PlainSgd, lr)
    }

    pub fn adam(lr: f32) -> Result<Self> {
        Self::new(OptimizerKind::AdaptiveMoments, lr)
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Applies one update from the accumulated gradients. Parameters are left
    /// untouched when any gradient is non-finite.
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        for p in params.iter() {
            if p.grad.dims() != p.value.dims() {
                return Err(Error::ShapeMismatch {
                    op: "optimizer_step",
                    expected: p.value.dims().to_vec(),
                    got: p.grad.dims().to_vec(),
                });
            }
            if !p.grad.is_finite() {
                return Err(Error::NonFinite(format!("gradient of {}", p.name)));
            }
        }
        match self.kind {
            OptimizerKind::PlainSgd => {
                for p in params.iter_mut() {
                    let Param { value, grad, .. } = &mut **p;
                    for (v, g) in value.data_mut().iter_mut().zip(grad.data()) {
                        *v -= self.lr * g;
                    }
                }
            }
            OptimizerKind::AdaptiveMoments => {
                if self.first.is_empty() {
                    self.first = params.iter().map(|p| Tensor::zeros(p.value.dims())).collect();
                    self.second = self.first.clone();
                }
                if self.first.len() != params.len() {
                    return Err(Error::invalid(format!(
                        "optimizer tracks {} parameters, got {}",
                        self.first.len(),
                        params.len()
                    )));
                }
                self.steps += 1;
                let t = self.steps as i32;
                let c1 = 1.0 - (self.beta1 as f64).powi(t);
                let c2 = 1.0 - (self.beta2 as f64).powi(t);
                let step_size = (self.lr as f64 * c2.sqrt() / c1) as f32;
                let eps_hat = (self.eps as f64 * c2.sqrt()) as f32;
                for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
                    if m.dims() != p.value.dims() {
                        return Err(Error::ShapeMismatch {
                            op: "optimizer_step",
                            expected: m.dims().to_vec(),
                            got: p.value.dims().to_vec(),
                        });
                    }
                    let Param { value, grad, .. } = &mut **p;
                    for (((w, g), m), v) in value
                        .data_mut()
                        .iter_mut()
                        .zip(grad.data())
                        .zip(m.data_mut())
                        .zip(v.data_mut())
                    {
                        *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                        *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                        *w -= step_size * *m / (v.sqrt() + eps_hat);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn param(value: f32, grad: f32) -> Param {
        let mut p = Param::new("layer0.weight", Tensor::from_vec(vec![value]));
        p.grad = Tensor::from_vec(vec![grad]);
        p
    }

    #[test]
    fn sgd_arithmetic() {
        let mut p = param(1.0, 2.0);
        Optimizer::sgd(0.1).unwrap().step(&mut [&mut p]).unwrap();
        assert!((p.value.data()[0] - 0.8).abs() < 1e-7);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        for mut opt in [Optimizer::sgd(0.1).unwrap(), Optimizer::adam(0.1).unwrap()] {
            let mut p = param(1.5, 0.0);
            opt.step(&mut [&mut p]).unwrap();
            assert_eq!(p.value.data()[0], 1.5);
        }
    }

    #[test]
    fn nan_gradient_names_layer() {
        let mut p = param(1.0, f32::NAN);
        let err = Optimizer::adam(0.1).unwrap().step(&mut [&mut p]).unwrap_err();
        assert!(err.to_string().contains("layer0.weight"));
        assert_eq!(p.value.data()[0], 1.0);
    }

    #[test]
    fn rejects_non_positive_rate() {
        assert!(Optimizer::sgd(0.0).is_err());
        assert!(Optimizer::adam(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn adam_first_step_opposes_gradient(g in prop_oneof![-100.0f32..-1e-6, 1e-6f32..100.0]) {
            let mut p = param(0.0, g);
            Optimizer::adam(1e-3).unwrap().step(&mut [&mut p]).unwrap();
            prop_assert_eq!(p.value.data()[0].signum(), -g.signum());
        }
    }
}
