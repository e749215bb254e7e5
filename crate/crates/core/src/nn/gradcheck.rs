//! Central-difference gradient checks.
//!
//! Relative error per entry is `|a - n| / max(|a|, |n|, floor)` where the
//! floor is [`SCALE_FLOOR`] times the largest analytic magnitude in the same
//! tensor, so entries that are tiny next to their neighbours are judged on
//! absolute error at the tensor's own scale.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nn::network::Layer;
use crate::tensor::Tensor;

pub const SCALE_FLOOR: f64 = 1e-3;

/// Largest relative error found for one tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub label: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

impl GradCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let floor = (SCALE_FLOOR * scale).max(f64::MIN_POSITIVE);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Central differences of `f` at `point` along the listed coordinates.
pub fn numeric_gradient<F>(point: &[f32], indices: &[usize], step: f32, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f32]) -> Result<f64>,
{
    let mut x = point.to_vec();
    indices
        .iter()
        .map(|&i| {
            let orig = x[i];
            x[i] = orig + step;
            let up = f(&x)?;
            x[i] = orig - step;
            let down = f(&x)?;
            x[i] = orig;
            // use the representable step actually taken
            let h = (orig + step) as f64 - (orig - step) as f64;
            Ok((up - down) / h)
        })
        .collect()
}

/// Up to `limit` coordinates spread evenly over `0..len`.
pub fn sample_indices(len: usize, limit: usize) -> Vec<usize> {
    if len <= limit {
        return (0..len).collect();
    }
    (0..limit).map(|i| i * len / limit).collect()
}

/// Checks input and parameter gradients of a single layer under the scalar
/// loss `sum(c * y)` with a fixed random projection `c`.
pub fn check_layer(layer: &Layer, input: &Tensor, step: f32, limit: usize, seed: u64) -> Result<Vec<GradCheck>> {
    let y = layer.infer(input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proj: Vec<f32> = (0..y.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let project = |t: &Tensor| -> f64 { t.data().iter().zip(&proj).map(|(&a, &b)| a as f64 * b as f64).sum() };

    let mut trained = layer.clone();
    trained.forward(input)?;
    let dx = trained.backward(&Tensor::new(y.dims().to_vec(), proj.clone())?)?;

    let mut report = Vec::new();
    let idx = sample_indices(input.len(), limit);
    let numeric = numeric_gradient(input.data(), &idx, step, |x| {
        Ok(project(&layer.infer(&Tensor::new(input.dims().to_vec(), x.to_vec())?)?))
    })?;
    let analytic: Vec<f64> = idx.iter().map(|&i| dx.data()[i] as f64).collect();
    report.push(GradCheck {
        label: format!("{}.input", layer.kind()),
        checked: idx.len(),
        max_rel_error: max_relative_error(&analytic, &numeric),
    });

    for (p, trained_p) in layer.params().iter().zip(trained.params()) {
        let idx = sample_indices(p.value.len(), limit);
        let name = p.name.clone();
        let numeric = numeric_gradient(p.value.data(), &idx, step, |w| {
            let mut probe = layer.clone();
            let target = probe
                .params_mut()
                .into_iter()
                .find(|q| q.name == name)
                .ok_or_else(|| Error::invalid(format!("parameter {name} vanished")))?;
            target.value.data_mut().copy_from_slice(w);
            Ok(project(&probe.infer(input)?))
        })?;
        let analytic: Vec<f64> = idx.iter().map(|&i| trained_p.grad.data()[i] as f64).collect();
        report.push(GradCheck {
            label: format!("{}.{}", layer.kind(), p.name),
            checked: idx.len(),
            max_rel_error: max_relative_error(&analytic, &numeric),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic() {
        let g = numeric_gradient(&[1.0, -2.0], &[0, 1], 1e-2, |x| {
            Ok(x.iter().map(|&v| (v as f64).powi(2)).sum())
        })
        .unwrap();
        assert!((g[0] - 2.0).abs() < 1e-4 && (g[1] + 4.0).abs() < 1e-4);
    }

    #[test]
    fn floor_scales_with_tensor() {
        assert_eq!(max_relative_error(&[10.0, 0.0], &[10.0, 0.0]), 0.0);
        // 1e-4 off on an entry next to a 10.0 gradient: judged against 1e-2
        let e = max_relative_error(&[10.0, 0.0], &[10.0, 1e-4]);
        assert!((e - 1e-2).abs() < 1e-12);
    }

    #[test]
    fn sampling_spreads() {
        assert_eq!(sample_indices(3, 5), vec![0, 1, 2]);
        assert_eq!(sample_indices(10, 5), vec![0, 2, 4, 6, 8]);
    }
}
