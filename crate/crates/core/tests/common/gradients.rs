//! Finite-difference checks for every layer kind and loss head.

use latent_probe::agent::{actor_loss_grad, critic_loss_grad};
use super::reference;
use latent_probe::nn::gradcheck::{check_layer, max_relative_error, numeric_gradient, sample_indices, GradCheck};
use latent_probe::nn::{softmax_logprob, Conv2d, Dense, Layer, Relu, Reshape, Sigmoid, Upsample};
use latent_probe::vae::Vae;
use latent_probe::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOLERANCE: f64 = 1e-3;
/// Linear layers: any step is exact up to round-off, so use a wide one.
const LINEAR_STEP: f32 = 1e-1;
const SMOOTH_STEP: f32 = 1e-2;
const VAE_STEP: f64 = 1e-5;

fn uniform(dims: &[usize], lo: f32, hi: f32, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dims.iter().product();
    Tensor::new(dims.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

fn randomized(mut layer: Layer, seed: u64) -> Layer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in layer.params_mut() {
        p.value.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
    }
    layer
}

fn layer_checks(layer: Layer, input: Tensor, step: f32) -> Vec<GradCheck> {
    check_layer(&randomized(layer, 11), &input, step, 200, 5).expect("layer check")
}

pub fn dense() -> Vec<GradCheck> {
    layer_checks(Layer::Dense(Dense::new("dense", 12, 5)), uniform(&[3, 12], -1.0, 1.0, 1), LINEAR_STEP)
}

pub fn conv2d() -> Vec<GradCheck> {
    let mut out = layer_checks(
        Layer::Conv2d(Conv2d::new("conv_s2", 3, 4, 3, 2, 0)),
        uniform(&[2, 3, 9, 9], -1.0, 1.0, 2),
        LINEAR_STEP,
    );
    out.extend(layer_checks(
        Layer::Conv2d(Conv2d::new("conv_s1", 2, 3, 3, 1, 1)),
        uniform(&[2, 2, 8, 8], -1.0, 1.0, 3),
        LINEAR_STEP,
    ));
    out
}

pub fn elementwise() -> Vec<GradCheck> {
    // keep ReLU inputs clear of the kink by more than the step
    let mut relu_in = uniform(&[4, 10], -1.0, 1.0, 4);
    relu_in.data_mut().iter_mut().for_each(|v| *v = v.signum() * (v.abs() + 0.05));
    let mut out = layer_checks(Layer::Relu(Relu::default()), relu_in, SMOOTH_STEP);
    out.extend(layer_checks(Layer::Sigmoid(Sigmoid::default()), uniform(&[4, 10], -3.0, 3.0, 5), SMOOTH_STEP));
    out.extend(layer_checks(Layer::Upsample(Upsample::new(2)), uniform(&[2, 3, 4, 4], -1.0, 1.0, 6), LINEAR_STEP));
    out.extend(layer_checks(Layer::Reshape(Reshape::new(&[2, 3, 2])), uniform(&[2, 12], -1.0, 1.0, 7), LINEAR_STEP));
    out
}

pub fn softmax_logprob_head() -> Vec<GradCheck> {
    let logits = uniform(&[7], -2.0, 2.0, 8);
    (0..7)
        .map(|action| {
            let (probs, _) = softmax_logprob(logits.data(), action).unwrap();
            let analytic: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(i, &p)| if i == action { 1.0 } else { 0.0 } - p as f64)
                .collect();
            let numeric = numeric_gradient(logits.data(), &(0..7).collect::<Vec<_>>(), SMOOTH_STEP, |x| {
                Ok(softmax_logprob(x, action)?.1 as f64)
            })
            .unwrap();
            GradCheck {
                label: format!("softmax_logprob[a={action}]"),
                checked: 7,
                max_rel_error: max_relative_error(&analytic, &numeric),
            }
        })
        .collect()
}

pub fn actor_term() -> Vec<GradCheck> {
    let logits = uniform(&[5, 7], -2.0, 2.0, 13);
    let actions = [0, 6, 3, 3, 1];
    let advantages = [1.5, -0.3, 2.0, 0.0, -4.0];
    let (_, grad) = actor_loss_grad(&logits, &actions, &advantages).unwrap();
    let idx: Vec<usize> = (0..logits.len()).collect();
    let numeric = numeric_gradient(logits.data(), &idx, SMOOTH_STEP, |x| {
        Ok(actor_loss_grad(&Tensor::new(vec![5, 7], x.to_vec())?, &actions, &advantages)?.0)
    })
    .unwrap();
    let analytic: Vec<f64> = grad.data().iter().map(|&g| g as f64).collect();
    vec![GradCheck {
        label: "actor_term".into(),
        checked: idx.len(),
        max_rel_error: max_relative_error(&analytic, &numeric),
    }]
}

pub fn critic_term() -> Vec<GradCheck> {
    // values at least one step away from their targets (|x| kink)
    let values = [0.7f32, -1.2, 3.0, 0.05, -0.4];
    let targets = [0.0, -2.0, 5.5, -0.5, 1.0];
    let (_, grad) = critic_loss_grad(&values, &targets);
    let numeric = numeric_gradient(&values, &(0..5).collect::<Vec<_>>(), SMOOTH_STEP, |v| {
        Ok(critic_loss_grad(v, &targets).0)
    })
    .unwrap();
    let analytic: Vec<f64> = grad.iter().map(|&g| g as f64).collect();
    vec![GradCheck {
        label: "critic_l1_term".into(),
        checked: 5,
        max_rel_error: max_relative_error(&analytic, &numeric),
    }]
}

/// Every parameter tensor of a small VAE under the full loss. The numeric
/// side differentiates an independent f64 forward pass; probes that straddle
/// a ReLU kink are skipped. Returns the checks, the number skipped, and the
/// relative gap between the f32 and f64 loss values.
pub fn vae_loss() -> (Vec<GradCheck>, usize, f64) {
    let mut vae = Vae::initialized(16, 4, 3).unwrap();
    let clean = uniform(&[2, 3, 16, 16], 0.0, 1.0, 9);
    let noisy = uniform(&[2, 3, 16, 16], 0.1, 0.9, 10);
    let eps = uniform(&[2, 4], -1.5, 1.5, 12);
    vae.zero_grad();
    let loss32 = vae.loss_and_grad(&clean, &noisy, &eps).unwrap().total;
    let base: Vec<Vec<f64>> = vae
        .params()
        .iter()
        .map(|p| p.value.data().iter().map(|&v| v as f64).collect())
        .collect();
    let loss64 = reference::vae_loss(&vae, &base, &clean, &noisy, &eps).0;
    let mut skipped = 0;
    let mut checks = Vec::new();
    for (k, p) in vae.params().into_iter().enumerate() {
        let (mut analytic, mut numeric) = (Vec::new(), Vec::new());
        for i in sample_indices(p.value.len(), 24) {
            let mut params = base.clone();
            params[k][i] = base[k][i] + VAE_STEP;
            let (up, piece_up) = reference::vae_loss(&vae, &params, &clean, &noisy, &eps);
            params[k][i] = base[k][i] - VAE_STEP;
            let (down, piece_down) = reference::vae_loss(&vae, &params, &clean, &noisy, &eps);
            if piece_up != piece_down {
                skipped += 1;
                continue;
            }
            analytic.push(p.grad.data()[i] as f64);
            numeric.push((up - down) / (2.0 * VAE_STEP));
        }
        checks.push(GradCheck {
            label: format!("vae.{}", p.name),
            checked: numeric.len(),
            max_rel_error: max_relative_error(&analytic, &numeric),
        });
    }
    (checks, skipped, (loss32 - loss64).abs() / loss64.abs())
}
