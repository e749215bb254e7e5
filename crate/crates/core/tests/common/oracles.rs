//! Independent reference computations: brute-force returns, SVD-based PCA
//! and a Kolmogorov-Smirnov uniformity statistic.

use latent_probe::agent::returns;
use latent_probe::env::{EnvConfig, GraspEnv, Task};
use latent_probe::probe::{pca_fit, pca_project, Matrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `G_t = Σ_{i≥t} γ^{i-t} r_i` by direct double sum.
pub fn brute_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| (t..rewards.len()).map(|i| gamma.powi((i - t) as i32) * rewards[i]).sum())
        .collect()
}

/// Largest absolute gap between `returns` and the double sum over `cases`
/// random episodes of length 1..=40.
pub fn returns_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let len = rng.random_range(1..=40);
        let gamma = rng.random_range(0.0..0.999);
        let rewards: Vec<f64> = (0..len)
            .map(|_| if rng.random_bool(0.05) { 10.0 } else { -rng.random_range(0.0..0.1) })
            .collect();
        for (a, b) in returns(&rewards, gamma).iter().zip(brute_returns(&rewards, gamma)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Projection onto the top-3 right singular vectors of the centred data.
fn svd_projection(rows: usize, cols: usize, data: &[f64]) -> Vec<Vec<f64>> {
    let x = DMatrix::from_row_slice(rows, cols, data);
    let mean = x.row_mean();
    let centred = DMatrix::from_fn(rows, cols, |i, j| x[(i, j)] - mean[j]);
    let svd = centred.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    (0..rows)
        .map(|i| {
            order[..3]
                .iter()
                .map(|&k| (0..cols).map(|j| centred[(i, j)] * v_t[(k, j)]).sum())
                .collect()
        })
        .collect()
}

/// Largest per-entry gap between `pca_project` and the SVD oracle, each
/// component's sign aligned first, over `matrices` random 50 × 64 inputs.
pub fn pca_svd_gap(matrices: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..matrices {
        let (rows, cols) = (50, 64);
        // anisotropic columns keep the top three singular values well separated
        let scales: Vec<f64> = (0..cols).map(|j| 1.0 + 4.0 * (-(j as f64) / 8.0).exp()).collect();
        let data: Vec<f64> = (0..rows * cols)
            .map(|i| scales[i % cols] * rng.random_range(-1.0..1.0))
            .collect();
        let model = pca_fit(&Matrix::new(rows, cols, data.clone()).unwrap(), 3).unwrap();
        let ours = pca_project(&model, &Matrix::new(rows, cols, data.clone()).unwrap()).unwrap();
        let oracle = svd_projection(rows, cols, &data);
        for c in 0..3 {
            let dot: f64 = (0..rows).map(|i| ours[i][c] * oracle[i][c]).sum();
            let sign = if dot < 0.0 { -1.0 } else { 1.0 };
            for i in 0..rows {
                worst = worst.max((ours[i][c] - sign * oracle[i][c]).abs());
            }
        }
    }
    worst
}

/// Kolmogorov-Smirnov distance of `samples` from Uniform(0, 1).
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut u = samples.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max)
}

/// KS distances of the object's tray-normalized x and y over `seeds` resets.
pub fn placement_ks(seeds: u64) -> (f64, f64) {
    let config = EnvConfig::with_task(Task::StaticRandom);
    let mut env = GraspEnv::new(config.clone()).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in 0..seeds {
        env.reset(s).unwrap();
        let o = env.state().unwrap().object;
        xs.push((o[0] - config.tray_min[0]) / (config.tray_max[0] - config.tray_min[0]));
        ys.push((o[1] - config.tray_min[1]) / (config.tray_max[1] - config.tray_min[1]));
    }
    (ks_uniform(&xs), ks_uniform(&ys))
}
