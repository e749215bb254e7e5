//! `latent-probe`: collect images, train the VAE and agents, probe policies,
//! run the full grid and render reports.
//!
//! Every flag can also be given in a `--config` file as `flag-name = value`;
//! flags on the command line win. Exit status is 0 on success, 1 for invalid
//! input and 2 for failures while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use latent_probe::agent::{Policy, Representation};
use latent_probe::env::{EnvConfig, Task};
use latent_probe::experiment::{
    self, probe_timeline, render_report, run_grid, run_one, Condition, ExperimentPlan, ProbeConfig, ProbeData,
    RunRecord, Settings, VaeSource, PLAN_KEYS,
};
use latent_probe::probe::{
    activations_on, capture_activations, probe_activations, random_input_activations, scripted_episodes,
    CaptureConfig, NeighborGraph, PermutationBaseline, DEFAULT_NEIGHBORS,
};
use latent_probe::vae::{collect_dataset, denoising_mse, train_vae, ImageDataset, Vae, VaeTrainConfig};
use latent_probe::Error;

#[derive(Parser)]
#[command(name = "latent-probe", version, about = "Latent vs pixel policies and their hidden representations")]
struct Cli {
    /// Flat `key = value` settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root (or, for collect/train-vae, a `.lprb` file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record random-policy frames for VAE training.
    Collect(CollectArgs),
    /// Train the denoising VAE on collected frames.
    TrainVae(TrainVaeArgs),
    /// Train one actor-critic agent.
    TrainAgent(TrainAgentArgs),
    /// Project and score a policy's hidden activations.
    Probe(ProbeArgs),
    /// VAE pretraining plus every (condition, seed) run, then a report.
    Grid(GridArgs),
    /// Learning curves and snapshot probes for existing runs.
    Report(ReportArgs),
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long)]
    task: Option<Task>,
    /// Number of frames.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    image_size: Option<usize>,
}

#[derive(Args)]
struct TrainVaeArgs {
    /// Frames written by `collect`.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f32>,
    #[arg(long)]
    noise_std: Option<f32>,
    /// Frames kept out of training for a denoising check.
    #[arg(long)]
    held_out: Option<usize>,
}

#[derive(Args)]
struct TrainAgentArgs {
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    repr: Option<Representation>,
    #[arg(long)]
    vae: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Save the policy every k episodes (and at 0).
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// he | orthogonal | beta-1-3 | beta-0.5-0.5
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    learning_rate: Option<f32>,
    #[arg(long)]
    gamma: Option<f64>,
    /// sgd | adam
    #[arg(long)]
    optimizer: Option<String>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    repr: Option<Representation>,
    #[arg(long)]
    vae: Option<PathBuf>,
    /// Feed unit-normal inputs instead of encoded observations.
    #[arg(long)]
    random_inputs: bool,
    /// Episodes to capture.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    neighbors: Option<usize>,
    /// Reward shuffles for the chance baseline.
    #[arg(long)]
    permutations: Option<usize>,
    /// Probe scripted episodes instead of the policy's own rollouts.
    #[arg(long)]
    scripted: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Comma-separated `task:repr` list.
    #[arg(long)]
    conditions: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Comma-separated episode counts, starting at 0.
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    learning_rate: Option<f32>,
    /// VAE checkpoint to reuse, or `none`.
    #[arg(long)]
    vae: Option<String>,
    #[arg(long)]
    vae_images: Option<usize>,
    #[arg(long)]
    vae_epochs: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    vae: Option<PathBuf>,
    /// Skip snapshot probing.
    #[arg(long)]
    no_probe: bool,
    #[arg(long)]
    neighbors: Option<usize>,
}

const COMMON_KEYS: &[&str] = &["out", "seed"];
const OTHER_KEYS: &[&str] = &[
    "task",
    "count",
    "images",
    "epochs",
    "batch-size",
    "held-out",
    "repr",
    "snapshot-every",
    "policy",
    "random-inputs",
    "neighbors",
    "permutations",
    "scripted",
    "no-probe",
];

fn put<T: ToString>(s: &mut Settings, key: &str, value: &Option<T>) {
    if let Some(v) = value {
        s.set(key, v.to_string());
    }
}

fn put_path(s: &mut Settings, key: &str, value: &Option<PathBuf>) {
    if let Some(v) = value {
        s.set(key, v.display());
    }
}

fn flag(s: &mut Settings, key: &str, on: bool) {
    if on {
        s.set(key, true);
    }
}

impl Cli {
    /// Config file first, command-line values on top.
    fn settings(&self) -> anyhow::Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::new(),
        };
        let known: Vec<&str> = COMMON_KEYS.iter().chain(PLAN_KEYS).chain(OTHER_KEYS).copied().collect();
        s.check_keys(&known)?;
        let mut cli = Settings::new();
        put_path(&mut cli, "out", &self.out);
        put(&mut cli, "seed", &self.seed);
        match &self.command {
            Command::Collect(a) => {
                put(&mut cli, "task", &a.task);
                put(&mut cli, "count", &a.count);
                put(&mut cli, "image-size", &a.image_size);
            }
            Command::TrainVae(a) => {
                put_path(&mut cli, "images", &a.images);
                put(&mut cli, "epochs", &a.epochs);
                put(&mut cli, "latent-dim", &a.latent_dim);
                put(&mut cli, "batch-size", &a.batch_size);
                put(&mut cli, "learning-rate", &a.learning_rate);
                put(&mut cli, "noise-std", &a.noise_std);
                put(&mut cli, "held-out", &a.held_out);
            }
            Command::TrainAgent(a) => {
                put(&mut cli, "task", &a.task);
                put(&mut cli, "repr", &a.repr);
                put_path(&mut cli, "vae", &a.vae);
                put(&mut cli, "episodes", &a.episodes);
                put(&mut cli, "snapshot-every", &a.snapshot_every);
                put(&mut cli, "init", &a.init);
                put(&mut cli, "learning-rate", &a.learning_rate);
                put(&mut cli, "gamma", &a.gamma);
                put(&mut cli, "optimizer", &a.optimizer);
            }
            Command::Probe(a) => {
                put_path(&mut cli, "policy", &a.policy);
                put(&mut cli, "task", &a.task);
                put(&mut cli, "repr", &a.repr);
                put_path(&mut cli, "vae", &a.vae);
                flag(&mut cli, "random-inputs", a.random_inputs);
                put(&mut cli, "episodes", &a.episodes);
                put(&mut cli, "neighbors", &a.neighbors);
                put(&mut cli, "permutations", &a.permutations);
                flag(&mut cli, "scripted", a.scripted);
            }
            Command::Grid(a) => {
                put(&mut cli, "conditions", &a.conditions);
                put(&mut cli, "seeds", &a.seeds);
                put(&mut cli, "episodes", &a.episodes);
                put(&mut cli, "snapshots", &a.snapshots);
                put(&mut cli, "init", &a.init);
                put(&mut cli, "learning-rate", &a.learning_rate);
                put(&mut cli, "vae", &a.vae);
                put(&mut cli, "vae-images", &a.vae_images);
                put(&mut cli, "vae-epochs", &a.vae_epochs);
                put(&mut cli, "workers", &a.workers);
            }
            Command::Report(a) => {
                put_path(&mut cli, "vae", &a.vae);
                flag(&mut cli, "no-probe", a.no_probe);
                put(&mut cli, "neighbors", &a.neighbors);
            }
        }
        s.overlay(&cli);
        Ok(s)
    }
}

fn out_root(s: &Settings) -> anyhow::Result<PathBuf> {
    Ok(s.get_or("out", PathBuf::from("out"))?)
}

/// A `.lprb` path names the file itself; anything else is the output root.
fn artifact_path(s: &Settings, default_name: &str) -> anyhow::Result<PathBuf> {
    let out = out_root(s)?;
    Ok(if out.extension().is_some_and(|e| e == "lprb") {
        out
    } else {
        out.join("vae").join(default_name)
    })
}

fn load_vae(path: &Path) -> anyhow::Result<Vae> {
    if !path.is_file() {
        return Err(Error::invalid(format!("VAE checkpoint {} does not exist", path.display())).into());
    }
    Ok(Vae::load(path)?)
}

fn collect(s: &Settings) -> anyhow::Result<()> {
    let config = EnvConfig {
        image_size: s.get_or("image-size", 64)?,
        ..EnvConfig::with_task(s.get_or("task", Task::StaticRandom)?)
    };
    let count: usize = s.get_or("count", 1000)?;
    let dataset = collect_dataset(&config, count, s.get_or("seed", 0)?)?;
    let path = artifact_path(s, "images.lprb")?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    dataset.save(&path)?;
    println!("wrote {} frames to {}", dataset.len(), path.display());
    Ok(())
}

fn train_vae_cmd(s: &Settings) -> anyhow::Result<()> {
    let images = s.get_or("images", out_root(s)?.join("vae").join("images.lprb"))?;
    let dataset = ImageDataset::load(&images).with_context(|| format!("reading {}", images.display()))?;
    let d = VaeTrainConfig::default();
    let config = VaeTrainConfig {
        epochs: s.get_or("epochs", d.epochs)?,
        batch_size: s.get_or("batch-size", d.batch_size)?,
        learning_rate: s.get_or("learning-rate", d.learning_rate)?,
        noise_std: s.get_or("noise-std", d.noise_std)?,
        latent_dim: s.get_or("latent-dim", d.latent_dim)?,
        seed: s.get_or("seed", d.seed)?,
    };
    let held_out: usize = s.get_or("held-out", 0)?;
    let (train, test) = if held_out > 0 {
        let (train, test) = dataset.split(held_out)?;
        (train, Some(test))
    } else {
        (dataset, None)
    };
    let (vae, history) = train_vae(&train, &config)?;
    let path = artifact_path(s, "vae.lprb")?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    vae.save(&path)?;
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        println!(
            "reconstruction loss {:.4} -> {:.4} over {} epochs",
            first.recon,
            last.recon,
            history.len()
        );
    }
    if let Some(test) = test {
        let (recon, noisy) = denoising_mse(&vae, &test, config.noise_std, config.seed)?;
        println!("held-out MSE: reconstruction {recon:.6}, noisy input {noisy:.6}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn train_agent_cmd(s: &Settings) -> anyhow::Result<()> {
    let condition = Condition {
        task: s.get_or("task", Task::StaticStatic)?,
        representation: s.get_or("repr", Representation::Image)?,
    };
    let mut plan_settings = s.subset(PLAN_KEYS);
    plan_settings.set("conditions", condition);
    plan_settings.set("seeds", 1);
    if !s.contains("vae") {
        plan_settings.set("vae", "none");
    }
    if let Some(every) = s.get::<usize>("snapshot-every")? {
        if every == 0 {
            return Err(Error::invalid("snapshot-every must be positive").into());
        }
        let episodes: usize = plan_settings.get_or("episodes", ExperimentPlan::default().episodes)?;
        let list: Vec<String> = (0..=episodes).step_by(every).map(|e| e.to_string()).collect();
        plan_settings.set("snapshots", list.join(","));
    }
    let plan = ExperimentPlan::from_settings(&plan_settings)?;
    let vae = match (&plan.vae, condition.representation) {
        (VaeSource::Checkpoint(path), Representation::Latent) => Some(load_vae(path)?),
        (_, Representation::Latent) => return Err(Error::invalid("a latent agent needs --vae <checkpoint>").into()),
        _ => None,
    };
    let record = run_one(&plan, condition, plan.base_seed, vae.as_ref())?;
    let final_rate = latent_probe::agent::read_metrics(&record.metrics_path)?
        .last()
        .map_or(0.0, |r| r.windowed_success);
    println!(
        "{condition} seed {}: final windowed success {final_rate:.3}, {} snapshots, metrics in {}",
        record.seed,
        record.snapshot_paths.len(),
        record.metrics_path.display()
    );
    Ok(())
}

fn probe_cmd(s: &Settings) -> anyhow::Result<()> {
    let policy_path: PathBuf = s.require("policy")?;
    let policy = Policy::load(&policy_path)?;
    if let Some(repr) = s.get::<Representation>("repr")? {
        if repr != policy.representation {
            bail!(Error::invalid(format!(
                "--repr {repr} but {} holds a {} policy",
                policy_path.display(),
                policy.representation
            )));
        }
    }
    let env = EnvConfig::with_task(s.get_or("task", Task::StaticStatic)?);
    let vae = match policy.representation {
        Representation::Latent => Some(load_vae(&s.require::<PathBuf>("vae")?)?),
        Representation::Image => None,
    };
    let encoder = match &vae {
        Some(vae) => latent_probe::agent::StateEncoder::Latent { vae, stochastic: false },
        None => latent_probe::agent::StateEncoder::Pixels,
    };
    let seed: u64 = s.get_or("seed", 0)?;
    let episodes: usize = s.get_or("episodes", 3)?;
    let mut set = if s.get_or("scripted", false)? {
        activations_on(&policy, encoder, &scripted_episodes(&env, episodes, 0.3, true, 0.99, seed)?, seed)?
    } else {
        let capture = CaptureConfig {
            episodes,
            seed,
            ..Default::default()
        };
        capture_activations(&policy, &env, encoder, &capture)?
    };
    let random = s.get_or("random-inputs", false)?;
    if random {
        set = random_input_activations(&policy, &set, seed)?;
    }
    let neighbors: usize = s.get_or("neighbors", DEFAULT_NEIGHBORS)?;
    let stem = policy_path.file_stem().map_or("policy".into(), |s| s.to_string_lossy().into_owned());
    let label = if random { format!("{stem}-random") } else { stem };
    let report = probe_activations(&set, neighbors, &label, None)?;
    let baseline = PermutationBaseline::new(
        &NeighborGraph::new(&set.activations, neighbors)?,
        &set.rewards,
        s.get_or("permutations", 200)?,
        seed,
    )?;

    let dir = out_root(s)?.join("reports");
    set.write_csv(&dir.join(format!("{label}_activations.csv")))?;
    report.write_projection_csv(&dir.join(format!("{label}_projection.csv")))?;
    std::fs::write(dir.join(format!("{label}_projection.svg")), experiment::projection_svg(&report))?;
    let (lo, hi) = baseline.band();
    println!(
        "{label}: {} points, organization {:.4} (shuffled rewards {lo:.4}..{hi:.4}, 95th pct {:.4}), collapsed {}{}",
        set.len(),
        report.organization.score,
        baseline.quantile(0.95),
        report.collapsed,
        if set.unsuccessful_fallback { ", from unsuccessful episodes" } else { "" }
    );
    Ok(())
}

fn report_runs(root: &Path, records: &[RunRecord], vae: Option<&Vae>, probe: bool, neighbors: usize) -> anyhow::Result<()> {
    let reports_dir = root.join("reports");
    let mut reports = Vec::new();
    if probe {
        for r in records {
            if r.condition.representation == Representation::Latent && vae.is_none() {
                eprintln!("skipping probes of {}-{}: no VAE", r.condition, r.seed);
                continue;
            }
            let config = ProbeConfig {
                data: ProbeData::Rollouts(CaptureConfig {
                    seed: r.seed,
                    ..Default::default()
                }),
                neighbors,
                out_dir: Some(reports_dir.join(format!("{}-{}", r.condition, r.seed))),
            };
            reports.extend(probe_timeline(r, &EnvConfig::with_task(r.condition.task), vae, &config)?);
        }
    }
    let files = render_report(records, &reports, &reports_dir)?;
    println!("wrote {} report files to {}", files.len(), reports_dir.display());
    Ok(())
}

fn grid_cmd(s: &Settings) -> anyhow::Result<bool> {
    let plan = ExperimentPlan::from_settings(&s.subset(PLAN_KEYS))?;
    let outcome = run_grid(&plan)?;
    for f in &outcome.failures {
        eprintln!("run {}-{} failed: {}", f.condition, f.seed, f.error);
    }
    for r in &outcome.records {
        println!("{}-{} done in {:.1}s", r.condition, r.seed, r.wall_clock.as_secs_f64());
    }
    if !outcome.records.is_empty() {
        let vae_path = plan.vae_dir().join("vae.lprb");
        let vae = match &plan.vae {
            VaeSource::Checkpoint(p) => Some(Vae::load(p)?),
            VaeSource::Train { .. } if vae_path.is_file() => Some(Vae::load(&vae_path)?),
            _ => None,
        };
        report_runs(&plan.output_root, &outcome.records, vae.as_ref(), true, DEFAULT_NEIGHBORS)?;
    }
    Ok(outcome.failures.is_empty())
}

fn report_cmd(s: &Settings) -> anyhow::Result<()> {
    let root = out_root(s)?;
    let records = RunRecord::discover(&root)?;
    let vae_path = s.get_or("vae", root.join("vae").join("vae.lprb"))?;
    let vae = if vae_path.is_file() { Some(Vae::load(&vae_path)?) } else { None };
    report_runs(
        &root,
        &records,
        vae.as_ref(),
        !s.get_or("no-probe", false)?,
        s.get_or("neighbors", DEFAULT_NEIGHBORS)?,
    )
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = cli.settings().and_then(|s| match &cli.command {
        Command::Collect(_) => collect(&s),
        Command::TrainVae(_) => train_vae_cmd(&s),
        Command::TrainAgent(_) => train_agent_cmd(&s),
        Command::Probe(_) => probe_cmd(&s),
        Command::Grid(_) => grid_cmd(&s).and_then(|ok| if ok { Ok(()) } else { bail!("some runs failed") }),
        Command::Report(_) => report_cmd(&s),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
