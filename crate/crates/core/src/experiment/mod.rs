//! Study orchestration: shared VAE pretraining, the task × representation
//! grid, snapshot probe timelines, the initializer sweep and reports.

mod config;
mod report;

pub use config::Settings;
pub use report::{learning_curve_svg, projection_svg, render_report, reward_color};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::agent::{read_metrics, train_agent, Policy, Representation, StateEncoder, TrainConfig};
use crate::env::{EnvConfig, Task};
use crate::error::{Error, Result};
use crate::nn::{InitKind, InitScheme, OptimizerKind};
use crate::probe::{activations_on, capture_activations, probe_activations, CaptureConfig, ProbeEpisodes, ProbeReport};
use crate::vae::{collect_dataset, train_vae, Vae, VaeLoss, VaeTrainConfig};

/// One cell of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition {
    pub task: Task,
    pub representation: Representation,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.task, self.representation)
    }
}

impl FromStr for Condition {
    type Err = Error;

    /// `static_static-latent` or `static_static:latent`.
    fn from_str(s: &str) -> Result<Self> {
        let (task, repr) = s
            .rsplit_once([':', '-'])
            .ok_or_else(|| Error::invalid(format!("condition {s:?} is not task:representation")))?;
        Ok(Self {
            task: task.parse()?,
            representation: repr.parse()?,
        })
    }
}

/// The 2 × 2 grid in reading order.
pub fn full_grid() -> Vec<Condition> {
    let mut grid = Vec::new();
    for task in [Task::StaticStatic, Task::StaticRandom] {
        for representation in [Representation::Latent, Representation::Image] {
            grid.push(Condition { task, representation });
        }
    }
    grid
}

/// Where latent conditions get their VAE.
#[derive(Clone, Debug, PartialEq)]
pub enum VaeSource {
    /// Collect `images` random-policy frames of `task` and train once.
    Train {
        task: Task,
        images: usize,
        config: VaeTrainConfig,
    },
    Checkpoint(PathBuf),
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub conditions: Vec<Condition>,
    /// Runs use seeds `base_seed .. base_seed + seeds`.
    pub seeds: usize,
    pub base_seed: u64,
    pub episodes: usize,
    pub snapshots: Vec<usize>,
    pub init: InitKind,
    pub gamma: f64,
    pub learning_rate: f32,
    pub optimizer: OptimizerKind,
    pub vae: VaeSource,
    pub image_size: usize,
    /// Concurrent runs; 0 means one per available core.
    pub workers: usize,
    pub output_root: PathBuf,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            conditions: full_grid(),
            seeds: 3,
            base_seed: 0,
            episodes: train.episodes,
            snapshots: train.snapshots,
            init: train.init,
            gamma: train.gamma,
            learning_rate: train.learning_rate,
            optimizer: train.optimizer,
            vae: VaeSource::Train {
                task: Task::StaticRandom,
                images: 1000,
                config: VaeTrainConfig::default(),
            },
            image_size: 64,
            workers: 0,
            output_root: PathBuf::from("out"),
        }
    }
}

/// Settings keys understood by [`ExperimentPlan::from_settings`].
pub const PLAN_KEYS: &[&str] = &[
    "conditions",
    "seeds",
    "seed",
    "episodes",
    "snapshots",
    "init",
    "gamma",
    "learning-rate",
    "optimizer",
    "vae",
    "vae-task",
    "vae-images",
    "vae-epochs",
    "vae-batch-size",
    "vae-learning-rate",
    "noise-std",
    "latent-dim",
    "image-size",
    "workers",
    "out",
];

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.conditions.is_empty() {
            return Err(Error::invalid("plan has no conditions"));
        }
        if self.seeds == 0 {
            return Err(Error::invalid("seeds must be at least 1"));
        }
        if self.snapshots.first() != Some(&0) || self.snapshots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "snapshot list must be sorted, unique and start at 0, got {:?}",
                self.snapshots
            )));
        }
        self.train_config(self.conditions[0], self.base_seed).validate()?;
        if let VaeSource::Train { images, config, .. } = &self.vae {
            if *images < config.batch_size.max(1) {
                return Err(Error::invalid(format!("{images} VAE images is fewer than one batch")));
            }
        }
        Ok(())
    }

    /// Reads a plan from settings; absent keys keep their defaults.
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        settings.check_keys(PLAN_KEYS)?;
        let d = Self::default();
        let VaeSource::Train {
            task: d_task,
            images: d_images,
            config: d_vae,
        } = d.vae.clone()
        else {
            unreachable!("default trains a VAE")
        };
        let vae_config = VaeTrainConfig {
            epochs: settings.get_or("vae-epochs", d_vae.epochs)?,
            batch_size: settings.get_or("vae-batch-size", d_vae.batch_size)?,
            learning_rate: settings.get_or("vae-learning-rate", d_vae.learning_rate)?,
            noise_std: settings.get_or("noise-std", d_vae.noise_std)?,
            latent_dim: settings.get_or("latent-dim", d_vae.latent_dim)?,
            seed: settings.get_or("seed", d.base_seed)?,
        };
        let vae = match settings.raw("vae") {
            Some("none") => VaeSource::None,
            Some(path) => VaeSource::Checkpoint(PathBuf::from(path)),
            None => VaeSource::Train {
                task: settings.get_or("vae-task", d_task)?,
                images: settings.get_or("vae-images", d_images)?,
                config: vae_config,
            },
        };
        let plan = Self {
            conditions: settings.get_list("conditions")?.unwrap_or(d.conditions),
            seeds: settings.get_or("seeds", d.seeds)?,
            base_seed: settings.get_or("seed", d.base_seed)?,
            episodes: settings.get_or("episodes", d.episodes)?,
            snapshots: settings.get_list("snapshots")?.unwrap_or(d.snapshots),
            init: settings.get_or("init", d.init)?,
            gamma: settings.get_or("gamma", d.gamma)?,
            learning_rate: settings.get_or("learning-rate", d.learning_rate)?,
            optimizer: settings.get_or("optimizer", d.optimizer)?,
            vae,
            image_size: settings.get_or("image-size", d.image_size)?,
            workers: settings.get_or("workers", d.workers)?,
            output_root: settings.get_or("out", d.output_root)?,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn env_config(&self, task: Task) -> EnvConfig {
        EnvConfig {
            image_size: self.image_size,
            ..EnvConfig::with_task(task)
        }
    }

    pub fn train_config(&self, condition: Condition, seed: u64) -> TrainConfig {
        TrainConfig {
            representation: condition.representation,
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            init: self.init,
            episodes: self.episodes,
            snapshots: self.snapshots.clone(),
            seed,
            stochastic_latent: false,
        }
    }

    pub fn run_seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.seeds as u64).map(move |i| self.base_seed + i)
    }

    pub fn vae_dir(&self) -> PathBuf {
        self.output_root.join("vae")
    }

    pub fn run_dir(&self, condition: Condition, seed: u64) -> PathBuf {
        self.output_root.join("runs").join(format!("{condition}-{seed}"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.output_root.join("reports")
    }

    /// Settings text that fully determines one run.
    pub fn run_settings(&self, condition: Condition, seed: u64) -> String {
        let t = self.train_config(condition, seed);
        let snapshots: Vec<String> = t.snapshots.iter().map(usize::to_string).collect();
        let vae = match &self.vae {
            VaeSource::Train { task, images, config } if condition.representation == Representation::Latent => format!(
                "train {task} {images} {} {} {} {} {} {}",
                config.epochs, config.batch_size, config.learning_rate, config.noise_std, config.latent_dim, config.seed
            ),
            VaeSource::Checkpoint(p) if condition.representation == Representation::Latent => p.display().to_string(),
            _ => "none".into(),
        };
        let mut s = Settings::new();
        s.set("condition", condition);
        s.set("seed", seed);
        s.set("episodes", t.episodes);
        s.set("snapshots", snapshots.join(","));
        s.set("init", t.init);
        s.set("gamma", t.gamma);
        s.set("learning-rate", t.learning_rate);
        s.set("optimizer", t.optimizer);
        s.set("image-size", self.image_size);
        s.set("vae", vae);
        s.render()
    }

    pub fn run_hash(&self, condition: Condition, seed: u64) -> u64 {
        fnv1a(self.run_settings(condition, seed).as_bytes())
    }
}

/// 64-bit FNV-1a; stable across platforms and toolchains.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub condition: Condition,
    pub seed: u64,
    pub metrics_path: PathBuf,
    pub snapshot_paths: Vec<(usize, PathBuf)>,
    pub wall_clock: Duration,
    pub config_hash: u64,
}

const RUN_SETTINGS_FILE: &str = "run.cfg";

impl RunRecord {
    /// Rebuilds records from `root/runs/*`, sorted by condition then seed.
    pub fn discover(root: &Path) -> Result<Vec<RunRecord>> {
        let runs = root.join("runs");
        let mut records = Vec::new();
        let entries = match fs::read_dir(&runs) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(records),
            Err(e) => return Err(e.into()),
        };
        for entry in entries {
            let dir = entry?.path();
            let cfg = dir.join(RUN_SETTINGS_FILE);
            if !cfg.is_file() {
                continue;
            }
            let text = fs::read_to_string(&cfg)?;
            let settings = Settings::parse(&text)?;
            let mut snapshot_paths: Vec<(usize, PathBuf)> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter_map(|p| {
                    let name = p.file_name()?.to_str()?;
                    let ep = name.strip_prefix("policy_ep")?.strip_suffix(".lprb")?.parse().ok()?;
                    Some((ep, p))
                })
                .collect();
            snapshot_paths.sort();
            let wall: f64 = settings.get_or("wall-clock-seconds", 0.0)?;
            records.push(RunRecord {
                condition: settings.require("condition")?,
                seed: settings.require("seed")?,
                metrics_path: dir.join("metrics.csv"),
                snapshot_paths,
                wall_clock: Duration::from_secs_f64(wall),
                config_hash: settings.require("hash")?,
            });
        }
        records.sort_by_key(|r| (r.condition, r.seed));
        Ok(records)
    }

    /// Checks every referenced file exists and reads back.
    pub fn verify(&self) -> Result<()> {
        read_metrics(&self.metrics_path)?;
        for (_, path) in &self.snapshot_paths {
            Policy::load(path)?;
        }
        Ok(())
    }
}

/// A run that failed without stopping the rest of the grid.
#[derive(Debug)]
pub struct RunFailure {
    pub condition: Condition,
    pub seed: u64,
    pub error: Error,
}

#[derive(Debug)]
pub struct GridOutcome {
    /// Condition-major, seeds ascending.
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub vae_history: Vec<VaeLoss>,
}

/// Returns the VAE latent conditions should use, training it if the plan says so.
pub fn prepare_vae(plan: &ExperimentPlan) -> Result<(Option<Vae>, Vec<VaeLoss>)> {
    let needs = plan.conditions.iter().any(|c| c.representation == Representation::Latent);
    if !needs {
        return Ok((None, Vec::new()));
    }
    match &plan.vae {
        VaeSource::None => Err(Error::invalid("latent conditions need a VAE but the plan has none")),
        VaeSource::Checkpoint(path) => {
            if !path.is_file() {
                return Err(Error::invalid(format!("VAE checkpoint {} does not exist", path.display())));
            }
            Ok((Some(Vae::load(path)?), Vec::new()))
        }
        VaeSource::Train { task, images, config } => {
            let env = plan.env_config(*task);
            let dataset = collect_dataset(&env, *images, config.seed)?;
            let (vae, history) = train_vae(&dataset, config)?;
            let dir = plan.vae_dir();
            fs::create_dir_all(&dir)?;
            dataset.save(&dir.join("images.lprb"))?;
            vae.save(&dir.join("vae.lprb"))?;
            write_vae_history(&dir.join("history.csv"), &history)?;
            Ok((Some(vae), history))
        }
    }
}

fn write_vae_history(path: &Path, history: &[VaeLoss]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "total", "reconstruction", "kl"])?;
    for (i, h) in history.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            format!("{:.6}", h.total),
            format!("{:.6}", h.recon),
            format!("{:.6}", h.kl),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Trains one agent under the plan and records its outputs.
pub fn run_one(plan: &ExperimentPlan, condition: Condition, seed: u64, vae: Option<&Vae>) -> Result<RunRecord> {
    let dir = plan.run_dir(condition, seed);
    let start = Instant::now();
    let vae = match condition.representation {
        Representation::Latent => vae,
        Representation::Image => None,
    };
    let run = train_agent(&plan.train_config(condition, seed), &plan.env_config(condition.task), vae, &dir)?;
    let wall_clock = start.elapsed();
    let config_hash = plan.run_hash(condition, seed);
    let mut cfg = Settings::parse(&plan.run_settings(condition, seed))?;
    cfg.set("hash", config_hash);
    cfg.set("wall-clock-seconds", format!("{:.3}", wall_clock.as_secs_f64()));
    fs::write(dir.join(RUN_SETTINGS_FILE), cfg.render())?;
    Ok(RunRecord {
        condition,
        seed,
        metrics_path: run.metrics_path,
        snapshot_paths: run.snapshots,
        wall_clock,
        config_hash,
    })
}

/// Pretrains the shared VAE, then trains every (condition, seed) pair.
///
/// Runs execute on up to `plan.workers` threads; a failing run is reported
/// in [`GridOutcome::failures`] and the rest continue.
pub fn run_grid(plan: &ExperimentPlan) -> Result<GridOutcome> {
    plan.validate()?;
    let (vae, vae_history) = prepare_vae(plan)?;
    let jobs: Vec<(Condition, u64)> = plan
        .conditions
        .iter()
        .flat_map(|&c| plan.run_seeds().map(move |s| (c, s)))
        .collect();
    let workers = match plan.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(jobs.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<RunRecord>>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(&(c, s)) = jobs.get(i) else { break };
                        done.push((i, run_one(plan, c, s, vae.as_ref())));
                    }
                    done
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("run worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    let mut outcome = GridOutcome {
        records: Vec::new(),
        failures: Vec::new(),
        vae_history,
    };
    for (&(condition, seed), r) in jobs.iter().zip(results) {
        match r.expect("every job ran") {
            Ok(rec) => outcome.records.push(rec),
            Err(error) => outcome.failures.push(RunFailure { condition, seed, error }),
        }
    }
    Ok(outcome)
}

/// Seed-aggregated windowed success of one condition.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCurve {
    pub condition: Condition,
    pub seeds: usize,
    pub mean: Vec<f64>,
    /// Population standard deviation across seeds.
    pub std: Vec<f64>,
}

/// Pointwise mean and std of per-seed curves, truncated to the shortest.
pub fn aggregate(condition: Condition, curves: &[Vec<f64>]) -> ConditionCurve {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    let n = curves.len() as f64;
    let (mut mean, mut std) = (Vec::with_capacity(len), Vec::with_capacity(len));
    for t in 0..len {
        let m = curves.iter().map(|c| c[t]).sum::<f64>() / n;
        let v = curves.iter().map(|c| (c[t] - m).powi(2)).sum::<f64>() / n;
        mean.push(m);
        std.push(v.sqrt());
    }
    ConditionCurve {
        condition,
        seeds: curves.len(),
        mean,
        std,
    }
}

/// Reads each record's metrics and aggregates windowed success per condition,
/// in order of first appearance.
pub fn aggregate_curves(records: &[RunRecord]) -> Result<Vec<ConditionCurve>> {
    let mut order: Vec<Condition> = Vec::new();
    for r in records {
        if !order.contains(&r.condition) {
            order.push(r.condition);
        }
    }
    order
        .into_iter()
        .map(|c| {
            let curves = records
                .iter()
                .filter(|r| r.condition == c)
                .map(|r| Ok(read_metrics(&r.metrics_path)?.iter().map(|m| m.windowed_success).collect()))
                .collect::<Result<Vec<Vec<f64>>>>()?;
            Ok(aggregate(c, &curves))
        })
        .collect()
}

/// What activations a probe looks at.
#[derive(Clone, Debug)]
pub enum ProbeData {
    /// The policy's own episodes.
    Rollouts(CaptureConfig),
    /// Fixed episodes shared by every probed policy.
    Shared(ProbeEpisodes),
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub data: ProbeData,
    pub neighbors: usize,
    /// Where to write `projection_ep{N}.csv` and `scores.csv`; nothing is written if unset.
    pub out_dir: Option<PathBuf>,
}

fn encoder_for<'a>(representation: Representation, vae: Option<&'a Vae>) -> Result<StateEncoder<'a>> {
    match (representation, vae) {
        (Representation::Image, _) => Ok(StateEncoder::Pixels),
        (Representation::Latent, Some(vae)) => Ok(StateEncoder::Latent { vae, stochastic: false }),
        (Representation::Latent, None) => Err(Error::invalid("latent policy needs a VAE to probe")),
    }
}

/// Probes one policy.
pub fn probe_policy(
    policy: &Policy,
    env_config: &EnvConfig,
    vae: Option<&Vae>,
    config: &ProbeConfig,
    label: &str,
    snapshot: Option<usize>,
) -> Result<ProbeReport> {
    let encoder = encoder_for(policy.representation, vae)?;
    let set = match &config.data {
        ProbeData::Rollouts(capture) => capture_activations(policy, env_config, encoder, capture)?,
        ProbeData::Shared(data) => activations_on(policy, encoder, data, 0)?,
    };
    probe_activations(&set, config.neighbors, label, snapshot)
}

/// Probes every snapshot of a run, in episode order.
pub fn probe_timeline(
    record: &RunRecord,
    env_config: &EnvConfig,
    vae: Option<&Vae>,
    config: &ProbeConfig,
) -> Result<Vec<ProbeReport>> {
    let mut snapshots = record.snapshot_paths.clone();
    snapshots.sort();
    let label = format!("{}-{}", record.condition, record.seed);
    let mut reports = Vec::with_capacity(snapshots.len());
    for (episode, path) in &snapshots {
        let policy = Policy::load(path).map_err(|e| Error::Checkpoint {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        reports.push(probe_policy(&policy, env_config, vae, config, &label, Some(*episode))?);
    }
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir)?;
        for r in &reports {
            r.write_projection_csv(&dir.join(format!("projection_ep{}.csv", r.snapshot_episode.unwrap_or(0))))?;
        }
        write_scores(&dir.join("scores.csv"), &reports)?;
    }
    Ok(reports)
}

fn write_scores(path: &Path, reports: &[ProbeReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "organization", "collapsed", "degenerate", "unsuccessful_fallback"])?;
    for r in reports {
        w.write_record([
            r.snapshot_episode.map_or(String::new(), |e| e.to_string()),
            format!("{:.6}", r.organization.score),
            (r.collapsed as u8).to_string(),
            (r.organization.degenerate as u8).to_string(),
            (r.unsuccessful_fallback as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Untrained latent policies under each initializer, probed on the same data.
/// Every scheme uses the same initializer seed.
pub fn init_sweep(
    vae: &Vae,
    data: &ProbeEpisodes,
    schemes: &[InitKind],
    seed: u64,
    neighbors: usize,
) -> Result<Vec<ProbeReport>> {
    let encoder = StateEncoder::Latent { vae, stochastic: false };
    schemes
        .iter()
        .map(|&kind| {
            let policy = Policy::initialized(Representation::Latent, &[vae.latent_dim()], InitScheme { kind, seed })?;
            let set = activations_on(&policy, encoder, data, 0)?;
            probe_activations(&set, neighbors, &format!("init-{kind}"), Some(0))
        })
        .collect()
}
