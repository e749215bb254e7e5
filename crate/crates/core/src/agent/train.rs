use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{actor_critic_update, episode_seed, run_episode, success_rate_window, Policy, Representation, StateEncoder};
use crate::env::{EnvConfig, GraspEnv};
use crate::error::{Error, Result};
use crate::nn::{InitKind, InitScheme, Optimizer, OptimizerKind};
use crate::vae::Vae;

pub const METRICS_HEADER: [&str; 5] = ["episode", "steps", "return", "success", "windowed_success"];
const SUCCESS_WINDOW: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub representation: Representation,
    pub gamma: f64,
    pub learning_rate: f32,
    pub optimizer: OptimizerKind,
    pub init: InitKind,
    pub episodes: usize,
    /// Episode counts after which the policy is saved; 0 is always saved.
    pub snapshots: Vec<usize>,
    pub seed: u64,
    /// Feed sampled latent codes instead of posterior means.
    pub stochastic_latent: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            representation: Representation::Image,
            gamma: 0.99,
            learning_rate: 3e-4,
            optimizer: OptimizerKind::AdaptiveMoments,
            init: InitKind::HeNormal,
            episodes: 2000,
            snapshots: vec![0, 250, 500, 1000, 2000],
            seed: 0,
            stochastic_latent: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }

    /// Seed for the weight initializer; actions use a separate stream.
    pub fn init_scheme(&self) -> InitScheme {
        InitScheme {
            kind: self.init,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based; row `n` is the state of training after `n` episodes.
    pub episode: usize,
    pub steps: usize,
    pub ret: f64,
    pub success: bool,
    pub windowed_success: f64,
}

#[derive(Clone, Debug)]
pub struct TrainingRun {
    pub records: Vec<EpisodeRecord>,
    /// `(episode, path)` in schedule order.
    pub snapshots: Vec<(usize, PathBuf)>,
    pub metrics_path: PathBuf,
    pub policy: Policy,
}

pub fn snapshot_path(dir: &Path, episode: usize) -> PathBuf {
    dir.join(format!("policy_ep{episode}.lprb"))
}

fn write_metrics(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for r in records {
        w.write_record([
            r.episode.to_string(),
            r.steps.to_string(),
            format!("{:.6}", r.ret),
            (r.success as u8).to_string(),
            format!("{:.6}", r.windowed_success),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(METRICS_HEADER) {
        return Err(Error::invalid(format!("{} is not a metrics file", path.display())));
    }
    let bad = |field: &str| Error::invalid(format!("bad {field} in {}", path.display()));
    r.records()
        .map(|row| {
            let row = row?;
            Ok(EpisodeRecord {
                episode: row[0].parse().map_err(|_| bad("episode"))?,
                steps: row[1].parse().map_err(|_| bad("steps"))?,
                ret: row[2].parse().map_err(|_| bad("return"))?,
                success: &row[3] == "1",
                windowed_success: row[4].parse().map_err(|_| bad("windowed_success"))?,
            })
        })
        .collect()
}

/// Trains one agent, writing `metrics.csv` and `policy_ep{N}.lprb` files into
/// `out_dir`. On a non-finite loss the pre-update policy is saved as
/// `policy_abort_ep{N}.lprb` alongside the metrics so far.
pub fn train_agent(config: &TrainConfig, env_config: &EnvConfig, vae: Option<&Vae>, out_dir: &Path) -> Result<TrainingRun> {
    config.validate()?;
    let mut env = GraspEnv::new(env_config.clone())?;
    let encoder = match (config.representation, vae) {
        (Representation::Image, _) => StateEncoder::Pixels,
        (Representation::Latent, Some(vae)) => {
            if vae.image_size() != env_config.image_size {
                return Err(Error::invalid(format!(
                    "VAE expects {}px images, environment renders {}px",
                    vae.image_size(),
                    env_config.image_size
                )));
            }
            StateEncoder::Latent {
                vae,
                stochastic: config.stochastic_latent,
            }
        }
        (Representation::Latent, None) => return Err(Error::invalid("latent agent needs a VAE checkpoint")),
    };
    let input_dims = match encoder {
        StateEncoder::Pixels => env_config.observation_dims().to_vec(),
        StateEncoder::Latent { vae, .. } => vec![vae.latent_dim()],
    };
    let mut policy = Policy::initialized(config.representation, &input_dims, config.init_scheme())?;
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    fs::create_dir_all(out_dir)?;
    let metrics_path = out_dir.join("metrics.csv");
    let mut snapshots = Vec::new();
    let mut wanted: Vec<usize> = config.snapshots.iter().copied().filter(|&e| e <= config.episodes).collect();
    wanted.push(0);
    wanted.sort_unstable();
    wanted.dedup();
    let mut next_snapshot = wanted.iter().peekable();
    let mut save_due = |policy: &Policy, done: usize, snapshots: &mut Vec<(usize, PathBuf)>| -> Result<()> {
        while next_snapshot.next_if(|&&e| e == done).is_some() {
            let path = snapshot_path(out_dir, done);
            policy.save(&path)?;
            snapshots.push((done, path));
        }
        Ok(())
    };
    save_due(&policy, 0, &mut snapshots)?;

    let mut records = Vec::with_capacity(config.episodes);
    let mut outcomes = Vec::with_capacity(config.episodes);
    for ep in 0..config.episodes {
        let step = run_episode(&mut env, &policy, encoder, &mut rng, episode_seed(config.seed, ep as u64))
            .and_then(|episode| {
                actor_critic_update(&mut policy, &episode.buffer, config.gamma, &mut optimizer)?;
                Ok(episode)
            });
        let episode = match step {
            Ok(episode) => episode,
            Err(Error::NonFinite(_)) => {
                policy.save(&out_dir.join(format!("policy_abort_ep{ep}.lprb")))?;
                write_metrics(&metrics_path, &records)?;
                return Err(Error::Diverged {
                    stage: "episode",
                    index: ep + 1,
                });
            }
            Err(e) => return Err(e),
        };
        outcomes.push(episode.success);
        let windowed = *success_rate_window(&outcomes[outcomes.len().saturating_sub(SUCCESS_WINDOW)..], SUCCESS_WINDOW)
            .last()
            .expect("nonempty");
        records.push(EpisodeRecord {
            episode: ep + 1,
            steps: episode.buffer.len(),
            ret: episode.buffer.total_reward(),
            success: episode.success,
            windowed_success: windowed,
        });
        save_due(&policy, ep + 1, &mut snapshots)?;
    }
    write_metrics(&metrics_path, &records)?;
    Ok(TrainingRun {
        records,
        snapshots,
        metrics_path,
        policy,
    })
}
