//! Hidden-representation probing: capture base activations, project them
//! with PCA, flag collapse, and score how well neighbourhoods share reward.

mod pca;
mod score;

pub use pca::{pca_fit, pca_project, symmetric_eigen, Matrix, PcaModel, JACOBI_TOLERANCE};
pub use score::{
    collapse_detect, organization_score, NeighborGraph, Organization, PermutationBaseline, COLLAPSE_TOLERANCE,
    DEFAULT_NEIGHBORS,
};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::agent::{episode_seed, returns, run_episode, Policy, StateEncoder, BASE_WIDTH};
use crate::env::{scripted_action, EnvConfig, GraspEnv, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Base activations with per-row labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationSet {
    /// `n × 64`.
    pub activations: Matrix,
    pub rewards: Vec<f64>,
    pub returns: Vec<f64>,
    pub episodes: Vec<usize>,
    pub steps: Vec<usize>,
    /// Set when no successful episodes could be found and arbitrary ones were used.
    pub unsuccessful_fallback: bool,
}

impl ActivationSet {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = ["episode", "step", "reward", "return"].map(String::from).to_vec();
        header.extend((0..self.activations.cols).map(|i| format!("act_{i}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![
                self.episodes[i].to_string(),
                self.steps[i].to_string(),
                self.rewards[i].to_string(),
                self.returns[i].to_string(),
            ];
            row.extend(self.activations.row(i).iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Raw observations of a set of episodes, shared across policies so that
/// every probed network sees exactly the same inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeEpisodes {
    pub observations: Vec<Tensor>,
    pub rewards: Vec<f64>,
    pub returns: Vec<f64>,
    pub episodes: Vec<usize>,
    pub steps: Vec<usize>,
}

/// Episodes from the scripted controller, taking a uniformly random action
/// with probability `exploration` at each step. With `successful_only`,
/// failed episodes are discarded; `exploration = 1` gives a uniform policy.
pub fn scripted_episodes(
    config: &EnvConfig,
    count: usize,
    exploration: f64,
    successful_only: bool,
    gamma: f64,
    seed: u64,
) -> Result<ProbeEpisodes> {
    let mut env = GraspEnv::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ProbeEpisodes {
        observations: Vec::new(),
        rewards: Vec::new(),
        returns: Vec::new(),
        episodes: Vec::new(),
        steps: Vec::new(),
    };
    let mut kept = 0;
    let max_attempts = 20 * count.max(1);
    for attempt in 0..max_attempts {
        if kept == count {
            break;
        }
        let mut obs = env.reset(episode_seed(seed, attempt as u64))?;
        let (mut observations, mut rewards) = (Vec::new(), Vec::new());
        let success = loop {
            let state = env.state().expect("reset").clone();
            let action = if rng.random::<f64>() < exploration {
                rng.random_range(0..NUM_ACTIONS)
            } else {
                scripted_action(&state, config)
            };
            let t = env.step(action)?;
            observations.push(obs);
            rewards.push(t.reward);
            if t.done {
                break t.success;
            }
            obs = t.observation;
        };
        if successful_only && !success {
            continue;
        }
        out.returns.extend(returns(&rewards, gamma));
        out.steps.extend(0..rewards.len());
        out.episodes.extend(std::iter::repeat_n(kept, rewards.len()));
        out.observations.extend(observations);
        out.rewards.extend(rewards);
        kept += 1;
    }
    if kept < count {
        return Err(Error::NoSuccess(max_attempts));
    }
    Ok(out)
}

fn activations_of(policy: &Policy, states: &[Tensor]) -> Result<Matrix> {
    let mut data = Vec::with_capacity(states.len() * BASE_WIDTH);
    for chunk in states.chunks(64) {
        let batch = Tensor::stack(&chunk.iter().collect::<Vec<_>>())?;
        data.extend(policy.base_activations(&batch)?.data().iter().map(|&v| v as f64));
    }
    Matrix::new(states.len(), BASE_WIDTH, data)
}

/// Base activations of `policy` on shared episode data.
pub fn activations_on(policy: &Policy, encoder: StateEncoder<'_>, data: &ProbeEpisodes, seed: u64) -> Result<ActivationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = data
        .observations
        .iter()
        .map(|o| encoder.encode(o, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(ActivationSet {
        activations: activations_of(policy, &states)?,
        rewards: data.rewards.clone(),
        returns: data.returns.clone(),
        episodes: data.episodes.clone(),
        steps: data.steps.clone(),
        unsuccessful_fallback: false,
    })
}

/// Activations on unit-normal inputs of the policy's state dims, keeping the
/// reward labels of `labels` row for row.
pub fn random_input_activations(policy: &Policy, labels: &ActivationSet, seed: u64) -> Result<ActivationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_state: usize = policy.input_dims.iter().product();
    let states = (0..labels.len())
        .map(|_| {
            let data = (0..per_state).map(|_| StandardNormal.sample(&mut rng)).collect();
            Tensor::new(policy.input_dims.clone(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ActivationSet {
        activations: activations_of(policy, &states)?,
        ..labels.clone()
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaptureConfig {
    pub episodes: usize,
    pub successful_only: bool,
    /// Fall back to arbitrary episodes when successes run out.
    pub allow_fallback: bool,
    pub max_attempts: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            episodes: 3,
            successful_only: true,
            allow_fallback: true,
            max_attempts: 50,
            gamma: 0.99,
            seed: 0,
        }
    }
}

/// Rolls out `policy` and keeps the base activations of its own episodes.
pub fn capture_activations(
    policy: &Policy,
    env_config: &EnvConfig,
    encoder: StateEncoder<'_>,
    config: &CaptureConfig,
) -> Result<ActivationSet> {
    let mut env = GraspEnv::new(env_config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut successes = Vec::new();
    let mut others = Vec::new();
    for attempt in 0..config.max_attempts {
        if successes.len() == config.episodes {
            break;
        }
        let ep = run_episode(&mut env, policy, encoder, &mut rng, episode_seed(config.seed, attempt as u64))?;
        if ep.success || !config.successful_only {
            successes.push(ep);
        } else if others.len() < config.episodes {
            others.push(ep);
        }
    }
    let (chosen, fallback) = if successes.len() == config.episodes {
        (successes, false)
    } else if config.allow_fallback {
        let mut chosen = successes;
        chosen.extend(others);
        chosen.truncate(config.episodes);
        (chosen, true)
    } else {
        return Err(Error::NoSuccess(config.max_attempts));
    };
    let mut set = ActivationSet {
        activations: Matrix::new(0, BASE_WIDTH, Vec::new())?,
        rewards: Vec::new(),
        returns: Vec::new(),
        episodes: Vec::new(),
        steps: Vec::new(),
        unsuccessful_fallback: fallback,
    };
    let mut states = Vec::new();
    for (e, ep) in chosen.iter().enumerate() {
        set.returns.extend(returns(&ep.buffer.rewards, config.gamma));
        set.rewards.extend(&ep.buffer.rewards);
        set.steps.extend(0..ep.buffer.len());
        set.episodes.extend(std::iter::repeat_n(e, ep.buffer.len()));
        states.extend(ep.buffer.states.iter().cloned());
    }
    set.activations = activations_of(policy, &states)?;
    Ok(set)
}

/// PCA projection, collapse flag and organization score of one activation set.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub condition: String,
    pub snapshot_episode: Option<usize>,
    /// `n × 3` PCA coordinates; PCA is fit per policy per snapshot.
    pub projected: Vec<Vec<f64>>,
    pub explained: Vec<f64>,
    pub rewards: Vec<f64>,
    pub collapsed: bool,
    pub organization: Organization,
    pub unsuccessful_fallback: bool,
}

pub fn probe_activations(
    set: &ActivationSet,
    neighbors: usize,
    condition: &str,
    snapshot_episode: Option<usize>,
) -> Result<ProbeReport> {
    let model = pca_fit(&set.activations, 3)?;
    let organization = organization_score(&set.activations, &set.rewards, neighbors)?;
    Ok(ProbeReport {
        condition: condition.to_string(),
        snapshot_episode,
        projected: pca_project(&model, &set.activations)?,
        explained: model.explained,
        rewards: set.rewards.clone(),
        collapsed: collapse_detect(&set.activations, COLLAPSE_TOLERANCE),
        organization,
        unsuccessful_fallback: set.unsuccessful_fallback,
    })
}

impl ProbeReport {
    pub fn write_projection_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["pc1", "pc2", "pc3", "reward"])?;
        for (p, r) in self.projected.iter().zip(&self.rewards) {
            w.write_record([p[0].to_string(), p[1].to_string(), p[2].to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
