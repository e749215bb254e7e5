//! Monte Carlo actor-critic with a shared base and two heads.
//!
//! One optimizer step per finished episode over the summed loss
//! `Σ -log π(a|s)·δ + Σ |V(s) - G|` with `δ = G - V(s)` held constant.

mod policy;
mod train;

pub use policy::{policy_forward, Policy, PolicyOutput, Representation, BASE_WIDTH, LATENT_HIDDEN};
pub use train::{read_metrics, train_agent, EpisodeRecord, TrainConfig, TrainingRun, METRICS_HEADER};

use rand::Rng;

use crate::env::{GraspEnv, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::nn::{softmax, Optimizer};
use crate::tensor::Tensor;
use crate::vae::Vae;

/// Discounted returns by backward recurrence `G_t = r_t + γ G_{t+1}`.
pub fn returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (g, &r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *g = acc;
    }
    out
}

/// Categorical sample from `probs`.
pub fn select_action<R: Rng + ?Sized>(probs: &[f32], rng: &mut R) -> Result<usize> {
    if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid(format!("not a distribution: {probs:?}")));
    }
    let total: f64 = probs.iter().map(|&p| p as f64).sum();
    if (total - 1.0).abs() > 1e-4 {
        return Err(Error::invalid(format!("probabilities sum to {total}")));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p as f64;
            last = a;
            if u < acc {
                return Ok(a);
            }
        }
    }
    Ok(last)
}

/// Windowed success rate: entry `i` is the mean of `outcomes[i+1-w ..= i]`
/// (clipped at the start).
pub fn success_rate_window(outcomes: &[bool], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut hits = 0usize;
    outcomes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            hits += s as usize;
            if i >= window {
                hits -= outcomes[i - window] as usize;
            }
            hits as f64 / (i + 1).min(window) as f64
        })
        .collect()
}

/// States, actions and rewards of one episode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeBuffer {
    pub states: Vec<Tensor>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl EpisodeBuffer {
    pub fn push(&mut self, state: Tensor, action: usize, reward: f64) {
        self.states.push(state);
        self.actions.push(action);
        self.rewards.push(reward);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn clear(&mut self) {
        self.states.clear();
        self.actions.clear();
        self.rewards.clear();
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// States stacked along a new batch axis.
    pub fn stacked_states(&self) -> Result<Tensor> {
        Tensor::stack(&self.states.iter().collect::<Vec<_>>())
    }
}

/// Actor term `Σ -log π(a_n|s_n)·δ_n` and its gradient w.r.t. the logits.
pub fn actor_loss_grad(logits: &Tensor, actions: &[usize], advantages: &[f64]) -> Result<(f64, Tensor)> {
    let n = logits.batch();
    if actions.len() != n || advantages.len() != n {
        return Err(Error::invalid(format!(
            "{n} logit rows, {} actions, {} advantages",
            actions.len(),
            advantages.len()
        )));
    }
    let k = logits.row_len();
    let mut loss = 0.0;
    let mut grad = vec![0.0; n * k];
    for i in 0..n {
        let (probs, logp) = crate::nn::softmax_logprob(logits.row(i), actions[i])?;
        let delta = advantages[i];
        loss -= logp as f64 * delta;
        for (j, g) in grad[i * k..(i + 1) * k].iter_mut().enumerate() {
            let onehot = if j == actions[i] { 1.0 } else { 0.0 };
            *g = (delta * (probs[j] as f64 - onehot)) as f32;
        }
    }
    Ok((loss, Tensor::new(logits.dims().to_vec(), grad)?))
}

/// Critic term `Σ |V_n - G_n|` and its (sub)gradient w.r.t. the values.
pub fn critic_loss_grad(values: &[f32], returns: &[f64]) -> (f64, Vec<f32>) {
    values
        .iter()
        .zip(returns)
        .map(|(&v, &g)| {
            let diff = v as f64 - g;
            let slope = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            (diff.abs(), slope)
        })
        .fold((0.0, Vec::with_capacity(values.len())), |(sum, mut grads), (l, s)| {
            grads.push(s);
            (sum + l, grads)
        })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub actor: f64,
    pub critic: f64,
    pub total: f64,
}

/// One optimizer step over the summed loss of a finished episode.
pub fn actor_critic_update(
    policy: &mut Policy,
    buffer: &EpisodeBuffer,
    gamma: f64,
    optimizer: &mut Optimizer,
) -> Result<UpdateStats> {
    if buffer.is_empty() {
        return Err(Error::invalid("actor-critic update on an empty episode"));
    }
    let x = policy.batch_states(&buffer.stacked_states()?)?;
    let h = policy.base.forward(&x)?;
    let logits = policy.actor.forward(&h)?;
    let values = policy.critic.forward(&h)?;
    let g = returns(&buffer.rewards, gamma);
    let advantages: Vec<f64> = g.iter().zip(values.data()).map(|(&g, &v)| g - v as f64).collect();
    let (actor, dlogits) = actor_loss_grad(&logits, &buffer.actions, &advantages)?;
    let (critic, dvalues) = critic_loss_grad(values.data(), &g);
    let stats = UpdateStats {
        actor,
        critic,
        total: actor + critic,
    };
    if !stats.total.is_finite() {
        return Err(Error::NonFinite("actor-critic loss".into()));
    }
    policy.zero_grad();
    let mut dh = policy.actor.backward(&dlogits)?;
    let dh_critic = policy.critic.backward(&Tensor::new(values.dims().to_vec(), dvalues)?)?;
    dh.data_mut().iter_mut().zip(dh_critic.data()).for_each(|(a, b)| *a += b);
    policy.base.backward(&dh)?;
    optimizer.step(&mut policy.params_mut())?;
    Ok(stats)
}

/// Maps raw observations to policy states.
#[derive(Clone, Copy, Debug)]
pub enum StateEncoder<'a> {
    Pixels,
    /// Frozen VAE; the posterior mean unless `stochastic`, then a sampled `z`.
    Latent { vae: &'a Vae, stochastic: bool },
}

impl StateEncoder<'_> {
    pub fn representation(&self) -> Representation {
        match self {
            StateEncoder::Pixels => Representation::Image,
            StateEncoder::Latent { .. } => Representation::Latent,
        }
    }

    pub fn encode<R: Rng + ?Sized>(&self, observation: &Tensor, rng: &mut R) -> Result<Tensor> {
        match self {
            StateEncoder::Pixels => Ok(observation.clone()),
            StateEncoder::Latent { vae, stochastic: false } => {
                let mu = vae.encode_mean(observation)?;
                Ok(Tensor::from_vec(mu.into_data()))
            }
            StateEncoder::Latent { vae, stochastic: true } => {
                Ok(Tensor::from_vec(vae.encode(observation, rng)?.z))
            }
        }
    }
}

/// Result of one rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub buffer: EpisodeBuffer,
    pub success: bool,
}

/// Rolls out one episode, sampling actions from the policy.
pub fn run_episode<R: Rng + ?Sized>(
    env: &mut GraspEnv,
    policy: &Policy,
    encoder: StateEncoder<'_>,
    rng: &mut R,
    episode_seed: u64,
) -> Result<Episode> {
    if encoder.representation() != policy.representation {
        return Err(Error::invalid(format!(
            "{} policy cannot consume {} states",
            policy.representation,
            encoder.representation()
        )));
    }
    let mut observation = env.reset(episode_seed)?;
    let mut buffer = EpisodeBuffer::default();
    loop {
        let state = encoder.encode(&observation, rng)?;
        let out = policy_forward(policy, &state)?;
        let action = select_action(&out.probs, rng)?;
        let t = env.step(action)?;
        buffer.push(state, action, t.reward);
        if t.done {
            return Ok(Episode {
                buffer,
                success: t.success,
            });
        }
        observation = t.observation;
    }
}

/// Independent per-episode environment seed derived from a run seed.
pub fn episode_seed(run_seed: u64, episode: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = run_seed ^ episode.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform distribution helper used by tests and probes.
pub fn uniform_probs() -> Vec<f32> {
    softmax(&[0.0; NUM_ACTIONS])
}
