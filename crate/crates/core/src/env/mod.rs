//! Rasterized grasping task.
//!
//! A gripper point moves inside an axis-aligned box above a tray holding one
//! object. Each agent action picks a column of a fixed 3×7 movement matrix and
//! repeats it `action_repeat` times. The object attaches when the gripper comes
//! within `grasp_radius`; lifting it above `lift_height` ends the episode with
//! success.

mod render;
pub mod trajectory;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use render::render;
pub use trajectory::TrajectoryLog;

pub const NUM_ACTIONS: usize = 7;

/// Per-repeat displacement, one column per action. Action 2 moves along -x.
pub const MOVEMENT: [[f64; NUM_ACTIONS]; 3] = [
    [0.0, 0.005, -0.005, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -0.005, 0.005, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, -0.005, 0.005],
];

pub fn action_vector(action: usize) -> Result<[f64; 3]> {
    if action >= NUM_ACTIONS {
        return Err(Error::invalid(format!("action {action} outside 0..{NUM_ACTIONS}")));
    }
    Ok([MOVEMENT[0][action], MOVEMENT[1][action], MOVEMENT[2][action]])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    /// Object at the same place every episode.
    StaticStatic,
    /// Object at a uniformly random tray position and orientation.
    StaticRandom,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::StaticStatic => "static_static",
            Task::StaticRandom => "static_random",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "static_static" => Ok(Task::StaticStatic),
            "static_random" => Ok(Task::StaticRandom),
            other => Err(Error::invalid(format!("unknown task '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub task: Task,
    /// Square image side in pixels.
    pub image_size: usize,
    pub horizon: usize,
    pub action_repeat: usize,
    pub workspace_min: [f64; 3],
    pub workspace_max: [f64; 3],
    /// Tray rectangle in the x-y plane: (min, max).
    pub tray_min: [f64; 2],
    pub tray_max: [f64; 2],
    pub gripper_start: [f64; 3],
    /// Placement used by [`Task::StaticStatic`].
    pub static_object: [f64; 3],
    pub static_orientation: f64,
    pub grasp_radius: f64,
    pub lift_height: f64,
    /// Scale of the distance penalty on non-success steps.
    pub distance_penalty: f64,
    pub success_reward: f64,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            task: Task::StaticStatic,
            image_size: 64,
            horizon: 40,
            action_repeat: 25,
            workspace_min: [0.0, 0.0, 0.0],
            workspace_max: [1.0, 1.0, 0.5],
            tray_min: [0.25, 0.25],
            tray_max: [0.75, 0.75],
            gripper_start: [0.5, 0.5, 0.5],
            static_object: [0.625, 0.375, 0.0],
            static_orientation: std::f64::consts::FRAC_PI_6,
            grasp_radius: 0.15,
            lift_height: 0.2,
            distance_penalty: 0.1,
            success_reward: 10.0,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn with_task(task: Task) -> Self {
        Self {
            task,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        if self.action_repeat == 0 {
            return Err(Error::invalid("action_repeat must be positive"));
        }
        if !(self.grasp_radius > 0.0) {
            return Err(Error::invalid("grasp radius must be positive"));
        }
        if self.image_size < 16 {
            return Err(Error::invalid(format!("image size {} below 16", self.image_size)));
        }
        for i in 0..3 {
            if !(self.workspace_max[i] > self.workspace_min[i]) {
                return Err(Error::invalid("empty workspace"));
            }
        }
        if !self.inside(&self.gripper_start) || !self.inside(&self.static_object) {
            return Err(Error::invalid("start pose or static object outside workspace"));
        }
        Ok(())
    }

    fn inside(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.workspace_min[i] && p[i] <= self.workspace_max[i])
    }

    pub fn diameter(&self) -> f64 {
        distance(&self.workspace_min, &self.workspace_max)
    }

    fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        let mut out = p;
        for i in 0..3 {
            out[i] = p[i].clamp(self.workspace_min[i], self.workspace_max[i]);
        }
        out
    }

    /// Observation tensor dims `[3, H, W]`.
    pub fn observation_dims(&self) -> [usize; 3] {
        [3, self.image_size, self.image_size]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub gripper: [f64; 3],
    pub object: [f64; 3],
    /// Planar orientation of the object, radians.
    pub orientation: f64,
    pub attached: bool,
    pub succeeded: bool,
    pub steps: usize,
}

impl WorldState {
    pub fn is_done(&self, config: &EnvConfig) -> bool {
        self.succeeded || self.steps >= config.horizon
    }

    pub fn gripper_object_distance(&self) -> f64 {
        distance(&self.gripper, &self.object)
    }
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

/// Image observation `[3, H, W]` in `[0, 1]`.
pub type Observation = Tensor;

pub fn reset(config: &EnvConfig, episode_seed: u64) -> Result<(WorldState, Observation)> {
    config.validate()?;
    let (object, orientation) = match config.task {
        Task::StaticStatic => (config.static_object, config.static_orientation),
        Task::StaticRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
            let x = rng.random_range(config.tray_min[0]..config.tray_max[0]);
            let y = rng.random_range(config.tray_min[1]..config.tray_max[1]);
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            ([x, y, config.workspace_min[2]], theta)
        }
    };
    let state = WorldState {
        gripper: config.gripper_start,
        object,
        orientation,
        attached: false,
        succeeded: false,
        steps: 0,
    };
    let obs = render(&state, config);
    Ok((state, obs))
}

/// Per-step reward: distance penalty in `(-distance_penalty, 0]`, or the
/// success bonus.
pub fn reward(state: &WorldState, success: bool, config: &EnvConfig) -> f64 {
    if success {
        config.success_reward
    } else {
        -config.distance_penalty * state.gripper_object_distance() / config.diameter()
    }
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub state: WorldState,
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

/// Advances the world by one agent action. Pure in `(state, action, config)`.
pub fn step(state: &WorldState, action: usize, config: &EnvConfig) -> Result<Transition> {
    if state.is_done(config) {
        return Err(Error::EpisodeDone);
    }
    let v = action_vector(action)?;
    let mut next = state.clone();
    let start = state.gripper;
    for k in 1..=config.action_repeat {
        let kf = k as f64;
        next.gripper = config.clamp([start[0] + kf * v[0], start[1] + kf * v[1], start[2] + kf * v[2]]);
        if !next.attached && next.gripper_object_distance() < config.grasp_radius {
            next.attached = true;
        }
        if next.attached {
            next.object = next.gripper;
        }
    }
    next.steps += 1;
    let success = next.attached && next.object[2] > config.lift_height;
    next.succeeded = success;
    let r = reward(&next, success, config);
    let done = next.is_done(config);
    let observation = render(&next, config);
    Ok(Transition {
        state: next,
        observation,
        reward: r,
        done,
        success,
    })
}

/// Stateful convenience wrapper around [`reset`] / [`step`].
#[derive(Clone, Debug)]
pub struct GraspEnv {
    pub config: EnvConfig,
    state: Option<WorldState>,
}

impl GraspEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, state: None })
    }

    pub fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        let (state, obs) = reset(&self.config, episode_seed)?;
        self.state = Some(state);
        Ok(obs)
    }

    pub fn step(&mut self, action: usize) -> Result<Transition> {
        let state = self.state.as_ref().ok_or(Error::EpisodeDone)?;
        let t = step(state, action, &self.config)?;
        self.state = Some(t.state.clone());
        Ok(t)
    }

    pub fn state(&self) -> Option<&WorldState> {
        self.state.as_ref()
    }
}

/// Hand-written controller that walks to the object, descends, then lifts.
/// Used for constructing known-good trajectories.
pub fn scripted_action(state: &WorldState, config: &EnvConfig) -> usize {
    let stride = config.action_repeat as f64 * 0.005;
    if state.attached {
        return 6;
    }
    let dx = state.object[0] - state.gripper[0];
    let dy = state.object[1] - state.gripper[1];
    if dx.abs() > stride / 2.0 {
        return if dx < 0.0 { 2 } else { 1 };
    }
    if dy.abs() > stride / 2.0 {
        return if dy < 0.0 { 3 } else { 4 };
    }
    5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_columns() {
        assert_eq!(action_vector(2).unwrap(), [-0.005, 0.0, 0.0]);
        assert_eq!(action_vector(0).unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(action_vector(6).unwrap(), [0.0, 0.0, 0.005]);
        assert!(action_vector(7).is_err());
    }

    #[test]
    fn static_static_is_seed_independent() {
        let cfg = EnvConfig::default();
        let (_, a) = reset(&cfg, 1).unwrap();
        let (_, b) = reset(&cfg, 987_654).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn static_random_is_deterministic() {
        let cfg = EnvConfig::with_task(Task::StaticRandom);
        let (a, _) = reset(&cfg, 42).unwrap();
        let (b, _) = reset(&cfg, 42).unwrap();
        let (c, _) = reset(&cfg, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.object, c.object);
    }

    #[test]
    fn noop_keeps_gripper() {
        let cfg = EnvConfig::default();
        let (s, _) = reset(&cfg, 0).unwrap();
        let t = step(&s, 0, &cfg).unwrap();
        assert_eq!(t.state.gripper, s.gripper);
        assert_eq!(t.state.steps, 1);
    }

    #[test]
    fn move_left_once() {
        let cfg = EnvConfig::default();
        let (s, _) = reset(&cfg, 0).unwrap();
        assert_eq!(s.gripper[0], 0.5);
        let t = step(&s, 2, &cfg).unwrap();
        assert!((t.state.gripper[0] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn scripted_run_succeeds_before_horizon() {
        let cfg = EnvConfig::default();
        let (mut s, _) = reset(&cfg, 0).unwrap();
        let mut total = 0.0;
        for i in 0..cfg.horizon {
            let t = step(&s, scripted_action(&s, &cfg), &cfg).unwrap();
            total += t.reward;
            s = t.state;
            if t.done {
                assert!(t.success, "finished without success at step {i}");
                assert!(i + 1 < cfg.horizon);
                assert_eq!(t.reward, 10.0);
                assert!(total > 9.0);
                return;
            }
        }
        panic!("scripted controller never finished");
    }

    #[test]
    fn horizon_and_step_after_done() {
        let cfg = EnvConfig::default();
        let mut env = GraspEnv::new(cfg.clone()).unwrap();
        env.reset(0).unwrap();
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            let t = env.step(0).unwrap();
            total += t.reward;
            steps += 1;
            assert!(t.reward <= 0.0 && t.reward > -0.1);
            if t.done {
                break;
            }
        }
        assert_eq!(steps, 40);
        assert!(total > -4.0 && total <= 0.0);
        assert!(matches!(env.step(0), Err(Error::EpisodeDone)));
    }

    #[test]
    fn reward_contract() {
        let cfg = EnvConfig::default();
        let (mut s, _) = reset(&cfg, 0).unwrap();
        s.gripper = s.object;
        assert_eq!(reward(&s, false, &cfg), 0.0);
        assert_eq!(reward(&s, true, &cfg), 10.0);
        let mut prev = f64::NEG_INFINITY;
        for k in (0..10).rev() {
            s.gripper = [s.object[0] + 0.05 * k as f64, s.object[1], s.object[2]];
            let r = reward(&s, false, &cfg);
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn attached_object_follows_gripper() {
        let cfg = EnvConfig::default();
        let (mut s, _) = reset(&cfg, 0).unwrap();
        while !s.attached {
            s = step(&s, scripted_action(&s, &cfg), &cfg).unwrap().state;
        }
        assert_eq!(s.gripper_object_distance(), 0.0);
        let t = step(&s, 2, &cfg).unwrap();
        assert_eq!(t.state.gripper_object_distance(), 0.0);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = EnvConfig::default();
        cfg.horizon = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::default();
        cfg.grasp_radius = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::default();
        cfg.image_size = 8;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn task_names() {
        assert_eq!("static_random".parse::<Task>().unwrap(), Task::StaticRandom);
        assert_eq!("static-static".parse::<Task>().unwrap(), Task::StaticStatic);
        assert!("dynamic".parse::<Task>().is_err());
    }
}
