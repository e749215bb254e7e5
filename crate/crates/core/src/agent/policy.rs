use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{self, NamedTensors};
use crate::error::{Error, Result};
use crate::nn::{self, conv_output_size, softmax, Conv2d, Dense, InitKind, InitScheme, Layer, Param, Relu, Sequential};
use crate::tensor::Tensor;
use crate::vae::load_params;

/// Width of the shared base output read by both heads.
pub const BASE_WIDTH: usize = 64;
/// Hidden width of the first dense layer in the latent body.
pub const LATENT_HIDDEN: usize = 32;
const CONV_CHANNELS: [usize; 3] = [16, 32, 32];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Representation {
    /// Raw `[3, H, W]` pixels into the convolutional body.
    Image,
    /// VAE latent codes into the dense body.
    Latent,
}

impl Representation {
    fn code(self) -> f32 {
        match self {
            Representation::Image => 0.0,
            Representation::Latent => 1.0,
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Image => "image",
            Representation::Latent => "latent",
        })
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image" => Ok(Representation::Image),
            "latent" => Ok(Representation::Latent),
            other => Err(Error::invalid(format!("unknown representation '{other}'"))),
        }
    }
}

/// What one forward pass exposes for a single state.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput {
    pub probs: Vec<f32>,
    pub value: f32,
    /// Post-ReLU output of the base, verbatim.
    pub base: Vec<f32>,
}

/// Shared-base actor-critic network.
#[derive(Clone, Debug)]
pub struct Policy {
    pub representation: Representation,
    /// Dims of one state, without the batch axis.
    pub input_dims: Vec<usize>,
    pub init: InitScheme,
    pub base: Sequential,
    pub actor: Dense,
    pub critic: Dense,
}

impl Policy {
    /// Zero-weight network for states of `input_dims`.
    pub fn new(representation: Representation, input_dims: &[usize]) -> Result<Self> {
        let base = match representation {
            Representation::Image => {
                if input_dims.len() != 3 || input_dims[0] != 3 || input_dims[1] != input_dims[2] {
                    return Err(Error::invalid(format!(
                        "image policy expects [3, n, n] states, got {input_dims:?}"
                    )));
                }
                let mut side = input_dims[1];
                let mut layers = Vec::new();
                let mut in_ch = 3;
                for (i, &out_ch) in CONV_CHANNELS.iter().enumerate() {
                    layers.push(Layer::Conv2d(Conv2d::new(&format!("base.{}", 2 * i), in_ch, out_ch, 3, 2, 0)));
                    layers.push(Layer::Relu(Relu::default()));
                    side = conv_output_size(side, 3, 2, 0)?;
                    in_ch = out_ch;
                }
                let flat = in_ch * side * side;
                layers.push(Layer::Dense(Dense::new("base.6", flat, BASE_WIDTH)));
                layers.push(Layer::Relu(Relu::default()));
                Sequential::new("base", layers)
            }
            Representation::Latent => {
                if input_dims.len() != 1 || input_dims[0] == 0 {
                    return Err(Error::invalid(format!(
                        "latent policy expects [L] states, got {input_dims:?}"
                    )));
                }
                Sequential::new(
                    "base",
                    vec![
                        Layer::Dense(Dense::new("base.0", input_dims[0], LATENT_HIDDEN)),
                        Layer::Relu(Relu::default()),
                        Layer::Dense(Dense::new("base.2", LATENT_HIDDEN, BASE_WIDTH)),
                        Layer::Relu(Relu::default()),
                    ],
                )
            }
        };
        Ok(Self {
            representation,
            input_dims: input_dims.to_vec(),
            init: InitScheme {
                kind: InitKind::HeNormal,
                seed: 0,
            },
            base,
            actor: Dense::new("actor", BASE_WIDTH, crate::env::NUM_ACTIONS),
            critic: Dense::new("critic", BASE_WIDTH, 1),
        })
    }

    /// Network with every weight drawn from `init`; biases zero.
    pub fn initialized(representation: Representation, input_dims: &[usize], init: InitScheme) -> Result<Self> {
        let mut policy = Self::new(representation, input_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
        nn::initialize(&mut policy.base, init.kind, &mut rng)?;
        nn::init_dense(&mut policy.actor, init.kind, &mut rng)?;
        nn::init_dense(&mut policy.critic, init.kind, &mut rng)?;
        policy.init = init;
        Ok(policy)
    }

    /// Adds a batch axis to a single state and checks dims.
    pub fn batch_states(&self, states: &Tensor) -> Result<Tensor> {
        let states = if states.dims() == self.input_dims.as_slice() {
            let mut dims = vec![1];
            dims.extend_from_slice(&self.input_dims);
            states.clone().reshape(&dims)?
        } else {
            states.clone()
        };
        if states.rank() != self.input_dims.len() + 1 || states.dims()[1..] != self.input_dims[..] {
            let mut expected = vec![states.dims().first().copied().unwrap_or(1)];
            expected.extend_from_slice(&self.input_dims);
            return Err(Error::ShapeMismatch {
                op: "policy_forward",
                expected,
                got: states.dims().to_vec(),
            });
        }
        Ok(states)
    }

    /// Inference over `[B, ...]` states (or one unbatched state).
    pub fn forward_batch(&self, states: &Tensor) -> Result<Vec<PolicyOutput>> {
        let x = self.batch_states(states)?;
        let h = self.base.infer(&x)?;
        let logits = self.actor.infer(&h)?;
        let values = self.critic.infer(&h)?;
        logits.ensure_finite("actor")?;
        values.ensure_finite("critic")?;
        Ok((0..h.batch())
            .map(|b| PolicyOutput {
                probs: softmax(logits.row(b)),
                value: values.data()[b],
                base: h.row(b).to_vec(),
            })
            .collect())
    }

    /// Base activations `[B, 64]` only.
    pub fn base_activations(&self, states: &Tensor) -> Result<Tensor> {
        self.base.infer(&self.batch_states(states)?)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p = self.base.params();
        p.extend([&self.actor.weight, &self.actor.bias, &self.critic.weight, &self.critic.bias]);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.base.params_mut();
        p.extend([
            &mut self.actor.weight,
            &mut self.actor.bias,
            &mut self.critic.weight,
            &mut self.critic.bias,
        ]);
        p
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    pub fn to_tensors(&self) -> NamedTensors {
        let mut meta = vec![self.representation.code(), self.init.kind.code() as f32];
        meta.extend(checkpoint::pack_u64(self.init.seed));
        meta.extend(self.input_dims.iter().map(|&d| d as f32));
        let mut out = vec![("meta.policy".to_string(), Tensor::from_vec(meta))];
        out.extend(self.params().into_iter().map(|p| (p.name.clone(), p.value.clone())));
        out
    }

    pub fn from_tensors(tensors: &[(String, Tensor)]) -> Result<Self> {
        let meta = checkpoint::find(tensors, "meta.policy")
            .ok_or_else(|| Error::invalid("not a policy checkpoint (missing meta.policy)"))?;
        let m = meta.data();
        if m.len() < 7 {
            return Err(Error::invalid("malformed meta.policy"));
        }
        let representation = match m[0] as u8 {
            0 => Representation::Image,
            1 => Representation::Latent,
            other => return Err(Error::invalid(format!("unknown representation code {other}"))),
        };
        let kind = InitKind::from_code(m[1] as u8)
            .ok_or_else(|| Error::invalid(format!("unknown init code {}", m[1])))?;
        let dims: Vec<usize> = m[6..].iter().map(|&d| d as usize).collect();
        let mut policy = Self::new(representation, &dims)?;
        policy.init = InitScheme {
            kind,
            seed: checkpoint::unpack_u64(&m[2..6]),
        };
        load_params(policy.params_mut(), tensors)?;
        Ok(policy)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::save(path, &self.to_tensors())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tensors(&checkpoint::load(path)?).map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// Probabilities, value and base activation for one state.
pub fn policy_forward(policy: &Policy, state: &Tensor) -> Result<PolicyOutput> {
    let mut out = policy.forward_batch(state)?;
    if out.len() != 1 {
        return Err(Error::invalid(format!("policy_forward takes one state, got {}", out.len())));
    }
    Ok(out.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_state(dims: &[usize], seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims.iter().product();
        Tensor::new(dims.to_vec(), (0..n).map(|_| rng.random()).collect()).unwrap()
    }

    fn he(seed: u64) -> InitScheme {
        InitScheme {
            kind: InitKind::HeNormal,
            seed,
        }
    }

    #[test]
    fn zero_weights_give_uniform_probs() {
        for (repr, dims) in [(Representation::Image, vec![3, 64, 64]), (Representation::Latent, vec![16])] {
            let p = Policy::new(repr, &dims).unwrap();
            let out = policy_forward(&p, &random_state(&dims, 1)).unwrap();
            assert!(out.probs.iter().all(|&q| (q - 1.0 / 7.0).abs() < 1e-7));
            assert_eq!(out.value, 0.0);
            assert_eq!(out.base.len(), BASE_WIDTH);
        }
    }

    #[test]
    fn probs_normalized_and_base_width() {
        for (repr, dims) in [(Representation::Image, vec![3, 64, 64]), (Representation::Latent, vec![16])] {
            let p = Policy::initialized(repr, &dims, he(3)).unwrap();
            for s in 0..5 {
                let out = policy_forward(&p, &random_state(&dims, s)).unwrap();
                assert!((out.probs.iter().sum::<f32>() - 1.0).abs() < 1e-6);
                assert_eq!(out.base.len(), BASE_WIDTH);
                assert!(out.base.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn body_mismatch_is_an_error() {
        let p = Policy::new(Representation::Latent, &[16]).unwrap();
        assert!(policy_forward(&p, &random_state(&[3, 64, 64], 0)).is_err());
        assert!(Policy::new(Representation::Image, &[16]).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy_ep0.lprb");
        let p = Policy::initialized(
            Representation::Latent,
            &[16],
            InitScheme {
                kind: InitKind::BetaOneThree,
                seed: u64::MAX - 5,
            },
        )
        .unwrap();
        p.save(&path).unwrap();
        let q = Policy::load(&path).unwrap();
        assert_eq!(q.init, p.init);
        assert_eq!(q.to_tensors(), p.to_tensors());
    }

    #[test]
    fn representation_names() {
        for r in [Representation::Image, Representation::Latent] {
            assert_eq!(r.to_string().parse::<Representation>().unwrap(), r);
        }
        assert!("pixels".parse::<Representation>().is_err());
    }
}
