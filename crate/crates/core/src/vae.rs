//! Denoising variational autoencoder.
//!
//! Encoder: three 3×3 stride-2 convolutions (3→16→32→32) with ReLU, then two
//! dense heads for the mean and log-variance. Decoder: dense projection to a
//! `16 × n/8 × n/8` grid followed by three nearest-upsample + 3×3 convolution
//! blocks, ending in a sigmoid so reconstructions stay in `[0, 1]`.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::checkpoint::{self, NamedTensors};
use crate::env::{self, EnvConfig, Task};
use crate::error::{Error, Result};
use crate::nn::{self, Conv2d, Dense, InitKind, Layer, Optimizer, Param, Relu, Reshape, Sequential, Sigmoid, Upsample};
use crate::tensor::Tensor;

pub const ENCODER_CHANNELS: [usize; 3] = [16, 32, 32];
const DECODER_CHANNELS: [usize; 3] = [16, 16, 8];

/// Mean, log-variance, noise and the reparameterized sample.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode {
    pub mu: Vec<f32>,
    pub logvar: Vec<f32>,
    pub eps: Vec<f32>,
    pub z: Vec<f32>,
}

impl LatentCode {
    pub fn new(mu: Vec<f32>, logvar: Vec<f32>, eps: Vec<f32>) -> Result<Self> {
        if mu.len() != logvar.len() || mu.len() != eps.len() {
            return Err(Error::ShapeMismatch {
                op: "latent_code",
                expected: vec![mu.len()],
                got: vec![logvar.len(), eps.len()],
            });
        }
        let z = reparameterize(&mu, &logvar, &eps);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent code".into()));
        }
        Ok(Self { mu, logvar, eps, z })
    }

    /// Recomputes `z` from its parts and compares exactly.
    pub fn is_consistent(&self) -> bool {
        reparameterize(&self.mu, &self.logvar, &self.eps) == self.z
    }
}

/// `z = exp(logvar / 2) ⊙ eps + mu`
pub fn reparameterize(mu: &[f32], logvar: &[f32], eps: &[f32]) -> Vec<f32> {
    mu.iter()
        .zip(logvar)
        .zip(eps)
        .map(|((&m, &lv), &e)| (0.5 * lv).exp() * e + m)
        .collect()
}

/// Closed-form `KL(N(mu, exp(logvar)) || N(0, I))` for one sample.
pub fn kl_divergence(mu: &[f32], logvar: &[f32]) -> f64 {
    mu.iter()
        .zip(logvar)
        .map(|(&m, &lv)| {
            let (m, lv) = (m as f64, lv as f64);
            0.5 * (m * m + lv.exp() - 1.0 - lv)
        })
        .sum()
}

/// Losses averaged over the batch.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VaeLoss {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

#[derive(Clone, Debug)]
pub struct Vae {
    pub encoder: Sequential,
    pub mu_head: Dense,
    pub logvar_head: Dense,
    pub decoder: Sequential,
    latent_dim: usize,
    image_size: usize,
}

impl Vae {
    /// Zero-initialized network; `image_size` must be a multiple of 8 and at least 16.
    pub fn new(image_size: usize, latent_dim: usize) -> Result<Self> {
        if image_size < 16 || !image_size.is_multiple_of(8) {
            return Err(Error::invalid(format!(
                "VAE image size must be a multiple of 8 and >= 16, got {image_size}"
            )));
        }
        if latent_dim == 0 {
            return Err(Error::invalid("latent dim must be positive"));
        }
        let mut side = image_size;
        let mut enc = Vec::new();
        let mut in_ch = 3;
        for (i, &out_ch) in ENCODER_CHANNELS.iter().enumerate() {
            enc.push(Layer::Conv2d(Conv2d::new(&format!("encoder.{}", 2 * i), in_ch, out_ch, 3, 2, 0)));
            enc.push(Layer::Relu(Relu::default()));
            side = nn::conv_output_size(side, 3, 2, 0)?;
            in_ch = out_ch;
        }
        let flat = in_ch * side * side;
        let grid = image_size / 8;
        let mut dec = vec![
            Layer::Dense(Dense::new("decoder.0", latent_dim, DECODER_CHANNELS[0] * grid * grid)),
            Layer::Relu(Relu::default()),
            Layer::Reshape(Reshape::new(&[DECODER_CHANNELS[0], grid, grid])),
        ];
        let outs = [DECODER_CHANNELS[1], DECODER_CHANNELS[2], 3];
        let mut ch = DECODER_CHANNELS[0];
        for (i, &out_ch) in outs.iter().enumerate() {
            dec.push(Layer::Upsample(Upsample::new(2)));
            dec.push(Layer::Conv2d(Conv2d::new(&format!("decoder.{}", dec.len()), ch, out_ch, 3, 1, 1)));
            dec.push(if i + 1 < outs.len() {
                Layer::Relu(Relu::default())
            } else {
                Layer::Sigmoid(Sigmoid::default())
            });
            ch = out_ch;
        }
        Ok(Self {
            encoder: Sequential::new("encoder", enc),
            mu_head: Dense::new("mu_head", flat, latent_dim),
            logvar_head: Dense::new("logvar_head", flat, latent_dim),
            decoder: Sequential::new("decoder", dec),
            latent_dim,
            image_size,
        })
    }

    /// He-normal initialized network.
    pub fn initialized(image_size: usize, latent_dim: usize, seed: u64) -> Result<Self> {
        let mut vae = Self::new(image_size, latent_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        nn::initialize(&mut vae.encoder, InitKind::HeNormal, &mut rng)?;
        nn::init_dense(&mut vae.mu_head, InitKind::HeNormal, &mut rng)?;
        nn::init_dense(&mut vae.logvar_head, InitKind::HeNormal, &mut rng)?;
        // start near unit variance
        vae.logvar_head.weight.value.data_mut().iter_mut().for_each(|w| *w *= 0.1);
        nn::initialize(&mut vae.decoder, InitKind::HeNormal, &mut rng)?;
        Ok(vae)
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    fn check_images(&self, x: &Tensor) -> Result<()> {
        let n = self.image_size;
        if x.rank() != 4 || x.dims()[1..] != [3, n, n] {
            return Err(Error::ShapeMismatch {
                op: "vae_encode",
                expected: vec![x.dims().first().copied().unwrap_or(1), 3, n, n],
                got: x.dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Accepts `[3, H, W]` or `[B, 3, H, W]`.
    fn as_batch(&self, x: &Tensor) -> Result<Tensor> {
        let x = if x.rank() == 3 {
            let mut dims = vec![1];
            dims.extend_from_slice(x.dims());
            x.clone().reshape(&dims)?
        } else {
            x.clone()
        };
        self.check_images(&x)?;
        Ok(x)
    }

    /// Encoder means and log-variances, each `[B, L]`.
    pub fn encode_stats(&self, images: &Tensor) -> Result<(Tensor, Tensor)> {
        let x = self.as_batch(images)?;
        let h = self.encoder.infer(&x)?;
        let mu = self.mu_head.infer(&h)?;
        let logvar = self.logvar_head.infer(&h)?;
        mu.ensure_finite("mu_head")?;
        logvar.ensure_finite("logvar_head")?;
        Ok((mu, logvar))
    }

    /// Deterministic encoding: the mean of the posterior, `[B, L]`.
    pub fn encode_mean(&self, images: &Tensor) -> Result<Tensor> {
        Ok(self.encode_stats(images)?.0)
    }

    /// Encodes one image and samples `z` by reparameterization.
    pub fn encode<R: Rng + ?Sized>(&self, image: &Tensor, rng: &mut R) -> Result<LatentCode> {
        let (mu, logvar) = self.encode_stats(image)?;
        if mu.batch() != 1 {
            return Err(Error::invalid("encode takes a single image"));
        }
        let eps = (0..self.latent_dim).map(|_| StandardNormal.sample(rng)).collect();
        LatentCode::new(mu.into_data(), logvar.into_data(), eps)
    }

    /// Decodes `[L]` or `[B, L]` codes to `[B, 3, H, W]` images in `[0, 1]`.
    pub fn decode(&self, z: &Tensor) -> Result<Tensor> {
        let z = if z.rank() == 1 {
            z.clone().reshape(&[1, z.len()])?
        } else {
            z.clone()
        };
        if z.row_len() != self.latent_dim {
            return Err(Error::ShapeMismatch {
                op: "vae_decode",
                expected: vec![z.batch(), self.latent_dim],
                got: z.dims().to_vec(),
            });
        }
        self.decoder.infer(&z)
    }

    /// Loss for a batch with explicit noise `eps` (`[B, L]`), no gradients.
    pub fn loss(&self, clean: &Tensor, noisy: &Tensor, eps: &Tensor) -> Result<VaeLoss> {
        let (mu, logvar) = self.encode_stats(noisy)?;
        let z = self.sample_latent(&mu, &logvar, eps)?;
        let recon = self.decoder.infer(&z)?;
        Ok(batch_loss(clean, &recon, &mu, &logvar))
    }

    fn sample_latent(&self, mu: &Tensor, logvar: &Tensor, eps: &Tensor) -> Result<Tensor> {
        if eps.dims() != mu.dims() {
            return Err(Error::ShapeMismatch {
                op: "vae_reparameterize",
                expected: mu.dims().to_vec(),
                got: eps.dims().to_vec(),
            });
        }
        Tensor::new(mu.dims().to_vec(), reparameterize(mu.data(), logvar.data(), eps.data()))
    }

    /// Forward + backward on one batch; gradients accumulate into the params.
    pub fn loss_and_grad(&mut self, clean: &Tensor, noisy: &Tensor, eps: &Tensor) -> Result<VaeLoss> {
        self.check_images(clean)?;
        self.check_images(noisy)?;
        let h = self.encoder.forward(noisy)?;
        let mu = self.mu_head.forward(&h)?;
        let logvar = self.logvar_head.forward(&h)?;
        mu.ensure_finite("mu_head")?;
        logvar.ensure_finite("logvar_head")?;
        let z = self.sample_latent(&mu, &logvar, eps)?;
        let recon = self.decoder.forward(&z)?;
        let loss = batch_loss(clean, &recon, &mu, &logvar);

        let d_recon = reconstruction_grad(clean, &recon);
        let dz = self.decoder.backward(&Tensor::new(recon.dims().to_vec(), d_recon)?)?;
        let (mut dmu, mut dlogvar) = reparameterize_backward(logvar.data(), eps.data(), dz.data());
        let (kl_mu, kl_logvar) = kl_grad(mu.data(), logvar.data(), clean.batch());
        dmu.iter_mut().zip(kl_mu).for_each(|(a, b)| *a += b);
        dlogvar.iter_mut().zip(kl_logvar).for_each(|(a, b)| *a += b);
        let mut dh = self.mu_head.backward(&Tensor::new(mu.dims().to_vec(), dmu)?)?;
        let dh_lv = self.logvar_head.backward(&Tensor::new(logvar.dims().to_vec(), dlogvar)?)?;
        dh.data_mut().iter_mut().zip(dh_lv.data()).for_each(|(a, b)| *a += b);
        self.encoder.backward(&dh)?;
        Ok(loss)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p = self.encoder.params();
        p.extend([&self.mu_head.weight, &self.mu_head.bias]);
        p.extend([&self.logvar_head.weight, &self.logvar_head.bias]);
        p.extend(self.decoder.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.encoder.params_mut();
        p.extend([&mut self.mu_head.weight, &mut self.mu_head.bias]);
        p.extend([&mut self.logvar_head.weight, &mut self.logvar_head.bias]);
        p.extend(self.decoder.params_mut());
        p
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    pub fn to_tensors(&self) -> NamedTensors {
        let mut out = vec![(
            "meta.vae".to_string(),
            Tensor::from_vec(vec![self.image_size as f32, self.latent_dim as f32]),
        )];
        out.extend(self.params().into_iter().map(|p| (p.name.clone(), p.value.clone())));
        out
    }

    pub fn from_tensors(tensors: &[(String, Tensor)]) -> Result<Self> {
        let meta = checkpoint::find(tensors, "meta.vae")
            .ok_or_else(|| Error::invalid("not a VAE checkpoint (missing meta.vae)"))?;
        if meta.len() != 2 {
            return Err(Error::invalid("malformed meta.vae"));
        }
        let mut vae = Self::new(meta.data()[0] as usize, meta.data()[1] as usize)?;
        load_params(vae.params_mut(), tensors)?;
        Ok(vae)
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

/// Copies tensors into parameters by name, checking dims.
pub(crate) fn load_params(params: Vec<&mut Param>, tensors: &[(String, Tensor)]) -> Result<()> {
    for p in params {
        let t = checkpoint::find(tensors, &p.name)
            .ok_or_else(|| Error::invalid(format!("missing tensor {}", p.name)))?;
        if t.dims() != p.value.dims() {
            return Err(Error::ShapeMismatch {
                op: "load_params",
                expected: p.value.dims().to_vec(),
                got: t.dims().to_vec(),
            });
        }
        p.value = t.clone();
    }
    Ok(())
}

/// Batch-averaged reconstruction and KL terms.
pub fn batch_loss(clean: &Tensor, recon: &Tensor, mu: &Tensor, logvar: &Tensor) -> VaeLoss {
    let m = clean.batch() as f64;
    let sq: f64 = clean
        .data()
        .iter()
        .zip(recon.data())
        .map(|(&s, &r)| ((s - r) as f64).powi(2))
        .sum();
    let l = mu.row_len();
    let kl: f64 = (0..mu.batch())
        .map(|b| kl_divergence(&mu.data()[b * l..(b + 1) * l], &logvar.data()[b * l..(b + 1) * l]))
        .sum();
    let recon = sq / m;
    let kl = kl / m;
    VaeLoss {
        total: recon + kl,
        recon,
        kl,
    }
}

/// Gradient of the batch-averaged squared error w.r.t. the reconstruction.
pub fn reconstruction_grad(clean: &Tensor, recon: &Tensor) -> Vec<f32> {
    let m = clean.batch() as f32;
    recon
        .data()
        .iter()
        .zip(clean.data())
        .map(|(&r, &s)| 2.0 * (r - s) / m)
        .collect()
}

/// Gradient of the batch-averaged KL term w.r.t. `mu` and `logvar`.
pub fn kl_grad(mu: &[f32], logvar: &[f32], batch: usize) -> (Vec<f32>, Vec<f32>) {
    let m = batch as f32;
    let dmu = mu.iter().map(|&v| v / m).collect();
    let dlogvar = logvar.iter().map(|&lv| 0.5 * (lv.exp() - 1.0) / m).collect();
    (dmu, dlogvar)
}

/// Pulls `dL/dz` back through [`reparameterize`].
pub fn reparameterize_backward(logvar: &[f32], eps: &[f32], dz: &[f32]) -> (Vec<f32>, Vec<f32>) {
    let dlogvar = logvar
        .iter()
        .zip(eps)
        .zip(dz)
        .map(|((&lv, &e), &g)| g * e * 0.5 * (0.5 * lv).exp())
        .collect();
    (dz.to_vec(), dlogvar)
}

/// `clamp(s + η, 0, 1)` with `η ~ N(0, std²)` per pixel and channel.
pub fn add_noise<R: Rng + ?Sized>(image: &Tensor, std: f32, rng: &mut R) -> Tensor {
    let data = image
        .data()
        .iter()
        .map(|&s| {
            let eta: f32 = StandardNormal.sample(rng);
            (s + std * eta).clamp(0.0, 1.0)
        })
        .collect();
    Tensor::new(image.dims().to_vec(), data).expect("same dims")
}

/// Where a dataset came from.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetProvenance {
    pub task: Task,
    pub image_size: usize,
    pub seed: u64,
}

/// `N × 3 × H × W` images collected by a uniform random policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageDataset {
    pub images: Tensor,
    pub provenance: DatasetProvenance,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.images.batch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image(&self, i: usize) -> Tensor {
        self.images.slice_batch(i)
    }

    /// Gathers images by index into a batch tensor.
    pub fn batch(&self, indices: &[usize]) -> Result<Tensor> {
        let n = self.images.row_len();
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            data.extend_from_slice(self.images.row(i));
        }
        let mut dims = self.images.dims().to_vec();
        dims[0] = indices.len();
        Tensor::new(dims, data)
    }

    /// Splits off the last `held_out` images.
    pub fn split(&self, held_out: usize) -> Result<(ImageDataset, ImageDataset)> {
        if held_out == 0 || held_out >= self.len() {
            return Err(Error::invalid("held-out count must be in 1..len"));
        }
        let cut = self.len() - held_out;
        let a: Vec<usize> = (0..cut).collect();
        let b: Vec<usize> = (cut..self.len()).collect();
        Ok((
            ImageDataset {
                images: self.batch(&a)?,
                provenance: self.provenance.clone(),
            },
            ImageDataset {
                images: self.batch(&b)?,
                provenance: self.provenance.clone(),
            },
        ))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let task = match self.provenance.task {
            Task::StaticStatic => 0.0,
            Task::StaticRandom => 1.0,
        };
        let mut meta = vec![task, self.provenance.image_size as f32];
        meta.extend(checkpoint::pack_u64(self.provenance.seed));
        checkpoint::save(
            path,
            &[
                ("images".to_string(), self.images.clone()),
                ("meta.provenance".to_string(), Tensor::from_vec(meta)),
            ],
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let tensors = checkpoint::load(path)?;
        let bad = |reason: &str| Error::Checkpoint {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let images = checkpoint::find(&tensors, "images").ok_or_else(|| bad("missing images"))?;
        let meta = checkpoint::find(&tensors, "meta.provenance").ok_or_else(|| bad("missing provenance"))?;
        if images.rank() != 4 || images.dims()[1] != 3 || meta.len() != 6 {
            return Err(bad("malformed image dataset"));
        }
        let m = meta.data();
        let seed = checkpoint::unpack_u64(&m[2..]);
        Ok(Self {
            images: images.clone(),
            provenance: DatasetProvenance {
                task: if m[0] == 0.0 { Task::StaticStatic } else { Task::StaticRandom },
                image_size: m[1] as usize,
                seed,
            },
        })
    }
}

/// Runs uniform-random-action episodes and keeps every observation (including
/// each reset frame) until `n` images are collected.
pub fn collect_dataset(config: &EnvConfig, n: usize, seed: u64) -> Result<ImageDataset> {
    if n == 0 {
        return Err(Error::invalid("dataset size must be at least 1"));
    }
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames: Vec<Tensor> = Vec::with_capacity(n);
    'episodes: loop {
        let (mut state, obs) = env::reset(config, rng.next_u64())?;
        frames.push(obs);
        while frames.len() < n {
            let t = env::step(&state, rng.random_range(0..env::NUM_ACTIONS), config)?;
            frames.push(t.observation);
            state = t.state;
            if t.done {
                continue 'episodes;
            }
        }
        break;
    }
    let refs: Vec<&Tensor> = frames.iter().collect();
    Ok(ImageDataset {
        images: Tensor::stack(&refs)?,
        provenance: DatasetProvenance {
            task: config.task,
            image_size: config.image_size,
            seed,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VaeTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub noise_std: f32,
    pub latent_dim: usize,
    pub seed: u64,
}

impl Default for VaeTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 32,
            learning_rate: 1e-3,
            noise_std: 0.1,
            latent_dim: 16,
            seed: 0,
        }
    }
}

/// Trains a freshly initialized VAE. Returns the model and per-epoch mean losses.
pub fn train_vae(dataset: &ImageDataset, config: &VaeTrainConfig) -> Result<(Vae, Vec<VaeLoss>)> {
    let vae = Vae::initialized(dataset.images.dims()[2], config.latent_dim, config.seed)?;
    train_vae_from(vae, dataset, config)
}

pub fn train_vae_from(mut vae: Vae, dataset: &ImageDataset, config: &VaeTrainConfig) -> Result<(Vae, Vec<VaeLoss>)> {
    if dataset.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0ae5);
    let mut opt = Optimizer::adam(config.learning_rate)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sums = VaeLoss::default();
        for chunk in order.chunks(config.batch_size) {
            let clean = dataset.batch(chunk)?;
            let noisy = add_noise(&clean, config.noise_std, &mut rng);
            let eps_data = (0..chunk.len() * vae.latent_dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let eps = Tensor::new(vec![chunk.len(), vae.latent_dim], eps_data)?;
            vae.zero_grad();
            let loss = vae
                .loss_and_grad(&clean, &noisy, &eps)
                .map_err(|_| Error::Diverged { stage: "epoch", index: epoch })?;
            if !loss.total.is_finite() {
                return Err(Error::Diverged { stage: "epoch", index: epoch });
            }
            opt.step(&mut vae.params_mut())
                .map_err(|_| Error::Diverged { stage: "epoch", index: epoch })?;
            let w = chunk.len() as f64;
            sums.total += loss.total * w;
            sums.recon += loss.recon * w;
            sums.kl += loss.kl * w;
        }
        let n = dataset.len() as f64;
        history.push(VaeLoss {
            total: sums.total / n,
            recon: sums.recon / n,
            kl: sums.kl / n,
        });
    }
    Ok((vae, history))
}

/// Per-image mean squared errors on a dataset: `(reconstruction vs clean,
/// noisy input vs clean)`. Reconstructions decode the posterior mean.
pub fn denoising_mse(vae: &Vae, dataset: &ImageDataset, noise_std: f32, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = (0..dataset.len()).collect();
    let (mut recon_err, mut noisy_err) = (0.0, 0.0);
    for chunk in idx.chunks(32) {
        let clean = dataset.batch(chunk)?;
        let noisy = add_noise(&clean, noise_std, &mut rng);
        let mu = vae.encode_mean(&noisy)?;
        let recon = vae.decode(&mu)?;
        for ((&s, &r), &nz) in clean.data().iter().zip(recon.data()).zip(noisy.data()) {
            recon_err += ((s - r) as f64).powi(2);
            noisy_err += ((s - nz) as f64).powi(2);
        }
    }
    let n = dataset.len() as f64;
    Ok((recon_err / n, noisy_err / n))
}
