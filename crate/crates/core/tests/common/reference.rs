//! Naive f64 forward pass over the same layer list, used as an independent
//! route for finite differences.

use latent_probe::nn::{Layer, Sequential};
use latent_probe::vae::Vae;
use latent_probe::Tensor;

/// Activations as `(dims without batch, values)` for a batch of rows.
#[derive(Clone, Debug)]
pub struct Batch {
    pub dims: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl Batch {
    pub fn from_tensor(t: &Tensor) -> Self {
        Batch {
            dims: t.dims()[1..].to_vec(),
            rows: (0..t.batch()).map(|b| t.row(b).iter().map(|&v| v as f64).collect()).collect(),
        }
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Batch {
            dims: self.dims,
            rows: self.rows.into_iter().map(|r| r.into_iter().map(&f).collect()).collect(),
        }
    }
}

fn dense(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let inputs = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| bias + (0..inputs).map(|i| w[o * inputs + i] * x[i]).sum::<f64>())
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn conv(x: &[f64], dims: &[usize], w: &[f64], b: &[f64], k: usize, stride: usize, pad: usize) -> (Vec<f64>, Vec<usize>) {
    let (c, h, wd) = (dims[0], dims[1], dims[2]);
    let f = b.len();
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (wd + 2 * pad - k) / stride + 1;
    let mut out = vec![0.0; f * oh * ow];
    for fo in 0..f {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = b[fo];
                for ci in 0..c {
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                continue;
                            }
                            acc += w[((fo * c + ci) * k + ky) * k + kx] * x[(ci * h + iy as usize) * wd + ix as usize];
                        }
                    }
                }
                out[(fo * oh + oy) * ow + ox] = acc;
            }
        }
    }
    (out, vec![f, oh, ow])
}

fn upsample(x: &[f64], dims: &[usize], factor: usize) -> (Vec<f64>, Vec<usize>) {
    let (c, h, w) = (dims[0], dims[1], dims[2]);
    let (oh, ow) = (h * factor, w * factor);
    let mut out = vec![0.0; c * oh * ow];
    for ci in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                out[(ci * oh + y) * ow + xx] = x[(ci * h + y / factor) * w + xx / factor];
            }
        }
    }
    (out, vec![c, oh, ow])
}

/// Runs `net` with parameters taken in order from `params`, appending the
/// sign of every ReLU input to `pattern`.
pub fn run(net: &Sequential, params: &mut std::slice::Iter<'_, Vec<f64>>, x: Batch, pattern: &mut Vec<bool>) -> Batch {
    let mut x = x;
    for layer in &net.layers {
        x = match layer {
            Layer::Dense(_) => {
                let (w, b) = (params.next().unwrap(), params.next().unwrap());
                Batch {
                    dims: vec![b.len()],
                    rows: x.rows.iter().map(|r| dense(r, w, b)).collect(),
                }
            }
            Layer::Conv2d(l) => {
                let (w, b) = (params.next().unwrap(), params.next().unwrap());
                let mut dims = Vec::new();
                let rows = x
                    .rows
                    .iter()
                    .map(|r| {
                        let (y, d) = conv(r, &x.dims, w, b, l.kernel(), l.stride, l.padding);
                        dims = d;
                        y
                    })
                    .collect();
                Batch { dims, rows }
            }
            Layer::Relu(_) => {
                pattern.extend(x.rows.iter().flatten().map(|&v| v > 0.0));
                x.map(|v| v.max(0.0))
            }
            Layer::Sigmoid(_) => x.map(|v| 1.0 / (1.0 + (-v).exp())),
            Layer::Upsample(l) => {
                let mut dims = Vec::new();
                let rows = x
                    .rows
                    .iter()
                    .map(|r| {
                        let (y, d) = upsample(r, &x.dims, l.factor);
                        dims = d;
                        y
                    })
                    .collect();
                Batch { dims, rows }
            }
            Layer::Reshape(l) => Batch {
                dims: l.shape.clone(),
                rows: x.rows,
            },
        };
    }
    x
}

/// Full VAE loss in f64 with parameters in `Vae::params` order.
pub fn vae_loss(vae: &Vae, params: &[Vec<f64>], clean: &Tensor, noisy: &Tensor, eps: &Tensor) -> (f64, Vec<bool>) {
    let mut pattern = Vec::new();
    let mut it = params.iter();
    let h = run(&vae.encoder, &mut it, Batch::from_tensor(noisy), &mut pattern);
    let (mw, mb) = (it.next().unwrap(), it.next().unwrap());
    let (lw, lb) = (it.next().unwrap(), it.next().unwrap());
    let m = clean.batch() as f64;
    let mut kl = 0.0;
    let mut z_rows = Vec::new();
    for (b, row) in h.rows.iter().enumerate() {
        let mu = dense(row, mw, mb);
        let lv = dense(row, lw, lb);
        let e = eps.row(b);
        z_rows.push((0..mu.len()).map(|i| (0.5 * lv[i]).exp() * e[i] as f64 + mu[i]).collect());
        kl += (0..mu.len()).map(|i| 0.5 * (mu[i] * mu[i] + lv[i].exp() - 1.0 - lv[i])).sum::<f64>();
    }
    let z = Batch {
        dims: vec![vae.latent_dim()],
        rows: z_rows,
    };
    let recon = run(&vae.decoder, &mut it, z, &mut pattern);
    let sq: f64 = recon
        .rows
        .iter()
        .enumerate()
        .flat_map(|(b, r)| r.iter().zip(clean.row(b)).map(|(&a, &s)| (a - s as f64).powi(2)))
        .sum();
    ((sq + kl) / m, pattern)
}
