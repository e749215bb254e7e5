use crate::error::{Error, Result};
use crate::nn::gemm::{gemm, View};
use crate::tensor::Tensor;

/// A trainable tensor together with its accumulated gradient.
#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.dims());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Output size of a convolution along one spatial axis.
pub fn conv_output_size(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::invalid("conv stride must be positive"));
    }
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::invalid(format!(
            "conv input extent {input} (padding {padding}) is smaller than kernel {kernel}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Fully connected layer `y = W x + b`, `W: out × in`.
///
/// Accepts `[batch, ...]` input and flattens everything after the batch axis.
#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    cached_input: Option<Tensor>,
}

impl Dense {
    pub fn new(name: &str, inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Param::new(format!("{name}.weight"), Tensor::zeros(&[outputs, inputs])),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[outputs])),
            cached_input: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.dims()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.dims()[0]
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.rank() < 2 || x.row_len() != self.inputs() {
            return Err(Error::ShapeMismatch {
                op: "dense_forward",
                expected: vec![x.dims().first().copied().unwrap_or(1), self.inputs()],
                got: x.dims().to_vec(),
            });
        }
        Ok(())
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let (batch, inputs, outputs) = (x.batch(), self.inputs(), self.outputs());
        let mut out = Vec::with_capacity(batch * outputs);
        for _ in 0..batch {
            out.extend_from_slice(self.bias.value.data());
        }
        gemm(
            batch,
            inputs,
            outputs,
            View::rows(x.data(), inputs),
            View::transposed(self.weight.value.data(), inputs),
            1.0,
            &mut out,
        );
        Tensor::new(vec![batch, outputs], out)
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.infer(x)?;
        self.cached_input = Some(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let x = self
            .cached_input
            .as_ref()
            .ok_or_else(|| Error::BackwardBeforeForward(self.weight.name.clone()))?;
        let (batch, inputs, outputs) = (x.batch(), self.inputs(), self.outputs());
        if grad_out.dims() != [batch, outputs] {
            return Err(Error::ShapeMismatch {
                op: "dense_backward",
                expected: vec![batch, outputs],
                got: grad_out.dims().to_vec(),
            });
        }
        let g = grad_out.data();
        gemm(
            outputs,
            batch,
            inputs,
            View::transposed(g, outputs),
            View::rows(x.data(), inputs),
            1.0,
            self.weight.grad.data_mut(),
        );
        let db = self.bias.grad.data_mut();
        for row in g.chunks_exact(outputs) {
            for (d, v) in db.iter_mut().zip(row) {
                *d += v;
            }
        }
        let mut dx = vec![0.0; batch * inputs];
        gemm(
            batch,
            outputs,
            inputs,
            View::rows(g, outputs),
            View::rows(self.weight.value.data(), inputs),
            0.0,
            &mut dx,
        );
        Tensor::new(x.dims().to_vec(), dx)
    }
}

/// 2-D convolution over `[batch, channels, height, width]` input with square kernels.
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub weight: Param,
    pub bias: Param,
    pub stride: usize,
    pub padding: usize,
    cache: Option<ConvCache>,
}

#[derive(Clone, Debug)]
enum ConvCache {
    /// im2col columns for every batch entry (strided path).
    Columns { input_dims: Vec<usize>, columns: Vec<f32> },
    /// Zero-padded input planes (stride-1 path).
    Padded { input_dims: Vec<usize>, padded: Vec<f32> },
}

struct ConvGeometry {
    channels: usize,
    height: usize,
    width: usize,
    out_h: usize,
    out_w: usize,
}

impl Conv2d {
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        Self {
            weight: Param::new(
                format!("{name}.weight"),
                Tensor::zeros(&[out_channels, in_channels, kernel, kernel]),
            ),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[out_channels])),
            stride,
            padding,
            cache: None,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.dims()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.dims()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.value.dims()[2]
    }

    pub fn output_hw(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        Ok((
            conv_output_size(height, self.kernel(), self.stride, self.padding)?,
            conv_output_size(width, self.kernel(), self.stride, self.padding)?,
        ))
    }

    fn geometry(&self, x: &Tensor) -> Result<ConvGeometry> {
        let d = x.dims();
        if d.len() != 4 || d[1] != self.in_channels() {
            return Err(Error::ShapeMismatch {
                op: "conv2d_forward",
                expected: vec![d.first().copied().unwrap_or(1), self.in_channels(), 0, 0],
                got: d.to_vec(),
            });
        }
        let (out_h, out_w) = self.output_hw(d[2], d[3])?;
        Ok(ConvGeometry {
            channels: d[1],
            height: d[2],
            width: d[3],
            out_h,
            out_w,
        })
    }

    fn im2col(&self, image: &[f32], g: &ConvGeometry, cols: &mut [f32]) {
        let k = self.kernel();
        let spatial = g.out_h * g.out_w;
        let pad = self.padding as isize;
        for c in 0..g.channels {
            let plane = &image[c * g.height * g.width..(c + 1) * g.height * g.width];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let dst = &mut cols[row * spatial..(row + 1) * spatial];
                    for oy in 0..g.out_h {
                        let iy = (oy * self.stride + ky) as isize - pad;
                        let line = &mut dst[oy * g.out_w..(oy + 1) * g.out_w];
                        if iy < 0 || iy >= g.height as isize {
                            line.fill(0.0);
                            continue;
                        }
                        let src = &plane[iy as usize * g.width..(iy as usize + 1) * g.width];
                        for (ox, v) in line.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - pad;
                            *v = if ix < 0 || ix >= g.width as isize {
                                0.0
                            } else {
                                src[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[f32], g: &ConvGeometry, image: &mut [f32]) {
        let k = self.kernel();
        let spatial = g.out_h * g.out_w;
        let pad = self.padding as isize;
        for c in 0..g.channels {
            let plane = &mut image[c * g.height * g.width..(c + 1) * g.height * g.width];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let src = &cols[row * spatial..(row + 1) * spatial];
                    for oy in 0..g.out_h {
                        let iy = (oy * self.stride + ky) as isize - pad;
                        if iy < 0 || iy >= g.height as isize {
                            continue;
                        }
                        let dst = &mut plane[iy as usize * g.width..(iy as usize + 1) * g.width];
                        for ox in 0..g.out_w {
                            let ix = (ox * self.stride + kx) as isize - pad;
                            if ix >= 0 && ix < g.width as isize {
                                dst[ix as usize] += src[oy * g.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }

    fn run(&self, x: &Tensor, keep_columns: bool) -> Result<(Tensor, Vec<f32>)> {
        let g = self.geometry(x)?;
        let batch = x.batch();
        let filters = self.out_channels();
        let patch = g.channels * self.kernel() * self.kernel();
        let spatial = g.out_h * g.out_w;
        let in_len = x.row_len();
        let mut out = vec![0.0; batch * filters * spatial];
        let mut all_cols = if keep_columns {
            vec![0.0; batch * patch * spatial]
        } else {
            Vec::new()
        };
        let mut scratch = if keep_columns {
            Vec::new()
        } else {
            vec![0.0; patch * spatial]
        };
        for b in 0..batch {
            let cols: &mut [f32] = if keep_columns {
                &mut all_cols[b * patch * spatial..(b + 1) * patch * spatial]
            } else {
                &mut scratch
            };
            self.im2col(&x.data()[b * in_len..(b + 1) * in_len], &g, cols);
            let dst = &mut out[b * filters * spatial..(b + 1) * filters * spatial];
            for (f, chunk) in dst.chunks_exact_mut(spatial).enumerate() {
                chunk.fill(self.bias.value.data()[f]);
            }
            gemm(
                filters,
                patch,
                spatial,
                View::rows(self.weight.value.data(), patch),
                View::rows(cols, spatial),
                1.0,
                dst,
            );
        }
        Ok((
            Tensor::new(vec![batch, filters, g.out_h, g.out_w], out)?,
            all_cols,
        ))
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        if self.stride == 1 {
            return Ok(self.direct_forward(x)?.0);
        }
        Ok(self.run(x, false)?.0)
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        if self.stride == 1 {
            let (y, padded) = self.direct_forward(x)?;
            self.cache = Some(ConvCache::Padded {
                input_dims: x.dims().to_vec(),
                padded,
            });
            return Ok(y);
        }
        let (y, columns) = self.run(x, true)?;
        self.cache = Some(ConvCache::Columns {
            input_dims: x.dims().to_vec(),
            columns,
        });
        Ok(y)
    }

    /// Zero-padded copy of every input plane, each `hp × wp` plus `k - 1`
    /// slack so shifted reads of the last row stay in bounds.
    fn pad_planes(&self, x: &Tensor) -> (Vec<f32>, usize, usize, usize) {
        let d = x.dims();
        let (p, k) = (self.padding, self.kernel());
        let (h, w) = (d[2], d[3]);
        let (hp, wp) = (h + 2 * p, w + 2 * p);
        let stride = hp * wp + k - 1;
        let planes = d[0] * d[1];
        let mut padded = vec![0.0; planes * stride];
        for (src, dst) in x.data().chunks_exact(h * w).zip(padded.chunks_exact_mut(stride)) {
            for (y, row) in src.chunks_exact(w).enumerate() {
                let at = (y + p) * wp + p;
                dst[at..at + w].copy_from_slice(row);
            }
        }
        (padded, hp, wp, stride)
    }

    /// Stride-1 convolution on flattened padded planes: each kernel tap is a
    /// single shifted multiply-add over the whole plane. The last `k - 1`
    /// columns of every accumulator row wrap around and are discarded.
    fn direct_forward(&self, x: &Tensor) -> Result<(Tensor, Vec<f32>)> {
        let g = self.geometry(x)?;
        let (batch, filters, k) = (x.batch(), self.out_channels(), self.kernel());
        let (padded, _, wp, plane_len) = self.pad_planes(x);
        let (oh, ow) = (g.out_h, g.out_w);
        let span = oh * wp;
        let wts = self.weight.value.data();
        let mut out = vec![0.0; batch * filters * oh * ow];
        let mut acc = vec![0.0f32; span];
        for b in 0..batch {
            for f in 0..filters {
                acc.fill(0.0);
                for c in 0..g.channels {
                    let plane = &padded[(b * g.channels + c) * plane_len..(b * g.channels + c + 1) * plane_len];
                    for ky in 0..k {
                        for kx in 0..k {
                            let off = ky * wp + kx;
                            axpy(wts[((f * g.channels + c) * k + ky) * k + kx], &plane[off..off + span], &mut acc);
                        }
                    }
                }
                let bias = self.bias.value.data()[f];
                let dst = &mut out[(b * filters + f) * oh * ow..(b * filters + f + 1) * oh * ow];
                for (row, src) in dst.chunks_exact_mut(ow).zip(acc.chunks_exact(wp)) {
                    for (o, &v) in row.iter_mut().zip(src) {
                        *o = v + bias;
                    }
                }
            }
        }
        Ok((Tensor::new(vec![batch, filters, oh, ow], out)?, padded))
    }

    fn direct_backward(&mut self, input_dims: &[usize], padded: &[f32], grad_out: &Tensor) -> Result<Tensor> {
        let g = self.geometry(&Tensor::zeros(input_dims))?;
        let (batch, filters, k, p) = (input_dims[0], self.out_channels(), self.kernel(), self.padding);
        let (h, w, oh, ow) = (g.height, g.width, g.out_h, g.out_w);
        let expected = [batch, filters, oh, ow];
        if grad_out.dims() != expected {
            return Err(Error::ShapeMismatch {
                op: "conv2d_backward",
                expected: expected.to_vec(),
                got: grad_out.dims().to_vec(),
            });
        }
        let (hp, wp) = (h + 2 * p, w + 2 * p);
        let plane_len = hp * wp + k - 1;
        let span = oh * wp;
        let mut dx = vec![0.0; batch * g.channels * h * w];
        let mut dpad = vec![0.0f32; g.channels * plane_len];
        let mut gpad = vec![0.0f32; filters * span];
        let wts = self.weight.value.data();
        let dw = self.weight.grad.data_mut();
        let db = self.bias.grad.data_mut();
        for b in 0..batch {
            // output gradient laid out with the padded row width, wrap columns zero
            gpad.fill(0.0);
            for f in 0..filters {
                let go = &grad_out.data()[(b * filters + f) * oh * ow..(b * filters + f + 1) * oh * ow];
                db[f] += go.iter().sum::<f32>();
                for (dst, src) in gpad[f * span..(f + 1) * span].chunks_exact_mut(wp).zip(go.chunks_exact(ow)) {
                    dst[..ow].copy_from_slice(src);
                }
            }
            dpad.fill(0.0);
            for f in 0..filters {
                let gf = &gpad[f * span..(f + 1) * span];
                for c in 0..g.channels {
                    let plane = &padded[(b * g.channels + c) * plane_len..(b * g.channels + c + 1) * plane_len];
                    let dplane = &mut dpad[c * plane_len..(c + 1) * plane_len];
                    for ky in 0..k {
                        for kx in 0..k {
                            let off = ky * wp + kx;
                            let widx = ((f * g.channels + c) * k + ky) * k + kx;
                            dw[widx] += dot(gf, &plane[off..off + span]);
                            axpy(wts[widx], gf, &mut dplane[off..off + span]);
                        }
                    }
                }
            }
            for c in 0..g.channels {
                let dplane = &dpad[c * plane_len..(c + 1) * plane_len];
                let dst = &mut dx[(b * g.channels + c) * h * w..(b * g.channels + c + 1) * h * w];
                for (y, row) in dst.chunks_exact_mut(w).enumerate() {
                    let at = (y + p) * wp + p;
                    row.copy_from_slice(&dplane[at..at + w]);
                }
            }
        }
        Tensor::new(input_dims.to_vec(), dx)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::BackwardBeforeForward(self.weight.name.clone()))?;
        let result = match &cache {
            ConvCache::Padded { input_dims, padded } => self.direct_backward(input_dims, padded, grad_out),
            ConvCache::Columns { input_dims, columns } => self.columns_backward(input_dims, columns, grad_out),
        };
        self.cache = Some(cache);
        result
    }

    fn columns_backward(&mut self, input_dims: &[usize], columns: &[f32], grad_out: &Tensor) -> Result<Tensor> {
        let shape = Tensor::zeros(input_dims);
        let g = self.geometry(&shape)?;
        let batch = input_dims[0];
        let filters = self.out_channels();
        let patch = g.channels * self.kernel() * self.kernel();
        let spatial = g.out_h * g.out_w;
        let expected = [batch, filters, g.out_h, g.out_w];
        if grad_out.dims() != expected {
            return Err(Error::ShapeMismatch {
                op: "conv2d_backward",
                expected: expected.to_vec(),
                got: grad_out.dims().to_vec(),
            });
        }
        let in_len = g.channels * g.height * g.width;
        let mut dx = shape.into_data();
        let mut dcols = vec![0.0; patch * spatial];
        for b in 0..batch {
            let gb = &grad_out.data()[b * filters * spatial..(b + 1) * filters * spatial];
            let cols = &columns[b * patch * spatial..(b + 1) * patch * spatial];
            gemm(
                filters,
                spatial,
                patch,
                View::rows(gb, spatial),
                View::transposed(cols, spatial),
                1.0,
                self.weight.grad.data_mut(),
            );
            for (f, chunk) in gb.chunks_exact(spatial).enumerate() {
                self.bias.grad.data_mut()[f] += chunk.iter().sum::<f32>();
            }
            gemm(
                patch,
                filters,
                spatial,
                View::transposed(self.weight.value.data(), patch),
                View::rows(gb, spatial),
                0.0,
                &mut dcols,
            );
            self.col2im(&dcols, &g, &mut dx[b * in_len..(b + 1) * in_len]);
        }
        Tensor::new(input_dims.to_vec(), dx)
    }
}

/// Elementwise `max(0, x)`.
pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(x.dims().to_vec(), data).expect("same dims")
}

#[derive(Clone, Debug, Default)]
pub struct Relu {
    cached_output: Option<Tensor>,
}

impl Relu {
    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        let y = relu(x);
        self.cached_output = Some(y.clone());
        y
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let y = self
            .cached_output
            .as_ref()
            .ok_or_else(|| Error::BackwardBeforeForward("relu".into()))?;
        check_same(y, grad_out, "relu_backward")?;
        let data = grad_out
            .data()
            .iter()
            .zip(y.data())
            .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
            .collect();
        Tensor::new(y.dims().to_vec(), data)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .map(|&v| {
            // split by sign so exp never overflows
            if v >= 0.0 {
                1.0 / (1.0 + (-v).exp())
            } else {
                let e = v.exp();
                e / (1.0 + e)
            }
        })
        .collect();
    Tensor::new(x.dims().to_vec(), data).expect("same dims")
}

#[derive(Clone, Debug, Default)]
pub struct Sigmoid {
    cached_output: Option<Tensor>,
}

impl Sigmoid {
    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        let y = sigmoid(x);
        self.cached_output = Some(y.clone());
        y
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let y = self
            .cached_output
            .as_ref()
            .ok_or_else(|| Error::BackwardBeforeForward("sigmoid".into()))?;
        check_same(y, grad_out, "sigmoid_backward")?;
        let data = grad_out
            .data()
            .iter()
            .zip(y.data())
            .map(|(&g, &s)| g * s * (1.0 - s))
            .collect();
        Tensor::new(y.dims().to_vec(), data)
    }
}

/// Nearest-neighbour upsampling by an integer factor over `[batch, c, h, w]`.
#[derive(Clone, Debug)]
pub struct Upsample {
    pub factor: usize,
    input_dims: Option<Vec<usize>>,
}

impl Upsample {
    pub fn new(factor: usize) -> Self {
        Self {
            factor,
            input_dims: None,
        }
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let d = x.dims();
        if d.len() != 4 {
            return Err(Error::ShapeMismatch {
                op: "upsample",
                expected: vec![0, 0, 0, 0],
                got: d.to_vec(),
            });
        }
        let f = self.factor;
        let (h, w) = (d[2], d[3]);
        let (oh, ow) = (h * f, w * f);
        let mut out = vec![0.0; d[0] * d[1] * oh * ow];
        for (plane, dst) in x.data().chunks_exact(h * w).zip(out.chunks_exact_mut(oh * ow)) {
            for (y, src) in plane.chunks_exact(w).enumerate() {
                let first = &mut dst[y * f * ow..(y * f + 1) * ow];
                for (chunk, &v) in first.chunks_exact_mut(f).zip(src) {
                    chunk.fill(v);
                }
                for r in 1..f {
                    dst.copy_within(y * f * ow..(y * f + 1) * ow, (y * f + r) * ow);
                }
            }
        }
        Tensor::new(vec![d[0], d[1], oh, ow], out)
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.infer(x)?;
        self.input_dims = Some(x.dims().to_vec());
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let d = self
            .input_dims
            .clone()
            .ok_or_else(|| Error::BackwardBeforeForward("upsample".into()))?;
        let f = self.factor;
        let (h, w) = (d[2], d[3]);
        let (oh, ow) = (h * f, w * f);
        if grad_out.dims() != [d[0], d[1], oh, ow] {
            return Err(Error::ShapeMismatch {
                op: "upsample_backward",
                expected: vec![d[0], d[1], oh, ow],
                got: grad_out.dims().to_vec(),
            });
        }
        let mut dx = vec![0.0; d[0] * d[1] * h * w];
        for (src, plane) in grad_out.data().chunks_exact(oh * ow).zip(dx.chunks_exact_mut(h * w)) {
            for (oy, row) in src.chunks_exact(ow).enumerate() {
                let dst = &mut plane[(oy / f) * w..(oy / f + 1) * w];
                for (d, chunk) in dst.iter_mut().zip(row.chunks_exact(f)) {
                    *d += chunk.iter().sum::<f32>();
                }
            }
        }
        Tensor::new(d, dx)
    }
}

/// Reinterprets `[batch, ...]` as `[batch, shape...]`.
#[derive(Clone, Debug)]
pub struct Reshape {
    pub shape: Vec<usize>,
    input_dims: Option<Vec<usize>>,
}

impl Reshape {
    pub fn new(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            input_dims: None,
        }
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let mut dims = vec![x.batch()];
        dims.extend_from_slice(&self.shape);
        x.clone().reshape(&dims)
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.infer(x)?;
        self.input_dims = Some(x.dims().to_vec());
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let d = self
            .input_dims
            .clone()
            .ok_or_else(|| Error::BackwardBeforeForward("reshape".into()))?;
        grad_out.clone().reshape(&d)
    }
}

/// Dot product with split accumulators so the loop vectorizes.
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut lanes = [0.0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f32 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            lanes[i] += x[i] * y[i];
        }
    }
    lanes.iter().sum::<f32>() + tail
}

fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
    for (o, &v) in y.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

fn check_same(a: &Tensor, b: &Tensor, op: &'static str) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch {
            op,
            expected: a.dims().to_vec(),
            got: b.dims().to_vec(),
        });
    }
    Ok(())
}
