use crate::error::Result;
use crate::nn::layers::{Conv2d, Dense, Param, Relu, Reshape, Sigmoid, Upsample};
use crate::tensor::Tensor;

/// One stage of a [`Sequential`] network.
#[derive(Clone, Debug)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    Relu(Relu),
    Sigmoid(Sigmoid),
    Upsample(Upsample),
    Reshape(Reshape),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv2d(_) => "conv2d",
            Layer::Relu(_) => "relu",
            Layer::Sigmoid(_) => "sigmoid",
            Layer::Upsample(_) => "upsample",
            Layer::Reshape(_) => "reshape",
        }
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.infer(x),
            Layer::Conv2d(l) => l.infer(x),
            Layer::Relu(_) => Ok(crate::nn::layers::relu(x)),
            Layer::Sigmoid(_) => Ok(crate::nn::layers::sigmoid(x)),
            Layer::Upsample(l) => l.infer(x),
            Layer::Reshape(l) => l.infer(x),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv2d(l) => l.forward(x),
            Layer::Relu(l) => Ok(l.forward(x)),
            Layer::Sigmoid(l) => Ok(l.forward(x)),
            Layer::Upsample(l) => l.forward(x),
            Layer::Reshape(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.backward(grad),
            Layer::Conv2d(l) => l.backward(grad),
            Layer::Relu(l) => l.backward(grad),
            Layer::Sigmoid(l) => l.backward(grad),
            Layer::Upsample(l) => l.backward(grad),
            Layer::Reshape(l) => l.backward(grad),
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            Layer::Conv2d(l) => vec![&l.weight, &l.bias],
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Layer::Dense(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Conv2d(l) => vec![&mut l.weight, &mut l.bias],
            _ => vec![],
        }
    }
}

/// Feed-forward chain of layers with per-layer finiteness checks.
#[derive(Clone, Debug)]
pub struct Sequential {
    pub name: String,
    pub layers: Vec<Layer>,
}

impl Sequential {
    pub fn new(name: impl Into<String>, layers: Vec<Layer>) -> Self {
        Self {
            name: name.into(),
            layers,
        }
    }

    fn boundary(&self, i: usize) -> String {
        format!("{}.{}({})", self.name, i, self.layers[i].kind())
    }

    /// Forward pass without caching anything for backward.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.infer(&h)?;
            h.ensure_finite(&self.boundary(i))?;
        }
        Ok(h)
    }
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for i in 0..self.layers.len() {
            h = self.layers[i].forward(&h)?;
            h.ensure_finite(&self.boundary(i))?;
        }
        Ok(h)
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mut g = grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }
}
