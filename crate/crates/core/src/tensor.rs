use crate::error::{Error, Result};

/// Dense row-major array of `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid(format!("tensor dims must be positive, got {dims:?}")));
        }
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                op: "tensor",
                expected: dims,
                got: vec![data.len()],
            });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn filled(dims: &[usize], value: f32) -> Self {
        let n = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn from_vec(data: Vec<f32>) -> Self {
        Self {
            dims: vec![data.len()],
            data,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Leading dimension, treated as the batch axis by layers.
    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    /// Number of elements per leading-axis entry.
    pub fn row_len(&self) -> usize {
        self.dims[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let n = self.row_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != self.data.len() || dims.contains(&0) {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                expected: dims.to_vec(),
                got: self.dims,
            });
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(items: &[&Tensor]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::invalid("cannot stack zero tensors"))?;
        let mut data = Vec::with_capacity(first.len() * items.len());
        for t in items {
            if t.dims != first.dims {
                return Err(Error::ShapeMismatch {
                    op: "stack",
                    expected: first.dims.clone(),
                    got: t.dims.clone(),
                });
            }
            data.extend_from_slice(&t.data);
        }
        let mut dims = vec![items.len()];
        dims.extend_from_slice(&first.dims);
        Ok(Self { dims, data })
    }

    /// Splits off entry `i` of the leading axis.
    pub fn slice_batch(&self, i: usize) -> Tensor {
        Tensor {
            dims: self.dims[1..].to_vec(),
            data: self.row(i).to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, at: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(at.to_string()))
        }
    }

    pub fn fill(&mut self, value: f32) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![2, 0], vec![]).is_err());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn stack_and_slice() {
        let a = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::new(vec![2], vec![3.0, 4.0]).unwrap();
        let s = Tensor::stack(&[&a, &b]).unwrap();
        assert_eq!(s.dims(), &[2, 2]);
        assert_eq!(s.slice_batch(1), b);
        let c = Tensor::zeros(&[3]);
        assert!(Tensor::stack(&[&a, &c]).is_err());
    }

    #[test]
    fn finiteness() {
        let t = Tensor::new(vec![2], vec![1.0, f32::NAN]).unwrap();
        assert!(matches!(t.ensure_finite("x"), Err(Error::NonFinite(_))));
    }
}
