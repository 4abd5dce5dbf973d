use super::{NnError, Result};

/// Row-major f32 array of rank 1 to 4. Image batches are `[N, H, W, C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 4 {
            return Err(NnError::ShapeMismatch(format!("rank must be 1..=4, got {}", shape.len())));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NnError::ShapeMismatch(format!(
                "shape {shape:?} holds {n} values, data has {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], v: f32) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![v; n]).expect("length matches by construction")
    }

    pub fn from_fn(shape: &[usize], f: impl FnMut(usize) -> f32) -> Self {
        let n = shape.iter().product();
        Self::new(shape, (0..n).map(f).collect()).expect("length matches by construction")
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        Self::new(shape, self.data)
    }

    /// `(N, H, W, C)` of a rank-4 tensor.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match *self.shape.as_slice() {
            [n, h, w, c] => Ok((n, h, w, c)),
            _ => Err(NnError::ShapeMismatch(format!("expected rank 4, got {:?}", self.shape))),
        }
    }

    /// `(rows, cols)` of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match *self.shape.as_slice() {
            [r, c] => Ok((r, c)),
            _ => Err(NnError::ShapeMismatch(format!("expected rank 2, got {:?}", self.shape))),
        }
    }

    /// Samples `start..end` along the leading axis.
    pub fn slice_batch(&self, start: usize, end: usize) -> Tensor {
        let per: usize = self.shape[1..].iter().product();
        let mut shape = self.shape.clone();
        shape[0] = end - start;
        Tensor::new(&shape, self.data[start * per..end * per].to_vec()).expect("slice of a valid tensor")
    }

    /// Stacks equally shaped tensors along a new leading axis of the first one.
    pub fn stack(items: &[&Tensor]) -> Result<Tensor> {
        let first = items
            .first()
            .ok_or_else(|| NnError::ShapeMismatch("cannot stack zero tensors".into()))?;
        let mut data = Vec::with_capacity(first.len() * items.len());
        for t in items {
            if t.shape[1..] != first.shape[1..] {
                return Err(NnError::ShapeMismatch(format!("{:?} vs {:?}", t.shape, first.shape)));
            }
            data.extend_from_slice(&t.data);
        }
        let mut shape = first.shape.clone();
        shape[0] = items.iter().map(|t| t.shape[0]).sum();
        Tensor::new(&shape, data)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn debug_check(&self) {
        debug_assert!(self.all_finite(), "non-finite value in tensor of shape {:?}", self.shape);
    }
}
