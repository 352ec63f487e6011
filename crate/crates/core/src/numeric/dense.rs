use crate::error::{Error, Result};
use crate::numeric::matrix::{matmul, matmul_transposed, transposed_matmul, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Linear => v,
        }
    }

    /// Derivative at a pre-activation value; ReLU uses 0 at exactly 0.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Fully connected layer computing `act(x · Wᵀ + b)` over a batch of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    biases: Vec<f64>,
    activation: Activation,
}

/// Values saved by [`DenseLayer::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Matrix,
    pre_activation: Matrix,
}

impl DenseCache {
    pub fn pre_activation(&self) -> &Matrix {
        &self.pre_activation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub input: Matrix,
}

impl DenseLayer {
    /// `weights` is `out × in`; `biases` has length `out`.
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.rows() != biases.len() {
            return Err(Error::shape(
                "DenseLayer::new",
                format!("{} weight rows but {} biases", weights.rows(), biases.len()),
            ));
        }
        if biases.iter().any(|b| !b.is_finite()) || !weights.is_finite() {
            return Err(Error::Numeric("non-finite layer parameters".into()));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(out_dim, in_dim),
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Mutable views of the parameters in optimizer order: weights, then biases.
    pub fn params_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weights.as_mut_slice(), &mut self.biases]
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, DenseCache)> {
        if x.cols() != self.in_dim() {
            return Err(Error::shape(
                "dense_forward",
                format!(
                    "input has {} columns, layer expects {}",
                    x.cols(),
                    self.in_dim()
                ),
            ));
        }
        let mut pre = matmul_transposed(x, &self.weights)?;
        for r in 0..pre.rows() {
            for (v, b) in pre.row_mut(r).iter_mut().zip(&self.biases) {
                *v += b;
            }
        }
        let mut y = pre.clone();
        for v in y.as_mut_slice() {
            *v = self.activation.apply(*v);
        }
        Ok((
            y,
            DenseCache {
                input: x.clone(),
                pre_activation: pre,
            },
        ))
    }

    /// Inference-only forward pass.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.forward(x).map(|(y, _)| y)
    }

    pub fn backward(&self, cache: &DenseCache, upstream: &Matrix) -> Result<DenseGrads> {
        if upstream.shape() != cache.pre_activation.shape() {
            return Err(Error::shape(
                "dense_backward",
                format!(
                    "upstream {:?} vs output {:?}",
                    upstream.shape(),
                    cache.pre_activation.shape()
                ),
            ));
        }
        let mut grad_pre = upstream.clone();
        for (g, &p) in grad_pre
            .as_mut_slice()
            .iter_mut()
            .zip(cache.pre_activation.as_slice())
        {
            *g *= self.activation.derivative(p);
        }
        let grad_w = transposed_matmul(&grad_pre, &cache.input)?;
        let mut grad_b = vec![0.0; self.out_dim()];
        for row in grad_pre.iter_rows() {
            for (acc, g) in grad_b.iter_mut().zip(row) {
                *acc += g;
            }
        }
        let grad_x = matmul(&grad_pre, &self.weights)?;
        Ok(DenseGrads {
            weights: grad_w,
            biases: grad_b,
            input: grad_x,
        })
    }
}
