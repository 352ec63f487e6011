//! Twin-tower training rig: two embedders with identical initial weights (not
//! shared), a Euclidean distance head clamped to `[0, α]`, and a pairwise
//! regression loss.

mod loss;
mod train;

pub use loss::{contrastive_loss, mse_loss, LossKind};
pub use train::{
    iteration_count, train, train_with_callback, write_loss_history, TrainConfig, TrainOutcome,
};

use crate::constraints::PairSample;
use crate::embedder::{flatten_grads, EmbedderNet};
use crate::error::{Error, Result};
use crate::numeric::{AdamConfig, AdamState, DenseGrads, Matrix};

/// Added under the square root when differentiating the distance.
pub const DISTANCE_EPSILON: f64 = 1e-12;

/// Euclidean distance between two equal-length vectors.
pub fn pair_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape(
            "pair_distance",
            format!("{} vs {} components", p.len(), q.len()),
        ));
    }
    Ok(crate::numeric::squared_euclidean(p, q).sqrt())
}

/// ReLU capped at `alpha`: `x` on `[0, α)`, `α` from `α` upward.
pub fn clamped_relu(x: f64, alpha: f64) -> f64 {
    x.clamp(0.0, alpha)
}

/// Matched left/right inputs with target distances in `{0, α}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    left: Matrix,
    right: Matrix,
    targets: Vec<f64>,
}

impl PairBatch {
    pub fn new(left: Matrix, right: Matrix, targets: Vec<f64>, alpha: f64) -> Result<Self> {
        if left.shape() != right.shape() || left.rows() != targets.len() {
            return Err(Error::shape(
                "PairBatch::new",
                format!(
                    "left {:?}, right {:?}, {} targets",
                    left.shape(),
                    right.shape(),
                    targets.len()
                ),
            ));
        }
        if let Some(t) = targets.iter().find(|&&t| t != 0.0 && t != alpha) {
            return Err(Error::Config(format!(
                "target {t} is neither 0 nor α={alpha}"
            )));
        }
        Ok(Self {
            left,
            right,
            targets,
        })
    }

    /// Gathers the feature rows named by `sample` from `features`.
    pub fn gather(features: &Matrix, sample: &PairSample) -> Result<Self> {
        if let Some(&i) = sample
            .left
            .iter()
            .chain(&sample.right)
            .find(|&&i| i >= features.rows())
        {
            return Err(Error::shape(
                "PairBatch::gather",
                format!("index {i} outside {} feature rows", features.rows()),
            ));
        }
        Ok(Self {
            left: features.select_rows(&sample.left),
            right: features.select_rows(&sample.right),
            targets: sample.targets.clone(),
        })
    }

    pub fn left(&self) -> &Matrix {
        &self.left
    }

    pub fn right(&self) -> &Matrix {
        &self.right
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Loss value plus the gradient of every parameter of both towers.
#[derive(Debug, Clone)]
pub struct SiameseGradients {
    pub loss: f64,
    pub predictions: Vec<f64>,
    pub tower_f: Vec<DenseGrads>,
    pub tower_g: Vec<DenseGrads>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiameseNet {
    tower_f: EmbedderNet,
    tower_g: EmbedderNet,
    alpha: f64,
    adam_f: AdamState,
    adam_g: AdamState,
}

impl SiameseNet {
    /// Both towers start as copies of `embedder`; each gets its own optimizer.
    pub fn new(embedder: EmbedderNet, alpha: f64, adam: AdamConfig) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        adam.validate()?;
        let sizes = embedder.param_sizes();
        Ok(Self {
            tower_g: embedder.clone(),
            tower_f: embedder,
            alpha,
            adam_f: AdamState::new(adam, &sizes),
            adam_g: AdamState::new(adam, &sizes),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tower_f(&self) -> &EmbedderNet {
        &self.tower_f
    }

    pub fn tower_g(&self) -> &EmbedderNet {
        &self.tower_g
    }

    pub fn tower_f_mut(&mut self) -> &mut EmbedderNet {
        &mut self.tower_f
    }

    pub fn tower_g_mut(&mut self) -> &mut EmbedderNet {
        &mut self.tower_g
    }

    pub fn adam_f(&self) -> &AdamState {
        &self.adam_f
    }

    pub fn adam_g(&self) -> &AdamState {
        &self.adam_g
    }

    /// The embedder kept after training (always the first tower).
    pub fn extract_embedder(&self) -> EmbedderNet {
        self.tower_f.clone()
    }

    /// `clamp(‖f(x1ᵢ) − g(x2ᵢ)‖, 0, α)` for every row pair.
    pub fn snn_forward(&self, x1: &Matrix, x2: &Matrix) -> Result<Vec<f64>> {
        check_pair_inputs(x1, x2)?;
        let p = self.tower_f.embed(x1)?;
        let q = self.tower_g.embed(x2)?;
        p.iter_rows()
            .zip(q.iter_rows())
            .map(|(a, b)| pair_distance(a, b).map(|d| clamped_relu(d, self.alpha)))
            .collect()
    }

    pub fn loss(&self, x1: &Matrix, x2: &Matrix, targets: &[f64], kind: LossKind) -> Result<f64> {
        let preds = self.snn_forward(x1, x2)?;
        kind.value(targets, &preds, self.alpha)
    }

    /// Forward and backward pass through the distance head and both towers.
    ///
    /// The clamp passes gradient only where `0 ≤ d < α`; the distance
    /// derivative is `(p − q) / d_safe` with `d_safe = √(Σ(p−q)² + ε)`.
    pub fn loss_and_gradients(
        &self,
        x1: &Matrix,
        x2: &Matrix,
        targets: &[f64],
        kind: LossKind,
    ) -> Result<SiameseGradients> {
        check_pair_inputs(x1, x2)?;
        if targets.len() != x1.rows() {
            return Err(Error::shape(
                "loss_and_gradients",
                format!("{} targets for {} pairs", targets.len(), x1.rows()),
            ));
        }
        let (p, cache_f) = self.tower_f.forward(x1)?;
        let (q, cache_g) = self.tower_g.forward(x2)?;

        let mut sq = Vec::with_capacity(p.rows());
        let mut predictions = Vec::with_capacity(p.rows());
        for (a, b) in p.iter_rows().zip(q.iter_rows()) {
            let s = crate::numeric::squared_euclidean(a, b);
            sq.push(s);
            predictions.push(clamped_relu(s.sqrt(), self.alpha));
        }
        let (loss, dloss) = kind.value_and_grad(targets, &predictions, self.alpha)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite {} loss {loss}",
                kind.name()
            )));
        }

        let k = p.cols();
        let mut up_f = Matrix::zeros(p.rows(), k);
        let mut up_g = Matrix::zeros(q.rows(), k);
        for i in 0..p.rows() {
            let d = sq[i].sqrt();
            if !(d >= 0.0 && d < self.alpha) {
                continue;
            }
            let scale = dloss[i] / (sq[i] + DISTANCE_EPSILON).sqrt();
            if scale == 0.0 {
                continue;
            }
            let (pr, qr) = (p.row(i), q.row(i));
            for c in 0..k {
                let g = scale * (pr[c] - qr[c]);
                up_f.set(i, c, g);
                up_g.set(i, c, -g);
            }
        }

        let tower_f = self.tower_f.backward(&cache_f, &up_f)?;
        let tower_g = self.tower_g.backward(&cache_g, &up_g)?;
        Ok(SiameseGradients {
            loss,
            predictions,
            tower_f,
            tower_g,
        })
    }

    /// One `S.train(x1, x2, y)` call: gradients for both towers, then one Adam
    /// step on each. Returns the loss measured before the update.
    pub fn update(
        &mut self,
        x1: &Matrix,
        x2: &Matrix,
        targets: &[f64],
        kind: LossKind,
    ) -> Result<f64> {
        let grads = self.loss_and_gradients(x1, x2, targets, kind)?;
        self.adam_f.step(
            &mut self.tower_f.params_mut(),
            &flatten_grads(&grads.tower_f),
        )?;
        self.adam_g.step(
            &mut self.tower_g.params_mut(),
            &flatten_grads(&grads.tower_g),
        )?;
        Ok(grads.loss)
    }

    /// The symmetric double update `S.train(I, I′, Y)` then `S.train(I′, I, Y)`.
    /// Returns the mean of the two losses.
    pub fn train_step(&mut self, batch: &PairBatch, kind: LossKind) -> Result<f64> {
        let first = self.update(&batch.left, &batch.right, &batch.targets, kind)?;
        let second = self.update(&batch.right, &batch.left, &batch.targets, kind)?;
        Ok(0.5 * (first + second))
    }
}

fn check_pair_inputs(x1: &Matrix, x2: &Matrix) -> Result<()> {
    if x1.shape() != x2.shape() {
        return Err(Error::shape(
            "snn_forward",
            format!("{:?} vs {:?}", x1.shape(), x2.shape()),
        ));
    }
    Ok(())
}
