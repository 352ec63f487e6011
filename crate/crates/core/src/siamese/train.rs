use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LossKind, PairBatch, SiameseNet};
use crate::constraints::{ConstraintOracle, SamplerKind};
use crate::embedder::EmbedderNet;
use crate::error::{Error, Result};
use crate::numeric::{AdamConfig, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub batch_size: usize,
    pub epochs: u64,
    /// Overrides the epoch-derived iteration count when set.
    pub iterations: Option<u64>,
    pub loss: LossKind,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 100.0,
            batch_size: 128,
            epochs: 320,
            iterations: None,
            loss: LossKind::Mse,
            sampler: SamplerKind::Balanced,
            seed: 0,
            learning_rate: AdamConfig::default().learning_rate,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.batch_size == 0 || !self.batch_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "batch size must be a positive even number, got {}",
                self.batch_size
            )));
        }
        AdamConfig::with_learning_rate(self.learning_rate).validate()
    }

    /// Iterations to run for a dataset of `dataset_size` rows.
    pub fn iterations_for(&self, dataset_size: usize) -> u64 {
        self.iterations.unwrap_or_else(|| {
            iteration_count(self.epochs, dataset_size as u64, self.batch_size as u64)
        })
    }
}

/// `e = Epochs × DatasetSize / BatchSize`, rounded down.
pub fn iteration_count(epochs: u64, dataset_size: u64, batch_size: u64) -> u64 {
    if batch_size == 0 {
        return 0;
    }
    ((epochs as u128 * dataset_size as u128) / batch_size as u128) as u64
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: SiameseNet,
    /// One entry per iteration: the mean of the two sub-step losses.
    pub loss_history: Vec<f64>,
}

pub fn train(
    embedder: EmbedderNet,
    features: &Matrix,
    oracle: &ConstraintOracle,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_callback(embedder, features, oracle, config, |_, _| {})
}

/// Runs the constrained training loop.
///
/// Each iteration draws one pair batch from `oracle` with the configured
/// sampler, then applies the symmetric double update. `on_iteration` is
/// called after every iteration with its index and loss.
pub fn train_with_callback<F>(
    embedder: EmbedderNet,
    features: &Matrix,
    oracle: &ConstraintOracle,
    config: &TrainConfig,
    mut on_iteration: F,
) -> Result<TrainOutcome>
where
    F: FnMut(u64, f64),
{
    config.validate()?;
    if features.rows() == 0 {
        return Err(Error::Config("training set is empty".into()));
    }
    if features.cols() != embedder.input_dim() {
        return Err(Error::Config(format!(
            "features have {} columns but the embedder expects {}",
            features.cols(),
            embedder.input_dim()
        )));
    }
    if oracle.class_count() < 2 {
        return Err(Error::Config(format!(
            "constraint oracle has {} class(es); cannot-link pairs need at least 2",
            oracle.class_count()
        )));
    }
    if let Some(&i) = oracle.indices().last() {
        if i >= features.rows() {
            return Err(Error::Config(format!(
                "labeled index {i} outside {} feature rows",
                features.rows()
            )));
        }
    }

    let mut net = SiameseNet::new(
        embedder,
        config.alpha,
        AdamConfig::with_learning_rate(config.learning_rate),
    )?;
    let iterations = config.iterations_for(features.rows());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut loss_history = Vec::with_capacity(iterations.min(1 << 24) as usize);

    for iteration in 0..iterations {
        let sample = config
            .sampler
            .sample(oracle, config.batch_size, config.alpha, &mut rng)?;
        let batch = PairBatch::gather(features, &sample)?;
        let loss = net.train_step(&batch, config.loss).map_err(|e| match e {
            Error::Numeric(msg) => Error::Numeric(format!("iteration {iteration}: {msg}")),
            other => other,
        })?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "iteration {iteration}: loss is {loss}"
            )));
        }
        loss_history.push(loss);
        on_iteration(iteration, loss);
    }
    Ok(TrainOutcome { net, loss_history })
}

/// Writes `iteration,loss` rows.
pub fn write_loss_history(path: impl AsRef<Path>, history: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "iteration,loss").map_err(io)?;
    for (i, loss) in history.iter().enumerate() {
        writeln!(w, "{i},{loss}").map_err(io)?;
    }
    w.flush().map_err(io)
}
