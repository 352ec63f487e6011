//! End-to-end run: labeled split, constrained training, embedding, K-means
//! and evaluation.

use crate::clustering::{kmeans, ClusterResult, KMeansParams};
use crate::constraints::ConstraintOracle;
use crate::data::{split_labeled, Dataset};
use crate::embedder::{EmbedderConfig, EmbedderNet};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::numeric::Matrix;
use crate::siamese::{train, SiameseNet, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub embedder: EmbedderConfig,
    pub train: TrainConfig,
    pub labeled_fraction: f64,
    pub split_seed: u64,
    /// Defaults to the dataset's class count.
    pub n_clusters: Option<usize>,
    pub kmeans_seed: u64,
    pub kmeans_n_init: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
}

impl ExperimentConfig {
    /// Every stochastic stage derives its seed from `seed`.
    pub fn with_seed(seed: u64) -> Self {
        let defaults = KMeansParams::new(1, 0);
        Self {
            embedder: EmbedderConfig {
                seed,
                ..EmbedderConfig::default()
            },
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            labeled_fraction: 1.0,
            split_seed: seed,
            n_clusters: None,
            kmeans_seed: seed,
            kmeans_n_init: defaults.n_init,
            kmeans_max_iter: defaults.max_iter,
            kmeans_tol: defaults.tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub net: SiameseNet,
    pub loss_history: Vec<f64>,
    pub oracle: ConstraintOracle,
    pub embeddings: Matrix,
    pub clusters: ClusterResult,
    /// Present when the dataset carries labels.
    pub report: Option<EvalReport>,
}

impl ExperimentRun {
    pub fn embedder(&self) -> EmbedderNet {
        self.net.extract_embedder()
    }
}

pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Result<ExperimentRun> {
    let oracle = split_labeled(dataset, config.labeled_fraction, config.split_seed)?;
    let initial = EmbedderNet::init(dataset.dim(), &config.embedder)?;
    let outcome = train(initial, &dataset.features, &oracle, &config.train)?;
    let embedder = outcome.net.extract_embedder();
    let embeddings = embedder.embed(&dataset.features)?;
    let n_clusters = config
        .n_clusters
        .or_else(|| dataset.class_count())
        .ok_or_else(|| Error::Config("number of clusters is unknown".into()))?;
    let clusters = kmeans(
        &embeddings,
        &KMeansParams {
            n_clusters,
            seed: config.kmeans_seed,
            n_init: config.kmeans_n_init,
            max_iter: config.kmeans_max_iter,
            tol: config.kmeans_tol,
        },
    )?;
    let report = match &dataset.labels {
        Some(labels) => Some(evaluate(labels, &clusters.assignments)?),
        None => None,
    };
    Ok(ExperimentRun {
        net: outcome.net,
        loss_history: outcome.loss_history,
        oracle,
        embeddings,
        clusters,
        report,
    })
}
