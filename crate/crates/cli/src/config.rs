//! Run configuration: TOML file, command-line overrides, validation and
//! conversion into library types.

use std::path::{Path, PathBuf};

use autoembedder::constraints::SamplerKind;
use autoembedder::data::{self, BlobConfig, Dataset};
use autoembedder::embedder::EmbedderConfig;
use autoembedder::pipeline::ExperimentConfig;
use autoembedder::siamese::{LossKind, TrainConfig};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Mse,
    Contrastive,
}

impl From<Loss> for LossKind {
    fn from(l: Loss) -> Self {
        match l {
            Loss::Mse => LossKind::Mse,
            Loss::Contrastive => LossKind::Contrastive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Balanced,
    Imbalanced,
}

impl From<Sampler> for SamplerKind {
    fn from(s: Sampler) -> Self {
        match s {
            Sampler::Balanced => SamplerKind::Balanced,
            Sampler::Imbalanced => SamplerKind::Imbalanced,
        }
    }
}

/// Synthetic blob benchmark. The generator seed is the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub per_class: usize,
    pub base_dim: usize,
    pub lift_dim: usize,
    pub noise_sigma: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let b = BlobConfig::default();
        Self {
            n_classes: b.n_classes,
            per_class: b.per_class,
            base_dim: b.base_dim,
            lift_dim: b.lift_dim,
            noise_sigma: b.noise_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSpec {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxSpec {
    pub images: PathBuf,
    pub labels: PathBuf,
    /// `[height, width]`; when set, images are zero-padded to this size and
    /// replicated into three channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pad_to: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSpec {
    Synthetic(SyntheticSpec),
    Csv(CsvSpec),
    Idx(IdxSpec),
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic(SyntheticSpec::default())
    }
}

impl DatasetSpec {
    /// Paths inside a config file are resolved against the file's directory.
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DatasetSpec::Synthetic(_) => {}
            DatasetSpec::Csv(c) => fix(&mut c.path),
            DatasetSpec::Idx(i) => {
                fix(&mut i.images);
                fix(&mut i.labels);
            }
        }
    }

    pub fn load(&self, seed: u64) -> CliResult<Dataset> {
        Ok(match self {
            DatasetSpec::Synthetic(s) => data::gen_blobs(&BlobConfig {
                n_classes: s.n_classes,
                per_class: s.per_class,
                base_dim: s.base_dim,
                lift_dim: s.lift_dim,
                noise_sigma: s.noise_sigma,
                seed,
            })?,
            DatasetSpec::Csv(c) => data::load_csv(&c.path, c.label_column.as_deref())?,
            DatasetSpec::Idx(i) => {
                let (ds, (h, w)) = data::load_idx(&i.images, &i.labels)?;
                match i.pad_to {
                    Some([th, tw]) => data::pad_and_replicate_dataset(&ds, h, w, th, tw)?,
                    None => ds,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderSection {
    pub hidden: Vec<usize>,
    pub embedding_dim: usize,
}

impl Default for EmbedderSection {
    fn default() -> Self {
        let e = EmbedderConfig::default();
        Self {
            hidden: e.hidden,
            embedding_dim: e.embedding_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub alpha: f64,
    pub batch_size: usize,
    pub epochs: u64,
    /// Overrides the epoch-derived iteration count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    pub loss: Loss,
    pub sampler: Sampler,
    pub labeled_fraction: f64,
    pub learning_rate: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            alpha: t.alpha,
            batch_size: t.batch_size,
            epochs: t.epochs,
            iterations: t.iterations,
            loss: Loss::Mse,
            sampler: Sampler::Balanced,
            labeled_fraction: 1.0,
            learning_rate: t.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    /// Defaults to the dataset's class count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_clusters: Option<usize>,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        let k = autoembedder::clustering::KMeansParams::new(1, 0);
        Self {
            n_clusters: None,
            n_init: k.n_init,
            max_iter: k.max_iter,
            tol: k.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub dataset: DatasetSpec,
    pub embedder: EmbedderSection,
    pub train: TrainSection,
    pub clustering: ClusteringSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("autoembedder-run"),
            dataset: DatasetSpec::default(),
            embedder: EmbedderSection::default(),
            train: TrainSection::default(),
            clustering: ClusteringSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|source| CliError::ConfigFile {
                path: path.to_path_buf(),
                source,
            })?;
        if let Some(dir) = path.parent() {
            config.dataset.rebase(dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        let t = &self.train;
        if !(t.alpha > 0.0 && t.alpha.is_finite()) {
            return Err(CliError::Validation(format!(
                "alpha must be positive, got {}",
                t.alpha
            )));
        }
        if t.batch_size == 0 || !t.batch_size.is_multiple_of(2) {
            return Err(CliError::Validation(format!(
                "batch size must be a positive even number, got {}",
                t.batch_size
            )));
        }
        if !(t.labeled_fraction > 0.0 && t.labeled_fraction <= 1.0) {
            return Err(CliError::Validation(format!(
                "labeled fraction must lie in (0, 1], got {}",
                t.labeled_fraction
            )));
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return Err(CliError::Validation(format!(
                "learning rate must be positive, got {}",
                t.learning_rate
            )));
        }
        if self.embedder.embedding_dim == 0 || self.embedder.hidden.contains(&0) {
            return Err(CliError::Validation("layer widths must be positive".into()));
        }
        let c = &self.clustering;
        if c.n_clusters == Some(0)
            || c.n_init == 0
            || c.max_iter == 0
            || c.tol.is_nan()
            || c.tol < 0.0
        {
            return Err(CliError::Validation(
                "clustering needs n_clusters, n_init, max_iter > 0 and tol >= 0".into(),
            ));
        }
        if let DatasetSpec::Idx(IdxSpec {
            pad_to: Some([h, w]),
            ..
        }) = &self.dataset
        {
            if *h == 0 || *w == 0 {
                return Err(CliError::Validation(
                    "pad_to dimensions must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let mut e = ExperimentConfig::with_seed(self.seed);
        e.embedder.hidden = self.embedder.hidden.clone();
        e.embedder.embedding_dim = self.embedder.embedding_dim;
        e.train.alpha = self.train.alpha;
        e.train.batch_size = self.train.batch_size;
        e.train.epochs = self.train.epochs;
        e.train.iterations = self.train.iterations;
        e.train.loss = self.train.loss.into();
        e.train.sampler = self.train.sampler.into();
        e.train.learning_rate = self.train.learning_rate;
        e.labeled_fraction = self.train.labeled_fraction;
        e.n_clusters = self.clustering.n_clusters;
        e.kmeans_n_init = self.clustering.n_init;
        e.kmeans_max_iter = self.clustering.max_iter;
        e.kmeans_tol = self.clustering.tol;
        e
    }
}

fn parse_shape(s: &str) -> Result<[usize; 2], String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HEIGHTxWIDTH, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok([parse(h)?, parse(w)?])
}

/// Dataset selection flags; the synthetic benchmark is used when none is given.
#[derive(Debug, Clone, Default, Args)]
pub struct DatasetArgs {
    /// Numeric CSV with a header row
    #[arg(long, value_name = "PATH", conflicts_with_all = ["idx_images", "idx_labels"])]
    pub csv: Option<PathBuf>,
    /// Column of --csv holding class labels
    #[arg(long, value_name = "NAME", requires = "csv")]
    pub label_column: Option<String>,
    /// IDX image file (MNIST family)
    #[arg(long, value_name = "PATH", requires = "idx_labels")]
    pub idx_images: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "idx_images")]
    pub idx_labels: Option<PathBuf>,
    /// Zero-pad IDX images to HEIGHTxWIDTH and replicate to 3 channels
    #[arg(long, value_name = "HxW", value_parser = parse_shape, requires = "idx_images")]
    pub pad_to: Option<[usize; 2]>,
}

impl DatasetArgs {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(path) = &self.csv {
            config.dataset = DatasetSpec::Csv(CsvSpec {
                path: path.clone(),
                label_column: self.label_column.clone(),
            });
        } else if let (Some(images), Some(labels)) = (&self.idx_images, &self.idx_labels) {
            config.dataset = DatasetSpec::Idx(IdxSpec {
                images: images.clone(),
                labels: labels.clone(),
                pad_to: self.pad_to,
            });
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<u64>,
    /// Fixed iteration count (ignores --epochs)
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long, value_enum)]
    pub loss: Option<Loss>,
    #[arg(long, value_enum)]
    pub sampler: Option<Sampler>,
    #[arg(long, allow_negative_numbers = true)]
    pub labeled_fraction: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Number of K-means clusters (default: class count)
    #[arg(long)]
    pub clusters: Option<usize>,
    #[command(flatten)]
    pub dataset: DatasetArgs,
}

impl CommonArgs {
    /// Loads the config file (or defaults), applies flags and validates.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.alpha {
            c.train.alpha = v;
        }
        if let Some(v) = self.batch_size {
            c.train.batch_size = v;
        }
        if let Some(v) = self.epochs {
            c.train.epochs = v;
            c.train.iterations = None;
        }
        if let Some(v) = self.iterations {
            c.train.iterations = Some(v);
        }
        if let Some(v) = self.loss {
            c.train.loss = v;
        }
        if let Some(v) = self.sampler {
            c.train.sampler = v;
        }
        if let Some(v) = self.labeled_fraction {
            c.train.labeled_fraction = v;
        }
        if let Some(v) = self.learning_rate {
            c.train.learning_rate = v;
        }
        if let Some(v) = self.clusters {
            c.clustering.n_clusters = Some(v);
        }
        self.dataset.apply(&mut c);
        c.validate()?;
        Ok(c)
    }
}
