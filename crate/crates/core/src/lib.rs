//! Semi-supervised embedding for clustering.
//!
//! A feed-forward embedder is trained as one tower of a Siamese pair against
//! must-link / cannot-link constraints so that its low-dimensional outputs
//! can be clustered directly with K-means. The crate also carries the
//! evaluation stack (ACC, NMI, ARI) and dataset loaders used by the CLI.
//!
//! ```
//! use autoembedder::{data, pipeline};
//!
//! let ds = data::gen_blobs(&data::BlobConfig { per_class: 20, ..Default::default() }).unwrap();
//! let mut cfg = pipeline::ExperimentConfig::with_seed(1);
//! cfg.train.iterations = Some(50);
//! cfg.train.batch_size = 16;
//! let run = pipeline::run_experiment(&ds, &cfg).unwrap();
//! assert_eq!(run.loss_history.len(), 50);
//! ```

pub mod clustering;
pub mod constraints;
pub mod data;
pub mod embedder;
mod error;
pub mod metrics;
pub mod numeric;
pub mod pipeline;
pub mod siamese;

pub use error::{Error, Result};
