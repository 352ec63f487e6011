//! Datasets: synthetic benchmarks, CSV and IDX ingestion, image reshaping and
//! stratified labeled splits.

mod csv_io;
mod idx;
mod synthetic;

pub use csv_io::{load_csv, save_csv};
pub use idx::{
    load_idx, pad_and_replicate, pad_and_replicate_dataset, parse_idx, IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
};
pub use synthetic::{gen_blobs, gen_blobs_with_base, BlobConfig};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::ConstraintOracle;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub feature_names: Vec<String>,
    /// Class ids, contiguous from 0.
    pub labels: Option<Vec<usize>>,
    /// Original label text for each class id, when the source had one.
    pub label_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(Error::shape(
                    "Dataset::new",
                    format!("{} labels for {} rows", l.len(), features.rows()),
                ));
            }
            let classes = l.iter().copied().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; classes];
            for &c in l {
                seen[c] = true;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::Config(format!(
                    "class ids must be contiguous from 0; id {missing} is unused"
                )));
            }
        }
        if !features.is_finite() {
            return Err(Error::Numeric("dataset features must be finite".into()));
        }
        let feature_names = (0..features.cols()).map(|i| format!("f{i}")).collect();
        Ok(Self {
            name: name.into(),
            features,
            feature_names,
            labels,
            label_names: None,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Config(format!("dataset '{}' has no labels", self.name)))
    }
}

/// Stratified labeled subset: each class keeps `round(fraction · size)`
/// members, raised to 2 (or the whole class if smaller) so must-link pairs
/// remain available.
pub fn split_labeled(dataset: &Dataset, fraction: f64, seed: u64) -> Result<ConstraintOracle> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "labeled fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let labels = dataset.require_labels()?;
    let classes = dataset.class_count().unwrap_or(0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled = Vec::new();
    for (class, mut idx) in members.into_iter().enumerate() {
        idx.shuffle(&mut rng);
        let wanted = (fraction * idx.len() as f64).round() as usize;
        let floor = idx.len().min(2);
        if wanted < floor {
            log::warn!(
                "labeled fraction {fraction} leaves class {class} with {wanted} member(s); keeping {floor}"
            );
        }
        let keep = wanted.max(floor).min(idx.len());
        labeled.extend(idx[..keep].iter().map(|&i| (i, class)));
    }
    ConstraintOracle::new(labeled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(classes: usize, per_class: usize) -> Dataset {
        let n = classes * per_class;
        let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        Dataset::new("t", Matrix::zeros(n, 1), Some(labels)).unwrap()
    }

    #[test]
    fn full_fraction_covers_everything() {
        let ds = balanced(3, 5);
        let oracle = split_labeled(&ds, 1.0, 0).unwrap();
        assert_eq!(oracle.indices(), (0..15).collect::<Vec<_>>());
    }

    #[test]
    fn stratified_tenth() {
        let ds = balanced(10, 100);
        let oracle = split_labeled(&ds, 0.1, 4).unwrap();
        assert_eq!(oracle.class_sizes(), vec![10; 10]);
        for &i in oracle.indices() {
            assert_eq!(oracle.label(i).unwrap(), ds.labels.as_ref().unwrap()[i]);
        }
    }

    #[test]
    fn minimum_of_two_enforced() {
        let ds = balanced(4, 10);
        let oracle = split_labeled(&ds, 0.01, 4).unwrap();
        assert_eq!(oracle.class_sizes(), vec![2; 4]);
    }

    #[test]
    fn seeds_control_the_subset() {
        let ds = balanced(5, 40);
        let a = split_labeled(&ds, 0.2, 1).unwrap();
        let b = split_labeled(&ds, 0.2, 1).unwrap();
        let c = split_labeled(&ds, 0.2, 2).unwrap();
        assert_eq!(a.indices(), b.indices());
        assert_ne!(a.indices(), c.indices());
    }

    #[test]
    fn invalid_splits() {
        let ds = balanced(2, 4);
        assert!(split_labeled(&ds, 0.0, 0).is_err());
        assert!(split_labeled(&ds, 1.5, 0).is_err());
        let unlabeled = Dataset::new("u", Matrix::zeros(3, 1), None).unwrap();
        assert!(split_labeled(&unlabeled, 0.5, 0).is_err());
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::new("x", Matrix::zeros(2, 1), Some(vec![0])).is_err());
        assert!(Dataset::new("x", Matrix::zeros(2, 1), Some(vec![0, 2])).is_err());
        let ds = Dataset::new("x", Matrix::zeros(2, 3), Some(vec![1, 0])).unwrap();
        assert_eq!(ds.class_count(), Some(2));
        assert_eq!(ds.feature_names, vec!["f0", "f1", "f2"]);
    }
}
