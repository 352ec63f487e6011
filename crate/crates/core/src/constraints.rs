//! Pairwise must-link / cannot-link constraints derived from a labeled subset,
//! and the pair samplers used to build training batches.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    MustLink,
    CannotLink,
}

impl Link {
    /// Target distance for this relation: 0 for must-link, `alpha` otherwise.
    pub fn target(self, alpha: f64) -> f64 {
        match self {
            Link::MustLink => 0.0,
            Link::CannotLink => alpha,
        }
    }
}

/// Labeled dataset indices bucketed by class.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintOracle {
    label_of: HashMap<usize, usize>,
    indices: Vec<usize>,
    /// (class label, sorted member indices), sorted by label.
    classes: Vec<(usize, Vec<usize>)>,
}

impl ConstraintOracle {
    /// Builds an oracle from `(dataset index, class label)` pairs.
    pub fn new(labeled: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut label_of = HashMap::new();
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (index, label) in labeled {
            if label_of.insert(index, label).is_some() {
                return Err(Error::Config(format!("index {index} labeled twice")));
            }
            buckets.entry(label).or_default().push(index);
        }
        let mut classes: Vec<(usize, Vec<usize>)> = buckets.into_iter().collect();
        for (_, members) in &mut classes {
            members.sort_unstable();
        }
        let mut indices: Vec<usize> = label_of.keys().copied().collect();
        indices.sort_unstable();
        Ok(Self {
            label_of,
            indices,
            classes,
        })
    }

    /// Every index `0..labels.len()` is labeled.
    pub fn from_labels(labels: &[usize]) -> Self {
        Self::new(labels.iter().copied().enumerate()).expect("indices are unique")
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn classes(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.classes.iter().map(|(l, m)| (*l, m.as_slice()))
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|(_, m)| m.len()).collect()
    }

    pub fn label(&self, index: usize) -> Result<usize> {
        self.label_of
            .get(&index)
            .copied()
            .ok_or(Error::Unlabeled(index))
    }

    pub fn link(&self, i: usize, j: usize) -> Result<Link> {
        Ok(if self.label(i)? == self.label(j)? {
            Link::MustLink
        } else {
            Link::CannotLink
        })
    }

    /// 0 when `i` and `j` share a class, `alpha` when they do not.
    pub fn constraint(&self, i: usize, j: usize, alpha: f64) -> Result<f64> {
        self.link(i, j).map(|l| l.target(alpha))
    }

    /// Probability that two indices drawn independently and uniformly from the
    /// labeled set share a class: Σ (s_c / N)².
    pub fn same_class_probability(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Config("constraint oracle is empty".into()));
        }
        let n = self.len() as f64;
        Ok(self
            .classes
            .iter()
            .map(|(_, m)| {
                let p = m.len() as f64 / n;
                p * p
            })
            .sum())
    }
}

/// Index pairs and their target distances, before features are gathered.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairSample {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub targets: Vec<f64>,
}

impl PairSample {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn must_link_count(&self) -> usize {
        self.targets.iter().filter(|&&t| t == 0.0).count()
    }

    fn push(&mut self, i: usize, j: usize, target: f64) {
        self.left.push(i);
        self.right.push(j);
        self.targets.push(target);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Exactly half must-link and half cannot-link pairs.
    Balanced,
    /// Independent uniform picks over the labeled set.
    Imbalanced,
}

impl SamplerKind {
    pub fn sample<R: Rng + ?Sized>(
        self,
        oracle: &ConstraintOracle,
        batch_size: usize,
        alpha: f64,
        rng: &mut R,
    ) -> Result<PairSample> {
        match self {
            SamplerKind::Balanced => sample_balanced(oracle, batch_size, alpha, rng),
            SamplerKind::Imbalanced => sample_imbalanced(oracle, batch_size, alpha, rng),
        }
    }
}

fn require_two_classes(oracle: &ConstraintOracle) -> Result<()> {
    if oracle.class_count() < 2 {
        return Err(Error::Sampling(format!(
            "cannot-link pairs need at least 2 classes, oracle has {}",
            oracle.class_count()
        )));
    }
    Ok(())
}

/// Draws `batch_size / 2` must-link pairs followed by `batch_size / 2`
/// cannot-link pairs.
///
/// Must-link: a class chosen uniformly among classes with at least two
/// members, then two distinct members. If no class has two members the pair
/// is an element with itself. Cannot-link: two distinct classes chosen
/// uniformly, then one member of each.
pub fn sample_balanced<R: Rng + ?Sized>(
    oracle: &ConstraintOracle,
    batch_size: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<PairSample> {
    if !batch_size.is_multiple_of(2) {
        return Err(Error::Sampling(format!(
            "balanced batches need an even size, got {batch_size}"
        )));
    }
    require_two_classes(oracle)?;
    let half = batch_size / 2;
    let mut out = PairSample::default();

    let eligible: Vec<&[usize]> = oracle
        .classes
        .iter()
        .map(|(_, m)| m.as_slice())
        .filter(|m| m.len() >= 2)
        .collect();
    for _ in 0..half {
        if eligible.is_empty() {
            let members = &oracle.classes[rng.random_range(0..oracle.classes.len())].1;
            let i = members[rng.random_range(0..members.len())];
            out.push(i, i, 0.0);
        } else {
            let members = eligible[rng.random_range(0..eligible.len())];
            let a = rng.random_range(0..members.len());
            let mut b = rng.random_range(0..members.len() - 1);
            if b >= a {
                b += 1;
            }
            out.push(members[a], members[b], 0.0);
        }
    }

    let c = oracle.classes.len();
    for _ in 0..half {
        let ca = rng.random_range(0..c);
        let mut cb = rng.random_range(0..c - 1);
        if cb >= ca {
            cb += 1;
        }
        let ma = &oracle.classes[ca].1;
        let mb = &oracle.classes[cb].1;
        out.push(
            ma[rng.random_range(0..ma.len())],
            mb[rng.random_range(0..mb.len())],
            alpha,
        );
    }
    Ok(out)
}

/// Draws both sides of every pair independently and uniformly from the
/// labeled set; targets come from [`ConstraintOracle::constraint`].
pub fn sample_imbalanced<R: Rng + ?Sized>(
    oracle: &ConstraintOracle,
    batch_size: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<PairSample> {
    require_two_classes(oracle)?;
    let mut out = PairSample::default();
    let n = oracle.indices.len();
    for _ in 0..batch_size {
        let i = oracle.indices[rng.random_range(0..n)];
        let j = oracle.indices[rng.random_range(0..n)];
        let t = oracle.constraint(i, j, alpha)?;
        out.push(i, j, t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn balanced_oracle(classes: usize, per_class: usize) -> ConstraintOracle {
        let labels: Vec<usize> = (0..classes * per_class).map(|i| i / per_class).collect();
        ConstraintOracle::from_labels(&labels)
    }

    #[test]
    fn constraint_values() {
        let oracle = ConstraintOracle::new([(10, 3), (11, 7), (12, 3)]).unwrap();
        assert_eq!(oracle.constraint(10, 10, 100.0).unwrap(), 0.0);
        assert_eq!(oracle.constraint(10, 11, 100.0).unwrap(), 100.0);
        assert_eq!(oracle.constraint(10, 12, 100.0).unwrap(), 0.0);
        assert!(matches!(
            oracle.constraint(10, 4, 100.0),
            Err(Error::Unlabeled(4))
        ));
        for &i in oracle.indices() {
            for &j in oracle.indices() {
                assert_eq!(
                    oracle.constraint(i, j, 1.0).unwrap(),
                    oracle.constraint(j, i, 1.0).unwrap()
                );
            }
        }
    }

    #[test]
    fn duplicate_index_rejected() {
        assert!(ConstraintOracle::new([(1, 0), (1, 1)]).is_err());
    }

    #[test]
    fn bucket_invariant() {
        let oracle = ConstraintOracle::new([(5, 1), (2, 0), (9, 1), (4, 2)]).unwrap();
        let mut seen: Vec<usize> = oracle.classes().flat_map(|(_, m)| m.to_vec()).collect();
        seen.sort_unstable();
        assert_eq!(seen, oracle.indices());
        assert_eq!(oracle.class_sizes(), vec![1, 2, 1]);
    }

    #[test]
    fn balanced_batch_of_128_is_half_and_half() {
        let oracle = balanced_oracle(10, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_balanced(&oracle, 128, 100.0, &mut rng).unwrap();
        assert_eq!(s.len(), 128);
        assert_eq!(s.must_link_count(), 64);
        assert_eq!(s.targets.iter().filter(|&&t| t == 100.0).count(), 64);
        for ((&i, &j), &t) in s.left.iter().zip(&s.right).zip(&s.targets) {
            assert_eq!(oracle.constraint(i, j, 100.0).unwrap(), t);
            if t == 0.0 {
                assert_ne!(i, j);
            }
        }
    }

    #[test]
    fn singleton_classes_fall_back_to_self_pairs() {
        let oracle = ConstraintOracle::new([(0, 0), (1, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_balanced(&oracle, 8, 1.0, &mut rng).unwrap();
        for k in 0..4 {
            assert_eq!(s.left[k], s.right[k]);
            assert_eq!(s.targets[k], 0.0);
        }
        for k in 4..8 {
            assert_ne!(s.left[k], s.right[k]);
            assert_eq!(s.targets[k], 1.0);
        }
    }

    #[test]
    fn singleton_class_is_skipped_for_must_links() {
        let oracle = ConstraintOracle::new([(0, 0), (1, 1), (2, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_balanced(&oracle, 40, 1.0, &mut rng).unwrap();
        for k in 0..20 {
            assert_ne!(s.left[k], 0);
            assert_ne!(s.left[k], s.right[k]);
        }
    }

    #[test]
    fn sampling_errors() {
        let single = balanced_oracle(1, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_balanced(&single, 4, 1.0, &mut rng),
            Err(Error::Sampling(_))
        ));
        assert!(sample_imbalanced(&single, 4, 1.0, &mut rng).is_err());
        assert!(sample_balanced(&balanced_oracle(2, 5), 5, 1.0, &mut rng).is_err());
    }

    #[test]
    fn must_link_class_frequency_is_uniform() {
        let oracle = balanced_oracle(5, 30);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 5];
        let mut total = 0;
        while total < 10_000 {
            let s = sample_balanced(&oracle, 200, 1.0, &mut rng).unwrap();
            for k in 0..100 {
                counts[oracle.label(s.left[k]).unwrap()] += 1;
                total += 1;
            }
        }
        for c in counts {
            let f = c as f64 / total as f64;
            assert!((f - 0.2).abs() <= 0.02, "frequency {f}");
        }
    }

    #[test]
    fn same_class_probability_cases() {
        assert!((balanced_oracle(10, 7).same_class_probability().unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(balanced_oracle(2, 4).same_class_probability().unwrap(), 0.5);
        assert!(ConstraintOracle::new([])
            .unwrap()
            .same_class_probability()
            .is_err());

        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
        let oracle = ConstraintOracle::from_labels(&labels);
        let mut same = 0usize;
        for &a in &labels {
            for &b in &labels {
                same += usize::from(a == b);
            }
        }
        let enumerated = same as f64 / (100.0 * 100.0);
        assert!((oracle.same_class_probability().unwrap() - enumerated).abs() < 1e-12);
        assert!((enumerated - 0.82).abs() < 1e-12);
    }

    #[test]
    fn imbalanced_batch_follows_class_probability() {
        let oracle = balanced_oracle(10, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sample_imbalanced(&oracle, 10_000, 1.0, &mut rng).unwrap();
        let frac = s.must_link_count() as f64 / s.len() as f64;
        assert!((frac - 0.1).abs() <= 0.02, "must-link fraction {frac}");
        assert!(sample_imbalanced(&oracle, 0, 1.0, &mut rng)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn skewed_imbalanced_frequency_matches_probability() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
        let oracle = ConstraintOracle::from_labels(&labels);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = sample_imbalanced(&oracle, 10_000, 1.0, &mut rng).unwrap();
        let frac = s.must_link_count() as f64 / s.len() as f64;
        assert!((frac - oracle.same_class_probability().unwrap()).abs() <= 0.02);
    }

    #[test]
    fn samplers_are_deterministic() {
        let oracle = balanced_oracle(3, 9);
        for kind in [SamplerKind::Balanced, SamplerKind::Imbalanced] {
            let a = kind
                .sample(&oracle, 32, 2.0, &mut ChaCha8Rng::seed_from_u64(9))
                .unwrap();
            let b = kind
                .sample(&oracle, 32, 2.0, &mut ChaCha8Rng::seed_from_u64(9))
                .unwrap();
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn balanced_batches_are_exactly_balanced(
            sizes in proptest::collection::vec(1usize..6, 2..6),
            half in 0usize..40,
            seed in any::<u64>(),
        ) {
            // Sparse, non-contiguous indices to catch any lookup that assumes 0..n.
            let mut labeled = Vec::new();
            for (class, &s) in sizes.iter().enumerate() {
                for k in 0..s {
                    labeled.push((1000 + 7 * (class * 10 + k), class));
                }
            }
            let oracle = ConstraintOracle::new(labeled).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_balanced(&oracle, 2 * half, 50.0, &mut rng).unwrap();
            prop_assert_eq!(s.must_link_count(), half);
            prop_assert_eq!(s.len() - s.must_link_count(), half);
            for ((&i, &j), &t) in s.left.iter().zip(&s.right).zip(&s.targets) {
                prop_assert!(t == 0.0 || t == 50.0);
                prop_assert_eq!(oracle.constraint(i, j, 50.0).unwrap(), t);
            }
        }
    }
}
