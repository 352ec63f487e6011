//! External clustering metrics: unsupervised accuracy under the best
//! one-to-one label mapping, normalized mutual information, and the adjusted
//! Rand index.

mod hungarian;

pub use hungarian::{hungarian, Assignment};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Counts `n_ij` of points in true class `i` and predicted cluster `j`.
///
/// Rows and columns are the distinct label values in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub true_labels: Vec<usize>,
    pub cluster_labels: Vec<usize>,
    counts: Vec<u64>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn new(truth: &[usize], predicted: &[usize]) -> Result<Self> {
        check_inputs(truth, predicted)?;
        let distinct = |xs: &[usize]| {
            let mut v = xs.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        let true_labels = distinct(truth);
        let cluster_labels = distinct(predicted);
        let (r, c) = (true_labels.len(), cluster_labels.len());
        let mut counts = vec![0u64; r * c];
        for (t, p) in truth.iter().zip(predicted) {
            let i = true_labels.binary_search(t).expect("present");
            let j = cluster_labels.binary_search(p).expect("present");
            counts[i * c + j] += 1;
        }
        let row_sums = (0..r)
            .map(|i| counts[i * c..(i + 1) * c].iter().sum())
            .collect();
        let col_sums = (0..c)
            .map(|j| (0..r).map(|i| counts[i * c + j]).sum())
            .collect();
        Ok(Self {
            true_labels,
            cluster_labels,
            counts,
            row_sums,
            col_sums,
            total: truth.len() as u64,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.true_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cluster_labels.len()
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.n_cols() + j]
    }

    /// True when both labelings induce the same set partition.
    pub fn is_identical_partition(&self) -> bool {
        self.n_rows() == self.n_cols()
            && (0..self.n_rows())
                .all(|i| (0..self.n_cols()).filter(|&j| self.count(i, j) > 0).count() == 1)
    }
}

fn check_inputs(truth: &[usize], predicted: &[usize]) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(Error::Metric(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Metric("no labels to compare".into()));
    }
    Ok(())
}

/// Best cluster → class mapping and the number of points it gets right.
fn best_mapping(table: &ContingencyTable) -> Result<(Vec<(usize, usize)>, u64)> {
    // Rows are clusters, columns are classes; minimize negated agreement.
    let mut cost = Matrix::zeros(table.n_cols(), table.n_rows());
    for j in 0..table.n_cols() {
        for i in 0..table.n_rows() {
            cost.set(j, i, -(table.count(i, j) as f64));
        }
    }
    let assignment = hungarian(&cost)?;
    let mut mapping = Vec::new();
    let mut matched = 0;
    for (j, col) in assignment.row_to_col.iter().enumerate() {
        if let Some(i) = *col {
            mapping.push((table.cluster_labels[j], table.true_labels[i]));
            matched += table.count(i, j);
        }
    }
    Ok((mapping, matched))
}

/// Unsupervised clustering accuracy in `[0, 100]`.
pub fn acc(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(truth, predicted)?;
    let (_, matched) = best_mapping(&table)?;
    Ok(100.0 * matched as f64 / table.total as f64)
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn nmi_from_table(table: &ContingencyTable) -> f64 {
    if table.is_identical_partition() {
        return 1.0;
    }
    let n = table.total as f64;
    let h_true = entropy(&table.row_sums, n);
    let h_pred = entropy(&table.col_sums, n);
    let denom = h_true.max(h_pred);
    if denom == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for i in 0..table.n_rows() {
        for j in 0..table.n_cols() {
            let nij = table.count(i, j);
            if nij == 0 {
                continue;
            }
            let ratio = (nij as f64 * n) / (table.row_sums[i] as f64 * table.col_sums[j] as f64);
            mi += nij as f64 / n * ratio.ln();
        }
    }
    (mi / denom).clamp(0.0, 1.0)
}

/// `I(c; c′) / max(H(c), H(c′))` using natural logarithms.
///
/// When both entropies are zero the ratio is undefined; identical partitions
/// score 1 and anything else 0.
pub fn nmi(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    Ok(nmi_from_table(&ContingencyTable::new(truth, predicted)?))
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

fn ari_from_table(table: &ContingencyTable) -> f64 {
    let index: f64 = table.counts.iter().map(|&c| choose2(c)).sum();
    let sum_a: f64 = table.row_sums.iter().map(|&a| choose2(a)).sum();
    let sum_b: f64 = table.col_sums.iter().map(|&b| choose2(b)).sum();
    let pairs = choose2(table.total);
    if pairs == 0.0 {
        return 1.0;
    }
    let expected = sum_a * sum_b / pairs;
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return 1.0;
    }
    (index - expected) / denom
}

/// Adjusted Rand index computed from the contingency table. Returns 1 when
/// the adjustment's denominator vanishes (e.g. both labelings trivial).
pub fn ari(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    Ok(ari_from_table(&ContingencyTable::new(truth, predicted)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    /// `(cluster id, class label)` pairs of the optimal one-to-one mapping.
    pub mapping: Vec<(usize, usize)>,
    pub contingency: ContingencyTable,
}

pub fn evaluate(truth: &[usize], predicted: &[usize]) -> Result<EvalReport> {
    let table = ContingencyTable::new(truth, predicted)?;
    let (mapping, matched) = best_mapping(&table)?;
    Ok(EvalReport {
        acc: 100.0 * matched as f64 / table.total as f64,
        nmi: nmi_from_table(&table),
        ari: ari_from_table(&table),
        mapping,
        contingency: table,
    })
}
