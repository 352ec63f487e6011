//! Lloyd's K-means with k-means++ seeding and best-of-`n_init` restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{squared_euclidean, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub n_clusters: usize,
    pub seed: u64,
    pub n_init: usize,
    pub max_iter: usize,
    /// A run stops once the relative inertia improvement drops below this.
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(n_clusters: usize, seed: u64) -> Self {
        Self {
            n_clusters,
            seed,
            n_init: 10,
            max_iter: 300,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after each assignment step of this run.
    pub inertia_history: Vec<f64>,
}

pub fn kmeans(points: &Matrix, params: &KMeansParams) -> Result<ClusterResult> {
    let runs = kmeans_runs(points, params)?;
    // Lowest inertia wins; ties go to the earliest restart.
    let mut best: Option<ClusterResult> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

/// Every restart, in restart order. Restart `r` uses the `r`-th slice of a
/// single ChaCha8 stream seeded by `params.seed`.
pub fn kmeans_runs(points: &Matrix, params: &KMeansParams) -> Result<Vec<ClusterResult>> {
    validate(points, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    (0..params.n_init)
        .map(|_| {
            let centroids = kmeans_plus_plus(points, params.n_clusters, &mut rng);
            Ok(lloyd(points, centroids, params))
        })
        .collect()
}

fn validate(points: &Matrix, params: &KMeansParams) -> Result<()> {
    if points.rows() == 0 {
        return Err(Error::Config("k-means needs at least one point".into()));
    }
    if params.n_clusters == 0 || params.n_clusters > points.rows() {
        return Err(Error::Config(format!(
            "cannot form {} clusters from {} points",
            params.n_clusters,
            points.rows()
        )));
    }
    if params.n_init == 0 || params.max_iter == 0 {
        return Err(Error::Config(
            "n_init and max_iter must be at least 1".into(),
        ));
    }
    if !points.is_finite() {
        return Err(Error::Numeric(
            "k-means input contains non-finite values".into(),
        ));
    }
    Ok(())
}

/// D²-weighted seeding. Indices of chosen points are returned alongside the
/// centroid matrix for tests.
pub(crate) fn kmeans_plus_plus_indices<R: Rng + ?Sized>(
    points: &Matrix,
    k: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = points.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_euclidean(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            // All remaining points coincide with a chosen centre.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter_rows().enumerate() {
            d2[i] = d2[i].min(squared_euclidean(p, points.row(next)));
        }
    }
    chosen
}

fn kmeans_plus_plus<R: Rng + ?Sized>(points: &Matrix, k: usize, rng: &mut R) -> Matrix {
    points.select_rows(&kmeans_plus_plus_indices(points, k, rng))
}

/// Nearest centroid per point (ties to the lower index) and the total
/// squared distance.
fn assign(
    points: &Matrix,
    centroids: &Matrix,
    assignments: &mut [usize],
    dists: &mut [f64],
) -> f64 {
    let mut inertia = 0.0;
    for (i, p) in points.iter_rows().enumerate() {
        let (best, d) = centroids
            .iter_rows()
            .map(|c| squared_euclidean(p, c))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (j, d)| if d < acc.1 { (j, d) } else { acc },
            );
        assignments[i] = best;
        dists[i] = d;
        inertia += d;
    }
    inertia
}

fn lloyd(points: &Matrix, mut centroids: Matrix, params: &KMeansParams) -> ClusterResult {
    let (n, dim, k) = (points.rows(), points.cols(), params.n_clusters);
    let mut assignments = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations_run = 0;

    loop {
        let inertia = assign(points, &centroids, &mut assignments, &mut dists);
        history.push(inertia);
        iterations_run += 1;
        if let [.., prev, cur] = history[..] {
            let improvement = if prev > 0.0 { (prev - cur) / prev } else { 0.0 };
            if improvement < params.tol {
                break;
            }
        }
        if iterations_run >= params.max_iter {
            break;
        }

        // Refill empty clusters with the point farthest from its centroid.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let far =
                (0..n)
                    .filter(|&i| counts[assignments[i]] > 1)
                    .fold(None::<usize>, |best, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    });
            if let Some(i) = far {
                counts[assignments[i]] -= 1;
                counts[empty] = 1;
                assignments[i] = empty;
                dists[i] = 0.0;
            }
        }

        let mut sums = Matrix::zeros(k, dim);
        for (i, p) in points.iter_rows().enumerate() {
            for (s, v) in sums.row_mut(assignments[i]).iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let c = counts[j] as f64;
            for (dst, s) in centroids.row_mut(j).iter_mut().zip(sums.row(j)) {
                *dst = s / c;
            }
        }
    }

    let inertia = *history.last().expect("at least one assignment step");
    ClusterResult {
        assignments,
        centroids,
        inertia,
        iterations_run,
        inertia_history: history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::acc;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> (Matrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..50 {
                rows.push([
                    center[0] + noise.sample(&mut rng),
                    center[1] + noise.sample(&mut rng),
                ]);
                labels.push(c);
            }
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    fn recomputed_inertia(points: &Matrix, r: &ClusterResult) -> f64 {
        points
            .iter_rows()
            .zip(&r.assignments)
            .map(|(p, &a)| squared_euclidean(p, r.centroids.row(a)))
            .sum()
    }

    #[test]
    fn exact_fit_has_zero_inertia() {
        let points = Matrix::from_rows(&[[0.0, 0.0], [5.0, 1.0], [-3.0, 2.0]]).unwrap();
        let r = kmeans(&points, &KMeansParams::new(3, 0)).unwrap();
        assert_eq!(r.inertia, 0.0);
        for (i, &a) in r.assignments.iter().enumerate() {
            assert_eq!(r.centroids.row(a), points.row(i));
        }
    }

    #[test]
    fn one_cluster_centroid_is_mean() {
        let points = Matrix::from_rows(&[[1.0, 2.0], [3.0, 6.0], [5.0, 1.0], [-1.0, 3.0]]).unwrap();
        let r = kmeans(&points, &KMeansParams::new(1, 4)).unwrap();
        assert!(r.assignments.iter().all(|&a| a == 0));
        assert!((r.centroids.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((r.centroids.get(0, 1) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_separated_blobs() {
        let (points, labels) = blobs(1);
        let r = kmeans(&points, &KMeansParams::new(4, 2)).unwrap();
        assert_eq!(acc(&labels, &r.assignments).unwrap(), 100.0);
        assert!((recomputed_inertia(&points, &r) - r.inertia).abs() <= 1e-9);
    }

    #[test]
    fn every_run_is_monotone() {
        let (points, _) = blobs(3);
        for k in [2, 3, 4, 7] {
            for run in kmeans_runs(&points, &KMeansParams::new(k, 5)).unwrap() {
                for w in run.inertia_history.windows(2) {
                    assert!(w[1] <= w[0] * (1.0 + 1e-12), "{w:?}");
                }
                assert!((recomputed_inertia(&points, &run) - run.inertia).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn seeding_picks_distinct_points() {
        let (points, _) = blobs(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let mut idx = kmeans_plus_plus_indices(&points, 12, &mut rng);
            idx.sort_unstable();
            idx.dedup();
            assert_eq!(idx.len(), 12);
        }
    }

    #[test]
    fn duplicate_points_still_seed() {
        let points = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        let r = kmeans(&points, &KMeansParams::new(3, 0)).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert!(r.assignments.iter().all(|&a| a < 3));
    }

    #[test]
    fn invalid_requests() {
        let points = Matrix::zeros(3, 2);
        assert!(kmeans(&points, &KMeansParams::new(4, 0)).is_err());
        assert!(kmeans(&Matrix::zeros(0, 2), &KMeansParams::new(1, 0)).is_err());
        assert!(kmeans(&points, &KMeansParams::new(0, 0)).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let (points, _) = blobs(6);
        let a = kmeans(&points, &KMeansParams::new(5, 8)).unwrap();
        let b = kmeans(&points, &KMeansParams::new(5, 8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn row_permutation_gives_same_partition() {
        let (points, _) = blobs(7);
        let perm: Vec<usize> = (0..points.rows()).rev().collect();
        let a = kmeans(&points, &KMeansParams::new(4, 1)).unwrap();
        let b = kmeans(&points.select_rows(&perm), &KMeansParams::new(4, 1)).unwrap();
        let b_unpermuted: Vec<usize> = {
            let mut v = vec![0; perm.len()];
            for (pos, &orig) in perm.iter().enumerate() {
                v[orig] = b.assignments[pos];
            }
            v
        };
        assert_eq!(acc(&a.assignments, &b_unpermuted).unwrap(), 100.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn invariants_hold_on_random_points(
            coords in proptest::collection::vec(-50.0f64..50.0, 4..80),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            let n = coords.len() / 2;
            prop_assume!(k <= n);
            let points = Matrix::from_vec(n, 2, coords[..2 * n].to_vec()).unwrap();
            let params = KMeansParams { n_init: 3, ..KMeansParams::new(k, seed) };
            for run in kmeans_runs(&points, &params).unwrap() {
                prop_assert!(run.assignments.iter().all(|&a| a < k));
                for w in run.inertia_history.windows(2) {
                    prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
                }
                prop_assert!((recomputed_inertia(&points, &run) - run.inertia).abs() <= 1e-9 * run.inertia.max(1.0));
            }
        }
    }
}
