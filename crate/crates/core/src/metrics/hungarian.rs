use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Minimum-cost one-to-one assignment of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Column assigned to each row; `None` when the matrix has more rows than
    /// columns and the row was matched to padding.
    pub row_to_col: Vec<Option<usize>>,
    pub total_cost: f64,
}

/// Solves the linear assignment problem with the shortest augmenting path
/// form of the Hungarian algorithm, O(n³). Rectangular inputs are padded
/// with zero-cost dummy rows or columns.
pub fn hungarian(cost: &Matrix) -> Result<Assignment> {
    if !cost.is_finite() {
        return Err(Error::Numeric("assignment costs must be finite".into()));
    }
    let (rows, cols) = cost.shape();
    let n = rows.max(cols);
    if n == 0 {
        return Ok(Assignment {
            row_to_col: Vec::new(),
            total_cost: 0.0,
        });
    }
    let at = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            cost.get(i, j)
        } else {
            0.0
        }
    };

    // 1-based potentials; column 0 is the virtual root of each search.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = at(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![None; rows];
    let mut total_cost = 0.0;
    for j in 1..=n {
        let i = owner[j];
        if i >= 1 && i <= rows && j <= cols {
            row_to_col[i - 1] = Some(j - 1);
        }
    }
    for (i, c) in row_to_col.iter().enumerate() {
        if let Some(j) = c {
            total_cost += cost.get(i, *j);
        }
    }
    Ok(Assignment {
        row_to_col,
        total_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn identity_favoring() {
        let mut c = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                c.set(i, j, if i == j { 0.0 } else { 1.0 });
            }
        }
        let a = hungarian(&c).unwrap();
        assert_eq!(a.row_to_col, (0..4).map(Some).collect::<Vec<_>>());
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn two_by_two() {
        let c = Matrix::from_rows(&[[4.0, 1.0], [2.0, 3.0]]).unwrap();
        let a = hungarian(&c).unwrap();
        assert_eq!(a.row_to_col, vec![Some(1), Some(0)]);
        assert_eq!(a.total_cost, 3.0);
    }

    #[test]
    fn random_six_by_six_matches_brute_force() {
        let perms = permutations(6);
        assert_eq!(perms.len(), 720);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let data: Vec<f64> = (0..36).map(|_| rng.random_range(0..20) as f64).collect();
            let c = Matrix::from_vec(6, 6, data).unwrap();
            let best = perms
                .iter()
                .map(|p| (0..6).map(|i| c.get(i, p[i])).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(hungarian(&c).unwrap().total_cost, best);
        }
    }

    #[test]
    fn rectangular_inputs() {
        let wide = Matrix::from_rows(&[[5.0, 1.0, 9.0], [1.0, 8.0, 0.5]]).unwrap();
        let a = hungarian(&wide).unwrap();
        assert_eq!(a.row_to_col, vec![Some(1), Some(2)]);
        assert_eq!(a.total_cost, 1.5);

        let tall = wide.transpose();
        let a = hungarian(&tall).unwrap();
        assert_eq!(a.row_to_col.iter().filter(|c| c.is_some()).count(), 2);
        assert_eq!(a.total_cost, 1.5);
    }

    #[test]
    fn empty_and_non_finite() {
        assert_eq!(hungarian(&Matrix::zeros(0, 0)).unwrap().total_cost, 0.0);
        let mut c = Matrix::zeros(2, 2);
        c.as_mut_slice()[1] = f64::INFINITY;
        assert!(hungarian(&c).is_err());
    }
}
