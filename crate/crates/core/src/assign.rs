//! Maximum-weight assignment of rows to distinct columns (rows ≤ columns).

use nalgebra::DMatrix;

/// Minimum-cost assignment by the shortest augmenting path form of the
/// Hungarian method. `cost` is rows × cols with rows ≤ cols; returns the
/// column chosen for each row.
fn hungarian_min(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let m = cost.ncols();
    debug_assert!(n <= m);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // owner[j] = 1-based row assigned to 1-based column j
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
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
    let mut cols = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            cols[owner[j] - 1] = j - 1;
        }
    }
    cols
}

fn optimum(weights: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let cost = DMatrix::from_fn(rows.len(), cols.len(), |r, c| -weights[(rows[r], cols[c])]);
    hungarian_min(&cost)
        .iter()
        .enumerate()
        .map(|(r, &c)| weights[(rows[r], cols[c])])
        .sum()
}

/// Assigns each row of `weights` a distinct column maximizing the total
/// weight. Among optimal assignments the lexicographically smallest column
/// vector is returned, so ties go to the lowest column index.
///
/// Panics if there are more rows than columns.
pub fn max_weight_assignment(weights: &DMatrix<f64>) -> Vec<usize> {
    let (n, m) = weights.shape();
    assert!(n <= m, "assignment needs rows <= cols, got {n}x{m}");

    let argmax: Vec<usize> = (0..n)
        .map(|r| (0..m).fold(0, |best, c| if weights[(r, c)] > weights[(r, best)] { c } else { best }))
        .collect();
    let mut seen = vec![false; m];
    if argmax.iter().all(|&c| !std::mem::replace(&mut seen[c], true)) {
        return argmax;
    }

    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..m).collect();
    let best = optimum(weights, &all_rows, &all_cols);
    let tol = 1e-12 * (1.0 + best.abs());

    let mut chosen = Vec::with_capacity(n);
    let mut fixed = 0.0;
    for r in 0..n {
        let rest_rows: Vec<usize> = ((r + 1)..n).collect();
        let pick = (0..m)
            .filter(|c| !chosen.contains(c))
            .find(|&c| {
                let rest_cols: Vec<usize> = (0..m).filter(|k| *k != c && !chosen.contains(k)).collect();
                let total = fixed + weights[(r, c)] + optimum(weights, &rest_rows, &rest_cols);
                total >= best - tol
            })
            .expect("an optimal completion always exists");
        fixed += weights[(r, pick)];
        chosen.push(pick);
    }
    chosen
}
