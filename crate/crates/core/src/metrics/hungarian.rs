use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Minimum-cost one-to-one assignment for an `rows x cols` cost matrix
/// (row-major).
///
/// Rectangular inputs behave as if zero-padded to square: exactly
/// `min(rows, cols)` pairs are returned, sorted by row. Uses the
/// shortest-augmenting-path form of the Hungarian method with row/column
/// potentials, `O(min^2 * max)`.
pub fn hungarian(cost: &[f64], rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
    if cost.len() != rows * cols {
        return Err(Error::DimensionMismatch { expected: rows * cols, found: cost.len(), what: "cost matrix size" });
    }
    if let Some(pos) = cost.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) });
    }
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    let mut pairs = if rows <= cols {
        solve(rows, cols, |i, j| cost[i * cols + j])
    } else {
        solve(cols, rows, |i, j| cost[j * cols + i]).into_iter().map(|(c, r)| (r, c)).collect()
    };
    pairs.sort_unstable();
    Ok(pairs)
}

/// Sum of `cost` over an assignment.
pub fn assignment_cost(cost: &[f64], cols: usize, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| cost[i * cols + j]).sum()
}

// n <= m. Indices are 1-based internally; column 0 is the virtual start.
fn solve(n: usize, m: usize, a: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
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
    (1..=m).filter(|&j| owner[j] != 0).map(|j| (owner[j] - 1, j - 1)).collect()
}
