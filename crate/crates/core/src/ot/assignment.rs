//! Dense linear assignment via the Jonker-Volgenant algorithm.
//!
//! Costs come from an oracle so the n x n matrix never has to be
//! materialized; for squared-distance costs recomputing an entry is cheaper
//! than streaming it from memory at the sizes this crate targets.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Solve the square assignment problem, returning `perm` with row `i`
/// assigned to column `perm[i]`.
pub fn solve(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> Result<Vec<usize>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![0]);
    }

    let mut x = vec![NONE; n]; // row -> col
    let mut y = vec![NONE; n]; // col -> row
    let mut v = vec![0.0f64; n]; // column potentials
    let mut matches = vec![0usize; n];

    // Column reduction, scanning columns in reverse.
    for j in (0..n).rev() {
        let mut min = cost(0, j);
        let mut imin = 0;
        for i in 1..n {
            let c = cost(i, j);
            if c < min {
                min = c;
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            x[imin] = j;
            y[j] = imin;
        } else {
            y[j] = NONE;
        }
    }

    // Reduction transfer for rows assigned exactly once.
    let mut free: Vec<usize> = Vec::new();
    for i in 0..n {
        if matches[i] == 0 {
            free.push(i);
        } else if matches[i] == 1 {
            let j1 = x[i];
            let mut min = f64::INFINITY;
            for j in 0..n {
                if j != j1 {
                    let r = cost(i, j) - v[j];
                    if r < min {
                        min = r;
                    }
                }
            }
            v[j1] -= min;
        }
    }

    // Two passes of augmenting row reduction. A safety budget guards the
    // re-scan branch against pathological float ties.
    for _ in 0..2 {
        let mut k = 0;
        let len = free.len();
        let mut next_free: Vec<usize> = Vec::new();
        let mut budget = 20 * n + 100;
        while k < len {
            let i = free[k];
            k += 1;
            let mut u1 = cost(i, 0) - v[0];
            let mut j1 = 0usize;
            let mut u2 = f64::INFINITY;
            let mut j2 = NONE;
            for j in 1..n {
                let h = cost(i, j) - v[j];
                if h < u2 {
                    if h >= u1 {
                        u2 = h;
                        j2 = j;
                    } else {
                        u2 = u1;
                        j2 = j1;
                        u1 = h;
                        j1 = j;
                    }
                }
            }
            let mut i0 = y[j1];
            if u1 < u2 {
                v[j1] -= u2 - u1;
            } else if i0 != NONE && j2 != NONE {
                j1 = j2;
                i0 = y[j1];
            }
            x[i] = j1;
            y[j1] = i;
            if i0 != NONE {
                if u1 < u2 && budget > 0 {
                    budget -= 1;
                    k -= 1;
                    free[k] = i0;
                } else {
                    next_free.push(i0);
                }
            }
        }
        free = next_free;
        if free.is_empty() {
            break;
        }
    }

    // Shortest augmenting paths for the remaining free rows.
    let mut d = vec![0.0f64; n];
    let mut pred = vec![0usize; n];
    let mut cols: Vec<usize> = (0..n).collect();
    for &f in &free {
        augment(n, cost, f, &mut x, &mut y, &mut v, &mut d, &mut pred, &mut cols)?;
    }

    debug_assert!(x.iter().all(|&j| j != NONE));
    Ok(x)
}

#[allow(clippy::too_many_arguments)]
fn augment(
    n: usize,
    cost: &dyn Fn(usize, usize) -> f64,
    f: usize,
    x: &mut [usize],
    y: &mut [usize],
    v: &mut [f64],
    d: &mut [f64],
    pred: &mut [usize],
    cols: &mut [usize],
) -> Result<()> {
    for j in 0..n {
        d[j] = cost(f, j) - v[j];
        pred[j] = f;
        cols[j] = j;
    }
    // cols[0..low) are in the tree, [low..up) sit at the current minimum,
    // [up..n) are still to be scanned.
    let mut low = 0usize;
    let mut up = 0usize;
    let mut n_ready = 0usize;
    let mut min = 0.0f64;
    let endpoint;

    'search: loop {
        if low == up {
            n_ready = low;
            min = d[cols[up]];
            up += 1;
            for k in (up)..n {
                let j = cols[k];
                let h = d[j];
                if h <= min {
                    if h < min {
                        up = low;
                        min = h;
                    }
                    cols[k] = cols[up];
                    cols[up] = j;
                    up += 1;
                }
            }
            for k in low..up {
                let j = cols[k];
                if y[j] == NONE {
                    endpoint = j;
                    break 'search;
                }
            }
        }
        let j1 = cols[low];
        low += 1;
        let i = y[j1];
        if i == NONE {
            return Err(Error::Solver("assignment search lost its tree invariant".into()));
        }
        let u1 = cost(i, j1) - v[j1] - min;
        for k in up..n {
            let j = cols[k];
            let h = cost(i, j) - v[j] - u1;
            if h < d[j] {
                d[j] = h;
                pred[j] = i;
                if h <= min {
                    if y[j] == NONE {
                        endpoint = j;
                        break 'search;
                    }
                    cols[k] = cols[up];
                    cols[up] = j;
                    up += 1;
                }
            }
        }
    }

    for &j in cols.iter().take(n_ready) {
        v[j] += d[j] - min;
    }

    // Trace the alternating path back to the free row.
    let mut j = endpoint;
    loop {
        let i = pred[j];
        y[j] = i;
        std::mem::swap(&mut x[i], &mut j);
        if i == f {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute_force(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
        fn rec(cost: &dyn Fn(usize, usize) -> f64, used: &mut Vec<bool>, row: usize, acc: f64, best: &mut f64) {
            let n = used.len();
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, used, row + 1, acc + cost(row, j), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, &mut vec![false; n], 0, 0.0, &mut best);
        best
    }

    fn objective(perm: &[usize], cost: &dyn Fn(usize, usize) -> f64) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| cost(i, j)).sum()
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = crate::rng::rng_from_seed(42);
        for n in 2..=7 {
            for _ in 0..60 {
                let c: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() * 10.0).collect();
                let cost = move |i: usize, j: usize| c[i * n + j];
                let perm = solve(n, &cost).unwrap();
                let mut seen = vec![false; n];
                for &j in &perm {
                    assert!(!seen[j], "not a permutation");
                    seen[j] = true;
                }
                let exact = brute_force(n, &cost);
                assert!(
                    (objective(&perm, &cost) - exact).abs() <= 1e-9,
                    "n={n}: got {}, brute force {}",
                    objective(&perm, &cost),
                    exact
                );
            }
        }
    }

    #[test]
    fn handles_ties() {
        // All-equal costs force every tie-handling branch.
        let perm = solve(5, &|_, _| 1.0).unwrap();
        let mut seen = vec![false; 5];
        for &j in &perm {
            seen[j] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn identity_on_zero_diagonal() {
        let n = 50;
        let cost = |i: usize, j: usize| if i == j { 0.0 } else { 1.0 + (i * 7 + j) as f64 };
        let perm = solve(n, &cost).unwrap();
        assert_eq!(objective(&perm, &cost), 0.0);
    }
}
