//! Brute-force reference implementations shared by the integration tests.
//! They follow the definitions literally and share no code with the library.

#![allow(dead_code)]

use std::sync::Arc;

use fndepth::{make_grid, FunctionalDataset, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random strictly increasing grid with `d` points in [0, 1).
pub fn random_grid(rng: &mut ChaCha8Rng, d: usize) -> Arc<Grid> {
    loop {
        let mut pts: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        pts.sort_by(f64::total_cmp);
        if let Ok(g) = make_grid(&pts) {
            return Arc::new(g);
        }
    }
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| gaussian_vec(rng, d)).collect()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn dataset(grid: &Arc<Grid>, rows: Vec<Vec<f64>>) -> FunctionalDataset {
    FunctionalDataset::new(Arc::clone(grid), rows).unwrap()
}

fn rows_of(data: &FunctionalDataset) -> Vec<Vec<f64>> {
    (0..data.n()).map(|i| data.row(i).to_vec()).collect()
}

/// Λ-measure of the grid points where `x` lies within the envelope of
/// `members`.
fn covered_measure(x: &[f64], rows: &[Vec<f64>], members: &[usize], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for k in 0..x.len() {
        let lo = members
            .iter()
            .map(|&i| rows[i][k])
            .fold(f64::INFINITY, f64::min);
        let hi = members
            .iter()
            .map(|&i| rows[i][k])
            .fold(f64::NEG_INFINITY, f64::max);
        if lo <= x[k] && x[k] <= hi {
            total += w[k];
        }
    }
    total
}

/// Modified band depth by enumerating all `n^j` ordered tuples drawn with
/// replacement, for `j = 2..=order`.
pub fn mbd_tuples(x: &[f64], data: &FunctionalDataset, w: &[f64], order: usize) -> f64 {
    let rows = rows_of(data);
    let n = rows.len();
    let mut depth = 0.0;
    for j in 2..=order {
        let mut tuple = vec![0usize; j];
        let mut sum = 0.0;
        let mut count = 0usize;
        loop {
            sum += covered_measure(x, &rows, &tuple, w);
            count += 1;
            let mut pos = 0;
            while pos < j {
                tuple[pos] += 1;
                if tuple[pos] < n {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if pos == j {
                break;
            }
        }
        depth += sum / count as f64;
    }
    depth
}

/// All `j`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, j, &mut Vec::new(), &mut out);
    out
}

/// Band depth by enumerating distinct subsets: `Σ_j #covering / C(n, j)`.
pub fn bd_subsets(x: &[f64], data: &FunctionalDataset, order: usize) -> f64 {
    let rows = rows_of(data);
    let n = rows.len();
    let ones = vec![1.0; x.len()];
    let mut depth = 0.0;
    for j in 2..=order {
        let all = subsets(n, j);
        let covering = all
            .iter()
            .filter(|s| covered_measure(x, &rows, s, &ones) == x.len() as f64)
            .count();
        depth += covering as f64 / all.len() as f64;
    }
    depth
}

pub fn hrd_brute(x: &[f64], data: &FunctionalDataset) -> f64 {
    let rows = rows_of(data);
    let n = rows.len() as f64;
    let below = rows
        .iter()
        .filter(|r| r.iter().zip(x).all(|(v, q)| v <= q))
        .count() as f64;
    let above = rows
        .iter()
        .filter(|r| r.iter().zip(x).all(|(v, q)| v >= q))
        .count() as f64;
    (below / n).min(above / n)
}

/// Empirical distribution functions at `value`: `(F(value), F(value−))`.
fn cdfs(column: &[f64], value: f64) -> (f64, f64) {
    let n = column.len() as f64;
    let le = column.iter().filter(|&&v| v <= value).count() as f64;
    let lt = column.iter().filter(|&&v| v < value).count() as f64;
    (le / n, lt / n)
}

pub fn mhrd_brute(x: &[f64], data: &FunctionalDataset, w: &[f64]) -> f64 {
    let (mut up, mut down) = (0.0, 0.0);
    for k in 0..x.len() {
        let (f, f_left) = cdfs(&data.column(k), x[k]);
        up += w[k] * f;
        down += w[k] * (1.0 - f_left);
    }
    up.min(down)
}

pub fn idd_halfspace_brute(x: &[f64], data: &FunctionalDataset, w: &[f64]) -> f64 {
    (0..x.len())
        .map(|k| {
            let (f, f_left) = cdfs(&data.column(k), x[k]);
            w[k] * f.min(1.0 - f_left)
        })
        .sum()
}

pub fn norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| b * a * a).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), wk)| wk * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn mean_distance(x: &[f64], rows: &[Vec<f64>], w: &[f64]) -> f64 {
    rows.iter().map(|r| distance(x, r, w)).sum::<f64>() / rows.len() as f64
}

/// Minimizer of the mean L2(Λ) distance found by scanning the convex hull
/// on a barycentric lattice of spacing `1/steps`, then refining with a
/// compass search in the ambient coordinates.
pub fn spatial_median_grid_search(rows: &[Vec<f64>], w: &[f64], steps: usize) -> Vec<f64> {
    let n = rows.len();
    let d = w.len();
    let mut best = rows[0].clone();
    let mut best_val = f64::INFINITY;
    let mut counts = vec![0usize; n];
    let mut point = vec![0.0; d];
    #[allow(clippy::too_many_arguments)]
    fn visit(
        pos: usize,
        remaining: usize,
        counts: &mut [usize],
        rows: &[Vec<f64>],
        w: &[f64],
        steps: usize,
        point: &mut [f64],
        best: &mut Vec<f64>,
        best_val: &mut f64,
    ) {
        let n = counts.len();
        if pos == n - 1 {
            counts[pos] = remaining;
            for (k, p) in point.iter_mut().enumerate() {
                *p = (0..n).map(|i| counts[i] as f64 * rows[i][k]).sum::<f64>() / steps as f64;
            }
            let val = mean_distance(point, rows, w);
            if val < *best_val {
                *best_val = val;
                best.copy_from_slice(point);
            }
            return;
        }
        for c in 0..=remaining {
            counts[pos] = c;
            visit(
                pos + 1,
                remaining - c,
                counts,
                rows,
                w,
                steps,
                point,
                best,
                best_val,
            );
        }
    }
    visit(
        0,
        steps,
        &mut counts,
        rows,
        w,
        steps,
        &mut point,
        &mut best,
        &mut best_val,
    );

    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let mut step = scale / steps as f64;
    let mut current = best;
    let mut current_val = best_val;
    while step > 1e-13 * scale {
        let mut improved = false;
        for k in 0..d {
            for sign in [1.0, -1.0] {
                let mut trial = current.clone();
                trial[k] += sign * step;
                let val = mean_distance(&trial, rows, w);
                if val < current_val {
                    current = trial;
                    current_val = val;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    current
}

/// Covariance matrix of a process on `t` by direct double loop.
pub fn kernel_double_loop(t: &[f64], cov: impl Fn(f64, f64) -> f64) -> Vec<Vec<f64>> {
    t.iter()
        .map(|&a| t.iter().map(|&b| cov(a, b)).collect())
        .collect()
}
