//! Reference implementations used as test oracles. Deliberately naive.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Ridge estimate from scratch: `(X'X + λI)⁻¹ X'y`.
pub fn dense_ridge(xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> Vec<f64> {
    let d = xs.first().map_or(0, Vec::len);
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (x, &y) in xs.iter().zip(ys) {
        for i in 0..d {
            b[i] += x[i] * y;
            for j in 0..d {
                a[i][j] += x[i] * x[j];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += lambda;
    }
    gauss_solve(a, b)
}

/// Largest `x'θ` over `samples` random points on the boundary of
/// `{θ : ||θ − center||_V ≤ radius}` for a 2×2 SPD `v`.
pub fn ellipsoid_max_2d(v: [[f64; 2]; 2], center: [f64; 2], radius: f64, x: [f64; 2], samples: usize, seed: u64) -> f64 {
    // V = L L'; boundary points are center + radius · L'⁻¹ u with |u| = 1.
    let l00 = v[0][0].sqrt();
    let l10 = v[1][0] / l00;
    let l11 = (v[1][1] - l10 * l10).sqrt();
    let mut r = rng(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let (u0, u1) = (t.cos(), t.sin());
        // Solve L' w = u (upper triangular).
        let w1 = u1 / l11;
        let w0 = (u0 - l10 * w1) / l00;
        let val = x[0] * (center[0] + radius * w0) + x[1] * (center[1] + radius * w1);
        best = best.max(val);
    }
    best
}

/// Smallest eigenvalue of an SPD matrix by power iteration on `cI − A`.
pub fn min_eigenvalue_power(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let shift: f64 = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) + 1.0;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.37).collect();
    let mut mu = 0.0;
    for _ in 0..20_000 {
        let w: Vec<f64> = (0..n)
            .map(|i| shift * v[i] - (0..n).map(|j| a[i][j] * v[j]).sum::<f64>())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        mu = norm;
        if diff < 1e-15 {
            break;
        }
    }
    shift - mu
}

/// Best `k`-subset by total value with at least one member of every group,
/// by exhaustive search. Returns the sorted indices.
pub fn brute_force_rooney(values: &[f64], groups: &[usize], n_groups: usize, k: usize) -> Option<Vec<usize>> {
    let n = values.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if !(0..n_groups).all(|g| members.iter().any(|&i| groups[i] == g)) {
            continue;
        }
        let total: f64 = members.iter().map(|&i| values[i]).sum();
        if best.as_ref().map_or(true, |(b, _)| total > *b) {
            best = Some((total, members));
        }
    }
    best.map(|(_, m)| m)
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

/// Least-squares slope of `y` on `x`.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
