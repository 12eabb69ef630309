#![allow(dead_code)]

use colband::synth::{collaborative_w, gen_environment, EnvSpec, Environment};

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Solves `A x = b` through the dense inverse.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    gauss_jordan_inverse(a)
        .iter()
        .map(|row| row.iter().zip(b).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, first one on ties.
pub fn brute_assign(centroids: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    for (i, c) in centroids.iter().enumerate() {
        if sq_dist(c, x) < sq_dist(&centroids[best], x) {
            best = i;
        }
    }
    best
}

/// Lowest SSE over every split of `points` into two nonempty groups.
pub fn best_two_partition_sse(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    assert!((2..=20).contains(&n));
    let mut best = f64::INFINITY;
    // fixing point 0 in group A halves the search
    for mask in 0..(1u32 << (n - 1)) {
        let in_b = |i: usize| i > 0 && mask & (1 << (i - 1)) != 0;
        let (a, b): (Vec<_>, Vec<_>) = (0..n).partition(|&i| !in_b(i));
        if b.is_empty() {
            continue;
        }
        best = best.min(group_sse(points, &a) + group_sse(points, &b));
    }
    best
}

fn group_sse(points: &[Vec<f64>], idx: &[usize]) -> f64 {
    let d = points[0].len();
    let mut mean = vec![0.0; d];
    for &i in idx {
        for (m, x) in mean.iter_mut().zip(&points[i]) {
            *m += x / idx.len() as f64;
        }
    }
    idx.iter().map(|&i| sq_dist(&points[i], &mean)).sum()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Two-sided normal-approximation interval half-width for a binomial proportion.
pub fn binomial_halfwidth(p: f64, n: usize, z: f64) -> f64 {
    z * (p * (1.0 - p) / n as f64).sqrt()
}

/// Bernoulli environment with M clusters, d features, no latent part.
pub fn plain_env(m: usize, d: usize, k: usize, seed: u64) -> Environment {
    let w = collaborative_w(m, 0.4, seed + 1);
    gen_environment(&EnvSpec {
        seed,
        ..EnvSpec::new(w, d, 0, k)
    })
}
