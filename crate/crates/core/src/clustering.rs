//! Lloyd's k-means with k-means++ seeding. Cluster centroids stand in for users.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ClusterError;
use crate::linalg::Matrix;

pub const DEFAULT_MAX_ITERS: usize = 100;

/// Per-feature z-scoring fitted on the clustering input.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(points: &[Vec<f64>]) -> Self {
        let d = points.first().map_or(0, Vec::len);
        let n = points.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for p in points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for p in points {
            for ((s, v), m) in var.iter_mut().zip(p).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        // constant features keep unit scale
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    centroids: Matrix,
    scaling: Option<Standardizer>,
}

/// Diagnostics from one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansTrace {
    /// Within-cluster SSE after every assignment pass, starting with the seeding pass.
    pub sse: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterModel {
    pub fn from_centroids(centroids: Matrix) -> Self {
        Self {
            centroids,
            scaling: None,
        }
    }

    pub fn with_scaling(mut self, scaling: Option<Standardizer>) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.centroids.cols()
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        self.centroids.row(i)
    }

    pub fn scaling(&self) -> Option<&Standardizer> {
        self.scaling.as_ref()
    }

    /// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
    pub fn assign(&self, user_features: &[f64]) -> usize {
        match &self.scaling {
            Some(s) => nearest(&self.centroids, &s.apply(user_features)).0,
            None => nearest(&self.centroids, user_features).0,
        }
    }

    /// Within-cluster sum of squared distances for `points` (in model coordinates).
    pub fn sse(&self, points: &[Vec<f64>]) -> f64 {
        points.iter().map(|p| nearest(&self.centroids, p).1).sum()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &Matrix, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(centroids.row(c), x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    points
        .iter()
        .map(|p| {
            p.iter()
                // fold -0.0 into 0.0
                .map(|v| (v + 0.0).to_bits())
                .collect::<Vec<u64>>()
        })
        .collect::<HashSet<_>>()
        .len()
}

pub fn fit_kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<ClusterModel, ClusterError> {
    fit_kmeans_traced(points, k, seed, max_iters).map(|(m, _)| m)
}

pub fn fit_kmeans_traced(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<(ClusterModel, KMeansTrace), ClusterError> {
    let first = points.first().ok_or(ClusterError::NoPoints)?;
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    let d = first.len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(ClusterError::DimensionMismatch {
                index,
                expected: d,
                found: p.len(),
            });
        }
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(ClusterError::TooFewPoints { k, distinct });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);

    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut sse = Vec::new();
    assign_all(&centroids, points, &mut labels, &mut dists);
    sse.push(dists.iter().sum());

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        recompute_centroids(&mut centroids, points, &labels, &mut dists);
        let changed = assign_all(&centroids, points, &mut labels, &mut dists);
        sse.push(dists.iter().sum());
        if !changed {
            converged = true;
            break;
        }
    }

    Ok((
        ClusterModel::from_centroids(centroids),
        KMeansTrace {
            sse,
            iterations,
            converged,
        },
    ))
}

fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.len();
    let d = points[0].len();
    let mut centroids = Matrix::zeros(k, d);
    let first = rng.random_range(0..n);
    let mut min_d: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    for (j, v) in points[first].iter().enumerate() {
        centroids.set(0, j, *v);
    }
    for c in 1..k {
        let total: f64 = min_d.iter().sum();
        // total > 0 while fewer than `distinct` centroids are placed
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, w) in min_d.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let pick = pick.expect("positive mass remains while k <= distinct points");
        for (j, v) in points[pick].iter().enumerate() {
            centroids.set(c, j, *v);
        }
        for (m, p) in min_d.iter_mut().zip(points) {
            *m = m.min(sq_dist(p, &points[pick]));
        }
    }
    centroids
}

fn assign_all(
    centroids: &Matrix,
    points: &[Vec<f64>],
    labels: &mut [usize],
    dists: &mut [f64],
) -> bool {
    let mut changed = false;
    for ((p, l), dist) in points.iter().zip(labels.iter_mut()).zip(dists.iter_mut()) {
        let (c, dd) = nearest(centroids, p);
        if c != *l {
            changed = true;
            *l = c;
        }
        *dist = dd;
    }
    changed
}

/// Mean of each cluster; empty clusters move onto the point farthest from its centroid.
fn recompute_centroids(
    centroids: &mut Matrix,
    points: &[Vec<f64>],
    labels: &[usize],
    dists: &mut [f64],
) {
    let k = centroids.rows();
    let d = centroids.cols();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            let far = dists
                .iter()
                .enumerate()
                .fold(
                    (0, -1.0),
                    |best, (i, &v)| if v > best.1 { (i, v) } else { best },
                )
                .0;
            dists[far] = 0.0;
            for (j, v) in points[far].iter().enumerate() {
                centroids.set(c, j, *v);
            }
        } else {
            let n = counts[c] as f64;
            for (j, s) in sums[c].iter().enumerate() {
                centroids.set(c, j, s / n);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(raw: &[[f64; 2]]) -> Vec<Vec<f64>> {
        raw.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn each_distinct_point_is_its_own_centroid() {
        let points = pts(&[[0.0, 0.0], [1.0, 5.0], [-3.0, 2.0], [1.0, 5.0]]);
        let m = fit_kmeans(&points, 3, 11, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(m.sse(&points), 0.0);
        let mut rows = m.centroids().to_rows();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(rows, pts(&[[-3.0, 2.0], [0.0, 0.0], [1.0, 5.0]]));
    }

    #[test]
    fn repeated_point_single_cluster() {
        let points = vec![vec![2.5, -1.0, 4.0]; 7];
        let m = fit_kmeans(&points, 1, 0, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(m.centroid(0), &[2.5, -1.0, 4.0]);
    }

    #[test]
    fn too_few_distinct_points() {
        let points = pts(&[[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]);
        assert_eq!(
            fit_kmeans(&points, 3, 0, 10).unwrap_err(),
            ClusterError::TooFewPoints { k: 3, distinct: 2 }
        );
        assert_eq!(
            fit_kmeans(&[], 1, 0, 10).unwrap_err(),
            ClusterError::NoPoints
        );
    }

    #[test]
    fn assign_ties_go_to_lowest_index() {
        let c = Matrix::from_rows(&[
            vec![10.0, 10.0],
            vec![9.0, 9.0],
            vec![-1.0, 0.0],
            vec![5.0, 5.0],
            vec![7.0, 7.0],
            vec![1.0, 0.0],
        ])
        .unwrap();
        let m = ClusterModel::from_centroids(c);
        assert_eq!(m.assign(&[0.0, 0.0]), 2);
        assert_eq!(m.assign(&[5.0, 5.0]), 3);
    }

    #[test]
    fn scaling_is_applied_before_assignment() {
        // Raw distances are dominated by the second feature; standardized ones are not.
        let c = Matrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let s = Standardizer {
            mean: vec![0.0, 0.0],
            std: vec![1.0, 1000.0],
        };
        let m = ClusterModel::from_centroids(c).with_scaling(Some(s));
        assert_eq!(m.assign(&[-0.9, 900.0]), 0);
        assert_eq!(m.assign(&[0.9, -900.0]), 1);
        let fitted = Standardizer::fit(&pts(&[[0.0, 5.0], [2.0, 5.0]]));
        assert_eq!(fitted.mean, vec![1.0, 5.0]);
        assert_eq!(fitted.std, vec![1.0, 1.0]);
    }

    #[test]
    fn reruns_are_bitwise_identical() {
        let points: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin() * 3.0 + (i % 3) as f64 * 5.0, t.cos()]
            })
            .collect();
        let a = fit_kmeans_traced(&points, 4, 99, DEFAULT_MAX_ITERS).unwrap();
        let b = fit_kmeans_traced(&points, 4, 99, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(a, b);
        assert!(a.1.converged);
    }
}
