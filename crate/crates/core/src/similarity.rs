//! Column-stochastic cluster similarity matrix and its per-column sparsification.
//!
//! Entry `(i, j)` is how strongly cluster `i` influences cluster `j`, so column
//! `j` is the convex weight vector that mixes every cluster's parameter into
//! cluster `j`'s effective parameter.

use crate::clustering::ClusterModel;
use crate::error::SimilarityError;
use crate::linalg::{dot, Matrix};

/// Columns must sum to one within this tolerance.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    entries: Matrix,
    sparsity_pct: f64,
}

impl SimilarityMatrix {
    pub fn identity(m: usize) -> Self {
        Self {
            entries: Matrix::identity(m),
            sparsity_pct: 100.0,
        }
    }

    /// Validates an externally supplied matrix (e.g. read back from disk).
    pub fn from_matrix(entries: Matrix, sparsity_pct: f64) -> Result<Self, SimilarityError> {
        let w = Self {
            entries,
            sparsity_pct,
        };
        w.validate()?;
        Ok(w)
    }

    /// Normalizes each column of a nonnegative matrix to sum to one.
    pub fn from_weights(raw: Matrix) -> Result<Self, SimilarityError> {
        let (rows, cols) = (raw.rows(), raw.cols());
        if rows != cols || rows == 0 {
            return Err(SimilarityError::NotSquare { rows, cols });
        }
        let mut entries = raw;
        for c in 0..cols {
            normalize_column(&mut entries, c)?;
        }
        Self::from_matrix(entries, 100.0)
    }

    pub fn m(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn sparsity_pct(&self) -> f64 {
        self.sparsity_pct
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries.get(r, c)
    }

    /// Weight vector of cluster `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.entries.column(i)
    }

    pub fn is_identity(&self) -> bool {
        self.entries == Matrix::identity(self.m())
    }

    pub fn nonzeros_in_column(&self, c: usize) -> usize {
        (0..self.m()).filter(|&r| self.get(r, c) != 0.0).count()
    }

    pub fn validate(&self) -> Result<(), SimilarityError> {
        let (rows, cols) = (self.entries.rows(), self.entries.cols());
        if rows != cols || rows == 0 {
            return Err(SimilarityError::NotSquare { rows, cols });
        }
        for c in 0..cols {
            let mut sum = 0.0;
            for r in 0..rows {
                let v = self.get(r, c);
                if !(0.0..=1.0).contains(&v) {
                    return Err(SimilarityError::NotStochastic {
                        column: c,
                        reason: format!("entry ({r},{c}) = {v} outside [0,1]"),
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(SimilarityError::NotStochastic {
                    column: c,
                    reason: format!("sums to {sum}"),
                });
            }
            if self.get(c, c) <= 0.0 {
                return Err(SimilarityError::NotStochastic {
                    column: c,
                    reason: "diagonal entry is zero".into(),
                });
            }
        }
        Ok(())
    }
}

fn normalize_column(m: &mut Matrix, c: usize) -> Result<(), SimilarityError> {
    let sum: f64 = (0..m.rows()).map(|r| m.get(r, c)).sum();
    if sum <= 0.0 {
        return Err(SimilarityError::ZeroColumn { column: c });
    }
    for r in 0..m.rows() {
        m.set(r, c, m.get(r, c) / sum);
    }
    Ok(())
}

/// Centroid dot products, negatives clamped to zero, each column normalized.
pub fn build_w(model: &ClusterModel) -> Result<SimilarityMatrix, SimilarityError> {
    let k = model.k();
    let mut raw = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            raw.set(i, j, dot(model.centroid(i), model.centroid(j)).max(0.0));
        }
    }
    for c in 0..k {
        if (0..k).all(|r| raw.get(r, c) == 0.0) {
            return Err(SimilarityError::ZeroColumn { column: c });
        }
    }
    SimilarityMatrix::from_weights(raw)
}

/// Number of entries a column keeps at `keep_pct`, before the diagonal is forced in.
pub fn keep_count(m: usize, keep_pct: f64) -> usize {
    ((keep_pct / 100.0 * m as f64).ceil() as usize).clamp(1, m)
}

/// Keeps the largest `keep_pct` percent of each column (plus the diagonal) and
/// renormalizes. Ties at the cut keep the lower row index.
pub fn sparsify(w: &SimilarityMatrix, keep_pct: f64) -> Result<SimilarityMatrix, SimilarityError> {
    if !(keep_pct > 0.0 && keep_pct <= 100.0) {
        return Err(SimilarityError::BadKeepPct(keep_pct));
    }
    let m = w.m();
    let keep = keep_count(m, keep_pct);
    let mut entries = w.entries.clone();
    for c in 0..m {
        let mut order: Vec<usize> = (0..m).collect();
        // stable sort: equal weights stay in row order
        order.sort_by(|&a, &b| w.get(b, c).total_cmp(&w.get(a, c)));
        let mut dropped_mass = false;
        for &r in &order[keep..] {
            if r == c {
                continue;
            }
            if entries.get(r, c) != 0.0 {
                dropped_mass = true;
                entries.set(r, c, 0.0);
            }
        }
        if dropped_mass {
            normalize_column(&mut entries, c)?;
        }
    }
    Ok(SimilarityMatrix {
        entries,
        sparsity_pct: keep_pct,
    })
}
