//! Dense linear algebra used by the bandit policies.
//!
//! Vectors are plain `[f64]` slices. [`Matrix`] is a row-major dense grid and
//! [`InverseState`] keeps the inverse of a design matrix that only ever grows by
//! rank-one terms, so the policies never invert anything.

use std::fmt;

use crate::error::LinalgError;

/// Threshold below which a Sherman-Morrison denominator is treated as singular.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows * cols != data.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { index: pos });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute elementwise difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &Matrix) -> Option<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Column-major flattening, the inverse of [`reshape_mat`].
    pub fn flatten_column_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.get(r, c));
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `x xᵀ`.
pub fn self_outer(x: &[f64]) -> Matrix {
    let n = x.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m.data[i * n + j] = x[i] * x[j];
        }
    }
    m
}

/// Kronecker product of a weight vector with a context: block `j` holds `w[j]·x`.
pub fn kron_vec(w: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(w.len() * x.len());
    for wj in w {
        out.extend(x.iter().map(|xi| wj * xi));
    }
    out
}

/// Places `x` in block `block_index` of an otherwise zero vector with `num_blocks` blocks.
pub fn pad_vector(x: &[f64], block_index: usize, num_blocks: usize) -> Vec<f64> {
    assert!(block_index < num_blocks, "block index out of range");
    let d = x.len();
    let mut out = vec![0.0; d * num_blocks];
    out[block_index * d..(block_index + 1) * d].copy_from_slice(x);
    out
}

/// Unstacks `x` column by column into an `r × c` matrix.
pub fn reshape_mat(x: &[f64], r: usize, c: usize) -> Result<Matrix, LinalgError> {
    if x.len() != r * c {
        return Err(LinalgError::DimensionMismatch {
            expected: r * c,
            found: x.len(),
        });
    }
    let mut m = Matrix::zeros(r, c);
    for col in 0..c {
        for row in 0..r {
            m.data[row * c + col] = x[col * r + row];
        }
    }
    Ok(m)
}

/// Inverse of a symmetric positive definite design matrix, maintained under
/// rank-one additions.
#[derive(Clone, PartialEq)]
pub struct InverseState {
    dim: usize,
    inv: Matrix,
}

impl fmt::Debug for InverseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InverseState")
            .field("dim", &self.dim)
            .field("inv", &self.inv)
            .finish()
    }
}

impl InverseState {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            inv: Matrix::identity(dim),
        }
    }

    /// Wraps an existing inverse (e.g. restored from a snapshot).
    pub fn from_inverse(inv: Matrix) -> Result<Self, LinalgError> {
        if inv.rows() != inv.cols() {
            return Err(LinalgError::DimensionMismatch {
                expected: inv.rows(),
                found: inv.cols(),
            });
        }
        Ok(Self {
            dim: inv.rows(),
            inv,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inv
    }

    /// `inv · x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.inv.mul_vec(x)
    }

    /// `zᵀ · inv · z`.
    pub fn quad_form(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim);
        let n = self.dim;
        let data = self.inv.as_slice();
        let mut acc = 0.0;
        for (i, zi) in z.iter().enumerate() {
            if *zi == 0.0 {
                continue;
            }
            acc += zi * dot(&data[i * n..(i + 1) * n], z);
        }
        acc
    }

    /// General Sherman-Morrison step: replaces `inv = A⁻¹` by `(A + u vᵀ)⁻¹`.
    pub fn sm_update(&mut self, u: &[f64], v: &[f64]) -> Result<(), LinalgError> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        let n = self.dim;
        let inv_u = self.inv.mul_vec(u);
        // vᵀ · inv
        let mut vt_inv = vec![0.0; n];
        for (r, vr) in v.iter().enumerate() {
            if *vr == 0.0 {
                continue;
            }
            for (acc, a) in vt_inv.iter_mut().zip(self.inv.row(r)) {
                *acc += vr * a;
            }
        }
        let denom = 1.0 + dot(v, &inv_u);
        if denom.abs() < DEGENERATE_DENOMINATOR || !denom.is_finite() {
            return Err(LinalgError::DegenerateUpdate { denominator: denom });
        }
        for r in 0..n {
            let scale = inv_u[r] / denom;
            if scale == 0.0 {
                continue;
            }
            let row = &mut self.inv.data[r * n..(r + 1) * n];
            for (a, w) in row.iter_mut().zip(&vt_inv) {
                *a -= scale * w;
            }
        }
        Ok(())
    }

    /// Symmetric rank-one step `A ← A + u uᵀ`. Keeps `inv` exactly symmetric.
    pub fn rank_one_update(&mut self, u: &[f64]) -> Result<(), LinalgError> {
        self.check_len(u.len())?;
        let n = self.dim;
        let y = self.inv.mul_vec(u);
        let denom = 1.0 + dot(u, &y);
        if denom.abs() < DEGENERATE_DENOMINATOR || !denom.is_finite() {
            return Err(LinalgError::DegenerateUpdate { denominator: denom });
        }
        // upper triangle, mirrored: each pair (r, c) is computed once
        for r in 0..n {
            if y[r] == 0.0 {
                continue;
            }
            for c in r..n {
                let v = self.inv.data[r * n + c] - y[r] * y[c] / denom;
                self.inv.data[r * n + c] = v;
                self.inv.data[c * n + r] = v;
            }
        }
        Ok(())
    }

    /// Largest `|inv[i][j] − inv[j][i]|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.inv.get(i, j) - self.inv.get(j, i)).abs());
            }
        }
        worst
    }

    fn check_len(&self, len: usize) -> Result<(), LinalgError> {
        if len != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                found: len,
            });
        }
        Ok(())
    }
}

/// Free-function form of [`InverseState::sm_update`].
pub fn sm_update(state: &InverseState, u: &[f64], v: &[f64]) -> Result<InverseState, LinalgError> {
    let mut next = state.clone();
    next.sm_update(u, v)?;
    Ok(next)
}

/// Free-function form of [`InverseState::quad_form`].
pub fn quad_form(state: &InverseState, z: &[f64]) -> f64 {
    state.quad_form(z)
}
