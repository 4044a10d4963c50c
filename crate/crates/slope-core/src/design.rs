//! Predictor matrices.
//!
//! Dense storage is column-major since every hot operation here walks columns:
//! subset mat-vec products, per-column dot products against residuals, and
//! column-wise standardization. Sparse storage is compressed sparse columns.

use crate::error::{Result, SlopeError};

#[derive(Debug, Clone)]
pub struct DenseMatrix {
    n: usize,
    p: usize,
    /// Column-major, length n * p.
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_columns(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * p {
            return Err(SlopeError::DimensionMismatch {
                context: "DenseMatrix::from_columns",
                expected: n * p,
                got: data.len(),
            });
        }
        Ok(Self { n, p, data })
    }

    /// Builds from row-major data (as read from CSV rows).
    pub fn from_rows(n: usize, p: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * p {
            return Err(SlopeError::DimensionMismatch {
                context: "DenseMatrix::from_rows",
                expected: n * p,
                got: rows.len(),
            });
        }
        let mut data = vec![0.0; n * p];
        for i in 0..n {
            for j in 0..p {
                data[j * n + i] = rows[i * p + j];
            }
        }
        Ok(Self { n, p, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, p: n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Compressed sparse column matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    p: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets. Rows within a column must be
    /// unique; they are sorted here.
    pub fn from_triplets(n: usize, p: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
        for &(i, j, v) in triplets {
            if i >= n || j >= p {
                return Err(SlopeError::InvalidParameter(format!(
                    "triplet ({i}, {j}) outside {n}x{p} matrix"
                )));
            }
            per_col[j].push((i, v));
        }
        let mut col_ptr = Vec::with_capacity(p + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        for (j, mut entries) in per_col.into_iter().enumerate() {
            entries.sort_by_key(|&(i, _)| i);
            for w in entries.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(SlopeError::InvalidParameter(format!(
                        "duplicate entry at ({}, {j})",
                        w[0].0
                    )));
                }
            }
            for (i, v) in entries {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            n,
            p,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn scale_col(&mut self, j: usize, factor: f64) {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        for v in &mut self.values[lo..hi] {
            *v *= factor;
        }
    }
}

#[derive(Debug, Clone)]
pub enum DesignMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

/// A predictor matrix plus its normalization metadata.
#[derive(Debug, Clone)]
pub struct Design {
    pub matrix: DesignMatrix,
    pub column_centers: Vec<f64>,
    pub column_scales: Vec<f64>,
    pub standardized: bool,
    /// Whether columns were mean-centered (always false for sparse storage,
    /// where centering would destroy sparsity).
    pub centered: bool,
}

impl Design {
    pub fn from_dense(matrix: DenseMatrix) -> Self {
        let p = matrix.p();
        Self {
            matrix: DesignMatrix::Dense(matrix),
            column_centers: vec![0.0; p],
            column_scales: vec![1.0; p],
            standardized: false,
            centered: false,
        }
    }

    pub fn from_sparse(matrix: SparseMatrix) -> Self {
        let p = matrix.p();
        Self {
            matrix: DesignMatrix::Sparse(matrix),
            column_centers: vec![0.0; p],
            column_scales: vec![1.0; p],
            standardized: false,
            centered: false,
        }
    }

    pub fn n(&self) -> usize {
        match &self.matrix {
            DesignMatrix::Dense(m) => m.n(),
            DesignMatrix::Sparse(m) => m.n(),
        }
    }

    pub fn p(&self) -> usize {
        match &self.matrix {
            DesignMatrix::Dense(m) => m.p(),
            DesignMatrix::Sparse(m) => m.p(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.matrix, DesignMatrix::Sparse(_))
    }

    /// out += a * X[:, j]
    pub fn col_axpy(&self, j: usize, a: f64, out: &mut [f64]) {
        if a == 0.0 {
            return;
        }
        match &self.matrix {
            DesignMatrix::Dense(m) => {
                for (o, &x) in out.iter_mut().zip(m.col(j)) {
                    *o += a * x;
                }
            }
            DesignMatrix::Sparse(m) => {
                let (rows, vals) = m.col(j);
                for (&i, &x) in rows.iter().zip(vals) {
                    out[i] += a * x;
                }
            }
        }
    }

    /// X[:, j] . v
    pub fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        match &self.matrix {
            DesignMatrix::Dense(m) => m.col(j).iter().zip(v).map(|(x, y)| x * y).sum(),
            DesignMatrix::Sparse(m) => {
                let (rows, vals) = m.col(j);
                rows.iter().zip(vals).map(|(&i, &x)| x * v[i]).sum()
            }
        }
    }

    pub fn col_mean(&self, j: usize) -> f64 {
        let n = self.n() as f64;
        match &self.matrix {
            DesignMatrix::Dense(m) => m.col(j).iter().sum::<f64>() / n,
            DesignMatrix::Sparse(m) => {
                let (_, vals) = m.col(j);
                vals.iter().sum::<f64>() / n
            }
        }
    }

    pub fn col_norm(&self, j: usize) -> f64 {
        match &self.matrix {
            DesignMatrix::Dense(m) => m.col(j).iter().map(|x| x * x).sum::<f64>().sqrt(),
            DesignMatrix::Sparse(m) => {
                let (_, vals) = m.col(j);
                vals.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_row_major_round_trip() {
        let m = DenseMatrix::from_rows(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.col(0), &[1.0, 4.0]);
        assert_eq!(m.col(2), &[3.0, 6.0]);
        assert_eq!(m.get(1, 1), 5.0);
    }

    #[test]
    fn sparse_ops_match_dense() {
        let triplets = [(0, 0, 1.0), (2, 0, -2.0), (1, 2, 3.0)];
        let s = SparseMatrix::from_triplets(3, 3, &triplets).unwrap();
        let d = Design::from_sparse(s);
        assert_eq!(d.col_dot(0, &[1.0, 1.0, 1.0]), -1.0);
        let mut out = vec![0.0; 3];
        d.col_axpy(2, 2.0, &mut out);
        assert_eq!(out, vec![0.0, 6.0, 0.0]);
        assert_eq!(d.col_norm(0), (5.0f64).sqrt());
    }

    #[test]
    fn sparse_rejects_duplicates() {
        let triplets = [(0, 0, 1.0), (0, 0, 2.0)];
        assert!(SparseMatrix::from_triplets(2, 1, &triplets).is_err());
    }
}
