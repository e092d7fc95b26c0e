//! Minimal sparse linear algebra: CSR storage with deterministic assembly,
//! matrix-vector products, row/column selection, sparse products, and an SPD
//! Cholesky solver backed by faer's fill-reducing sparse factorization.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LltRef, SymbolicCholesky,
    SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Par, Side};
use std::cell::RefCell;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("triplet index ({row}, {col}) out of bounds for {nrows}x{ncols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Compressed sparse row matrix over f64.
///
/// Column indices are sorted within each row and duplicates are summed at
/// construction, so the storage layout is a pure function of the input
/// triplets regardless of their order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(SparseError::IndexOutOfBounds {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&i| (triplets[i].0, triplets[i].1));

        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(order.len());
        for &i in &order {
            let (r, c, v) = triplets[i];
            match merged.last_mut() {
                Some(&mut (lr, lc, ref mut lv)) if lr == r && lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        for &(r, c, v) in &merged {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Largest absolute entry; zero for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut row_ptr = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            row_ptr[c + 1] += 1;
        }
        for i in 0..self.ncols {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = row_ptr.clone();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let dst = next[c];
                col_idx[dst] = r;
                values[dst] = self.values[k];
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let (cols, vals) = self.row(r);
            col_idx.extend_from_slice(cols);
            values.extend_from_slice(vals);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Keeps columns mapped to `Some(new_index)`; `col_map.len()` must equal
    /// `ncols` and the new indices must be dense in `0..new_ncols`.
    pub fn select_cols(&self, col_map: &[Option<usize>], new_ncols: usize) -> CsrMatrix {
        assert_eq!(col_map.len(), self.ncols);
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if let Some(nc) = col_map[self.col_idx[k]] {
                    col_idx.push(nc);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: new_ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse-sparse product `self * other` (Gustavson, deterministic).
    pub fn spmm(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let n = other.ncols;
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut dense = vec![0.0; n];
        let mut in_row = vec![false; n];
        let mut marked: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.values[k];
                let mid = self.col_idx[k];
                for k2 in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.col_idx[k2];
                    if !in_row[c] {
                        in_row[c] = true;
                        marked.push(c);
                    }
                    dense[c] += a * other.values[k2];
                }
            }
            marked.sort_unstable();
            for &c in &marked {
                col_idx.push(c);
                values.push(dense[c]);
                dense[c] = 0.0;
                in_row[c] = false;
            }
            marked.clear();
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }

    /// `self + diag(shift)` for a square matrix; missing diagonal entries are
    /// inserted.
    pub fn add_diagonal(&self, shift: f64) -> CsrMatrix {
        assert_eq!(self.nrows, self.ncols);
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((r, c, v));
            }
            triplets.push((r, r, shift));
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets).expect("indices in range")
    }

    /// Infinity norm of `self * x - b`.
    pub fn residual_inf(&self, x: &[f64], b: &[f64]) -> f64 {
        let y = self.matvec(x);
        y.iter()
            .zip(b)
            .fold(0.0f64, |m, (yi, bi)| m.max((yi - bi).abs()))
    }
}

/// Sparse SPD Cholesky solver with reusable symbolic analysis (AMD
/// ordering, simplicial/supernodal backend).
///
/// The matrix is assumed symmetric; only structural symmetry is required by
/// the backend since a CSR of a symmetric matrix doubles as the CSC of the
/// same matrix. The low-level factorization entry points are driven
/// directly so solve scratch space is allocated once per factor instead of
/// per right-hand side; triangular solves sit in inner loops here.
pub struct SpdSolver {
    symbolic: Arc<SymbolicCholesky<usize>>,
    n: usize,
}

pub struct SpdFactor {
    symbolic: Arc<SymbolicCholesky<usize>>,
    values: Vec<f64>,
    scratch: RefCell<MemBuffer>,
    n: usize,
}

impl SpdSolver {
    pub fn analyze(matrix: &CsrMatrix) -> Result<Self, SparseError> {
        assert_eq!(matrix.nrows(), matrix.ncols());
        let n = matrix.nrows();
        let sym = SymbolicSparseColMatRef::new_checked(
            n,
            n,
            &matrix.row_ptr,
            None,
            &matrix.col_idx,
        );
        let symbolic = factorize_symbolic_cholesky(
            sym,
            Side::Upper,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams::default(),
        )
        .map_err(|_| SparseError::NotPositiveDefinite)?;
        Ok(Self {
            symbolic: Arc::new(symbolic),
            n,
        })
    }

    /// Numeric factorization of a matrix sharing the analyzed pattern.
    pub fn factor(&self, matrix: &CsrMatrix) -> Result<SpdFactor, SparseError> {
        assert_eq!(matrix.nrows(), self.n);
        let sym = SymbolicSparseColMatRef::new_checked(
            self.n,
            self.n,
            &matrix.row_ptr,
            None,
            &matrix.col_idx,
        );
        let mat = SparseColMatRef::new(sym, &matrix.values);
        let mut values = vec![0.0f64; self.symbolic.len_val()];
        let mut factor_scratch = MemBuffer::new(
            self.symbolic
                .factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default()),
        );
        self.symbolic
            .factorize_numeric_llt::<f64>(
                &mut values,
                mat,
                Side::Upper,
                Default::default(),
                Par::Seq,
                MemStack::new(&mut factor_scratch),
                Default::default(),
            )
            .map_err(|_| SparseError::NotPositiveDefinite)?;
        let scratch = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        Ok(SpdFactor {
            symbolic: Arc::clone(&self.symbolic),
            values,
            scratch: RefCell::new(scratch),
            n: self.n,
        })
    }
}

impl SpdFactor {
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        assert_eq!(rhs.len(), self.n);
        let view = MatMut::from_column_major_slice_mut(rhs, self.n, 1);
        let mut scratch = self.scratch.borrow_mut();
        LltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            faer::Conj::No,
            view,
            Par::Seq,
            MemStack::new(&mut scratch),
        );
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// One-shot SPD solve with a single step of iterative refinement.
pub fn solve_spd(
    matrix: &CsrMatrix,
    rhs: &[f64],
) -> Result<Vec<f64>, SparseError> {
    let solver = SpdSolver::analyze(matrix)?;
    let factor = solver.factor(matrix)?;
    let mut x = factor.solve(rhs);
    let mut residual = matrix.matvec(&x);
    for (ri, bi) in residual.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let correction = factor.solve(&residual);
    for (xi, ci) in x.iter_mut().zip(&correction) {
        *xi += ci;
    }
    Ok(x)
}
