//! Compressed-row complex matrices for assembly and matrix-vector work, with
//! sparse and dense factorizations delegated to `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::field::C64;

/// Complex sparse matrix in compressed-row form with sorted, unique columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::invalid(format!(
                    "triplet ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![(0usize, C64::new(0.0, 0.0)); triplets.len()];
        for &(r, c, v) in triplets {
            entries[fill[r]] = (c, v);
            fill[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for r in 0..n_rows {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_unstable_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix { n_rows, n_cols, row_ptr, col_idx, vals })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).find(|e| e.0 == c).map_or(C64::new(0.0, 0.0), |e| e.1)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        (0..self.n_rows).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.n_cols, x.len())?;
        Ok((0..self.n_rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect())
    }

    /// `A^H y`.
    pub fn adjoint_mul_vec(&self, y: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.n_rows, y.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.n_cols];
        for (r, &yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v.conj() * yr;
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.n_cols, self.n_rows, &t).expect("transposed indices are in range")
    }

    /// Linear combination `a * self + b * other` of equally shaped matrices.
    pub fn add_scaled(&self, a: C64, other: &CsrMatrix, b: C64) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch { expected: self.n_rows, actual: other.n_rows });
        }
        let mut t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (r, c, a * v)).collect();
        t.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, b * v)));
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    /// Row scaling `diag(d) * self`.
    pub fn scale_rows(&self, d: &[C64]) -> Result<Self> {
        Error::check_len(self.n_rows, d.len())?;
        let mut out = self.clone();
        for r in 0..self.n_rows {
            for v in &mut out.vals[out.row_ptr[r]..out.row_ptr[r + 1]] {
                *v *= d[r];
            }
        }
        Ok(out)
    }

    /// Column scaling `self * diag(d)`.
    pub fn scale_cols(&self, d: &[C64]) -> Result<Self> {
        Error::check_len(self.n_cols, d.len())?;
        let mut out = self.clone();
        for (v, &c) in out.vals.iter_mut().zip(&out.col_idx) {
            *v *= d[c];
        }
        Ok(out)
    }

    /// Triplets of `w * A^H A`, one outer product per row.
    pub fn gram_triplets(&self, w: f64) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::new();
        for r in 0..self.n_rows {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            let (cols, vals) = (&self.col_idx[span.clone()], &self.vals[span]);
            for (&ci, &vi) in cols.iter().zip(vals) {
                let wi = vi.conj() * w;
                for (&cj, &vj) in cols.iter().zip(vals) {
                    out.push((ci, cj, wi * vj));
                }
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }
}

fn to_faer<T: faer::traits::ComplexField + Copy>(
    n: usize,
    triplets: &[(usize, usize, T)],
) -> Result<SparseColMat<usize, T>> {
    let t: Vec<_> = triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    SparseColMat::try_new_from_triplets(n, n, &t)
        .map_err(|e| Error::Solver(format!("sparse matrix construction failed: {e:?}")))
}

fn column<T: faer::traits::ComplexField + Copy>(b: &[T]) -> Mat<T> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

/// LU factorization of a square complex sparse matrix.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, C64>,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.n_rows != a.n_cols {
            return Err(Error::invalid("LU needs a square matrix"));
        }
        let m = to_faer(a.n_rows, &a.triplets())?;
        let sym = SymbolicLu::try_new(m.symbolic())
            .map_err(|e| Error::Solver(format!("symbolic LU failed: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(sym, m.as_ref())
            .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
        Ok(SparseLu { n: a.n_rows, lu })
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.n, b.len())?;
        let x = self.lu.solve(&column(b));
        Ok((0..self.n).map(|i| x[(i, 0)]).collect())
    }
}

/// Cholesky factorization of a Hermitian positive definite sparse matrix.
pub struct SparseCholesky<T: faer::traits::ComplexField> {
    n: usize,
    llt: Llt<usize, T>,
}

impl<T: faer::traits::ComplexField + Copy> SparseCholesky<T> {
    /// `triplets` must describe the full Hermitian matrix (duplicates summed).
    pub fn new(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let m = to_faer(n, triplets)?;
        let sym = SymbolicLlt::try_new(m.symbolic(), Side::Lower)
            .map_err(|e| Error::Solver(format!("symbolic Cholesky failed: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(sym, m.as_ref(), Side::Lower).map_err(|e| {
            Error::Solver(format!("Cholesky factorization failed (matrix not positive definite?): {e:?}"))
        })?;
        Ok(SparseCholesky { n, llt })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        Error::check_len(self.n, b.len())?;
        let x = self.llt.solve(&column(b));
        Ok((0..self.n).map(|i| x[(i, 0)]).collect())
    }
}

/// Dense Cholesky factorization.
pub struct DenseCholesky<T: faer::traits::ComplexField> {
    n: usize,
    llt: faer::linalg::solvers::Llt<T>,
}

impl<T: faer::traits::ComplexField + Copy> DenseCholesky<T> {
    pub fn new(a: &Mat<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::invalid("Cholesky needs a square matrix"));
        }
        let llt = a.llt(Side::Lower).map_err(|e| {
            Error::Solver(format!("dense Cholesky failed (matrix not positive definite?): {e:?}"))
        })?;
        Ok(DenseCholesky { n: a.nrows(), llt })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        Error::check_len(self.n, b.len())?;
        let x = self.llt.solve(&column(b));
        Ok((0..self.n).map(|i| x[(i, 0)]).collect())
    }
}
