use faer::Mat;

use crate::error::{Error, Result};
use crate::field::{Grid2D, C64};

/// `G^H G` in the form the normal-equation solvers exploit.
#[derive(Debug, Clone)]
pub enum Gram {
    Dense(Mat<C64>),
    /// Real nonnegative diagonal, as produced by diagonal-block operators.
    Diagonal(Vec<f64>),
}

impl Gram {
    pub fn len(&self) -> usize {
        match self {
            Gram::Dense(m) => m.nrows(),
            Gram::Diagonal(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Gram::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
            Gram::Diagonal(d) => d.clone(),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        match self {
            Gram::Dense(m) => (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
                .collect(),
            Gram::Diagonal(d) => d.iter().zip(x).map(|(g, v)| v * *g).collect(),
        }
    }
}

/// A complex linear map from model space to data space.
pub trait LinearOperator: Sync {
    fn model_len(&self) -> usize;
    fn data_len(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64>;
    fn gram(&self) -> Gram;
}

/// Explicit dense matrix operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    mat: Mat<C64>,
}

impl DenseOperator {
    pub fn new(mat: Mat<C64>) -> Self {
        DenseOperator { mat }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::new(Mat::from_fn(rows, cols, f))
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.mat
    }
}

impl LinearOperator for DenseOperator {
    fn model_len(&self) -> usize {
        self.mat.ncols()
    }

    fn data_len(&self) -> usize {
        self.mat.nrows()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let m = &self.mat;
        let mut out = vec![C64::new(0.0, 0.0); m.nrows()];
        for (j, &xj) in x.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                *o += m[(i, j)] * xj;
            }
        }
        out
    }

    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let m = &self.mat;
        (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| m[(i, j)].conj() * y[i]).sum())
            .collect()
    }

    fn gram(&self) -> Gram {
        Gram::Dense(self.mat.adjoint() * &self.mat)
    }
}

/// Operator `G`, data `y` and the grid of the model.
pub struct LinearMeasurement<'a> {
    pub grid: Grid2D,
    pub op: &'a dyn LinearOperator,
    pub y: Vec<C64>,
}

impl<'a> LinearMeasurement<'a> {
    pub fn new(grid: Grid2D, op: &'a dyn LinearOperator, y: Vec<C64>) -> Result<Self> {
        Error::check_len(grid.len(), op.model_len())?;
        Error::check_len(op.data_len(), y.len())?;
        Ok(LinearMeasurement { grid, op, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_operator_gram() {
        let g = DenseOperator::from_fn(2, 3, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let x = vec![C64::new(1.0, 0.5), C64::new(-1.0, 0.0), C64::new(0.0, 2.0)];
        let via_gram = g.gram().apply(&x);
        let direct = g.apply_adjoint(&g.apply(&x));
        for (a, b) in via_gram.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-13);
        }
        assert_eq!(g.gram().diagonal().len(), 3);
    }
}
