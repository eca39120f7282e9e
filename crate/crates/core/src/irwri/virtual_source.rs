use crate::error::{Error, Result};
use crate::field::C64;
use crate::helmholtz::HelmholtzSystem;
use crate::regularize::{Gram, LinearOperator};

/// Stacked operator `L` and right-hand side `y` of the model subproblem, one
/// block per (frequency, source) pair. Row `r` of every block couples to model
/// cell `cells[r]`, so each column of `L` has disjoint row support and the
/// Gram matrix stays diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualSourceSystem {
    n: usize,
    cells: Vec<usize>,
    l: Vec<Vec<C64>>,
    y: Vec<Vec<C64>>,
}

impl VirtualSourceSystem {
    /// Square diagonal blocks: row `i` couples to cell `i`.
    pub fn new(n: usize, l: Vec<Vec<C64>>, y: Vec<Vec<C64>>) -> Result<Self> {
        Self::with_cells(n, (0..n).collect(), l, y)
    }

    pub fn with_cells(n: usize, cells: Vec<usize>, l: Vec<Vec<C64>>, y: Vec<Vec<C64>>) -> Result<Self> {
        if l.is_empty() {
            return Err(Error::invalid("virtual-source system needs at least one block"));
        }
        if let Some(&c) = cells.iter().find(|&&c| c >= n) {
            return Err(Error::invalid(format!("row maps to cell {c}, but the model has {n} cells")));
        }
        Error::check_len(l.len(), y.len())?;
        for (lb, yb) in l.iter().zip(&y) {
            Error::check_len(cells.len(), lb.len())?;
            Error::check_len(cells.len(), yb.len())?;
        }
        Ok(VirtualSourceSystem { n, cells, l, y })
    }

    /// Rows per block.
    pub fn block_len(&self) -> usize {
        self.cells.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.l.len()
    }

    pub fn blocks(&self) -> &[Vec<C64>] {
        &self.l
    }

    pub fn rhs_blocks(&self) -> &[Vec<C64>] {
        &self.y
    }

    /// Stacked right-hand side.
    pub fn rhs(&self) -> Vec<C64> {
        self.y.concat()
    }

    /// `sum_l |L_l|^2` per cell.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n];
        for b in &self.l {
            for (&c, v) in self.cells.iter().zip(b) {
                w[c] += v.norm_sqr();
            }
        }
        w
    }

    /// Copy with `L / l` and `y / (l * scale)`, where `l^2` is the median cell
    /// weight, so that the solution is expressed in units of `scale` and the
    /// operator has unit typical column energy. Returns the copy and `l`.
    pub fn normalized(&self, scale: f64) -> Result<(VirtualSourceSystem, f64)> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("model scale must be positive, got {scale}")));
        }
        let mut w = self.weights();
        w.sort_by(|a, b| a.total_cmp(b));
        let med = w[w.len() / 2];
        let l = if med > 0.0 { med.sqrt() } else { w.last().copied().unwrap_or(0.0).sqrt() };
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Solver("virtual sources vanish everywhere".into()));
        }
        let scaled = |blocks: &[Vec<C64>], f: f64| blocks.iter().map(|b| b.iter().map(|v| v * f).collect()).collect();
        let sys = VirtualSourceSystem {
            n: self.n,
            cells: self.cells.clone(),
            l: scaled(&self.l, 1.0 / l),
            y: scaled(&self.y, 1.0 / (l * scale)),
        };
        Ok((sys, l))
    }

    /// Per-cell weighted least squares `sum conj(L) y / sum |L|^2`. Cells with no
    /// weight keep `previous` and are returned in the second list.
    pub fn least_squares(&self, previous: &[C64]) -> Result<(Vec<C64>, Vec<usize>)> {
        Error::check_len(self.n, previous.len())?;
        let num = self.apply_adjoint(&self.rhs());
        let w = self.weights();
        let mut keep = Vec::new();
        let m = (0..self.n)
            .map(|i| {
                if w[i] > 0.0 {
                    num[i] / w[i]
                } else {
                    keep.push(i);
                    previous[i]
                }
            })
            .collect();
        Ok((m, keep))
    }
}

impl LinearOperator for VirtualSourceSystem {
    fn model_len(&self) -> usize {
        self.n
    }

    fn data_len(&self) -> usize {
        self.cells.len() * self.l.len()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.l.iter().flat_map(|b| b.iter().zip(&self.cells).map(|(l, &c)| l * x[c])).collect()
    }

    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for (b, chunk) in self.l.iter().zip(y.chunks(self.cells.len())) {
            for ((&c, l), v) in self.cells.iter().zip(b).zip(chunk) {
                out[c] += l.conj() * v;
            }
        }
        out
    }

    fn gram(&self) -> Gram {
        Gram::Diagonal(self.weights())
    }
}

/// Block for one (frequency, source) over all extended rows:
/// `L = omega^2 (M u)` and `y = b_dual + b - Lap u`. Absorbing-layer rows
/// belong to the edge cell replicated into them (see `Domain::replication_map`).
pub fn virtual_source_block(
    sys: &HelmholtzSystem,
    u: &[C64],
    b: &[C64],
    b_dual: &[C64],
) -> Result<(Vec<C64>, Vec<C64>)> {
    Error::check_len(sys.len(), b.len())?;
    Error::check_len(sys.len(), b_dual.len())?;
    let l = sys.virtual_source(u)?;
    let lap_u = sys.laplacian().mul_vec(u)?;
    let y = b_dual.iter().zip(b).zip(&lap_u).map(|((d, b), lu)| d + b - lu).collect();
    Ok((l, y))
}
