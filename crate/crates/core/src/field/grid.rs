use crate::error::{Error, Result};

/// Uniform 2D grid. Fields are stored column-major: `index = iz + ix * nz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nz: usize,
    nx: usize,
    h: f64,
}

impl Grid2D {
    pub fn new(nz: usize, nx: usize, h: f64) -> Result<Self> {
        if nz < 2 || nx < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 samples per axis, got nz={nz}, nx={nx}"
            )));
        }
        Self::checked(nz, nx, h)
    }

    /// A single-column grid for 1D signals (`nx = 1`, `grad_x` vanishes).
    pub fn line(n: usize, h: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("line grid needs n >= 2, got {n}")));
        }
        Self::checked(n, 1, h)
    }

    fn checked(nz: usize, nx: usize, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Grid2D { nz, nx, h })
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nz * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, iz: usize, ix: usize) -> usize {
        debug_assert!(iz < self.nz && ix < self.nx);
        iz + ix * self.nz
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nz, i / self.nz)
    }

    /// Physical position `(z, x)` in metres of a cell, origin at cell (0, 0).
    pub fn position(&self, i: usize) -> (f64, f64) {
        let (iz, ix) = self.coords(i);
        (iz as f64 * self.h, ix as f64 * self.h)
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nz == other.nz && self.nx == other.nx
    }
}
