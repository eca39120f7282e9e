//! Grids, real and complex fields, difference operators and the isotropic TV functional.

mod grid;
pub mod io;
mod ops;

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use grid::Grid2D;
pub use ops::{
    grad_x, grad_x_adjoint, grad_x_adjoint_into, grad_x_into, grad_z, grad_z_adjoint,
    grad_z_adjoint_into, grad_z_into, grad_gram_into, tv_norm, tv_norm_slice,
};

pub type C64 = Complex64;

/// Scalar types a field can hold.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    const ZERO: Self;
    fn abs2(self) -> f64;
    /// Conjugate inner product term `conj(self) * other`.
    fn inner(self, other: Self) -> C64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    #[inline]
    fn abs2(self) -> f64 {
        self * self
    }
    #[inline]
    fn inner(self, other: Self) -> C64 {
        C64::new(self * other, 0.0)
    }
}

impl Scalar for C64 {
    const ZERO: Self = C64::new(0.0, 0.0);
    #[inline]
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn inner(self, other: Self) -> C64 {
        self.conj() * other
    }
}

/// Values sampled on a [`Grid2D`], column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid2D,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<C64>;

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid2D, values: Vec<T>) -> Result<Self> {
        Error::check_len(grid.len(), values.len())?;
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, T::ZERO)
    }

    pub fn constant(grid: Grid2D, value: T) -> Self {
        Field { grid, values: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx() {
            for iz in 0..grid.nz() {
                values.push(f(iz, ix));
            }
        }
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, iz: usize, ix: usize) -> T {
        self.values[self.grid.index(iz, ix)]
    }

    pub fn set(&mut self, iz: usize, ix: usize, value: T) {
        let i = self.grid.index(iz, ix);
        self.values[i] = value;
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `<self, other> = sum conj(self_i) * other_i`.
    pub fn dot(&self, other: &Self) -> Result<C64> {
        Error::check_len(self.len(), other.len())?;
        Ok(self.values.iter().zip(&other.values).map(|(&a, &b)| a.inner(b)).sum())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs2()).fold(0.0, f64::max).sqrt()
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| C64::new(v, 0.0))
    }
}

/// Phase in `(-pi, pi]`, with the phase of zero defined as 0.
#[inline]
pub fn phase(z: C64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        return 0.0;
    }
    let p = z.im.atan2(z.re);
    if p <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        p
    }
}

impl ComplexField {
    pub fn from_parts(re: &RealField, im: &RealField) -> Result<Self> {
        Self::combine(re, im, C64::new)
    }

    pub fn from_polar(magnitude: &RealField, phase: &RealField) -> Result<Self> {
        Self::combine(magnitude, phase, C64::from_polar)
    }

    fn combine(a: &RealField, b: &RealField, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        if !a.grid.same_shape(&b.grid) {
            return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
        }
        let values = a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect();
        Ok(Field { grid: a.grid, values })
    }

    pub fn real(&self) -> RealField {
        self.map(|z| z.re)
    }

    pub fn imag(&self) -> RealField {
        self.map(|z| z.im)
    }

    pub fn magnitude(&self) -> RealField {
        self.map(|z| z.norm())
    }

    pub fn phase(&self) -> RealField {
        self.map(phase)
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, c: C64) -> ComplexField {
        self.map(|z| z * c)
    }
}
