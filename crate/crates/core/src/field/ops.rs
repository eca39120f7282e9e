use super::{Field, Grid2D, Scalar};
use crate::error::{Error, Result};

fn check(grid: &Grid2D, input: usize, output: usize) -> Result<()> {
    Error::check_len(grid.len(), input)?;
    Error::check_len(grid.len(), output)
}

/// Forward difference along x, zero in the last column.
pub fn grad_x_into<T: Scalar>(grid: &Grid2D, f: &[T], out: &mut [T]) -> Result<()> {
    check(grid, f.len(), out.len())?;
    let (nz, nx, inv_h) = (grid.nz(), grid.nx(), 1.0 / grid.h());
    for ix in 0..nx {
        for iz in 0..nz {
            let i = iz + ix * nz;
            out[i] = if ix + 1 < nx { (f[i + nz] - f[i]) * inv_h } else { T::ZERO };
        }
    }
    Ok(())
}

/// Forward difference along z, zero in the last row.
pub fn grad_z_into<T: Scalar>(grid: &Grid2D, f: &[T], out: &mut [T]) -> Result<()> {
    check(grid, f.len(), out.len())?;
    let (nz, nx, inv_h) = (grid.nz(), grid.nx(), 1.0 / grid.h());
    for ix in 0..nx {
        for iz in 0..nz {
            let i = iz + ix * nz;
            out[i] = if iz + 1 < nz { (f[i + 1] - f[i]) * inv_h } else { T::ZERO };
        }
    }
    Ok(())
}

pub fn grad_x_adjoint_into<T: Scalar>(grid: &Grid2D, v: &[T], out: &mut [T]) -> Result<()> {
    check(grid, v.len(), out.len())?;
    let (nz, nx, inv_h) = (grid.nz(), grid.nx(), 1.0 / grid.h());
    for ix in 0..nx {
        for iz in 0..nz {
            let i = iz + ix * nz;
            let mut acc = T::ZERO;
            if ix >= 1 {
                acc += v[i - nz];
            }
            if ix + 1 < nx {
                acc -= v[i];
            }
            out[i] = acc * inv_h;
        }
    }
    Ok(())
}

pub fn grad_z_adjoint_into<T: Scalar>(grid: &Grid2D, v: &[T], out: &mut [T]) -> Result<()> {
    check(grid, v.len(), out.len())?;
    let (nz, nx, inv_h) = (grid.nz(), grid.nx(), 1.0 / grid.h());
    for ix in 0..nx {
        for iz in 0..nz {
            let i = iz + ix * nz;
            let mut acc = T::ZERO;
            if iz >= 1 {
                acc += v[i - 1];
            }
            if iz + 1 < nz {
                acc -= v[i];
            }
            out[i] = acc * inv_h;
        }
    }
    Ok(())
}

/// `out = wx * Dx^T Dx f + wz * Dz^T Dz f`.
pub fn grad_gram_into<T: Scalar>(
    grid: &Grid2D,
    wx: f64,
    wz: f64,
    f: &[T],
    out: &mut [T],
) -> Result<()> {
    check(grid, f.len(), out.len())?;
    let n = grid.len();
    let mut d = vec![T::ZERO; n];
    let mut tmp = vec![T::ZERO; n];
    grad_x_into(grid, f, &mut d)?;
    grad_x_adjoint_into(grid, &d, &mut tmp)?;
    grad_z_into(grid, f, &mut d)?;
    grad_z_adjoint_into(grid, &d, out)?;
    for (o, t) in out.iter_mut().zip(&tmp) {
        *o = *o * wz + *t * wx;
    }
    Ok(())
}

type SliceOp<T> = fn(&Grid2D, &[T], &mut [T]) -> Result<()>;

fn apply<T: Scalar>(f: &Field<T>, op: SliceOp<T>) -> Field<T> {
    let mut out = vec![T::ZERO; f.len()];
    op(f.grid(), f.values(), &mut out).expect("field length matches its grid");
    Field::new(*f.grid(), out).expect("output length matches grid")
}

pub fn grad_x<T: Scalar>(f: &Field<T>) -> Field<T> {
    apply(f, grad_x_into)
}

pub fn grad_z<T: Scalar>(f: &Field<T>) -> Field<T> {
    apply(f, grad_z_into)
}

pub fn grad_x_adjoint<T: Scalar>(f: &Field<T>) -> Field<T> {
    apply(f, grad_x_adjoint_into)
}

pub fn grad_z_adjoint<T: Scalar>(f: &Field<T>) -> Field<T> {
    apply(f, grad_z_adjoint_into)
}

/// Isotropic TV: `sum sqrt(|Dx f|^2 + |Dz f|^2)`.
pub fn tv_norm_slice<T: Scalar>(grid: &Grid2D, f: &[T]) -> Result<f64> {
    Error::check_len(grid.len(), f.len())?;
    let mut dx = vec![T::ZERO; f.len()];
    let mut dz = vec![T::ZERO; f.len()];
    grad_x_into(grid, f, &mut dx)?;
    grad_z_into(grid, f, &mut dz)?;
    Ok(dx.iter().zip(&dz).map(|(a, b)| (a.abs2() + b.abs2()).sqrt()).sum())
}

pub fn tv_norm<T: Scalar>(f: &Field<T>) -> f64 {
    tv_norm_slice(f.grid(), f.values()).expect("field length matches its grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ComplexField, RealField, C64};

    #[test]
    fn ramp_along_x() {
        let g = Grid2D::new(3, 4, 1.0).unwrap();
        let f = RealField::from_fn(g, |_, ix| ix as f64);
        let d = grad_x(&f);
        for iz in 0..3 {
            for ix in 0..4 {
                assert_eq!(d.get(iz, ix), if ix < 3 { 1.0 } else { 0.0 });
            }
        }
        assert!(grad_z(&f).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spacing_scales_differences() {
        let g = Grid2D::new(4, 2, 0.5).unwrap();
        let f = RealField::from_fn(g, |iz, _| iz as f64);
        assert_eq!(grad_z(&f).get(0, 0), 2.0);
    }

    #[test]
    fn constant_field_has_zero_gradient_and_tv() {
        let g = Grid2D::new(5, 6, 3.0).unwrap();
        let f = ComplexField::constant(g, C64::new(2.0, -1.0));
        assert!(grad_x(&f).values().iter().all(|v| v.norm() == 0.0));
        assert!(grad_z(&f).values().iter().all(|v| v.norm() == 0.0));
        assert_eq!(tv_norm(&f), 0.0);
    }

    #[test]
    fn step_field_tv_by_direct_summation() {
        let g = Grid2D::new(4, 5, 1.0).unwrap();
        let f = RealField::from_fn(g, |_, ix| if ix < 2 { 0.0 } else { 1.0 });
        let mut expected = 0.0;
        for ix in 0..5 {
            for iz in 0..4 {
                let dx = if ix + 1 < 5 { f.get(iz, ix + 1) - f.get(iz, ix) } else { 0.0 };
                let dz = if iz + 1 < 4 { f.get(iz + 1, ix) - f.get(iz, ix) } else { 0.0 };
                expected += (dx * dx + dz * dz).sqrt();
            }
        }
        assert_eq!(expected, 4.0);
        assert_eq!(tv_norm(&f), expected);
    }

    #[test]
    fn adjoint_of_zero_is_zero() {
        let g = Grid2D::new(3, 3, 1.0).unwrap();
        let z = ComplexField::zeros(g);
        assert_eq!(grad_x_adjoint(&z), z);
        assert_eq!(grad_z_adjoint(&z), z);
    }

    #[test]
    fn gram_matches_composition() {
        let g = Grid2D::new(4, 3, 2.0).unwrap();
        let f = RealField::from_fn(g, |iz, ix| ((iz * 7 + ix * 3) % 5) as f64);
        let mut out = vec![0.0; g.len()];
        grad_gram_into(&g, 2.0, 3.0, f.values(), &mut out).unwrap();
        let ax = grad_x_adjoint(&grad_x(&f));
        let az = grad_z_adjoint(&grad_z(&f));
        for i in 0..g.len() {
            assert!((out[i] - (2.0 * ax.values()[i] + 3.0 * az.values()[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn length_mismatch_is_reported() {
        let g = Grid2D::new(3, 3, 1.0).unwrap();
        let mut out = vec![0.0; 9];
        assert!(grad_x_into(&g, &[0.0; 8], &mut out).is_err());
        assert!(tv_norm_slice(&g, &[0.0; 10]).is_err());
    }
}
