//! Normal equations `lambda G^H G + gx Dx^T Dx + gz Dz^T Dz` of the TV subproblems.

use faer::Mat;

use super::operator::Gram;
use crate::error::{Error, Result};
use crate::field::{grad_gram_into, Grid2D, C64};
use crate::sparse::{DenseCholesky, SparseCholesky};

/// Triplets of `wx Dx^T Dx + wz Dz^T Dz`.
pub fn grad_gram_triplets(grid: &Grid2D, wx: f64, wz: f64) -> Vec<(usize, usize, f64)> {
    let (nz, nx) = (grid.nz(), grid.nx());
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut t = Vec::with_capacity(grid.len() * 8);
    let mut pair = |a: usize, b: usize, w: f64| {
        let v = w * inv_h2;
        t.push((a, a, v));
        t.push((b, b, v));
        t.push((a, b, -v));
        t.push((b, a, -v));
    };
    for ix in 0..nx {
        for iz in 0..nz {
            let k = iz + ix * nz;
            if ix + 1 < nx && wx != 0.0 {
                pair(k, k + nz, wx);
            }
            if iz + 1 < nz && wz != 0.0 {
                pair(k, k + 1, wz);
            }
        }
    }
    t
}

enum Factor {
    DenseComplex { mat: Mat<C64>, chol: DenseCholesky<C64> },
    DenseReal { mat: Mat<f64>, chol: DenseCholesky<f64> },
    /// Real sparse matrix `diag(d) + gradient terms`; serves complex right-hand
    /// sides by solving real and imaginary parts separately.
    SparseReal { diag: Vec<f64>, chol: SparseCholesky<f64> },
}

/// Factored normal matrix with iterative refinement.
pub struct NormalSystem {
    grid: Grid2D,
    gx: f64,
    gz: f64,
    factor: Factor,
}

fn dense_with_gradients<T: Copy + std::ops::AddAssign + From<f64>>(
    mut mat: Mat<T>,
    grid: &Grid2D,
    gx: f64,
    gz: f64,
) -> Mat<T> {
    for (i, j, v) in grad_gram_triplets(grid, gx, gz) {
        mat[(i, j)] += T::from(v);
    }
    mat
}

fn sparse_real(grid: &Grid2D, diag: Vec<f64>, gx: f64, gz: f64) -> Result<Factor> {
    let mut t = grad_gram_triplets(grid, gx, gz);
    let total: f64 = diag.iter().sum();
    check_constant_mode(total, diag.iter().map(|d| d.abs()).sum())?;
    t.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
    let chol = SparseCholesky::new(grid.len(), &t)?;
    Ok(Factor::SparseReal { diag, chol })
}

/// The gradient terms annihilate constants, so the data term must not.
fn check_constant_mode(constant_energy: f64, scale: f64) -> Result<()> {
    if !(constant_energy > 1e-13 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Solver("constant fields lie in the null space".into()));
    }
    Ok(())
}

fn entry_sums(it: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    it.fold((0.0, 0.0), |(s, a), (v, m)| (s + v, a + m))
}

fn check_weights(lambda: f64, gx: f64, gz: f64) -> Result<()> {
    if !(lambda >= 0.0 && gx >= 0.0 && gz >= 0.0 && (lambda + gx + gz).is_finite()) {
        return Err(Error::invalid(format!(
            "normal-equation weights must be nonnegative, got lambda={lambda}, gamma=({gx}, {gz})"
        )));
    }
    Ok(())
}

impl NormalSystem {
    /// System for a complex unknown.
    pub fn complex(grid: &Grid2D, gram: &Gram, lambda: f64, gx: f64, gz: f64) -> Result<Self> {
        check_weights(lambda, gx, gz)?;
        Error::check_len(grid.len(), gram.len())?;
        let factor = match gram {
            Gram::Dense(g) => {
                let data = Mat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] * lambda);
                let (sum, scale) = entry_sums(data.col_iter().flat_map(|c| c.iter().map(|z| (z.re, z.norm()))));
                check_constant_mode(sum, scale).map_err(singular)?;
                let mat = dense_with_gradients(data, grid, gx, gz);
                let chol = DenseCholesky::new(&mat).map_err(singular)?;
                Factor::DenseComplex { mat, chol }
            }
            Gram::Diagonal(d) => {
                sparse_real(grid, d.iter().map(|v| v * lambda).collect(), gx, gz).map_err(singular)?
            }
        };
        Ok(NormalSystem { grid: *grid, gx, gz, factor })
    }

    /// System for a real magnitude under operator `G diag(exp(i theta))`:
    /// `lambda Re(conj(D) G^H G D) + gradient terms`.
    pub fn magnitude(
        grid: &Grid2D,
        gram: &Gram,
        theta: &[f64],
        lambda: f64,
        gx: f64,
        gz: f64,
    ) -> Result<Self> {
        check_weights(lambda, gx, gz)?;
        Error::check_len(grid.len(), gram.len())?;
        Error::check_len(grid.len(), theta.len())?;
        let factor = match gram {
            Gram::Dense(g) => {
                let rot: Vec<C64> = theta.iter().map(|&t| C64::from_polar(1.0, t)).collect();
                let data = Mat::from_fn(g.nrows(), g.ncols(), |i, j| {
                    (rot[i].conj() * g[(i, j)] * rot[j]).re * lambda
                });
                let (sum, scale) = entry_sums(data.col_iter().flat_map(|c| c.iter().map(|&v| (v, v.abs()))));
                check_constant_mode(sum, scale).map_err(singular)?;
                let mat = dense_with_gradients(data, grid, gx, gz);
                let chol = DenseCholesky::new(&mat).map_err(singular)?;
                Factor::DenseReal { mat, chol }
            }
            Gram::Diagonal(d) => {
                sparse_real(grid, d.iter().map(|v| v * lambda).collect(), gx, gz).map_err(singular)?
            }
        };
        Ok(NormalSystem { grid: *grid, gx, gz, factor })
    }

    pub fn apply_complex(&self, x: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.grid.len(), x.len())?;
        let mut out = vec![C64::new(0.0, 0.0); x.len()];
        match &self.factor {
            Factor::DenseComplex { mat, .. } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..x.len()).map(|j| mat[(i, j)] * x[j]).sum();
                }
            }
            Factor::SparseReal { diag, .. } => {
                grad_gram_into(&self.grid, self.gx, self.gz, x, &mut out)?;
                for ((o, d), v) in out.iter_mut().zip(diag).zip(x) {
                    *o += v * *d;
                }
            }
            Factor::DenseReal { .. } => {
                return Err(Error::invalid("magnitude system applied to a complex vector"))
            }
        }
        Ok(out)
    }

    pub fn apply_real(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.grid.len(), x.len())?;
        let mut out = vec![0.0; x.len()];
        match &self.factor {
            Factor::DenseReal { mat, .. } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..x.len()).map(|j| mat[(i, j)] * x[j]).sum();
                }
            }
            Factor::SparseReal { diag, .. } => {
                grad_gram_into(&self.grid, self.gx, self.gz, x, &mut out)?;
                for ((o, d), v) in out.iter_mut().zip(diag).zip(x) {
                    *o += v * d;
                }
            }
            Factor::DenseComplex { .. } => {
                return Err(Error::invalid("complex system applied to a real vector"))
            }
        }
        Ok(out)
    }

    fn raw_complex(&self, b: &[C64]) -> Result<Vec<C64>> {
        match &self.factor {
            Factor::DenseComplex { chol, .. } => chol.solve(b),
            Factor::SparseReal { chol, .. } => {
                let re = chol.solve(&b.iter().map(|z| z.re).collect::<Vec<_>>())?;
                let im = chol.solve(&b.iter().map(|z| z.im).collect::<Vec<_>>())?;
                Ok(re.into_iter().zip(im).map(|(r, i)| C64::new(r, i)).collect())
            }
            Factor::DenseReal { .. } => Err(Error::invalid("magnitude system solved for a complex vector")),
        }
    }

    fn raw_real(&self, b: &[f64]) -> Result<Vec<f64>> {
        match &self.factor {
            Factor::DenseReal { chol, .. } => chol.solve(b),
            Factor::SparseReal { chol, .. } => chol.solve(b),
            Factor::DenseComplex { .. } => Err(Error::invalid("complex system solved for a real vector")),
        }
    }

    pub fn solve_complex(&self, b: &[C64]) -> Result<Vec<C64>> {
        refine(b, |r| self.raw_complex(r), |x| self.apply_complex(x), |z| z.norm_sqr())
    }

    pub fn solve_real(&self, b: &[f64]) -> Result<Vec<f64>> {
        refine(b, |r| self.raw_real(r), |x| self.apply_real(x), |v| v * v)
    }
}

fn singular(e: Error) -> Error {
    Error::Solver(format!("TV normal matrix is singular ({e}); check lambda and the operator's null space"))
}

fn refine<T>(
    b: &[T],
    solve: impl Fn(&[T]) -> Result<Vec<T>>,
    apply: impl Fn(&[T]) -> Result<Vec<T>>,
    abs2: impl Fn(T) -> f64,
) -> Result<Vec<T>>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::AddAssign,
{
    let bnorm = b.iter().map(|&v| abs2(v)).sum::<f64>().sqrt();
    let mut x = solve(b)?;
    if bnorm == 0.0 {
        return Ok(x);
    }
    for _ in 0..2 {
        let ax = apply(&x)?;
        let r: Vec<T> = b.iter().zip(&ax).map(|(&p, &q)| p - q).collect();
        if r.iter().map(|&v| abs2(v)).sum::<f64>().sqrt() <= 1e-13 * bnorm {
            break;
        }
        for (xi, di) in x.iter_mut().zip(solve(&r)?) {
            *xi += di;
        }
    }
    if x.iter().any(|&v| !abs2(v).is_finite()) {
        return Err(Error::Solver("TV normal solve produced non-finite values".into()));
    }
    Ok(x)
}
