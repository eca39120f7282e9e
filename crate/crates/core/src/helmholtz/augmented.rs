use super::acquisition::ObservationOperator;
use super::system::{norm, HelmholtzSystem};
use crate::error::{Error, Result};
use crate::field::C64;
use crate::sparse::SparseCholesky;

/// Factored normal matrix `lambda A^H A + gamma P^T P` of the data-assimilated
/// wavefield problem.
pub struct AugmentedSystem<'a> {
    sys: &'a HelmholtzSystem,
    obs: &'a ObservationOperator,
    lambda: f64,
    gamma: f64,
    chol: SparseCholesky<C64>,
}

impl<'a> AugmentedSystem<'a> {
    pub fn new(
        sys: &'a HelmholtzSystem,
        obs: &'a ObservationOperator,
        lambda: f64,
        gamma: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite() && gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "augmented solve needs lambda > 0 and gamma >= 0, got {lambda}, {gamma}"
            )));
        }
        if obs.extended_indices().iter().any(|&i| i >= sys.len()) {
            return Err(Error::invalid("observation operator does not match the system"));
        }
        let mut t = sys.matrix().gram_triplets(lambda);
        t.extend(obs.extended_indices().iter().map(|&i| (i, i, C64::new(gamma, 0.0))));
        let chol = SparseCholesky::new(sys.len(), &t)?;
        Ok(AugmentedSystem { sys, obs, lambda, gamma, chol })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(lambda A^H A + gamma P^T P) u`.
    pub fn normal_apply(&self, u: &[C64]) -> Result<Vec<C64>> {
        let mut out = self.sys.apply_adjoint(&self.sys.apply(u)?)?;
        for v in out.iter_mut() {
            *v *= self.lambda;
        }
        for &i in self.obs.extended_indices() {
            out[i] += u[i] * self.gamma;
        }
        Ok(out)
    }

    /// `lambda A^H rhs_b + gamma P^T rhs_d`.
    pub fn normal_rhs(&self, rhs_b: &[C64], rhs_d: &[C64]) -> Result<Vec<C64>> {
        let mut r = self.sys.apply_adjoint(rhs_b)?;
        for v in r.iter_mut() {
            *v *= self.lambda;
        }
        Error::check_len(self.obs.len(), rhs_d.len())?;
        for (&i, &d) in self.obs.extended_indices().iter().zip(rhs_d) {
            r[i] += d * self.gamma;
        }
        Ok(r)
    }

    /// Minimizer of `gamma/2 |rhs_d - P u|^2 + lambda/2 |rhs_b - A u|^2`.
    pub fn solve(&self, rhs_b: &[C64], rhs_d: &[C64]) -> Result<Vec<C64>> {
        let r = self.normal_rhs(rhs_b, rhs_d)?;
        let rnorm = norm(&r);
        if rnorm == 0.0 {
            return Ok(vec![C64::new(0.0, 0.0); r.len()]);
        }
        let mut u = self.chol.solve(&r)?;
        for _ in 0..4 {
            let nu = self.normal_apply(&u)?;
            let res: Vec<C64> = r.iter().zip(&nu).map(|(a, b)| a - b).collect();
            if norm(&res) <= 1e-14 * rnorm {
                break;
            }
            let du = self.chol.solve(&res)?;
            let step = norm(&du);
            for (ui, di) in u.iter_mut().zip(&du) {
                *ui += di;
            }
            if step <= 1e-15 * norm(&u) {
                break;
            }
        }
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Solver("augmented wavefield solve produced non-finite values".into()));
        }
        Ok(u)
    }
}

/// One-shot form of [`AugmentedSystem::solve`].
pub fn augmented_wavefield_solve(
    sys: &HelmholtzSystem,
    obs: &ObservationOperator,
    rhs_b: &[C64],
    rhs_d: &[C64],
    lambda: f64,
    gamma: f64,
) -> Result<Vec<C64>> {
    AugmentedSystem::new(sys, obs, lambda, gamma)?.solve(rhs_b, rhs_d)
}
