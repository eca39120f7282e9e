//! Phase block of the magnitude/phase scheme: misfit, gradient, composite
//! gradient step and Armijo backtracking.

use super::hyper::{PhaseReg, RegHyperparams};
use super::normal::grad_gram_triplets;
use super::operator::{Gram, LinearOperator};
use super::prox::joint_shrink;
use crate::error::{Error, Result};
use crate::field::{
    grad_gram_into, grad_x_adjoint_into, grad_x_into, grad_z_adjoint_into, grad_z_into,
    tv_norm_slice, Grid2D, C64,
};
use crate::sparse::SparseCholesky;

const TV_PROX_ITERS: usize = 20;

fn polar(a: &[f64], theta: &[f64]) -> Vec<C64> {
    a.iter().zip(theta).map(|(&r, &t)| C64::from_polar(r, t)).collect()
}

fn residual(theta: &[f64], a: &[f64], op: &dyn LinearOperator, y: &[C64]) -> Vec<C64> {
    op.apply(&polar(a, theta)).iter().zip(y).map(|(g, y)| g - y).collect()
}

/// `f(theta) = 1/2 |y - G diag(exp(i theta)) a|^2`.
pub fn phase_misfit(theta: &[f64], a: &[f64], op: &dyn LinearOperator, y: &[C64]) -> f64 {
    0.5 * residual(theta, a, op, y).iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Gradient of [`phase_misfit`]:
/// `Im(diag(a exp(-i theta)) G^H (G diag(exp(i theta)) a - y))`.
pub fn phase_misfit_gradient(
    theta: &[f64],
    a: &[f64],
    op: &dyn LinearOperator,
    y: &[C64],
) -> Result<Vec<f64>> {
    Error::check_len(op.model_len(), theta.len())?;
    Error::check_len(op.model_len(), a.len())?;
    Error::check_len(op.data_len(), y.len())?;
    let back = op.apply_adjoint(&residual(theta, a, op, y));
    Ok(back
        .iter()
        .zip(a.iter().zip(theta))
        .map(|(g, (&r, &t))| (C64::from_polar(r, -t) * g).im)
        .collect())
}

/// Value of the phase regularizer.
pub fn phase_regularizer(grid: &Grid2D, theta: &[f64], reg: PhaseReg) -> Result<f64> {
    match reg {
        PhaseReg::TvPhase => tv_norm_slice(grid, theta),
        PhaseReg::SmoothPhase => {
            let mut g = vec![0.0; theta.len()];
            grad_gram_into(grid, 1.0, 1.0, theta, &mut g)?;
            Ok(0.5 * theta.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>())
        }
    }
}

/// `argmin_theta t phi(theta) + 1/2 |theta - v|^2`.
pub fn phase_prox(grid: &Grid2D, v: &[f64], t: f64, reg: PhaseReg) -> Result<Vec<f64>> {
    Error::check_len(grid.len(), v.len())?;
    if t <= 0.0 {
        return Ok(v.to_vec());
    }
    match reg {
        PhaseReg::SmoothPhase => {
            let mut tr = grad_gram_triplets(grid, t, t);
            tr.extend((0..grid.len()).map(|i| (i, i, 1.0)));
            SparseCholesky::new(grid.len(), &tr)?.solve(v)
        }
        PhaseReg::TvPhase => tv_prox(grid, v, t),
    }
}

/// Split-Bregman solution of the TV denoising problem with a fixed inner count.
fn tv_prox(grid: &Grid2D, v: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = grid.len();
    let mu = grid.h() * grid.h() / 8.0;
    let mut tr = grad_gram_triplets(grid, mu, mu);
    tr.extend((0..n).map(|i| (i, i, 1.0)));
    let chol = SparseCholesky::new(n, &tr)?;
    let (mut px, mut pz, mut bx, mut bz) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut gx, mut gz) = (vec![0.0; n], vec![0.0; n]);
    let (mut tx, mut tz) = (vec![0.0; n], vec![0.0; n]);
    let mut theta = v.to_vec();
    for _ in 0..TV_PROX_ITERS {
        let dx: Vec<f64> = px.iter().zip(&bx).map(|(p, b)| p - b).collect();
        let dz: Vec<f64> = pz.iter().zip(&bz).map(|(p, b)| p - b).collect();
        grad_x_adjoint_into(grid, &dx, &mut tx)?;
        grad_z_adjoint_into(grid, &dz, &mut tz)?;
        let rhs: Vec<f64> = (0..n).map(|i| v[i] + mu * (tx[i] + tz[i])).collect();
        theta = chol.solve(&rhs)?;
        grad_x_into(grid, &theta, &mut gx)?;
        grad_z_into(grid, &theta, &mut gz)?;
        let zx: Vec<f64> = gx.iter().zip(&bx).map(|(g, b)| g + b).collect();
        let zz: Vec<f64> = gz.iter().zip(&bz).map(|(g, b)| g + b).collect();
        (px, pz) = joint_shrink(&zx, &zz, t / mu, t / mu);
        for i in 0..n {
            bx[i] += gx[i] - px[i];
            bz[i] += gz[i] - pz[i];
        }
    }
    Ok(theta)
}

/// Composite-gradient search direction
/// `theta - prox_{(1-tau) w / (c lambda) phi}(theta - grad / c)`.
pub fn composite_gradient_step(
    grid: &Grid2D,
    theta: &[f64],
    grad: &[f64],
    c: f64,
    hyper: &RegHyperparams,
) -> Result<Vec<f64>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("curvature constant must be positive, got {c}")));
    }
    Error::check_len(theta.len(), grad.len())?;
    let v: Vec<f64> = theta.iter().zip(grad).map(|(t, g)| t - g / c).collect();
    let t = (1.0 - hyper.tau) * hyper.phase_weight / (c * hyper.lambda);
    let p = phase_prox(grid, &v, t, hyper.phase_reg)?;
    Ok(theta.iter().zip(&p).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoOutcome {
    pub beta: f64,
    pub stagnated: bool,
    /// Objective at the accepted point (the start value when stagnated).
    pub value: f64,
}

/// Largest `beta` in `{1, s, s^2, ...}` with
/// `objective(theta - beta delta) <= objective(theta) - alpha beta |delta|^2`.
pub fn armijo_search(
    theta: &[f64],
    delta: &[f64],
    hyper: &RegHyperparams,
    objective: impl Fn(&[f64]) -> f64,
) -> ArmijoOutcome {
    let f0 = objective(theta);
    let d2: f64 = delta.iter().map(|d| d * d).sum();
    let mut beta = 1.0;
    let mut trial = vec![0.0; theta.len()];
    for _ in 0..=hyper.armijo_max_shrinks {
        for ((t, &th), &d) in trial.iter_mut().zip(theta).zip(delta) {
            *t = th - beta * d;
        }
        let f = objective(&trial);
        if f <= f0 - hyper.armijo_alpha * beta * d2 {
            return ArmijoOutcome { beta, stagnated: false, value: f };
        }
        beta *= hyper.armijo_shrink;
    }
    ArmijoOutcome { beta: 0.0, stagnated: true, value: f0 }
}

/// Curvature surrogate for the phase misfit: the larger of a 10-step power
/// estimate of the Gauss-Newton Hessian `Re(conj(w) G^H G w)`, `w = a exp(i theta)`,
/// and `max_i a_i^2 (G^H G)_ii`.
pub fn curvature_estimate(gram: &Gram, a: &[f64], theta: &[f64]) -> f64 {
    let w = polar(a, theta);
    let diag = gram.diagonal();
    let diag_bound = a.iter().zip(&diag).map(|(r, g)| r * r * g).fold(0.0, f64::max);
    let mut v = vec![1.0 / (a.len() as f64).sqrt(); a.len()];
    let mut est: f64 = 0.0;
    for _ in 0..10 {
        let wv: Vec<C64> = w.iter().zip(&v).map(|(w, v)| w * *v).collect();
        let gv = gram.apply(&wv);
        let hv: Vec<f64> = w.iter().zip(&gv).map(|(w, g)| (w.conj() * g).re).collect();
        let norm = hv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        est = norm;
        v = hv.into_iter().map(|x| x / norm).collect();
    }
    est.max(diag_bound)
}
