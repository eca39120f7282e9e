//! Split-Bregman TV solvers for complex unknowns (isotropic, real/imaginary,
//! magnitude/phase) with optional data refinement.

use std::io::Write;

use super::hyper::RegHyperparams;
use super::normal::NormalSystem;
use super::operator::{Gram, LinearMeasurement, LinearOperator};
use super::phase::{
    armijo_search, composite_gradient_step, curvature_estimate, phase_misfit, phase_misfit_gradient,
    phase_regularizer,
};
use super::prox::{joint_prox_update, joint_shrink, separate_ri_prox_update};
use crate::error::{Error, Result};
use crate::field::{
    grad_x_adjoint_into, grad_x_into, grad_z_adjoint_into, grad_z_into, phase, tv_norm_slice, Grid2D,
    Scalar, C64,
};

/// Auxiliary gradients `p` and scaled duals `q` of the split-Bregman scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct TvAuxState<T> {
    pub px: Vec<T>,
    pub pz: Vec<T>,
    pub qx: Vec<T>,
    pub qz: Vec<T>,
}

impl<T: Scalar> TvAuxState<T> {
    pub fn zeros(n: usize) -> Self {
        TvAuxState { px: vec![T::ZERO; n], pz: vec![T::ZERO; n], qx: vec![T::ZERO; n], qz: vec![T::ZERO; n] }
    }

    /// `gx Dx^T (px + qx) + gz Dz^T (pz + qz)`.
    fn penalty_rhs(&self, grid: &Grid2D, gx: f64, gz: f64) -> Result<Vec<T>> {
        let n = grid.len();
        let sx: Vec<T> = self.px.iter().zip(&self.qx).map(|(&p, &q)| p + q).collect();
        let sz: Vec<T> = self.pz.iter().zip(&self.qz).map(|(&p, &q)| p + q).collect();
        let (mut ax, mut az) = (vec![T::ZERO; n], vec![T::ZERO; n]);
        grad_x_adjoint_into(grid, &sx, &mut ax)?;
        grad_z_adjoint_into(grid, &sz, &mut az)?;
        Ok(ax.into_iter().zip(az).map(|(a, b)| a * gx + b * gz).collect())
    }

    /// Returns `(grad_x x - q_x, grad_z x - q_z)` and the gradients themselves.
    fn split(&self, grid: &Grid2D, x: &[T]) -> Result<[Vec<T>; 4]> {
        let n = grid.len();
        let (mut gx, mut gz) = (vec![T::ZERO; n], vec![T::ZERO; n]);
        grad_x_into(grid, x, &mut gx)?;
        grad_z_into(grid, x, &mut gz)?;
        let zx = gx.iter().zip(&self.qx).map(|(&g, &q)| g - q).collect();
        let zz = gz.iter().zip(&self.qz).map(|(&g, &q)| g - q).collect();
        Ok([zx, zz, gx, gz])
    }

    /// Stores the new `p` and applies `q <- q + p - grad x`.
    fn accept(&mut self, px: Vec<T>, pz: Vec<T>, gx: &[T], gz: &[T]) {
        for i in 0..px.len() {
            self.qx[i] += px[i] - gx[i];
            self.qz[i] += pz[i] - gz[i];
        }
        self.px = px;
        self.pz = pz;
    }
}

/// Magnitude and unwrapped phase of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarState {
    pub a: Vec<f64>,
    pub theta: Vec<f64>,
}

impl PolarState {
    pub fn zeros(n: usize) -> Self {
        PolarState { a: vec![0.0; n], theta: vec![0.0; n] }
    }

    pub fn from_model(x: &[C64]) -> Self {
        PolarState { a: x.iter().map(|z| z.norm()).collect(), theta: x.iter().map(|&z| phase(z)).collect() }
    }

    pub fn to_complex(&self) -> Vec<C64> {
        self.a.iter().zip(&self.theta).map(|(&r, &t)| C64::from_polar(r, t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Isotropic TV of the complex field.
    Alg1,
    /// Separate TV of real and imaginary parts.
    Alg2,
    /// TV of the magnitude plus a phase regularizer.
    Alg3,
}

/// Everything a TV solver carries between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct RegState {
    pub x: Vec<C64>,
    pub aux: TvAuxState<C64>,
    pub mag_aux: TvAuxState<f64>,
    pub polar: PolarState,
    /// Phase curvature constant; `None` until first estimated.
    pub curvature: Option<f64>,
    pub iter: usize,
}

impl RegState {
    pub fn new(n: usize) -> Self {
        RegState {
            x: vec![C64::new(0.0, 0.0); n],
            aux: TvAuxState::zeros(n),
            mag_aux: TvAuxState::zeros(n),
            polar: PolarState::zeros(n),
            curvature: None,
            iter: 0,
        }
    }

    /// Zero auxiliary state with the polar pair taken from `x`.
    pub fn from_model(x: &[C64]) -> Self {
        RegState { x: x.to_vec(), polar: PolarState::from_model(x), ..Self::new(x.len()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `|y_eff - G x|`.
    pub data_misfit: f64,
    /// TV of the magnitude (Alg3) or of the complex field.
    pub tv_a: f64,
    pub phase_reg: f64,
    /// `|y0 - G x|`.
    pub constraint_violation: f64,
    pub beta: f64,
    pub c: f64,
}

pub fn write_iteration_log<W: Write>(records: &[IterationRecord], mut w: W) -> Result<()> {
    writeln!(w, "iter,data_misfit,tv_a,phase_reg,constraint_violation,beta,c")?;
    for r in records {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{},{:e}",
            r.iter, r.data_misfit, r.tv_a, r.phase_reg, r.constraint_violation, r.beta, r.c
        )?;
    }
    Ok(())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y' = y_running + (y0 - G x)`.
pub fn refine_data(y_running: &[C64], y0: &[C64], op: &dyn LinearOperator, x: &[C64]) -> Result<Vec<C64>> {
    Error::check_len(y0.len(), y_running.len())?;
    let gx = op.apply(x);
    Error::check_len(y0.len(), gx.len())?;
    Ok(y_running.iter().zip(y0).zip(&gx).map(|((r, y), g)| r + (y - g)).collect())
}

/// Least-squares solution of the stacked TV subproblem
/// `[sqrt(lambda) G; sqrt(gx) Dx; sqrt(gz) Dz] x ~ [sqrt(lambda) y; sqrt(gx)(px+qx); sqrt(gz)(pz+qz)]`.
pub fn tv_model_solve(
    meas: &LinearMeasurement,
    y_eff: &[C64],
    state: &TvAuxState<C64>,
    hyper: &RegHyperparams,
) -> Result<Vec<C64>> {
    let normal = NormalSystem::complex(&meas.grid, &meas.op.gram(), hyper.lambda, hyper.gamma_x, hyper.gamma_z)?;
    complex_step(meas, &normal, y_eff, state, hyper)
}

fn complex_step(
    meas: &LinearMeasurement,
    normal: &NormalSystem,
    y_eff: &[C64],
    aux: &TvAuxState<C64>,
    hyper: &RegHyperparams,
) -> Result<Vec<C64>> {
    Error::check_len(meas.op.data_len(), y_eff.len())?;
    let mut rhs = aux.penalty_rhs(&meas.grid, hyper.gamma_x, hyper.gamma_z)?;
    for (r, g) in rhs.iter_mut().zip(meas.op.apply_adjoint(y_eff)) {
        *r += g * hyper.lambda;
    }
    normal.solve_complex(&rhs)
}

/// Iterative TV solver over a fixed measurement.
pub struct TvSolver<'a> {
    meas: &'a LinearMeasurement<'a>,
    hyper: RegHyperparams,
    scheme: Scheme,
    gram: Gram,
    normal: Option<NormalSystem>,
    y_eff: Vec<C64>,
    pub state: RegState,
    log: Vec<IterationRecord>,
}

impl<'a> TvSolver<'a> {
    pub fn new(meas: &'a LinearMeasurement<'a>, hyper: RegHyperparams, scheme: Scheme) -> Result<Self> {
        Self::with_state(meas, hyper, scheme, RegState::new(meas.grid.len()))
    }

    pub fn with_state(
        meas: &'a LinearMeasurement<'a>,
        hyper: RegHyperparams,
        scheme: Scheme,
        state: RegState,
    ) -> Result<Self> {
        hyper.validate()?;
        Error::check_len(meas.grid.len(), state.x.len())?;
        Ok(TvSolver {
            meas,
            hyper,
            scheme,
            gram: meas.op.gram(),
            normal: None,
            y_eff: meas.y.clone(),
            state,
            log: Vec::new(),
        })
    }

    pub fn solution(&self) -> &[C64] {
        &self.state.x
    }

    pub fn log(&self) -> &[IterationRecord] {
        &self.log
    }

    pub fn into_parts(self) -> (RegState, Vec<IterationRecord>) {
        (self.state, self.log)
    }

    fn normal(&mut self) -> Result<&NormalSystem> {
        if self.normal.is_none() {
            let h = &self.hyper;
            let sys = match self.scheme {
                Scheme::Alg3 => NormalSystem::magnitude(
                    &self.meas.grid,
                    &self.gram,
                    &self.state.polar.theta,
                    h.lambda,
                    h.gamma_x,
                    h.gamma_z,
                )?,
                _ => NormalSystem::complex(&self.meas.grid, &self.gram, h.lambda, h.gamma_x, h.gamma_z)?,
            };
            self.normal = Some(sys);
        }
        Ok(self.normal.as_ref().expect("normal system was just built"))
    }

    /// One outer iteration; with `refine` the data are updated afterwards.
    pub fn iterate(&mut self, refine: bool) -> Result<IterationRecord> {
        let grid = self.meas.grid;
        let h = self.hyper;
        let (mut beta, mut phase_reg) = (f64::NAN, 0.0);
        match self.scheme {
            Scheme::Alg1 | Scheme::Alg2 => {
                self.normal()?;
                let normal = self.normal.as_ref().expect("built above");
                let x = complex_step(self.meas, normal, &self.y_eff, &self.state.aux, &h)?;
                let [zx, zz, gx, gz] = self.state.aux.split(&grid, &x)?;
                let (px, pz) = match self.scheme {
                    Scheme::Alg1 => joint_prox_update(&zx, &zz, h.gamma_x, h.gamma_z),
                    _ => separate_ri_prox_update(&zx, &zz, h.gamma_x, h.gamma_z, h.tau),
                };
                self.state.aux.accept(px, pz, &gx, &gz);
                self.state.x = x;
            }
            Scheme::Alg3 => {
                (beta, phase_reg) = self.polar_iteration()?;
            }
        }
        let gx = self.meas.op.apply(&self.state.x);
        let misfit: Vec<C64> = self.y_eff.iter().zip(&gx).map(|(y, g)| y - g).collect();
        let violation: Vec<C64> = self.meas.y.iter().zip(&gx).map(|(y, g)| y - g).collect();
        if refine {
            for (ye, v) in self.y_eff.iter_mut().zip(&violation) {
                *ye += v;
            }
        }
        if self.state.x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Solver(format!("non-finite model at TV iteration {}", self.state.iter)));
        }
        let tv_a = match self.scheme {
            Scheme::Alg3 => tv_norm_slice(&grid, &self.state.polar.a)?,
            _ => tv_norm_slice(&grid, &self.state.x)?,
        };
        let rec = IterationRecord {
            iter: self.state.iter,
            data_misfit: norm(&misfit),
            tv_a,
            phase_reg,
            constraint_violation: norm(&violation),
            beta,
            c: self.state.curvature.unwrap_or(f64::NAN),
        };
        self.state.iter += 1;
        self.log.push(rec);
        Ok(rec)
    }

    /// Magnitude step, magnitude TV update and one phase step.
    fn polar_iteration(&mut self) -> Result<(f64, f64)> {
        let grid = self.meas.grid;
        let h = self.hyper;
        if matches!(self.gram, Gram::Dense(_)) {
            // the magnitude system depends on the current phase
            self.normal = None;
        }
        self.normal()?;
        let normal = self.normal.as_ref().expect("built above");

        let theta = self.state.polar.theta.clone();
        let back = self.meas.op.apply_adjoint(&self.y_eff);
        let mut rhs = self.state.mag_aux.penalty_rhs(&grid, h.gamma_x, h.gamma_z)?;
        for ((r, g), &t) in rhs.iter_mut().zip(&back).zip(&theta) {
            *r += h.lambda * (C64::from_polar(1.0, -t) * g).re;
        }
        let a: Vec<f64> = normal.solve_real(&rhs)?.into_iter().map(|v| v.max(0.0)).collect();

        let [zx, zz, gx, gz] = self.state.mag_aux.split(&grid, &a)?;
        let (px, pz) = joint_shrink(&zx, &zz, h.tau / h.gamma_x, h.tau / h.gamma_z);
        self.state.mag_aux.accept(px, pz, &gx, &gz);

        let op = self.meas.op;
        let y = &self.y_eff;
        let weight = (1.0 - h.tau) * h.phase_weight;
        let objective = |t: &[f64]| {
            let reg = if weight > 0.0 { phase_regularizer(&grid, t, h.phase_reg).unwrap_or(f64::INFINITY) } else { 0.0 };
            weight * reg + h.lambda * phase_misfit(t, &a, op, y)
        };
        let grad = phase_misfit_gradient(&theta, &a, op, y)?;
        let mut c = match self.state.curvature {
            Some(c) => c,
            None => h.curvature_scale * curvature_estimate(&self.gram, &a, &theta),
        };
        let mut beta = 0.0;
        if c > 0.0 && c.is_finite() {
            for _ in 0..5 {
                let delta = composite_gradient_step(&grid, &theta, &grad, c, &h)?;
                let out = armijo_search(&theta, &delta, &h, objective);
                if !out.stagnated {
                    beta = out.beta;
                    for (t, d) in self.state.polar.theta.iter_mut().zip(&delta) {
                        *t -= out.beta * d;
                    }
                    break;
                }
                c *= 2.0;
            }
            self.state.curvature = Some(c);
        }
        self.state.polar.a = a;
        self.state.x = self.state.polar.to_complex();
        let phase_reg = phase_regularizer(&grid, &self.state.polar.theta, h.phase_reg)?;
        Ok((beta, phase_reg))
    }

    pub fn run(&mut self, iters: usize, refine: bool) -> Result<()> {
        for _ in 0..iters {
            self.iterate(refine)?;
        }
        Ok(())
    }
}

/// Isotropic complex TV reconstruction.
pub fn alg1_solve(
    meas: &LinearMeasurement,
    hyper: &RegHyperparams,
    refine: bool,
) -> Result<(Vec<C64>, Vec<IterationRecord>)> {
    let mut s = TvSolver::new(meas, *hyper, Scheme::Alg1)?;
    s.run(hyper.max_iters, refine)?;
    let (state, log) = s.into_parts();
    Ok((state.x, log))
}

/// Separate TV of real and imaginary parts, weighted by `tau` and `1 - tau`.
pub fn alg2_solve(
    meas: &LinearMeasurement,
    hyper: &RegHyperparams,
    refine: bool,
) -> Result<(Vec<C64>, Vec<IterationRecord>)> {
    let mut s = TvSolver::new(meas, *hyper, Scheme::Alg2)?;
    s.run(hyper.max_iters, refine)?;
    let (state, log) = s.into_parts();
    Ok((state.x, log))
}

/// TV of the magnitude with a separate phase regularizer.
pub fn alg3_solve(
    meas: &LinearMeasurement,
    hyper: &RegHyperparams,
    refine: bool,
) -> Result<(PolarState, Vec<IterationRecord>)> {
    let mut s = TvSolver::new(meas, *hyper, Scheme::Alg3)?;
    s.run(hyper.max_iters, refine)?;
    let (state, log) = s.into_parts();
    Ok((state.polar, log))
}
