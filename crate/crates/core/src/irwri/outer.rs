use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use super::batch::FrequencyBatch;
use super::virtual_source::{virtual_source_block, VirtualSourceSystem};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Field, C64};
use crate::helmholtz::{
    assemble, source_vector, AugmentedSystem, Domain, HelmholtzSystem, ObservationOperator, PmlProfile,
    SourceTerm, Stencil,
};
use crate::regularize::{default_gamma, LinearMeasurement, LinearOperator, RegHyperparams, RegState, Scheme, TvSolver};

type Blocks = Vec<Vec<Vec<C64>>>;

/// Grid, absorbing boundary and stencil shared by every frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelingSetup {
    pub domain: Domain,
    pub pml: PmlProfile,
    pub stencil: Stencil,
}

impl ModelingSetup {
    pub fn system(&self, m: &ComplexField, omega: f64) -> Result<HelmholtzSystem> {
        assemble(&self.domain, m, omega, &self.pml, self.stencil)
    }
}

/// One point source per shot and a fixed receiver spread (physical cell indices).
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub shots: Vec<SourceTerm>,
    pub receivers: Vec<usize>,
}

impl Acquisition {
    pub fn observation(&self, domain: &Domain) -> Result<ObservationOperator> {
        ObservationOperator::new(domain, &self.receivers)
    }

    fn source_vectors(&self, domain: &Domain) -> Result<Vec<Vec<C64>>> {
        self.shots.iter().map(|s| source_vector(domain, std::slice::from_ref(s))).collect()
    }
}

/// Receiver data per angular frequency, `values[f][shot][receiver]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData {
    pub omegas: Vec<f64>,
    pub values: Blocks,
}

impl ObservedData {
    /// Data for the frequencies of `batch`, matched to a relative tolerance of 1e-9.
    pub fn for_batch(&self, batch: &FrequencyBatch) -> Result<Blocks> {
        batch
            .omegas()
            .iter()
            .map(|&w| {
                self.omegas
                    .iter()
                    .position(|&o| (o - w).abs() <= 1e-9 * w)
                    .map(|i| self.values[i].clone())
                    .ok_or_else(|| Error::invalid(format!("no data recorded at omega = {w}")))
            })
            .collect()
    }
}

/// Forward-models receiver data with a possibly frequency-dependent model.
pub fn synthesize_data(
    setup: &ModelingSetup,
    model_at: impl Fn(f64) -> Result<ComplexField> + Sync,
    omegas: &[f64],
    acquisition: &Acquisition,
) -> Result<ObservedData> {
    let obs = acquisition.observation(&setup.domain)?;
    let b = acquisition.source_vectors(&setup.domain)?;
    let values = omegas
        .par_iter()
        .map(|&w| {
            let sys = setup.system(&model_at(w)?, w)?;
            b.iter().map(|bs| obs.sample(&sys.solve(bs)?)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservedData { omegas: omegas.to_vec(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regularization {
    None,
    Alg1,
    Alg2,
    Alg3,
}

impl Regularization {
    pub fn scheme(self) -> Option<Scheme> {
        match self {
            Regularization::None => None,
            Regularization::Alg1 => Some(Scheme::Alg1),
            Regularization::Alg2 => Some(Scheme::Alg2),
            Regularization::Alg3 => Some(Scheme::Alg3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regularization::None => "none",
            Regularization::Alg1 => "alg1",
            Regularization::Alg2 => "alg2",
            Regularization::Alg3 => "alg3",
        }
    }
}

impl FromStr for Regularization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Regularization::None),
            "alg1" => Ok(Regularization::Alg1),
            "alg2" => Ok(Regularization::Alg2),
            "alg3" => Ok(Regularization::Alg3),
            _ => Err(Error::invalid(format!("unknown regularization '{s}' (none, alg1, alg2, alg3)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingCriteria {
    pub eps_b: f64,
    pub eps_d: f64,
    pub max_iters: usize,
    /// Compare against `eps * sum |b|^2` and `eps * sum |d|^2` instead of absolute values.
    pub relative: bool,
}

impl Default for StoppingCriteria {
    fn default() -> Self {
        StoppingCriteria { eps_b: 1e-3, eps_d: 1e-5, max_iters: 30, relative: false }
    }
}

impl StoppingCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_b > 0.0 && self.eps_d > 0.0) {
            return Err(Error::invalid(format!(
                "stopping thresholds must be positive, got {} and {}",
                self.eps_b, self.eps_d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopStatus {
    Continue,
    Converged,
    MaxIters,
}

/// Summed squared constraint residuals and the energies used in relative mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `sum |A u - b|^2`.
    pub source: f64,
    /// `sum |P u - d|^2`.
    pub data: f64,
    pub source_energy: f64,
    pub data_energy: f64,
}

pub fn check_stop(res: &Residuals, iter: usize, criteria: &StoppingCriteria) -> StopStatus {
    let (sb, sd) = if criteria.relative { (res.source_energy, res.data_energy) } else { (1.0, 1.0) };
    if res.source <= criteria.eps_b * sb && res.data <= criteria.eps_d * sd {
        StopStatus::Converged
    } else if iter >= criteria.max_iters {
        StopStatus::MaxIters
    } else {
        StopStatus::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrwriParams {
    /// Weight of the wave-equation term.
    pub lambda: f64,
    /// Weight of the data term; `None` balances it against the sources per batch.
    pub gamma: Option<f64>,
    pub reg: Regularization,
    pub reg_hyper: RegHyperparams,
    /// Replace the TV penalties with the scale-aware default on each batch's first iteration.
    pub auto_reg_gamma: bool,
    pub stop: StoppingCriteria,
}

impl Default for IrwriParams {
    fn default() -> Self {
        IrwriParams {
            lambda: 1.0,
            gamma: None,
            reg: Regularization::None,
            reg_hyper: RegHyperparams::default(),
            auto_reg_gamma: true,
            stop: StoppingCriteria::default(),
        }
    }
}

/// Model, wavefields and scaled duals; wavefield and dual arrays are indexed `[frequency][shot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrwriState {
    pub m: ComplexField,
    pub u: Blocks,
    pub b_dual: Blocks,
    pub d_dual: Blocks,
    pub iter: usize,
    pub reg_state: Option<RegState>,
    /// Unit of the regularized model subproblem: mean `|m|` of the starting model.
    pub model_scale: f64,
}

impl IrwriState {
    pub fn new(m: ComplexField, n_freq: usize, n_shots: usize, n_ext: usize, n_rec: usize) -> Self {
        let zeros = |len| vec![vec![vec![C64::new(0.0, 0.0); len]; n_shots]; n_freq];
        let mean = m.values().iter().map(|z| z.norm()).sum::<f64>() / m.len() as f64;
        let model_scale = if mean > 0.0 && mean.is_finite() { mean } else { 1.0 };
        IrwriState {
            m,
            u: zeros(n_ext),
            b_dual: zeros(n_ext),
            d_dual: zeros(n_rec),
            iter: 0,
            reg_state: None,
            model_scale,
        }
    }
}

/// Everything fixed during one batch.
pub struct BatchProblem<'a> {
    pub setup: &'a ModelingSetup,
    pub batch: &'a FrequencyBatch,
    pub obs: ObservationOperator,
    /// Extended-grid source vectors per shot.
    pub sources: Vec<Vec<C64>>,
    /// `data[f][shot]`.
    pub data: Blocks,
}

impl<'a> BatchProblem<'a> {
    pub fn new(
        setup: &'a ModelingSetup,
        batch: &'a FrequencyBatch,
        acquisition: &Acquisition,
        data: Blocks,
    ) -> Result<Self> {
        let obs = acquisition.observation(&setup.domain)?;
        Error::check_len(batch.len(), data.len())?;
        for per_freq in &data {
            Error::check_len(acquisition.shots.len(), per_freq.len())?;
            for d in per_freq {
                Error::check_len(obs.len(), d.len())?;
            }
        }
        let sources = acquisition.source_vectors(&setup.domain)?;
        Ok(BatchProblem { setup, batch, obs, sources, data })
    }

    pub fn n_shots(&self) -> usize {
        self.sources.len()
    }

    pub fn initial_state(&self, m: ComplexField) -> IrwriState {
        IrwriState::new(
            m,
            self.batch.len(),
            self.n_shots(),
            self.setup.domain.extended().len(),
            self.obs.len(),
        )
    }

    /// Helmholtz systems at `m`, one per batch frequency.
    pub fn systems(&self, m: &ComplexField) -> Result<Vec<HelmholtzSystem>> {
        self.batch.omegas().par_iter().map(|&w| self.setup.system(m, w)).collect()
    }

    /// `lambda max |A^H b|_inf / max |P^T d|_inf` over the batch.
    pub fn default_gamma(&self, systems: &[HelmholtzSystem], lambda: f64) -> Result<f64> {
        let mut num: f64 = 0.0;
        for sys in systems {
            for b in &self.sources {
                num = num.max(sys.apply_adjoint(b)?.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        let den = self.data.iter().flatten().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if !(num > 0.0 && den > 0.0) {
            return Err(Error::invalid("cannot balance the data weight: sources or data are zero"));
        }
        Ok(lambda * num / den)
    }

    fn energies(&self) -> (f64, f64) {
        let sb: f64 = self.sources.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * self.batch.len() as f64;
        let sd: f64 = self.data.iter().flatten().flatten().map(|z| z.norm_sqr()).sum();
        (sb, sd)
    }
}

/// Minimizes `gamma/2 |d + d_dual - P u|^2 + lambda/2 |b + b_dual - A u|^2` for every
/// (frequency, shot), with one factorization per frequency.
pub fn wavefield_step(
    state: &mut IrwriState,
    systems: &[HelmholtzSystem],
    problem: &BatchProblem,
    lambda: f64,
    gamma: f64,
) -> Result<()> {
    Error::check_len(problem.batch.len(), systems.len())?;
    let updated = systems
        .par_iter()
        .enumerate()
        .map(|(f, sys)| {
            let aug = AugmentedSystem::new(sys, &problem.obs, lambda, gamma)?;
            (0..problem.n_shots())
                .into_par_iter()
                .map(|s| {
                    let rb: Vec<C64> =
                        problem.sources[s].iter().zip(&state.b_dual[f][s]).map(|(b, q)| b + q).collect();
                    let rd: Vec<C64> =
                        problem.data[f][s].iter().zip(&state.d_dual[f][s]).map(|(d, q)| d + q).collect();
                    aug.solve(&rb, &rd)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    state.u = updated;
    Ok(())
}

/// Stacks the virtual-source blocks of all (frequency, shot) pairs.
pub fn assemble_virtual_sources(
    state: &IrwriState,
    systems: &[HelmholtzSystem],
    problem: &BatchProblem,
) -> Result<VirtualSourceSystem> {
    let mut l = Vec::with_capacity(systems.len() * problem.n_shots());
    let mut y = Vec::with_capacity(l.capacity());
    for (f, sys) in systems.iter().enumerate() {
        for s in 0..problem.n_shots() {
            let (lb, yb) = virtual_source_block(sys, &state.u[f][s], &problem.sources[s], &state.b_dual[f][s])?;
            l.push(lb);
            y.push(yb);
        }
    }
    let domain = &problem.setup.domain;
    VirtualSourceSystem::with_cells(domain.physical().len(), domain.replication_map(), l, y)
}

/// Model update. Without regularization this is the per-cell least-squares
/// solution (cells without illumination keep their value and are returned);
/// otherwise one iteration of the TV solver on the system normalized by
/// `scale` (see [`VirtualSourceSystem::normalized`]), persisting its state in
/// `reg_state` in those units.
pub fn model_step(
    vs: &VirtualSourceSystem,
    reg: Regularization,
    hyper: &RegHyperparams,
    previous: &ComplexField,
    reg_state: &mut Option<RegState>,
    scale: f64,
) -> Result<(ComplexField, Vec<usize>)> {
    let grid = *previous.grid();
    let Some(scheme) = reg.scheme() else {
        let (m, keep) = vs.least_squares(previous.values())?;
        return Ok((Field::new(grid, m)?, keep));
    };
    let (nvs, _) = vs.normalized(scale)?;
    let meas = LinearMeasurement::new(grid, &nvs, nvs.rhs())?;
    let mut state = reg_state.take().unwrap_or_else(|| {
        let x: Vec<C64> = previous.values().iter().map(|z| z / scale).collect();
        RegState::from_model(&x)
    });
    state.curvature = None;
    let mut solver = TvSolver::with_state(&meas, *hyper, scheme, state)?;
    solver.iterate(false)?;
    let (state, _) = solver.into_parts();
    let m = Field::new(grid, state.x.iter().map(|z| z * scale).collect())?;
    *reg_state = Some(state);
    Ok((m, Vec::new()))
}

/// Adds the constraint residuals at the new model to the duals and returns them.
pub fn dual_update(
    state: &mut IrwriState,
    systems: &[HelmholtzSystem],
    problem: &BatchProblem,
) -> Result<Residuals> {
    let per_freq = systems
        .par_iter()
        .enumerate()
        .map(|(f, sys)| {
            (0..problem.n_shots())
                .map(|s| {
                    let u = &state.u[f][s];
                    let rb = sys.residual(u, &problem.sources[s])?;
                    let pu = problem.obs.sample(u)?;
                    let rd: Vec<C64> = problem.data[f][s].iter().zip(&pu).map(|(d, p)| d - p).collect();
                    Ok((rb, rd))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut source, mut data) = (0.0, 0.0);
    for (f, shots) in per_freq.into_iter().enumerate() {
        for (s, (rb, rd)) in shots.into_iter().enumerate() {
            source += rb.iter().map(|z| z.norm_sqr()).sum::<f64>();
            data += rd.iter().map(|z| z.norm_sqr()).sum::<f64>();
            for (q, r) in state.b_dual[f][s].iter_mut().zip(&rb) {
                *q += r;
            }
            for (q, r) in state.d_dual[f][s].iter_mut().zip(&rd) {
                *q += r;
            }
        }
    }
    let (source_energy, data_energy) = problem.energies();
    Ok(Residuals { source, data, source_energy, data_energy })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrwriRecord {
    pub iter: usize,
    pub source_residual: f64,
    pub data_residual: f64,
    /// `|m_new - m_old| / |m_old|`.
    pub model_change: f64,
    pub wall_time: f64,
}

pub fn write_irwri_log<W: Write>(records: &[IrwriRecord], mut w: W) -> Result<()> {
    writeln!(w, "iter,source_residual,data_residual,model_change,wall_time")?;
    for r in records {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:.3}",
            r.iter, r.source_residual, r.data_residual, r.model_change, r.wall_time
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub m: ComplexField,
    pub log: Vec<IrwriRecord>,
    pub status: StopStatus,
    pub state: IrwriState,
    /// Data weight used for the batch.
    pub gamma: f64,
}

fn check_finite(m: &ComplexField, iter: usize) -> Result<()> {
    if let Some(i) = m.values().iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Solver(format!("model became non-finite at cell {i} in iteration {iter}")));
    }
    Ok(())
}

fn relative_change(new: &ComplexField, old: &ComplexField) -> f64 {
    let num: f64 = new.values().iter().zip(old.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = old.values().iter().map(|b| b.norm_sqr()).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// One full iteration: wavefields, model, duals. Returns the residuals and the
/// systems assembled at the new model.
pub fn irwri_iteration(
    state: &mut IrwriState,
    systems: &[HelmholtzSystem],
    problem: &BatchProblem,
    params: &IrwriParams,
    gamma: f64,
    reg_hyper: &RegHyperparams,
) -> Result<(Residuals, Vec<HelmholtzSystem>, f64)> {
    wavefield_step(state, systems, problem, params.lambda, gamma)?;
    let vs = assemble_virtual_sources(state, systems, problem)?;
    let (m_new, _) = model_step(&vs, params.reg, reg_hyper, &state.m, &mut state.reg_state, state.model_scale)?;
    check_finite(&m_new, state.iter)?;
    let change = relative_change(&m_new, &state.m);
    state.m = m_new;
    let new_systems = problem.systems(&state.m)?;
    let res = dual_update(state, &new_systems, problem)?;
    state.iter += 1;
    Ok((res, new_systems, change))
}

/// Runs IR-WRI on one frequency batch from `m_init` with zero duals.
pub fn run_batch(
    m_init: &ComplexField,
    batch: &FrequencyBatch,
    setup: &ModelingSetup,
    acquisition: &Acquisition,
    data: &ObservedData,
    params: &IrwriParams,
) -> Result<BatchResult> {
    params.stop.validate()?;
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be positive, got {}", params.lambda)));
    }
    let problem = BatchProblem::new(setup, batch, acquisition, data.for_batch(batch)?)?;
    let mut state = problem.initial_state(m_init.clone());
    let mut systems = problem.systems(&state.m)?;
    let gamma = match params.gamma {
        Some(g) => g,
        None => problem.default_gamma(&systems, params.lambda)?,
    };
    let mut reg_hyper = params.reg_hyper;
    if params.reg != Regularization::None && params.auto_reg_gamma {
        wavefield_step(&mut state, &systems, &problem, params.lambda, gamma)?;
        let vs = assemble_virtual_sources(&state, &systems, &problem)?;
        let (nvs, _) = vs.normalized(state.model_scale)?;
        reg_hyper = reg_hyper.with_gamma(default_gamma(&nvs.gram(), reg_hyper.lambda));
    }
    let start = Instant::now();
    let mut log = Vec::new();
    loop {
        let (res, new_systems, change) =
            irwri_iteration(&mut state, &systems, &problem, params, gamma, &reg_hyper)?;
        systems = new_systems;
        log.push(IrwriRecord {
            iter: state.iter,
            source_residual: res.source,
            data_residual: res.data,
            model_change: change,
            wall_time: start.elapsed().as_secs_f64(),
        });
        let status = check_stop(&res, state.iter, &params.stop);
        if status != StopStatus::Continue {
            return Ok(BatchResult { m: state.m.clone(), log, status, state, gamma });
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub m: ComplexField,
    pub batches: Vec<BatchResult>,
}

/// Runs the batches in order, each warm-started from the previous final model
/// with fresh duals and regularizer state.
pub fn run_continuation(
    m_init: &ComplexField,
    batches: &[FrequencyBatch],
    setup: &ModelingSetup,
    acquisition: &Acquisition,
    data: &ObservedData,
    params: &IrwriParams,
) -> Result<ContinuationResult> {
    let mut m = m_init.clone();
    let mut results = Vec::with_capacity(batches.len());
    for batch in batches {
        let r = run_batch(&m, batch, setup, acquisition, data, params)?;
        m = r.m.clone();
        results.push(r);
    }
    Ok(ContinuationResult { m, batches: results })
}
