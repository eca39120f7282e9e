//! One-dimensional compressed-sensing experiment: a complex signal with
//! piecewise-constant magnitude and smooth phase, observed through a complex
//! Gaussian matrix and reconstructed with the three TV schemes.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use viscowri::regularize::{
    alg1_solve, alg2_solve, alg3_solve, DenseOperator, IterationRecord, LinearMeasurement, LinearOperator,
    RegHyperparams,
};
use viscowri::{ComplexField, Grid2D, C64};

use crate::config::{CsConfig, ExperimentConfig, PhaseRegName};
use crate::error::CliResult;
use crate::metrics::{complex_errors, MetricsReport, RunMetrics};
use crate::output::OutputDir;

/// Magnitude plateaus and the fractions of the signal at which they change.
const PLATEAUS: [f64; 4] = [0.1, 0.2, 0.05, 0.15];
const BREAKS: [f64; 3] = [0.20, 0.45, 0.75];

/// Test signal of length `n`.
pub fn cs_signal(n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let seg = BREAKS.iter().filter(|&&b| t >= b).count();
            let s = t - 0.5;
            C64::from_polar(PLATEAUS[seg], 2.0 * s + 3.0 * s * s - 4.0 * s * s * s)
        })
        .collect()
}

/// `rows x cols` matrix of i.i.d. circular complex Gaussians with unit variance.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 0.5f64.sqrt();
    DenseOperator::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re * s, im * s)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsScheme {
    Alg1,
    Alg2,
    Alg3,
}

/// One reconstruction configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsRunSpec {
    pub name: &'static str,
    pub scheme: CsScheme,
    pub tau: f64,
}

/// The four configurations: complex TV, separate real/imaginary TV, and
/// magnitude/phase TV with and without phase regularization.
pub fn cs_configurations(tau: f64) -> [CsRunSpec; 4] {
    [
        CsRunSpec { name: "alg1", scheme: CsScheme::Alg1, tau },
        CsRunSpec { name: "alg2", scheme: CsScheme::Alg2, tau },
        CsRunSpec { name: "alg3_tau1", scheme: CsScheme::Alg3, tau: 1.0 },
        CsRunSpec { name: "alg3", scheme: CsScheme::Alg3, tau },
    ]
}

#[derive(Debug, Clone)]
pub struct CsRun {
    pub spec: CsRunSpec,
    pub x: Vec<C64>,
    pub log: Vec<IterationRecord>,
    pub wall_time: f64,
}

pub fn hyperparams(cs: &CsConfig, tau: f64, phase_reg: PhaseRegName) -> RegHyperparams {
    RegHyperparams {
        lambda: cs.lambda,
        tau,
        max_iters: cs.iterations,
        phase_reg: phase_reg.phase_reg(),
        phase_weight: cs.phase_weight,
        ..RegHyperparams::default()
    }
    .with_gamma(cs.gamma)
}

/// Runs every configuration on `y = G truth`.
pub fn run_configurations(
    truth: &[C64],
    op: &DenseOperator,
    cs: &CsConfig,
    phase_reg: PhaseRegName,
) -> CliResult<Vec<CsRun>> {
    let grid = Grid2D::line(truth.len(), 1.0)?;
    let y = op.apply(truth);
    let meas = LinearMeasurement::new(grid, op, y)?;
    cs_configurations(cs.tau)
        .into_iter()
        .map(|spec| {
            let hyper = hyperparams(cs, spec.tau, phase_reg);
            let start = Instant::now();
            let (x, log) = match spec.scheme {
                CsScheme::Alg1 => alg1_solve(&meas, &hyper, cs.refine)?,
                CsScheme::Alg2 => alg2_solve(&meas, &hyper, cs.refine)?,
                CsScheme::Alg3 => {
                    let (polar, log) = alg3_solve(&meas, &hyper, cs.refine)?;
                    (polar.to_complex(), log)
                }
            };
            Ok(CsRun { spec, x, log, wall_time: start.elapsed().as_secs_f64() })
        })
        .collect()
}

fn profile_rows(x: &[C64]) -> Vec<Vec<f64>> {
    x.iter().enumerate().map(|(i, z)| vec![i as f64, z.re, z.im, z.norm(), z.arg()]).collect()
}

const PROFILE_HEADER: [&str; 5] = ["index", "re", "im", "magnitude", "phase"];

/// Builds the instance from the seed, runs the four configurations and writes
/// profiles, iteration logs and metrics.
pub fn cs1d_experiment(cfg: &ExperimentConfig, out: Option<&OutputDir>) -> CliResult<MetricsReport> {
    let start = Instant::now();
    let cs = &cfg.cs;
    let truth = cs_signal(cs.n);
    let op = gaussian_matrix(cs.measurements, cs.n, cfg.seed);
    let runs = run_configurations(&truth, &op, cs, cfg.regularization.phase_reg)?;
    let mut report = MetricsReport { scenario: "cs1d".into(), seed: cfg.seed, ..Default::default() };
    if let Some(out) = out {
        out.manifest("cs1d", cfg)?;
        out.table("signal_true.csv", &PROFILE_HEADER, &profile_rows(&truth))?;
        out.field("signal_true", &ComplexField::new(Grid2D::line(cs.n, 1.0)?, truth.clone())?)?;
    }
    for run in &runs {
        let name = run.spec.name;
        if let Some(out) = out {
            out.table(&format!("signal_{name}.csv"), &PROFILE_HEADER, &profile_rows(&run.x))?;
            out.field(&format!("signal_{name}"), &ComplexField::new(Grid2D::line(cs.n, 1.0)?, run.x.clone())?)?;
            out.with_writer(&format!("log_{name}.csv"), |w| viscowri::regularize::write_iteration_log(&run.log, w))?;
        }
        let mut values = std::collections::BTreeMap::new();
        values.insert("tau".to_string(), run.spec.tau);
        let mut errors = complex_errors(&run.x, &truth)?;
        errors.insert("complex".to_string(), complex_error(&run.x, &truth));
        report.runs.push(RunMetrics {
            name: name.to_string(),
            errors,
            values,
            misfit: run.log.iter().map(|r| r.data_misfit).collect(),
            wall_time: run.wall_time,
        });
    }
    report.wall_time = start.elapsed().as_secs_f64();
    if let Some(out) = out {
        out.metrics(&report)?;
    }
    Ok(report)
}

/// Relative l2 error of the complex reconstruction.
pub fn complex_error(x: &[C64], truth: &[C64]) -> f64 {
    let num: f64 = x.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = truth.iter().map(|b| b.norm_sqr()).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}
