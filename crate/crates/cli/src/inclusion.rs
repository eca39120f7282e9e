//! Two-dimensional inclusion experiment: a fast circle, a slow attenuating
//! rectangle and an attenuating circle in a homogeneous background, inverted
//! with IR-WRI under each regularization scheme.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use viscowri::atten::{forward, AttenuationModelKind, AttenuationPair, FrequencySpec};
use viscowri::irwri::{
    build_batches, run_continuation, synthesize_data, write_irwri_log, Acquisition, FrequencyBatch, IrwriParams,
    IrwriRecord, ModelingSetup, ObservedData, Regularization,
};
use viscowri::regularize::RegHyperparams;
use viscowri::{ComplexField, Grid2D, RealField};

use crate::config::{ExperimentConfig, RegName};
use crate::error::CliResult;
use crate::extraction::{extract_cells, kind_name, Extracted};
use crate::geometry;
use crate::metrics::{complex_errors, field_error, real_error, MetricsReport, RunMetrics};
use crate::output::OutputDir;

pub const BACKGROUND_V: f64 = 1500.0;
pub const CIRCLE_V: f64 = 1800.0;
pub const RECT_V: f64 = 1300.0;
pub const BACKGROUND_ALPHA: f64 = 0.01;
pub const INCLUSION_ALPHA: f64 = 0.1;

/// Shapes as fractions of a 2 km square: circles of 125 m radius at x = 1.6 km
/// and x = 0.4 km, a 0.2 km x 0.8 km rectangle in the centre, all at z = 1 km.
const CIRCLE_RADIUS: f64 = 0.0625;
const VELOCITY_CIRCLE_X: f64 = 0.8;
const ALPHA_CIRCLE_X: f64 = 0.2;
const RECT_HALF_X: f64 = 0.05;
const RECT_HALF_Z: f64 = 0.2;

/// Masks of the inclusions, scaled to the grid extent.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionGeometry {
    pub velocity_circle: Vec<bool>,
    pub alpha_circle: Vec<bool>,
    pub rectangle: Vec<bool>,
}

impl InclusionGeometry {
    pub fn new(grid: &Grid2D) -> Self {
        let lx = (grid.nx() - 1) as f64 * grid.h();
        let lz = (grid.nz() - 1) as f64 * grid.h();
        let r = CIRCLE_RADIUS * lx.min(lz);
        let mask = |f: &dyn Fn(f64, f64) -> bool| -> Vec<bool> {
            (0..grid.len())
                .map(|i| {
                    let (iz, ix) = grid.coords(i);
                    f(ix as f64 * grid.h(), iz as f64 * grid.h())
                })
                .collect()
        };
        let circle = |cx: f64| move |x: f64, z: f64| (x - cx * lx).hypot(z - 0.5 * lz) <= r;
        InclusionGeometry {
            velocity_circle: mask(&circle(VELOCITY_CIRCLE_X)),
            alpha_circle: mask(&circle(ALPHA_CIRCLE_X)),
            rectangle: mask(&|x, z| (x - 0.5 * lx).abs() <= RECT_HALF_X * lx && (z - 0.5 * lz).abs() <= RECT_HALF_Z * lz),
        }
    }

    /// Cells of either attenuation inclusion.
    pub fn attenuating(&self) -> Vec<bool> {
        self.alpha_circle.iter().zip(&self.rectangle).map(|(a, b)| *a || *b).collect()
    }

    pub fn true_model(&self, grid: &Grid2D) -> CliResult<AttenuationPair> {
        let v = RealField::new(
            *grid,
            (0..grid.len())
                .map(|i| {
                    if self.velocity_circle[i] {
                        CIRCLE_V
                    } else if self.rectangle[i] {
                        RECT_V
                    } else {
                        BACKGROUND_V
                    }
                })
                .collect(),
        )?;
        let alpha = RealField::new(
            *grid,
            self.attenuating().iter().map(|&a| if a { INCLUSION_ALPHA } else { BACKGROUND_ALPHA }).collect(),
        )?;
        Ok(AttenuationPair::new(v, alpha)?)
    }
}

fn mean_over(values: &[f64], mask: &[bool], inside: bool) -> f64 {
    let (sum, n) = values
        .iter()
        .zip(mask)
        .filter(|(v, m)| **m == inside && v.is_finite())
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Synthetic data, acquisition and starting model shared by the scheme runs.
pub struct InversionProblem {
    pub grid: Grid2D,
    /// Inclusion masks, absent for user-supplied models.
    pub geometry: Option<InclusionGeometry>,
    pub truth: AttenuationPair,
    pub setup: ModelingSetup,
    pub acquisition: Acquisition,
    pub batches: Vec<FrequencyBatch>,
    pub data: ObservedData,
    pub m_init: ComplexField,
    /// True complex model at the extraction frequency.
    pub m_true: ComplexField,
    pub extract_freq: FrequencySpec,
}

impl InversionProblem {
    pub fn build(cfg: &ExperimentConfig) -> CliResult<Self> {
        let grid = geometry::grid(&cfg.grid)?;
        let geometry = InclusionGeometry::new(&grid);
        let truth = geometry.true_model(&grid)?;
        Self::with_truth(cfg, Some(geometry), truth)
    }

    /// Synthetic data from `truth` with the configured acquisition and plan.
    pub fn with_truth(cfg: &ExperimentConfig, geometry: Option<InclusionGeometry>, truth: AttenuationPair) -> CliResult<Self> {
        let grid = *truth.grid();
        let m = &cfg.model;
        let initial = AttenuationPair::new(
            crate::workflows::load_real(&m.initial_v, &grid)?,
            crate::workflows::load_real(&m.initial_alpha, &grid)?,
        )?;
        let v_min = initial.v.values().iter().copied().fold(f64::INFINITY, f64::min);
        let setup = geometry::modeling_setup(&cfg.grid, v_min)?;
        let acquisition = geometry::acquisition(&grid, &cfg.acquisition)?;
        let f = &cfg.frequencies;
        let batches = build_batches(f.f_min, f.f_max, f.df, f.batch_size, f.overlap)?;
        let mut omegas: Vec<f64> = batches.iter().flat_map(|b| b.omegas().to_vec()).collect();
        omegas.sort_by(f64::total_cmp);
        omegas.dedup();
        let omega_r = 2.0 * PI * m.reference_hz;
        let data_kind = m.data_kind.kind();
        let data = synthesize_data(
            &setup,
            |w| forward(data_kind, &truth, FrequencySpec::new(w, omega_r)?),
            &omegas,
            &acquisition,
        )?;
        let extract_freq = FrequencySpec::from_hz(m.extract_hz, m.reference_hz)?;
        let m_true = forward(data_kind, &truth, extract_freq)?;
        let first_center = viscowri::atten::band_center(batches[0].omegas())?;
        let m_init = forward(m.initial_kind.kind(), &initial, FrequencySpec::new(first_center, omega_r)?)?;
        Ok(InversionProblem { grid, geometry, truth, setup, acquisition, batches, data, m_init, m_true, extract_freq })
    }
}

pub fn irwri_params(cfg: &ExperimentConfig, reg: Regularization) -> IrwriParams {
    let r = &cfg.regularization;
    let reg_hyper = RegHyperparams {
        lambda: r.lambda,
        tau: r.tau,
        phase_reg: r.phase_reg.phase_reg(),
        phase_weight: r.phase_weight,
        curvature_scale: r.curvature_scale,
        ..RegHyperparams::default()
    };
    let reg_hyper = match r.gamma {
        Some(g) => reg_hyper.with_gamma(g),
        None => reg_hyper,
    };
    IrwriParams {
        lambda: cfg.irwri.lambda,
        gamma: cfg.irwri.gamma,
        reg,
        reg_hyper,
        auto_reg_gamma: r.gamma.is_none(),
        stop: cfg.irwri.stopping(),
    }
}

/// Result of one scheme, including the extracted fields per mechanism.
pub struct SchemeRun {
    pub reg: RegName,
    pub m: ComplexField,
    pub log: Vec<IrwriRecord>,
    pub extracted: Vec<(AttenuationModelKind, Extracted)>,
    pub metrics: RunMetrics,
}

pub fn run_scheme(problem: &InversionProblem, cfg: &ExperimentConfig, reg: RegName) -> CliResult<SchemeRun> {
    let start = Instant::now();
    let params = irwri_params(cfg, reg.regularization());
    let result = run_continuation(
        &problem.m_init,
        &problem.batches,
        &problem.setup,
        &problem.acquisition,
        &problem.data,
        &params,
    )?;
    let wall_time = start.elapsed().as_secs_f64();
    let log: Vec<IrwriRecord> = result.batches.iter().flat_map(|b| b.log.iter().copied()).collect();
    let mut errors = complex_errors(result.m.values(), problem.m_true.values())?;
    let mut values = BTreeMap::new();
    let mut extracted = Vec::new();
    for kind in cfg.model.extract_kinds.iter().map(|k| k.kind()) {
        let e = extract_cells(kind, &result.m, problem.extract_freq);
        let k = kind_name(kind);
        errors.insert(format!("v_{k}"), field_error(&e.v, &problem.truth.v)?);
        errors.insert(format!("alpha_{k}"), field_error(&e.alpha, &problem.truth.alpha)?);
        if let Some(geo) = &problem.geometry {
            let attenuating = geo.attenuating();
            let inside = mean_over(e.alpha.values(), &attenuating, true);
            let outside = mean_over(e.alpha.values(), &attenuating, false);
            values.insert(format!("v_circle_{k}"), mean_over(e.v.values(), &geo.velocity_circle, true));
            values.insert(format!("v_rectangle_{k}"), mean_over(e.v.values(), &geo.rectangle, true));
            values.insert(format!("alpha_inside_{k}"), inside);
            values.insert(format!("alpha_background_{k}"), outside);
            values.insert(format!("alpha_ratio_{k}"), inside / outside);
        }
        values.insert(format!("bad_cells_{k}"), e.bad.len() as f64);
        extracted.push((kind, e));
    }
    let find = |kind| extracted.iter().find(|(k, _)| *k == kind).map(|(_, e)| e);
    if let (Some(kf), Some(sls)) = (find(AttenuationModelKind::Kf), find(AttenuationModelKind::Sls)) {
        values.insert("kf_vs_sls_v".into(), real_error(kf.v.values(), sls.v.values())?);
    }
    values.insert("iterations".into(), log.len() as f64);
    let metrics = RunMetrics {
        name: reg.name().to_string(),
        errors,
        values,
        misfit: log.iter().map(|r| r.data_residual).collect(),
        wall_time,
    };
    Ok(SchemeRun { reg, m: result.m, log, extracted, metrics })
}

fn profile_rows(
    problem: &InversionProblem,
    run: &SchemeRun,
    cells: impl Iterator<Item = (f64, usize)>,
) -> Vec<Vec<f64>> {
    cells
        .map(|(pos, i)| {
            let mut row = vec![pos, problem.truth.v.values()[i], problem.truth.alpha.values()[i]];
            for (_, e) in &run.extracted {
                row.push(e.v.values()[i]);
                row.push(e.alpha.values()[i]);
            }
            row
        })
        .collect()
}

pub fn write_scheme(out: &OutputDir, problem: &InversionProblem, run: &SchemeRun) -> CliResult<()> {
    let name = run.reg.name();
    out.field(&format!("m_{name}"), &run.m)?;
    out.with_writer(&format!("log_{name}.csv"), |w| write_irwri_log(&run.log, w))?;
    let mut header = vec!["position".to_string(), "v_true".into(), "alpha_true".into()];
    for (kind, e) in &run.extracted {
        let k = kind_name(*kind);
        out.field(&format!("v_{k}_{name}"), &e.v)?;
        out.field(&format!("alpha_{k}_{name}"), &e.alpha)?;
        header.push(format!("v_{k}"));
        header.push(format!("alpha_{k}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let g = problem.grid;
    let (zc, xc) = (g.nz() / 2, g.nx() / 2);
    let along_x = (0..g.nx()).map(|ix| (ix as f64 * g.h(), g.index(zc, ix)));
    let along_z = (0..g.nz()).map(|iz| (iz as f64 * g.h(), g.index(iz, xc)));
    out.table(&format!("profile_x_{name}.csv"), &header, &profile_rows(problem, run, along_x))?;
    out.table(&format!("profile_z_{name}.csv"), &header, &profile_rows(problem, run, along_z))?;
    Ok(())
}

/// Runs every configured scheme, writing fields, profiles, logs and metrics.
pub fn inclusion_experiment(cfg: &ExperimentConfig, out: Option<&OutputDir>) -> CliResult<MetricsReport> {
    let start = Instant::now();
    let problem = InversionProblem::build(cfg)?;
    if let Some(out) = out {
        out.manifest("inclusion", cfg)?;
        out.field("v_true", &problem.truth.v)?;
        out.field("alpha_true", &problem.truth.alpha)?;
        out.field("m_true", &problem.m_true)?;
        out.field("m_init", &problem.m_init)?;
    }
    let mut report = MetricsReport { scenario: "inclusion".into(), seed: cfg.seed, ..Default::default() };
    for &reg in &cfg.regularization.schemes {
        let run = run_scheme(&problem, cfg, reg)?;
        if let Some(out) = out {
            write_scheme(out, &problem, &run)?;
        }
        report.runs.push(run.metrics);
    }
    report.wall_time = start.elapsed().as_secs_f64();
    if let Some(out) = out {
        out.metrics(&report)?;
    }
    Ok(report)
}
