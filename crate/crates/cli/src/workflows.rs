//! General workflows on user-supplied models: forward modeling, inversion,
//! extraction and the frequency-batch plan.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use viscowri::atten::{forward as atten_forward, AttenuationModelKind, AttenuationPair, FrequencySpec};
use viscowri::field::io::{read_vwf, read_vwf_complex};
use viscowri::irwri::{build_batches, frequency_grid, synthesize_data, FrequencyBatch};
use viscowri::{ComplexField, Grid2D, RealField};

use crate::config::{ExperimentConfig, ModelSource};
use crate::error::{CliError, CliResult};
use crate::extraction::{extract_cells, kind_name, Extracted};
use crate::geometry;
use crate::inclusion::{run_scheme, write_scheme, InversionProblem};
use crate::metrics::{real_error, MetricsReport, RunMetrics};
use crate::output::OutputDir;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))
}

/// A real model attribute on `grid`, from a constant or a VWF1 file of the same shape.
pub fn load_real(source: &ModelSource, grid: &Grid2D) -> CliResult<RealField> {
    match source {
        ModelSource::Constant(c) => Ok(RealField::constant(*grid, *c)),
        ModelSource::File(path) => {
            let f: RealField = read_vwf(open(path)?)?;
            if !f.grid().same_shape(grid) {
                return Err(CliError::config(format!(
                    "{} holds a {}x{} field but the grid is {}x{}",
                    path.display(),
                    f.grid().nz(),
                    f.grid().nx(),
                    grid.nz(),
                    grid.nx()
                )));
            }
            Ok(f)
        }
    }
}

pub fn load_complex(path: &Path) -> CliResult<ComplexField> {
    read_vwf_complex(open(path)?).map_err(CliError::from)
}

pub fn true_model(cfg: &ExperimentConfig) -> CliResult<AttenuationPair> {
    let grid = geometry::grid(&cfg.grid)?;
    Ok(AttenuationPair::new(load_real(&cfg.model.true_v, &grid)?, load_real(&cfg.model.true_alpha, &grid)?)?)
}

/// The frequency batches of the configured plan.
pub fn batch_plan(cfg: &ExperimentConfig) -> CliResult<Vec<FrequencyBatch>> {
    let f = &cfg.frequencies;
    Ok(build_batches(f.f_min, f.f_max, f.df, f.batch_size, f.overlap)?)
}

/// One line per batch, frequencies in Hz.
pub fn format_plan(batches: &[FrequencyBatch]) -> String {
    batches
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let hz: Vec<String> = b.hz().iter().map(|f| format!("{:.3}", f).trim_end_matches('0').trim_end_matches('.').to_string()).collect();
            format!("batch {}: {} Hz\n", k + 1, hz.join(", "))
        })
        .collect()
}

/// Receiver data for the true model over the plan's frequencies, as
/// `frequency, shot, receiver, re, im` rows.
pub fn forward_workflow(cfg: &ExperimentConfig, out: &OutputDir) -> CliResult<MetricsReport> {
    let start = Instant::now();
    out.manifest("forward", cfg)?;
    let truth = true_model(cfg)?;
    let grid = *truth.grid();
    let v_min = truth.v.values().iter().copied().fold(f64::INFINITY, f64::min);
    let setup = geometry::modeling_setup(&cfg.grid, v_min)?;
    let acquisition = geometry::acquisition(&grid, &cfg.acquisition)?;
    let f = &cfg.frequencies;
    let hz = frequency_grid(f.f_min, f.f_max, f.df)?;
    let omegas: Vec<f64> = hz.iter().map(|f| 2.0 * PI * f).collect();
    let omega_r = 2.0 * PI * cfg.model.reference_hz;
    let kind = cfg.model.data_kind.kind();
    let data = synthesize_data(&setup, |w| atten_forward(kind, &truth, FrequencySpec::new(w, omega_r)?), &omegas, &acquisition)?;
    let mut rows = Vec::new();
    for (fi, per_freq) in data.values.iter().enumerate() {
        for (s, d) in per_freq.iter().enumerate() {
            for (r, z) in d.iter().enumerate() {
                rows.push(vec![hz[fi], s as f64, r as f64, z.re, z.im]);
            }
        }
    }
    out.table("data.csv", &["frequency", "shot", "receiver", "re", "im"], &rows)?;
    out.field("v_true", &truth.v)?;
    out.field("alpha_true", &truth.alpha)?;
    let mut values = BTreeMap::new();
    values.insert("frequencies".to_string(), hz.len() as f64);
    values.insert("shots".to_string(), acquisition.shots.len() as f64);
    values.insert("receivers".to_string(), acquisition.receivers.len() as f64);
    let report = MetricsReport {
        scenario: "forward".into(),
        seed: cfg.seed,
        runs: vec![RunMetrics { name: "forward".into(), values, wall_time: start.elapsed().as_secs_f64(), ..Default::default() }],
        wall_time: start.elapsed().as_secs_f64(),
    };
    out.metrics(&report)?;
    Ok(report)
}

/// Frequency continuation over the plan with the first configured scheme,
/// on data synthesized from the configured true model.
pub fn invert_workflow(cfg: &ExperimentConfig, out: &OutputDir) -> CliResult<MetricsReport> {
    let start = Instant::now();
    out.manifest("invert", cfg)?;
    let reg = *cfg
        .regularization
        .schemes
        .first()
        .ok_or_else(|| CliError::config("no regularization scheme configured"))?;
    let problem = InversionProblem::with_truth(cfg, None, true_model(cfg)?)?;
    out.field("m_init", &problem.m_init)?;
    out.field("m_true", &problem.m_true)?;
    let run = run_scheme(&problem, cfg, reg)?;
    write_scheme(out, &problem, &run)?;
    let report = MetricsReport {
        scenario: "invert".into(),
        seed: cfg.seed,
        runs: vec![run.metrics],
        wall_time: start.elapsed().as_secs_f64(),
    };
    out.metrics(&report)?;
    Ok(report)
}

/// Extraction options; `None` falls back to the configuration.
#[derive(Debug, Clone, Default)]
pub struct ExtractOptions {
    pub kinds: Option<Vec<AttenuationModelKind>>,
    pub freq_hz: Option<f64>,
    pub reference_hz: Option<f64>,
}

/// Maps a complex model file to `v` and `alpha` per mechanism. Fields are
/// written with NaN in bad cells; any bad cell makes the result an extraction error.
pub fn extract_workflow(
    cfg: &ExperimentConfig,
    m_file: &Path,
    opts: &ExtractOptions,
    out: &OutputDir,
) -> CliResult<MetricsReport> {
    let start = Instant::now();
    out.manifest("extract", cfg)?;
    let m = load_complex(m_file)?;
    let kinds = opts.kinds.clone().unwrap_or_else(|| cfg.model.extract_kinds.iter().map(|k| k.kind()).collect());
    if kinds.is_empty() {
        return Err(CliError::config("no extraction mechanism selected"));
    }
    let freq = FrequencySpec::from_hz(
        opts.freq_hz.unwrap_or(cfg.model.extract_hz),
        opts.reference_hz.unwrap_or(cfg.model.reference_hz),
    )?;
    let mut report = MetricsReport { scenario: "extract".into(), seed: cfg.seed, ..Default::default() };
    let mut results: Vec<(AttenuationModelKind, Extracted)> = Vec::new();
    for kind in kinds {
        let e = extract_cells(kind, &m, freq);
        let k = kind_name(kind);
        out.field(&format!("v_{k}"), &e.v)?;
        out.field(&format!("alpha_{k}"), &e.alpha)?;
        out.field_csv(&format!("v_{k}"), &e.v)?;
        out.field_csv(&format!("alpha_{k}"), &e.alpha)?;
        let mut values = BTreeMap::new();
        values.insert("bad_cells".to_string(), e.bad.len() as f64);
        report.runs.push(RunMetrics { name: k.to_string(), values, ..Default::default() });
        results.push((kind, e));
    }
    if let [(_, a), (_, b)] = results.as_slice() {
        let mut errors = BTreeMap::new();
        errors.insert("v".to_string(), real_error(b.v.values(), a.v.values())?);
        errors.insert("alpha".to_string(), real_error(b.alpha.values(), a.alpha.values())?);
        let name = format!("{}_vs_{}", kind_name(results[1].0), kind_name(results[0].0));
        report.runs.push(RunMetrics { name, errors, ..Default::default() });
    }
    report.wall_time = start.elapsed().as_secs_f64();
    out.metrics(&report)?;
    let bad: Vec<String> = results
        .iter()
        .filter(|(_, e)| !e.bad.is_empty())
        .map(|(k, e)| format!("{}: {} cell(s)", kind_name(*k), e.bad.len()))
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Extraction(format!("cells outside the extraction domain ({})", bad.join("; "))));
    }
    Ok(report)
}
