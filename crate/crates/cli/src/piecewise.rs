//! Validity of the band-wise frequency-independent model: time-domain traces
//! synthesized with the exact dispersive mapping versus one model per band.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use viscowri::atten::{
    band_center, forward_scalar, inverse_q, inverse_scalar, phase_velocity, piecewise_band_models,
    AttenuationModelKind, AttenuationPair, FrequencySpec,
};
use viscowri::helmholtz::{ricker_spectrum, solve_forward, ObservationOperator, SourceTerm};
use viscowri::irwri::{frequency_grid, ModelingSetup};
use viscowri::{ComplexField, Grid2D, C64};

use crate::config::{ExperimentConfig, PiecewiseConfig};
use crate::error::{CliError, CliResult};
use crate::extraction::kind_name;
use crate::geometry;
use crate::metrics::{MetricsReport, RunMetrics};
use crate::output::OutputDir;

/// Frequencies (Hz) grouped into consecutive bands of width `band_hz` starting at
/// `f_min`; the last band absorbs a trailing partial band.
pub fn band_plan(hz: &[f64], f_min: f64, f_max: f64, band_hz: f64) -> Vec<Vec<f64>> {
    let n_bands = (((f_max - f_min) / band_hz + 1e-9).floor() as usize).max(1);
    let mut bands = vec![Vec::new(); n_bands];
    for &f in hz {
        let k = (((f - f_min) / band_hz + 1e-9).floor() as usize).min(n_bands - 1);
        bands[k].push(f);
    }
    bands.retain(|b| !b.is_empty());
    bands
}

fn band_of(bands: &[Vec<f64>], f: f64) -> usize {
    bands.iter().rposition(|b| b[0] <= f + 1e-9).unwrap_or(0)
}

/// Phase velocity and inverse quality factor of `m`.
pub fn dispersion(m: C64) -> (f64, f64) {
    (phase_velocity(m), inverse_q(m))
}

/// Exact and band-wise dispersion curves of a homogeneous medium.
#[derive(Debug, Clone)]
pub struct Staircase {
    pub kind: AttenuationModelKind,
    pub v: f64,
    pub alpha: f64,
    pub reference_hz: f64,
    pub bands: Vec<Vec<f64>>,
    /// Band models, one per band.
    pub band_models: Vec<C64>,
}

impl Staircase {
    pub fn new(pc: &PiecewiseConfig, kind: AttenuationModelKind) -> CliResult<Self> {
        let hz = frequency_grid(pc.f_min, pc.f_max, pc.df)?;
        let bands = band_plan(&hz, pc.f_min, pc.f_max, pc.band_hz);
        let omegas: Vec<Vec<f64>> = bands.iter().map(|b| b.iter().map(|f| 2.0 * PI * f).collect()).collect();
        let pair = AttenuationPair::uniform(Grid2D::new(2, 2, 1.0)?, pc.v, pc.alpha)?;
        let band_models = piecewise_band_models(&pair, &omegas, 2.0 * PI * pc.reference_hz, kind)?
            .into_iter()
            .map(|m| m.values()[0])
            .collect();
        Ok(Staircase { kind, v: pc.v, alpha: pc.alpha, reference_hz: pc.reference_hz, bands, band_models })
    }

    fn freq(&self, f: f64) -> CliResult<FrequencySpec> {
        Ok(FrequencySpec::from_hz(f, self.reference_hz)?)
    }

    pub fn exact_model(&self, f: f64) -> CliResult<C64> {
        Ok(forward_scalar(self.kind, self.v, self.alpha, self.freq(f)?))
    }

    pub fn band_model(&self, f: f64) -> C64 {
        self.band_models[band_of(&self.bands, f)]
    }

    /// Band centres in Hz.
    pub fn centers(&self) -> CliResult<Vec<f64>> {
        self.bands.iter().map(|b| Ok(band_center(b)?)).collect()
    }

    /// Largest relative difference between the band curve and the exact curve at
    /// the band centres, in phase velocity and inverse Q.
    pub fn center_mismatch(&self) -> CliResult<f64> {
        let mut worst: f64 = 0.0;
        for (k, c) in self.centers()?.into_iter().enumerate() {
            let (ve, qe) = dispersion(self.exact_model(c)?);
            let (vb, qb) = dispersion(self.band_models[k]);
            worst = worst.max(((vb - ve) / ve).abs()).max(((qb - qe) / qe.abs().max(f64::MIN_POSITIVE)).abs());
        }
        Ok(worst)
    }

    /// Largest relative difference between `(v, alpha)` extracted from each band
    /// model at its centre frequency and the medium's `(v, alpha)`.
    pub fn extraction_mismatch(&self) -> CliResult<f64> {
        let mut worst: f64 = 0.0;
        for (k, c) in self.centers()?.into_iter().enumerate() {
            let (v, a) = inverse_scalar(self.kind, self.band_models[k], self.freq(c)?)
                .ok_or_else(|| CliError::Extraction(format!("band {k} model leaves the extraction domain")))?;
            let da = if self.alpha > 0.0 { ((a - self.alpha) / self.alpha).abs() } else { a.abs() };
            worst = worst.max(((v - self.v) / self.v).abs()).max(da);
        }
        Ok(worst)
    }

    /// Relative deviation of the band curve from the exact curve at `f`, as
    /// `(phase velocity, inverse Q)`.
    pub fn deviation(&self, f: f64) -> CliResult<(f64, f64)> {
        let (ve, qe) = dispersion(self.exact_model(f)?);
        let (vb, qb) = dispersion(self.band_model(f));
        Ok((((vb - ve) / ve).abs(), ((qb - qe) / qe.abs().max(f64::MIN_POSITIVE)).abs()))
    }

    pub fn table(&self, hz: &[f64]) -> CliResult<Vec<Vec<f64>>> {
        hz.iter()
            .map(|&f| {
                let (ve, qe) = dispersion(self.exact_model(f)?);
                let (vb, qb) = dispersion(self.band_model(f));
                Ok(vec![f, ve, vb, qe, qb])
            })
            .collect()
    }
}

/// Receiver traces for one mapping, `traces[receiver][sample]`.
#[derive(Debug, Clone)]
pub struct Traces {
    pub times: Vec<f64>,
    pub traces: Vec<Vec<f64>>,
}

fn source_and_receivers(grid: &Grid2D, offsets: &[f64]) -> CliResult<(usize, Vec<usize>)> {
    let (zc, xc) = (grid.nz() / 2, grid.nx() / 2);
    let receivers = offsets
        .iter()
        .map(|&o| {
            let ix = xc as f64 + (o / grid.h()).round();
            if ix < 0.0 || ix >= grid.nx() as f64 || ix == xc as f64 {
                return Err(CliError::config(format!("receiver offset {o} m falls off the grid or on the source")));
            }
            Ok(grid.index(zc, ix as usize))
        })
        .collect::<CliResult<_>>()?;
    Ok((grid.index(zc, xc), receivers))
}

/// Synthesizes traces `r(t) = Re sum_k S(w_k) exp(i w_k t0) u_k exp(-i w_k t) dw`
/// where `u_k` solves the Helmholtz problem with model `model_at(f_k)`.
pub fn synthesize_traces(
    setup: &ModelingSetup,
    source: usize,
    receivers: &[usize],
    hz: &[f64],
    pc: &PiecewiseConfig,
    model_at: impl Fn(f64) -> CliResult<C64> + Sync,
) -> CliResult<Traces> {
    let grid = *setup.domain.physical();
    if pc.nt < 2 {
        return Err(CliError::config("traces need at least two samples"));
    }
    let obs = ObservationOperator::new(&setup.domain, receivers)?;
    let spectra: Vec<Vec<C64>> = hz
        .par_iter()
        .map(|&f| {
            let m = ComplexField::constant(grid, model_at(f)?);
            let w = 2.0 * PI * f;
            let sys = setup.system(&m, w)?;
            let u = solve_forward(&sys, &[SourceTerm::unit(source)])?;
            Ok(obs.sample(u.values())?)
        })
        .collect::<CliResult<_>>()?;
    let dw = 2.0 * PI * pc.df;
    let times: Vec<f64> = (0..pc.nt).map(|j| j as f64 * pc.duration / (pc.nt - 1) as f64).collect();
    let traces = (0..receivers.len())
        .map(|r| {
            times
                .iter()
                .map(|&t| {
                    hz.iter()
                        .zip(&spectra)
                        .map(|(&f, d)| {
                            let w = 2.0 * PI * f;
                            (ricker_spectrum(pc.f_dominant, w) * d[r] * C64::from_polar(dw, w * (pc.t0 - t))).re
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(Traces { times, traces })
}

/// `(relative l_inf, relative l2)` difference of two trace sets.
pub fn trace_discrepancy(exact: &Traces, approx: &Traces) -> (f64, f64) {
    let pairs = || exact.traces.iter().flatten().zip(approx.traces.iter().flatten());
    let max_diff = pairs().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let max_ref = exact.traces.iter().flatten().map(|a| a.abs()).fold(0.0, f64::max);
    let l2_diff: f64 = pairs().map(|(a, b)| (a - b).powi(2)).sum();
    let l2_ref: f64 = exact.traces.iter().flatten().map(|a| a * a).sum();
    let rel = |d: f64, r: f64| if r > 0.0 { d / r } else { d };
    (rel(max_diff, max_ref), rel(l2_diff.sqrt(), l2_ref.sqrt()))
}

/// Exact and band-wise traces for one mechanism.
pub fn compare_traces(
    cfg: &ExperimentConfig,
    setup: &ModelingSetup,
    kind: AttenuationModelKind,
) -> CliResult<(Staircase, Traces, Traces)> {
    let pc = &cfg.piecewise;
    let stair = Staircase::new(pc, kind)?;
    let hz = frequency_grid(pc.f_min, pc.f_max, pc.df)?;
    let (source, receivers) = source_and_receivers(setup.domain.physical(), &pc.offsets)?;
    let exact = synthesize_traces(setup, source, &receivers, &hz, pc, |f| stair.exact_model(f))?;
    let banded = synthesize_traces(setup, source, &receivers, &hz, pc, |f| Ok(stair.band_model(f)))?;
    Ok((stair, exact, banded))
}

/// Frequencies at which the staircase deviation is reported.
pub const LOW_HZ: f64 = 2.0;
pub const HIGH_HZ: f64 = 20.0;

pub fn piecewise_experiment(cfg: &ExperimentConfig, out: Option<&OutputDir>) -> CliResult<MetricsReport> {
    let start = Instant::now();
    let pc = &cfg.piecewise;
    let setup = geometry::modeling_setup(&cfg.grid, pc.v)?;
    if let Some(out) = out {
        out.manifest("piecewise", cfg)?;
    }
    let hz = frequency_grid(pc.f_min, pc.f_max, pc.df)?;
    let mut report = MetricsReport { scenario: "piecewise".into(), seed: cfg.seed, ..Default::default() };
    for kind in pc.kinds.iter().map(|k| k.kind()) {
        let run_start = Instant::now();
        let (stair, exact, banded) = compare_traces(cfg, &setup, kind)?;
        let (linf, l2) = trace_discrepancy(&exact, &banded);
        let k = kind_name(kind);
        let mut errors = BTreeMap::new();
        errors.insert("trace_linf".to_string(), linf);
        errors.insert("trace_l2".to_string(), l2);
        let mut values = BTreeMap::new();
        values.insert("center_mismatch".to_string(), stair.center_mismatch()?);
        values.insert("extraction_mismatch".to_string(), stair.extraction_mismatch()?);
        for (label, f) in [("low", LOW_HZ), ("high", HIGH_HZ)] {
            let (dv, dq) = stair.deviation(f)?;
            values.insert(format!("deviation_v_{label}"), dv);
            values.insert(format!("deviation_invq_{label}"), dq);
        }
        if let Some(out) = out {
            out.table(
                &format!("staircase_{k}.csv"),
                &["frequency", "v_exact", "v_band", "invq_exact", "invq_band"],
                &stair.table(&hz)?,
            )?;
            let mut header = vec!["time".to_string()];
            for o in &pc.offsets {
                header.push(format!("exact_{o}m"));
                header.push(format!("band_{o}m"));
            }
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<f64>> = exact
                .times
                .iter()
                .enumerate()
                .map(|(j, &t)| {
                    let mut row = vec![t];
                    for r in 0..exact.traces.len() {
                        row.push(exact.traces[r][j]);
                        row.push(banded.traces[r][j]);
                    }
                    row
                })
                .collect();
            out.table(&format!("traces_{k}.csv"), &header, &rows)?;
        }
        report.runs.push(RunMetrics {
            name: k.to_string(),
            errors,
            values,
            misfit: Vec::new(),
            wall_time: run_start.elapsed().as_secs_f64(),
        });
    }
    report.wall_time = start.elapsed().as_secs_f64();
    if let Some(out) = out {
        out.metrics(&report)?;
    }
    Ok(report)
}
