use std::fs::File;
use std::io::BufReader;

use viscowri::atten::{forward, AttenuationModelKind, AttenuationPair, FrequencySpec};
use viscowri::field::io::{read_vwf, write_vwf};
use viscowri::irwri::StopStatus;
use viscowri::{ComplexField, Grid2D, RealField, C64};
use viscowri_cli::config::{AcquisitionConfig, ExperimentConfig, Mechanism, RegName, ScenarioKind};
use viscowri_cli::cs1d::{cs_signal, gaussian_matrix, run_configurations};
use viscowri_cli::error::CliError;
use viscowri_cli::extraction::extract_cells;
use viscowri_cli::inclusion::{run_scheme, InversionProblem};
use viscowri_cli::metrics::{model_error, Attribute};
use viscowri_cli::output::OutputDir;
use viscowri_cli::piecewise::{compare_traces, trace_discrepancy};
use viscowri_cli::workflows::{extract_workflow, ExtractOptions};
use viscowri_cli::{cs1d, geometry};

const SCENARIOS: [ScenarioKind; 4] = [ScenarioKind::Cs1d, ScenarioKind::Inclusion, ScenarioKind::Piecewise, ScenarioKind::Custom];

#[test]
fn every_scenario_config_survives_toml() {
    for s in SCENARIOS {
        let cfg = ExperimentConfig::defaults(s);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap(), ScenarioKind::Cs1d).unwrap();
        assert_eq!(back, cfg, "{s:?}");
    }
}

#[test]
fn partial_toml_keeps_scenario_defaults() {
    let text = "scenario = \"inclusion\"\n[grid]\nnz = 41\n[irwri]\nmax_iters = 4\n";
    let cfg = ExperimentConfig::from_toml_str(text, ScenarioKind::Cs1d).unwrap();
    let base = ExperimentConfig::defaults(ScenarioKind::Inclusion);
    assert_eq!(cfg.grid.nz, 41);
    assert_eq!(cfg.grid.nx, base.grid.nx);
    assert_eq!(cfg.irwri.max_iters, 4);
    assert_eq!(cfg.regularization, base.regularization);
}

#[test]
fn unknown_keys_are_config_errors() {
    let err = ExperimentConfig::from_toml_str("[grid]\nnzz = 3\n", ScenarioKind::Cs1d).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
}

#[test]
fn model_error_cases() {
    let truth = vec![C64::new(1.0, 2.0), C64::new(-3.0, 0.5)];
    for a in [Attribute::Re, Attribute::Im, Attribute::Magnitude, Attribute::Phase] {
        assert_eq!(model_error(&truth, &truth, a).unwrap(), 0.0);
    }
    let doubled: Vec<C64> = truth.iter().map(|z| z * 2.0).collect();
    assert!((model_error(&doubled, &truth, Attribute::Re).unwrap() - 1.0).abs() < 1e-15);
    assert!((model_error(&doubled, &truth, Attribute::Magnitude).unwrap() - 1.0).abs() < 1e-15);
    assert!(model_error(&doubled, &truth, Attribute::Phase).unwrap() < 1e-15);
    assert!(model_error(&truth[..1], &truth, Attribute::Re).is_err());
}

#[test]
fn overdetermined_noise_free_cs_is_recovered_by_every_scheme() {
    let mut cs = ExperimentConfig::defaults(ScenarioKind::Cs1d).cs;
    cs.measurements = 600;
    cs.lambda = 1.0;
    let truth = cs_signal(cs.n);
    let op = gaussian_matrix(cs.measurements, cs.n, 3);
    for run in run_configurations(&truth, &op, &cs, viscowri_cli::config::PhaseRegName::Smooth).unwrap() {
        let err = cs1d::complex_error(&run.x, &truth);
        assert!(err <= 1e-3, "{}: {err}", run.spec.name);
    }
}

#[test]
fn zero_signal_reconstructs_to_zero() {
    let mut cs = ExperimentConfig::defaults(ScenarioKind::Cs1d).cs;
    cs.n = 60;
    cs.measurements = 20;
    cs.iterations = 50;
    let truth = vec![C64::new(0.0, 0.0); cs.n];
    let op = gaussian_matrix(cs.measurements, cs.n, 4);
    for run in run_configurations(&truth, &op, &cs, viscowri_cli::config::PhaseRegName::Smooth).unwrap() {
        let norm: f64 = run.x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(norm <= 1e-12, "{}: {norm}", run.spec.name);
    }
}

#[test]
fn cs_experiment_is_deterministic_for_a_seed() {
    let mut cfg = ExperimentConfig::defaults(ScenarioKind::Cs1d);
    cfg.cs.n = 80;
    cfg.cs.measurements = 30;
    cfg.cs.iterations = 40;
    let a = cs1d::cs1d_experiment(&cfg, None).unwrap();
    let b = cs1d::cs1d_experiment(&cfg, None).unwrap();
    for (ra, rb) in a.runs.iter().zip(&b.runs) {
        assert_eq!(ra.errors, rb.errors);
        assert_eq!(ra.misfit, rb.misfit);
    }
    cfg.seed += 1;
    let c = cs1d::cs1d_experiment(&cfg, None).unwrap();
    assert_ne!(a.runs[0].errors, c.runs[0].errors);
}

#[test]
fn cs_experiment_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = OutputDir::create(dir.path()).unwrap();
    let mut cfg = ExperimentConfig::defaults(ScenarioKind::Cs1d);
    cfg.cs.n = 40;
    cfg.cs.measurements = 15;
    cfg.cs.iterations = 10;
    cs1d::cs1d_experiment(&cfg, Some(&out)).unwrap();
    for name in ["manifest.json", "metrics.json", "signal_true.csv", "signal_alg3.csv", "log_alg1.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

fn small_grid() -> Grid2D {
    Grid2D::new(6, 7, 20.0).unwrap()
}

fn write_m(dir: &std::path::Path, m: &ComplexField) -> std::path::PathBuf {
    let path = dir.join("m.vwf");
    write_vwf(m, File::create(&path).unwrap()).unwrap();
    path
}

fn read_real(path: std::path::PathBuf) -> RealField {
    read_vwf(BufReader::new(File::open(path).unwrap())).unwrap()
}

#[test]
fn extract_inverts_the_forward_mapping() {
    let grid = small_grid();
    let v = RealField::from_fn(grid, |iz, ix| 1500.0 + 40.0 * iz as f64 + 25.0 * ix as f64);
    let alpha = RealField::from_fn(grid, |iz, ix| 0.005 + 0.01 * ((iz + ix) % 5) as f64);
    let pair = AttenuationPair::new(v.clone(), alpha.clone()).unwrap();
    let cfg = ExperimentConfig::defaults(ScenarioKind::Custom);
    for (kind, mech) in [(AttenuationModelKind::Kf, Mechanism::Kf), (AttenuationModelKind::Sls, Mechanism::Sls)] {
        let dir = tempfile::tempdir().unwrap();
        let m = forward(kind, &pair, FrequencySpec::from_hz(12.0, 30.0).unwrap()).unwrap();
        let path = write_m(dir.path(), &m);
        let out = OutputDir::create(&dir.path().join("out")).unwrap();
        let opts = ExtractOptions { kinds: Some(vec![kind]), freq_hz: Some(12.0), reference_hz: Some(30.0) };
        extract_workflow(&cfg, &path, &opts, &out).unwrap();
        let k = mech.name();
        let v2 = read_real(out.path(&format!("v_{k}.vwf")));
        let a2 = read_real(out.path(&format!("alpha_{k}.vwf")));
        for i in 0..grid.len() {
            assert!((v2.values()[i] - v.values()[i]).abs() / v.values()[i] <= 1e-10);
            assert!((a2.values()[i] - alpha.values()[i]).abs() / alpha.values()[i] <= 1e-10);
        }
    }
}

#[test]
fn real_model_extracts_to_zero_attenuation_for_both_mechanisms() {
    let grid = small_grid();
    let m = ComplexField::from_fn(grid, |iz, ix| C64::new(1.0 / (1600.0 + 10.0 * (iz * ix) as f64).powi(2), 0.0));
    let freq = FrequencySpec::from_hz(8.0, 20.0).unwrap();
    let kf = extract_cells(AttenuationModelKind::Kf, &m, freq);
    let sls = extract_cells(AttenuationModelKind::Sls, &m, freq);
    assert!(kf.bad.is_empty() && sls.bad.is_empty());
    for i in 0..grid.len() {
        let v = m.values()[i].re.sqrt().recip();
        assert!((kf.v.values()[i] - v).abs() / v <= 1e-12);
        assert!((sls.v.values()[i] - v).abs() / v <= 1e-12);
        assert!(kf.alpha.values()[i].abs() <= 1e-12 && sls.alpha.values()[i].abs() <= 1e-12);
    }
}

#[test]
fn extract_reports_bad_cells_after_writing_fields() {
    let grid = small_grid();
    let dir = tempfile::tempdir().unwrap();
    let mut m = ComplexField::constant(grid, C64::new(1.0 / 2000f64.powi(2), 1e-8));
    m.values_mut()[3] = C64::new(-1e-7, 0.0);
    let path = write_m(dir.path(), &m);
    let out = OutputDir::create(&dir.path().join("out")).unwrap();
    let cfg = ExperimentConfig::defaults(ScenarioKind::Custom);
    let err = extract_workflow(&cfg, &path, &ExtractOptions::default(), &out).unwrap_err();
    assert!(matches!(err, CliError::Extraction(_)));
    assert_eq!(err.exit_code(), std::process::ExitCode::from(4));
    let v = read_real(out.path("v_kf.vwf"));
    assert!(v.values()[3].is_nan());
    assert!(v.values()[4].is_finite());
}

fn tiny_inversion_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(ScenarioKind::Inclusion);
    cfg.grid.nz = 31;
    cfg.grid.nx = 31;
    cfg.grid.h = 50.0;
    cfg.acquisition = AcquisitionConfig::Perimeter { n_sources: 4, n_receivers: 40, inset: 1 };
    cfg.frequencies.f_min = 5.0;
    cfg.frequencies.f_max = 5.0;
    cfg.frequencies.batch_size = 1;
    cfg.model.extract_hz = 5.0;
    cfg.model.extract_kinds = vec![Mechanism::Sls];
    cfg
}

#[test]
fn inversion_started_at_the_truth_stops_immediately() {
    let cfg = tiny_inversion_config();
    let mut problem = InversionProblem::build(&cfg).unwrap();
    problem.m_init = problem.m_true.clone();
    let run = run_scheme(&problem, &cfg, RegName::None).unwrap();
    assert_eq!(run.log.len(), 1);
    let (_, e) = &run.extracted[0];
    assert!(e.bad.is_empty());
    for i in 0..problem.grid.len() {
        let (v, a) = (problem.truth.v.values()[i], problem.truth.alpha.values()[i]);
        assert!((e.v.values()[i] - v).abs() / v <= 1e-6);
        assert!((e.alpha.values()[i] - a).abs() / a <= 1e-6);
    }
}

#[test]
fn stop_status_of_a_converged_batch_is_reported() {
    let cfg = tiny_inversion_config();
    let mut problem = InversionProblem::build(&cfg).unwrap();
    problem.m_init = problem.m_true.clone();
    let params = viscowri_cli::inclusion::irwri_params(&cfg, RegName::None.regularization());
    let result = viscowri::irwri::run_continuation(
        &problem.m_init,
        &problem.batches,
        &problem.setup,
        &problem.acquisition,
        &problem.data,
        &params,
    )
    .unwrap();
    assert_eq!(result.batches[0].status, StopStatus::Converged);
}

#[test]
fn perimeter_acquisition_stays_inside_the_grid() {
    let grid = Grid2D::new(41, 51, 10.0).unwrap();
    let acq = geometry::perimeter(&grid, 8, 100, 1).unwrap();
    assert_eq!(acq.shots.len(), 8);
    assert_eq!(acq.receivers.len(), 100);
    for i in acq.shots.iter().map(|s| s.index).chain(acq.receivers.iter().copied()) {
        let (iz, ix) = grid.coords(i);
        assert!(iz < grid.nz() && ix < grid.nx());
    }
}

fn small_piecewise() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(ScenarioKind::Piecewise);
    cfg.grid.nz = 41;
    cfg.grid.nx = 41;
    cfg.piecewise.f_min = 2.0;
    cfg.piecewise.f_max = 8.0;
    cfg.piecewise.df = 0.5;
    cfg.piecewise.nt = 101;
    cfg.piecewise.offsets = vec![200.0, 400.0];
    cfg
}

fn piecewise_discrepancy(cfg: &ExperimentConfig, kind: AttenuationModelKind) -> (f64, f64) {
    let setup = geometry::modeling_setup(&cfg.grid, cfg.piecewise.v).unwrap();
    let (_, exact, banded) = compare_traces(cfg, &setup, kind).unwrap();
    trace_discrepancy(&exact, &banded)
}

#[test]
fn piecewise_without_attenuation_has_no_discrepancy() {
    let mut cfg = small_piecewise();
    cfg.piecewise.alpha = 0.0;
    for kind in [AttenuationModelKind::Kf, AttenuationModelKind::Sls] {
        let (linf, l2) = piecewise_discrepancy(&cfg, kind);
        assert!(linf <= 1e-12 && l2 <= 1e-12, "{kind:?}: {linf} {l2}");
    }
}

#[test]
fn piecewise_with_one_frequency_per_band_has_no_discrepancy() {
    let mut cfg = small_piecewise();
    cfg.piecewise.band_hz = cfg.piecewise.df / 2.0;
    let (linf, l2) = piecewise_discrepancy(&cfg, AttenuationModelKind::Sls);
    assert!(linf <= 1e-12 && l2 <= 1e-12, "{linf} {l2}");
    let mut wide = small_piecewise();
    wide.piecewise.band_hz = 2.0;
    assert!(piecewise_discrepancy(&wide, AttenuationModelKind::Sls).0 > linf);
}

#[test]
fn binary_prints_the_batch_plan_and_rejects_bad_configs() {
    let bin = env!("CARGO_BIN_EXE_viscowri");
    let ok = std::process::Command::new(bin).args(["batches"]).output().unwrap();
    assert!(ok.status.success());
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.contains("batch 1: 3, 3.5, 4 Hz"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\nnz = 1\n").unwrap();
    let status = std::process::Command::new(bin)
        .args(["--config", bad.to_str().unwrap(), "batches"])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));

    let m = ComplexField::constant(small_grid(), C64::new(-1.0, 0.0));
    let path = write_m(dir.path(), &m);
    let out = dir.path().join("out");
    let status = std::process::Command::new(bin)
        .args(["--out", out.to_str().unwrap(), "extract", path.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(4));
}
