//! Experiment configuration: TOML files layered over per-scenario defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use viscowri::atten::AttenuationModelKind;
use viscowri::irwri::{Regularization, StoppingCriteria};
use viscowri::regularize::PhaseReg;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Cs1d,
    Inclusion,
    Piecewise,
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Cs1d => "cs1d",
            ScenarioKind::Inclusion => "inclusion",
            ScenarioKind::Piecewise => "piecewise",
            ScenarioKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Kf,
    Sls,
}

impl Mechanism {
    pub fn kind(self) -> AttenuationModelKind {
        match self {
            Mechanism::Kf => AttenuationModelKind::Kf,
            Mechanism::Sls => AttenuationModelKind::Sls,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Kf => "kf",
            Mechanism::Sls => "sls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegName {
    None,
    Alg1,
    Alg2,
    Alg3,
}

impl RegName {
    pub fn regularization(self) -> Regularization {
        match self {
            RegName::None => Regularization::None,
            RegName::Alg1 => Regularization::Alg1,
            RegName::Alg2 => Regularization::Alg2,
            RegName::Alg3 => Regularization::Alg3,
        }
    }

    pub fn name(self) -> &'static str {
        self.regularization().name()
    }
}

impl std::str::FromStr for RegName {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(RegName::None),
            "alg1" => Ok(RegName::Alg1),
            "alg2" => Ok(RegName::Alg2),
            "alg3" => Ok(RegName::Alg3),
            other => Err(CliError::config(format!("unknown regularization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseRegName {
    Smooth,
    Tv,
}

impl PhaseRegName {
    pub fn phase_reg(self) -> PhaseReg {
        match self {
            PhaseRegName::Smooth => PhaseReg::SmoothPhase,
            PhaseRegName::Tv => PhaseReg::TvPhase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nz: usize,
    pub nx: usize,
    /// Grid spacing in metres.
    pub h: f64,
    pub pml_layers: usize,
}

/// Grid cell as `[iz, ix]`.
pub type Cell = [usize; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "lowercase", deny_unknown_fields)]
pub enum AcquisitionConfig {
    /// Sources and receivers split evenly over the four edges, `inset` cells inside.
    Perimeter { n_sources: usize, n_receivers: usize, inset: usize },
    Explicit { sources: Vec<Cell>, receivers: Vec<Cell> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyPlan {
    pub f_min: f64,
    pub f_max: f64,
    pub df: f64,
    pub batch_size: usize,
    pub overlap: usize,
}

/// A model attribute given either as a constant or as a VWF1 file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Constant(f64),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// True model; unused by the inclusion scenario, which builds its own.
    pub true_v: ModelSource,
    pub true_alpha: ModelSource,
    pub initial_v: ModelSource,
    pub initial_alpha: ModelSource,
    /// Mechanism used to synthesize the observed data.
    pub data_kind: Mechanism,
    /// Mechanism mapping the initial `(v, alpha)` to `m`.
    pub initial_kind: Mechanism,
    pub reference_hz: f64,
    pub extract_kinds: Vec<Mechanism>,
    pub extract_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    /// Schemes run by the inclusion scenario; the first one is used by `invert`.
    pub schemes: Vec<RegName>,
    pub lambda: f64,
    /// TV penalty; derived from the normalized virtual-source system when absent.
    pub gamma: Option<f64>,
    pub tau: f64,
    pub phase_reg: PhaseRegName,
    pub phase_weight: f64,
    pub curvature_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrwriConfig {
    pub lambda: f64,
    /// Data weight; balanced against the sources per batch when absent.
    pub gamma: Option<f64>,
    pub max_iters: usize,
    pub eps_b: f64,
    pub eps_d: f64,
    pub relative: bool,
}

impl IrwriConfig {
    pub fn stopping(&self) -> StoppingCriteria {
        StoppingCriteria { eps_b: self.eps_b, eps_d: self.eps_d, max_iters: self.max_iters, relative: self.relative }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsConfig {
    pub n: usize,
    pub measurements: usize,
    pub iterations: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub tau: f64,
    pub phase_weight: f64,
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseConfig {
    pub v: f64,
    pub alpha: f64,
    pub reference_hz: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub df: f64,
    pub band_hz: f64,
    pub kinds: Vec<Mechanism>,
    /// Dominant frequency of the Ricker wavelet.
    pub f_dominant: f64,
    /// Wavelet delay in seconds.
    pub t0: f64,
    pub duration: f64,
    pub nt: usize,
    /// Receiver offsets from the central source along the source row, in metres.
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub grid: GridConfig,
    pub acquisition: AcquisitionConfig,
    pub frequencies: FrequencyPlan,
    pub model: ModelConfig,
    pub regularization: RegularizationConfig,
    pub irwri: IrwriConfig,
    pub cs: CsConfig,
    pub piecewise: PiecewiseConfig,
}

impl ExperimentConfig {
    /// Defaults of a scenario.
    pub fn defaults(scenario: ScenarioKind) -> Self {
        let mut cfg = ExperimentConfig {
            scenario,
            seed: 1,
            out: PathBuf::from("out").join(scenario.name()),
            threads: None,
            grid: GridConfig { nz: 81, nx: 81, h: 25.0, pml_layers: 10 },
            acquisition: AcquisitionConfig::Perimeter { n_sources: 8, n_receivers: 200, inset: 1 },
            frequencies: FrequencyPlan { f_min: 5.0, f_max: 7.0, df: 1.0, batch_size: 3, overlap: 0 },
            model: ModelConfig {
                true_v: ModelSource::Constant(1500.0),
                true_alpha: ModelSource::Constant(0.01),
                initial_v: ModelSource::Constant(1500.0),
                initial_alpha: ModelSource::Constant(0.0),
                data_kind: Mechanism::Sls,
                initial_kind: Mechanism::Sls,
                reference_hz: 10.0,
                extract_kinds: vec![Mechanism::Kf, Mechanism::Sls],
                extract_hz: 6.0,
            },
            regularization: RegularizationConfig {
                schemes: vec![RegName::None, RegName::Alg1, RegName::Alg2, RegName::Alg3],
                lambda: 1.0,
                gamma: Some(30.0),
                tau: 0.5,
                phase_reg: PhaseRegName::Smooth,
                phase_weight: 1000.0,
                curvature_scale: 0.1,
            },
            irwri: IrwriConfig { lambda: 1.0, gamma: None, max_iters: 30, eps_b: 1e-3, eps_d: 1e-5, relative: false },
            cs: CsConfig {
                n: 500,
                measurements: 50,
                iterations: 500,
                lambda: 0.01,
                gamma: 1000.0,
                tau: 0.5,
                phase_weight: 10.0,
                refine: true,
            },
            piecewise: PiecewiseConfig {
                v: 2000.0,
                alpha: 0.066,
                reference_hz: 10.0,
                f_min: 1.0,
                f_max: 20.0,
                df: 0.25,
                band_hz: 1.0,
                kinds: vec![Mechanism::Sls, Mechanism::Kf],
                f_dominant: 10.0,
                t0: 0.15,
                duration: 1.0,
                nt: 501,
                offsets: vec![250.0, 500.0, 750.0],
            },
        };
        match scenario {
            ScenarioKind::Piecewise => {
                cfg.grid.pml_layers = 20;
            }
            ScenarioKind::Custom => {
                cfg.frequencies = FrequencyPlan { f_min: 3.0, f_max: 15.0, df: 0.5, batch_size: 3, overlap: 1 };
                cfg.irwri.max_iters = 15;
                cfg.regularization.schemes = vec![RegName::Alg3];
                cfg.model.extract_kinds = vec![Mechanism::Kf];
                cfg.model.reference_hz = 50.0;
                cfg.model.extract_hz = 15.0;
            }
            ScenarioKind::Cs1d | ScenarioKind::Inclusion => {}
        }
        cfg
    }

    /// Parses TOML text; keys absent from the text keep the defaults of the
    /// scenario named by its `scenario` key (or `fallback`).
    pub fn from_toml_str(text: &str, fallback: ScenarioKind) -> CliResult<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| CliError::config(format!("invalid TOML: {e}")))?;
        let scenario = match user.get("scenario") {
            Some(v) => ScenarioKind::deserialize(v.clone())
                .map_err(|e| CliError::config(format!("invalid scenario: {e}")))?,
            None => fallback,
        };
        let mut base = toml::Table::try_from(Self::defaults(scenario))
            .map_err(|e| CliError::config(format!("cannot encode defaults: {e}")))?;
        // Untagged or tagged sections replace the default wholesale.
        for key in ["acquisition"] {
            if user.contains_key(key) {
                base.remove(key);
            }
        }
        merge(&mut base, user);
        let cfg: ExperimentConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e| CliError::config(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, fallback: ScenarioKind) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, fallback)
    }

    pub fn to_toml_string(&self) -> CliResult<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::config(format!("cannot encode configuration: {e}")))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let g = &self.grid;
        if g.nz < 2 || g.nx < 2 || !(g.h > 0.0 && g.h.is_finite()) {
            return bad(format!("grid needs nz, nx >= 2 and h > 0, got {}x{} at {}", g.nz, g.nx, g.h));
        }
        let f = &self.frequencies;
        if !(f.f_min > 0.0 && f.f_min <= f.f_max && f.df > 0.0) || f.batch_size == 0 || f.overlap >= f.batch_size {
            return bad(format!(
                "frequency plan needs 0 < f_min <= f_max, df > 0 and 0 <= overlap < batch_size, got {f:?}"
            ));
        }
        let m = &self.model;
        if !(m.reference_hz > 0.0 && m.extract_hz > 0.0) {
            return bad("reference and extraction frequencies must be positive".into());
        }
        let r = &self.regularization;
        if !(r.lambda > 0.0) || r.gamma.is_some_and(|g| !(g > 0.0)) || !(0.0..=1.0).contains(&r.tau) {
            return bad("regularization needs lambda > 0, gamma > 0 and tau in [0, 1]".into());
        }
        if !(r.phase_weight >= 0.0 && r.curvature_scale > 0.0) {
            return bad("phase_weight must be >= 0 and curvature_scale > 0".into());
        }
        let i = &self.irwri;
        if !(i.lambda > 0.0) || i.gamma.is_some_and(|g| !(g > 0.0)) || i.max_iters == 0 {
            return bad("irwri needs lambda > 0, gamma > 0 and max_iters >= 1".into());
        }
        let c = &self.cs;
        if c.n < 2 || c.measurements == 0 || !(c.lambda > 0.0 && c.gamma > 0.0) || !(0.0..=1.0).contains(&c.tau) {
            return bad("cs needs n >= 2, measurements >= 1, lambda, gamma > 0 and tau in [0, 1]".into());
        }
        let p = &self.piecewise;
        if !(p.v > 0.0 && p.alpha >= 0.0 && p.f_min > 0.0 && p.f_min < p.f_max && p.df > 0.0 && p.band_hz >= p.df)
            || p.nt < 2
            || !(p.duration > 0.0)
        {
            return bad("piecewise needs v > 0, alpha >= 0, 0 < f_min < f_max, 0 < df <= band_hz, nt >= 2".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }
}

/// Recursive table merge; values of `over` win.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
