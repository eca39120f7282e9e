//! Command-line surface: subcommands, global flags and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use viscowri::atten::AttenuationModelKind;

use crate::config::{ExperimentConfig, Mechanism, RegName, ScenarioKind};
use crate::error::{CliError, CliResult};
use crate::metrics::MetricsReport;
use crate::output::OutputDir;
use crate::workflows::{self, ExtractOptions};
use crate::{cs1d, inclusion, piecewise};

#[derive(Debug, Parser)]
#[command(name = "viscowri", version, about = "Complex-valued visco-acoustic wavefield-reconstruction inversion")]
pub struct Cli {
    /// TOML configuration; keys override the subcommand's defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Regularization scheme: none, alg1, alg2 or alg3.
    #[arg(long, global = true)]
    pub reg: Option<RegName>,
    /// Weight between the two TV terms (alg2) or between magnitude and phase (alg3).
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// 1D compressed-sensing comparison of the TV schemes.
    Cs1d,
    /// 2D inclusion inversion.
    Inclusion,
    /// Band-wise versus exact dispersive wavefields.
    Piecewise,
    /// Synthesize receiver data for the configured model.
    Forward,
    /// Invert synthetic data with frequency continuation.
    Invert,
    /// Map a complex model file to velocity and attenuation.
    Extract {
        /// VWF1 file holding the complex squared slowness.
        m_file: PathBuf,
        /// Mechanism: kf or sls (repeatable).
        #[arg(long = "kind")]
        kinds: Vec<Mechanism>,
        /// Extraction frequency in Hz.
        #[arg(long)]
        freq: Option<f64>,
        /// Reference frequency in Hz.
        #[arg(long)]
        reference: Option<f64>,
    },
    /// Print the frequency-batch plan.
    Batches,
}

impl std::str::FromStr for Mechanism {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s.parse::<AttenuationModelKind>()? {
            AttenuationModelKind::Kf => Ok(Mechanism::Kf),
            AttenuationModelKind::Sls => Ok(Mechanism::Sls),
        }
    }
}

impl Command {
    pub fn scenario(&self) -> ScenarioKind {
        match self {
            Command::Cs1d => ScenarioKind::Cs1d,
            Command::Inclusion => ScenarioKind::Inclusion,
            Command::Piecewise => ScenarioKind::Piecewise,
            _ => ScenarioKind::Custom,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Cs1d => "cs1d",
            Command::Inclusion => "inclusion",
            Command::Piecewise => "piecewise",
            Command::Forward => "forward",
            Command::Invert => "invert",
            Command::Extract { .. } => "extract",
            Command::Batches => "batches",
        }
    }
}

/// Defaults of the subcommand, then the config file, then the flags.
pub fn resolve_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let fallback = cli.command.scenario();
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, fallback)?,
        None => ExperimentConfig::defaults(fallback),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(reg) = cli.reg {
        cfg.regularization.schemes = vec![reg];
    }
    if let Some(tau) = cli.tau {
        cfg.regularization.tau = tau;
        cfg.cs.tau = tau;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(report: &MetricsReport) {
    for run in &report.runs {
        let errors: Vec<String> = run.errors.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        println!("{}: {}", run.name, errors.join(" "));
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = resolve_config(cli)?;
    if let Some(n) = cfg.threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Command::Batches = cli.command {
        print!("{}", workflows::format_plan(&workflows::batch_plan(&cfg)?));
        return Ok(());
    }
    let out = OutputDir::create(&cfg.out)?;
    let report = match &cli.command {
        Command::Cs1d => cs1d::cs1d_experiment(&cfg, Some(&out))?,
        Command::Inclusion => inclusion::inclusion_experiment(&cfg, Some(&out))?,
        Command::Piecewise => piecewise::piecewise_experiment(&cfg, Some(&out))?,
        Command::Forward => workflows::forward_workflow(&cfg, &out)?,
        Command::Invert => workflows::invert_workflow(&cfg, &out)?,
        Command::Extract { m_file, kinds, freq, reference } => {
            let opts = ExtractOptions {
                kinds: (!kinds.is_empty()).then(|| kinds.iter().map(|k| k.kind()).collect()),
                freq_hz: *freq,
                reference_hz: *reference,
            };
            workflows::extract_workflow(&cfg, m_file, &opts, &out)?
        }
        Command::Batches => unreachable!(),
    };
    print_summary(&report);
    println!("{} results written to {}", cli.command.name(), out.root().display());
    Ok(())
}
