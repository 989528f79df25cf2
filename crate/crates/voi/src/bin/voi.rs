//! Command-line front end: `run`, `ingest-run`, `tables`, `plot-data`.
//! Exit codes: 0 success, 1 configuration/schema error, 2 numeric failure.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use voi::cli::{self, ingest, run_to_dir, CliError, FactorSelection, RunConfig};
use voi::discrete::Estimator;
use voi::smooth::SmootherConfig;

#[derive(Parser)]
#[command(
    name = "voi",
    about = "Decision sensitivity and information-value analysis from Monte Carlo samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario (working-example-discrete, working-example-continuous).
    #[arg(long)]
    scenario: Option<String>,
    /// Number of Monte Carlo samples (overrides the config).
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Estimator variant: plugin or reoptimize (overrides the config).
    #[arg(long)]
    estimator: Option<String>,
    /// Smoother as JSON, e.g. {"method":"loess","span":0.3} (overrides the config).
    #[arg(long)]
    smoother: Option<String>,
    /// Restrict the analysis to these factors.
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a configured problem and write report.json / report.txt.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Ingest an external sample CSV (factor columns plus u_a1..u_am) and analyze it.
    IngestRun {
        /// Sample CSV path.
        samples_csv: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the regression tables for a built-in scenario.
    Tables {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Write plot-data CSVs (profiles, CVPPI, optimum maps, scatter overlays).
    PlotData {
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn build_config(common: &CommonOpts, default_ok: bool) -> Result<RunConfig, CliError> {
    let mut cfg = match (&common.config, &common.scenario) {
        (Some(path), _) => RunConfig::from_path(path)?,
        (None, Some(s)) => RunConfig::scenario(s),
        // Ingestion needs no scenario: the sample table describes the problem.
        (None, None) if default_ok => RunConfig {
            scenario: None,
            problem: None,
            analysis: Default::default(),
        },
        (None, None) => {
            return Err(CliError::Config(
                "either --config or --scenario is required".into(),
            ))
        }
    };
    if common.config.is_some() {
        if let Some(s) = &common.scenario {
            cfg.scenario = Some(s.clone());
            cfg.problem = None;
        }
    }
    if let Some(n) = common.samples {
        cfg.analysis.n_samples = n;
    }
    if let Some(seed) = common.seed {
        cfg.analysis.seed = seed;
    }
    if let Some(e) = &common.estimator {
        cfg.analysis.estimator = match e.as_str() {
            "plugin" => Estimator::Plugin,
            "reoptimize" => Estimator::Reoptimize,
            other => {
                return Err(CliError::Config(format!(
                    "unknown estimator '{other}' (expected plugin or reoptimize)"
                )))
            }
        };
    }
    if let Some(s) = &common.smoother {
        cfg.analysis.smoother = serde_json::from_str::<SmootherConfig>(s)
            .map_err(|e| CliError::Config(format!("--smoother: {e}")))?;
    }
    if let Some(f) = &common.factors {
        cfg.analysis.factors = FactorSelection::List(f.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { common, out } => {
            let cfg = build_config(&common, false)?;
            run_to_dir(&cfg, None, &out, false)?;
            Ok(())
        }
        Command::IngestRun { samples_csv, common, out } => {
            let cfg = build_config(&common, true)?;
            let table = ingest(&samples_csv, &cfg)?;
            run_to_dir(&cfg, Some(table), &out, false)?;
            Ok(())
        }
        Command::Tables { common } => {
            let cfg = build_config(&common, false)?;
            if cfg.scenario.is_none() {
                return Err(CliError::Config("tables needs a built-in scenario".into()));
            }
            let text = cli::emit_tables_for_config(&cfg)?;
            print!("{text}");
            Ok(())
        }
        Command::PlotData { common, out } => {
            let cfg = build_config(&common, false)?;
            let artifacts = cli::execute(&cfg, None)?;
            for (name, contents) in &artifacts.plot_files {
                cli::write_atomic(&out.join(name), contents)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config_hint = match &cli.command {
        Command::Run { common, .. }
        | Command::IngestRun { common, .. }
        | Command::Tables { common }
        | Command::PlotData { common, .. } => common
            .config
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<inline config>".to_string()),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({config_hint}): {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
