use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sagnac::expcli::report::AnalysisOptions;
use sagnac::expcli::run::write_all;
use sagnac::expcli::{analyze_file, emit_plot_data, run_experiment, Experiment, ExperimentConfig, Report};
use sagnac::{Error, Result};

/// Simulate and analyze polarization-entangled photon-pair experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use the built-in reference configuration.
    #[arg(long, global = true, conflicts_with = "config")]
    paper_defaults: bool,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of repetitions.
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an experiment and write its counts and report.
    Simulate {
        /// fringe, hom, chsh, tomography, sweep-power or sweep-temperature
        experiment: Option<Experiment>,
    },
    /// Analyze a count file.
    Analyze {
        kind: Experiment,
        #[arg(long)]
        input: PathBuf,
        /// Wavelength for converting the HOM coherence length to a bandwidth.
        #[arg(long)]
        wavelength_nm: Option<f64>,
    },
    /// Extract plot-ready columns from a report.
    PlotData {
        report: PathBuf,
        /// Expected report kind.
        #[arg(long)]
        kind: Option<Experiment>,
    },
    /// Check a configuration file, or print the reference one.
    ValidateConfig,
}

fn load_config(cli: &Cli, experiment: Option<Experiment>) -> Result<Option<ExperimentConfig>> {
    let mut config = match (&cli.config, cli.paper_defaults) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, true) => ExperimentConfig::paper_defaults(experiment.unwrap_or(Experiment::Fringe)),
        (None, false) => return Ok(None),
    };
    if let Some(e) = experiment {
        config.experiment = e;
    }
    if let Some(s) = cli.seed {
        config.master_seed = s;
    }
    if let Some(r) = cli.repeats {
        config.repeats = r;
    }
    config.validate()?;
    Ok(Some(config))
}

fn require_config(cli: &Cli, experiment: Option<Experiment>) -> Result<ExperimentConfig> {
    load_config(cli, experiment)?
        .ok_or_else(|| Error::Config { path: "--config".into(), message: "pass --config <file> or --paper-defaults".into() })
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "counts".into())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { experiment } => {
            let config = require_config(cli, *experiment)?;
            let out = run_experiment(&config, &cli.out_dir)?;
            println!("{}", out.counts_path.display());
            println!("{}", out.report_path.display());
        }
        Command::Analyze { kind, input, wavelength_nm } => {
            let mut opts = load_config(cli, None)?
                .map(|c| AnalysisOptions::from_config(&c))
                .unwrap_or_default();
            if let Some(w) = wavelength_nm {
                if !(*w > 0.0 && w.is_finite()) {
                    return Err(Error::InvalidArgument(format!("--wavelength-nm must be > 0, got {w}")));
                }
                opts.reference_wavelength_nm = *w;
            }
            let report = analyze_file(*kind, input, &opts)?;
            let path = cli.out_dir.join(format!("{}.report.json", stem(input)));
            write_all(&[(path.clone(), report.to_json())])?;
            println!("{}", path.display());
        }
        Command::PlotData { report, kind } => {
            let text = std::fs::read_to_string(report).map_err(|e| Error::Io { path: report.clone(), source: e })?;
            let parsed = Report::from_json(&text)?;
            let kind = kind.unwrap_or(parsed.analysis.kind());
            let path = cli.out_dir.join(format!("{}.plot.csv", stem(report)));
            write_all(&[(path.clone(), emit_plot_data(&parsed, kind)?)])?;
            println!("{}", path.display());
        }
        Command::ValidateConfig => match (&cli.config, cli.paper_defaults) {
            (None, true) => print!("{}", ExperimentConfig::paper_defaults(Experiment::Fringe).to_toml()),
            _ => {
                require_config(cli, None)?;
                println!("ok");
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
