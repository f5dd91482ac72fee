//! `shmbench`: generate, contaminate, inspect and plot synthetic monitoring
//! corpora of a fixed-fixed steel beam.

mod contaminate;
mod generate;
mod inspect;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use shmbench::faults::FaultClass;
use shmbench::{ScenarioConfig, SubDataset};

#[derive(Debug, Parser)]
#[command(name = "shmbench", version, about = "Synthetic vibration corpus for a steel beam")]
struct Cli {
    /// Print machine-readable JSON reports instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate sub-datasets, auxiliary inputs and a checksum manifest.
    Generate(GenerateArgs),
    /// Apply a fault policy to an existing directory of records.
    Contaminate(ContaminateArgs),
    /// Report on one record file or a whole output directory.
    Inspect(InspectArgs),
    /// Write a figure as SVG.
    Plot(PlotArgs),
    /// Write the default scenario configuration as JSON.
    InitConfig {
        #[arg(long, short, default_value = "config.json")]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct GenerateArgs {
    /// Scenario configuration; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Sub-dataset to generate (D1, D2.1 ... D5); repeatable. All when omitted.
    #[arg(long = "subdataset", short = 's')]
    subdatasets: Vec<SubDataset>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "SHMBENCH_WORKERS")]
    workers: Option<usize>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// First acquisition of a reduced run, as YYYY-MM-DD or YYYY-MM-DDTHH.
    #[arg(long, requires = "hours")]
    start: Option<String>,
    /// Number of hourly acquisitions of a reduced run.
    #[arg(long)]
    hours: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct ContaminateArgs {
    /// Directory holding `accXXXXX-YZ.h5` records.
    corpus: PathBuf,
    /// Fault policy as JSON; the sampled-corpus policy when omitted.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 2020)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct InspectArgs {
    /// A record file or an output directory.
    path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Figure {
    /// Live and design load history.
    Load,
    /// Young's modulus against temperature.
    Modulus,
    /// Spectrum of a sample input, or of `--file`.
    Spectrum,
    /// Midspan deflection of every sub-dataset.
    Deflection,
    /// One faulty record against its clean counterpart.
    Fault,
}

#[derive(Debug, clap::Args)]
struct PlotArgs {
    figure: Figure,
    /// Output figure; only `.svg` is supported.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Acquisition index for `spectrum` and `fault`.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Fault class for `fault` (D, B, S, G, N, M, C_temp, C_perm).
    #[arg(long, default_value = "D")]
    class: FaultClass,
    /// Record file whose spectrum is plotted.
    #[arg(long)]
    file: Option<PathBuf>,
}

fn load_config(path: Option<&PathBuf>, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut config = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        config.master_seed = s;
    }
    config.validate()?;
    Ok(config)
}

/// Prints `value` as JSON or through `text`.
fn report<T>(json: bool, value: &serde_json::Value, text: T)
where
    T: FnOnce(),
{
    if json {
        println!("{}", serde_json::to_string_pretty(value).unwrap_or_default());
    } else {
        text();
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(args) => generate::run(&args, cli.json),
        Command::Contaminate(args) => contaminate::run(&args, cli.json),
        Command::Inspect(args) => inspect::run(&args, cli.json),
        Command::Plot(args) => plot::run(&args, cli.json),
        Command::InitConfig { out } => {
            ScenarioConfig::default().save(&out)?;
            report(cli.json, &serde_json::json!({ "written": out }), || {
                println!("wrote {}", out.display())
            });
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
