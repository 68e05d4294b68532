//! `oatlas`: open-access indicator pipeline driver.

mod config;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use oatlas_core::corpus::PeriodSpec;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "oatlas",
    version,
    about = "Field-normalized open-access indicators over publication corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a run configuration and print every violation.
    Validate(StageArgs),
    /// Execute the full pipeline: ingest, aggregate, indicators, classify,
    /// export, and the run report.
    Run(StageArgs),
    /// Ingest the corpus and write aggregate tables only.
    Aggregate(StageArgs),
    /// Compute indicators from aggregate tables already on disk.
    Indicators(StageArgs),
    /// Build class schemes from indicators already on disk.
    Classify(StageArgs),
    /// Emit choropleth tables and geometry joins from indicators and
    /// schemes already on disk.
    Export(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Run configuration JSON.
    #[arg(long, env = "OATLAS_CONFIG", value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

/// Command-line overrides for individual config fields. List-valued flags
/// replace the config value wholesale when given.
#[derive(Args, Default)]
struct Overrides {
    /// Corpus file, repeatable.
    #[arg(long = "corpus", value_name = "FILE")]
    corpus: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    subject_scheme: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    zone_registry: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Period given as YYYY-YYYY, repeatable.
    #[arg(long = "period", value_name = "YYYY-YYYY")]
    periods: Vec<String>,
    /// Comma-separated document types.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    doc_types: Vec<String>,
    /// Comma-separated zone levels.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    levels: Vec<String>,
    /// Comma-separated indicators.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    indicators: Vec<String>,
    #[arg(long, value_name = "N")]
    oa_share_classes: Option<usize>,
    #[arg(long, value_name = "N")]
    noai_classes: Option<usize>,
    /// Comma-separated class bounds for ratio indicators.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    symmetric_bounds: Vec<f64>,
    #[arg(long, value_name = "FILE")]
    geometry: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    geometry_id_property: Option<String>,
    /// whole or fractional.
    #[arg(long, value_name = "MODE")]
    geo_counting: Option<String>,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

fn parse_period(text: &str) -> Result<PeriodSpec> {
    let parts: Option<(i32, i32)> = text.split_once('-').and_then(|(a, b)| {
        Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
    });
    match parts {
        Some((min, max)) => {
            PeriodSpec::new(text, min, max).with_context(|| format!("period {text}"))
        }
        None => bail!("period \"{text}\" must look like YYYY-YYYY"),
    }
}

fn apply_overrides(config: &mut RunConfig, overrides: Overrides) -> Result<()> {
    if !overrides.corpus.is_empty() {
        config.corpus = overrides.corpus;
    }
    if let Some(path) = overrides.subject_scheme {
        config.subject_scheme = path;
    }
    if let Some(path) = overrides.zone_registry {
        config.zone_registry = path;
    }
    if let Some(path) = overrides.output_dir {
        config.output_dir = path;
    }
    if !overrides.periods.is_empty() {
        config.periods = overrides
            .periods
            .iter()
            .map(|p| parse_period(p))
            .collect::<Result<Vec<_>>>()?;
    }
    if !overrides.doc_types.is_empty() {
        config.doc_types = overrides.doc_types;
    }
    if !overrides.levels.is_empty() {
        config.levels = overrides.levels;
    }
    if !overrides.indicators.is_empty() {
        config.indicators = overrides.indicators;
    }
    if let Some(k) = overrides.oa_share_classes {
        config.oa_share_classes = k;
    }
    if let Some(k) = overrides.noai_classes {
        config.noai_classes = k;
    }
    if !overrides.symmetric_bounds.is_empty() {
        config.symmetric_bounds = overrides.symmetric_bounds;
    }
    if let Some(path) = overrides.geometry {
        config.geometry = Some(path);
    }
    if let Some(name) = overrides.geometry_id_property {
        config.geometry_id_property = name;
    }
    if let Some(mode) = overrides.geo_counting {
        config.geo_counting = mode;
    }
    if let Some(threads) = overrides.threads {
        config.threads = Some(threads);
    }
    Ok(())
}

fn load(args: StageArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    apply_overrides(&mut config, args.overrides)?;
    Ok(config)
}

/// Prints diagnostics and returns false when the config is not runnable.
fn check(config: &RunConfig) -> bool {
    let diagnostics = config.validate();
    for diagnostic in &diagnostics {
        eprintln!("config: {diagnostic}");
    }
    diagnostics.is_empty()
}

fn init_threads(config: &RunConfig) {
    if let Some(threads) = config.threads {
        // Errors only if a global pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate(args) => {
            let config = load(args)?;
            let diagnostics = config.validate();
            for diagnostic in &diagnostics {
                println!("{diagnostic}");
            }
            if diagnostics.is_empty() {
                println!("ok");
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Run(args) => {
            let config = load(args)?;
            if !check(&config) {
                return Ok(ExitCode::from(1));
            }
            init_threads(&config);
            match pipeline::run(&config) {
                Ok(report) => {
                    println!(
                        "run complete: {} records accepted, {} rejected, {} indicator rows, {} output files in {}",
                        report.ingest.report.accepted,
                        report.ingest.report.rejected,
                        report.indicator_rows,
                        report.outputs.len(),
                        config.output_dir.display()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Aggregate(args) => {
            let config = load(args)?;
            if !check(&config) {
                return Ok(ExitCode::from(1));
            }
            init_threads(&config);
            match pipeline::run_aggregate(&config) {
                Ok(report) => {
                    println!(
                        "aggregate complete: {} records accepted, {} rejected",
                        report.accepted, report.rejected
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Indicators(args) => {
            let config = load(args)?;
            if !check(&config) {
                return Ok(ExitCode::from(1));
            }
            match pipeline::run_indicators(&config) {
                Ok(rows) => {
                    println!("indicators complete: {rows} rows");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Classify(args) => {
            let config = load(args)?;
            if !check(&config) {
                return Ok(ExitCode::from(1));
            }
            match pipeline::run_classify(&config) {
                Ok(stage) => {
                    println!("classify complete: {} schemes", stage.schemes.len());
                    for note in &stage.notes {
                        println!("note: {note}");
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Export(args) => {
            let config = load(args)?;
            if !check(&config) {
                return Ok(ExitCode::from(1));
            }
            match pipeline::run_export(&config) {
                Ok(joins) => {
                    println!("export complete: {} geometry joins", joins.len());
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
    }
}
