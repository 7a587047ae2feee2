//! `rowprint` command-line scenario runner.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 run failure
//! (including partial results where some devices failed).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rowprint::harness::{run_scenario, Preset, ScenarioConfig, ScenarioKind};
use rowprint::matching::ReferenceStore;
use rowprint::{Error, Execution};

#[derive(Parser)]
#[command(
    name = "rowprint",
    version,
    about = "DRAM fingerprinting simulation workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reference vs probe fingerprint per device, threshold sweep.
    Uniq(RunArgs),
    /// Repeated sessions against a fixed reference.
    Stable(RunArgs),
    /// Paired runs with and without a reseat between extractions.
    Reseat(RunArgs),
    /// Activations x repeats grid with work units.
    Eff(RunArgs),
    /// Probes at reduced activation rate, high- and low-flip patterns.
    Freq(RunArgs),
    /// Divergence matching vs single-sweep Jaccard on the same observations.
    Baseline(RunArgs),
    /// Geometry inference over the stock geometries.
    Geom(RunArgs),
    /// Chunk overlap and sample-size curves.
    Birthday(RunArgs),
    /// Theoretical and empirical entropy.
    Entropy(RunArgs),
    /// Summarise a reference store file (references, chunk counts, merges).
    Store {
        /// A `references.jsonl` written by a uniq run.
        path: PathBuf,
    },
    /// Print the full default configuration for a scenario as TOML.
    Config {
        /// Scenario name (uniq, stable, reseat, eff, freq, baseline, geom, birthday, entropy).
        scenario: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; its `scenario` key is overridden by the subcommand.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for CSV tables and summary.json.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Matching threshold.
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// Population preset: 2Rx8-36, 1Rx8-35 or 1Rx16-11.
    #[arg(long)]
    preset: Option<String>,
    /// Disable the thread pool.
    #[arg(long)]
    sequential: bool,
}

enum Failure {
    Validation(anyhow::Error),
    Run(anyhow::Error),
}

fn is_validation(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::Usage(_) | Error::Schema { .. } | Error::Parse { .. }
    )
}

fn classify(e: Error) -> Failure {
    if is_validation(&e) {
        Failure::Validation(e.into())
    } else {
        Failure::Run(e.into())
    }
}

fn build_config(kind: ScenarioKind, args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path).map_err(classify)?,
        None => ScenarioConfig::new(kind),
    };
    cfg.scenario = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(tau) = args.tau {
        cfg.tau = tau;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(p) = &args.preset {
        cfg.population.preset = p.parse::<Preset>().map_err(classify)?;
    }
    if args.sequential {
        cfg.execution = Execution::Sequential;
    }
    cfg.validate().map_err(classify)?;
    Ok(cfg)
}

fn run(kind: ScenarioKind, args: &RunArgs) -> Result<(), Failure> {
    let cfg = build_config(kind, args)?;
    let start = Instant::now();
    let bundle = run_scenario(&cfg).map_err(classify)?;
    info!("{kind} finished in {:.2?}", start.elapsed());

    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| Path::new("results").join(kind.name()));
    bundle
        .write(&out)
        .map_err(|e| Failure::Run(anyhow::Error::from(e)))?;
    let toml = cfg.to_toml().map_err(classify)?;
    std::fs::write(out.join("config.toml"), toml)
        .with_context(|| format!("writing {}", out.join("config.toml").display()))
        .map_err(Failure::Run)?;

    println!("{}", bundle.summary);
    println!("results written to {}", out.display());
    if !bundle.failures.is_empty() {
        for f in &bundle.failures {
            warn!("{f}");
        }
        return Err(Failure::Run(anyhow::anyhow!(
            "{} device failure(s); partial results kept",
            bundle.failures.len()
        )));
    }
    Ok(())
}

fn store_summary(path: &Path) -> Result<(), Failure> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::Validation)?;
    let label = path.display().to_string();
    let store = ReferenceStore::read(std::io::BufReader::new(file), &label).map_err(classify)?;
    let summary =
        serde_json::to_string_pretty(&store.summary()).map_err(|e| Failure::Run(e.into()))?;
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Config { scenario } => scenario
            .parse::<ScenarioKind>()
            .and_then(|k| ScenarioConfig::new(k).to_toml())
            .map(|t| print!("{t}"))
            .map_err(classify),
        Command::Store { path } => store_summary(&path),
        Command::Uniq(a) => run(ScenarioKind::Uniq, &a),
        Command::Stable(a) => run(ScenarioKind::Stable, &a),
        Command::Reseat(a) => run(ScenarioKind::Reseat, &a),
        Command::Eff(a) => run(ScenarioKind::Eff, &a),
        Command::Freq(a) => run(ScenarioKind::Freq, &a),
        Command::Baseline(a) => run(ScenarioKind::Baseline, &a),
        Command::Geom(a) => run(ScenarioKind::Geom, &a),
        Command::Birthday(a) => run(ScenarioKind::Birthday, &a),
        Command::Entropy(a) => run(ScenarioKind::Entropy, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
