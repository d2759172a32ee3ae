mod ablation;
mod dataset;
mod report;
mod runner;

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use evogate_core::ProblemKind;

use ablation::ablation_suite;
use dataset::generate_dataset;
use report::aggregate_report;
use runner::{
    atomic_write, run_experiment, Method, ProviderMode, RunConfig, RunManifest, RunRequest,
};

#[derive(Parser)]
#[command(
    name = "evogate",
    about = "LLM-driven evolutionary search over NP-problem benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset.
    Gen {
        #[arg(long, value_parser = parse_problem)]
        problem: ProblemKind,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "dataset")]
        out: PathBuf,
    },
    /// Run one method over a dataset.
    Run {
        #[arg(long, value_enum)]
        method: Method,
        /// JSON run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "runs/out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ProviderMode::Scripted)]
        provider: ProviderMode,
        /// Recorded-response JSONL file, required for --provider replay.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Row label in reports; defaults to the method name.
        #[arg(long)]
        label: Option<String>,
    },
    /// Aggregate run manifests into a markdown report.
    Report {
        /// Run output directories (each containing manifest.json).
        #[arg(long, required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a named ablation suite with the synthetic offline provider.
    Ablate {
        #[arg(long)]
        name: String,
        /// Print the suite's run configurations without executing.
        #[arg(long)]
        dry_run: bool,
        #[arg(long, value_parser = parse_problem, default_value = "gc")]
        problem: ProblemKind,
        /// Existing dataset directory; a small one is generated if omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "runs/ablation")]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    match path {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn main() -> Result<()> {
    env_logger::init();
    match Cli::parse().command {
        Command::Gen { problem, count, seed, out } => {
            let manifest = generate_dataset(problem, count, seed, &out)?;
            println!(
                "wrote {} {} instances to {}",
                manifest.count,
                problem.name(),
                out.display()
            );
        }
        Command::Run { method, config, dataset, out, provider, fixtures, label } => {
            let config = load_config(config.as_ref())?;
            let manifest = run_experiment(&RunRequest {
                label: label.unwrap_or_else(|| method.name().to_string()),
                method,
                config,
                dataset_dir: &dataset,
                out_dir: &out,
                provider_mode: provider,
                fixtures,
            })?;
            let correct = manifest.results.iter().filter(|r| r.correct).count();
            println!(
                "{}: {}/{} correct, manifest at {}",
                manifest.label,
                correct,
                manifest.results.len(),
                out.join("manifest.json").display()
            );
        }
        Command::Report { runs, out } => {
            let manifests: Vec<RunManifest> = runs
                .iter()
                .map(|dir| {
                    let path = dir.join("manifest.json");
                    let raw = fs::read_to_string(&path)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    Ok(serde_json::from_str(&raw)?)
                })
                .collect::<Result<_>>()?;
            let report = aggregate_report(&manifests)?;
            match out {
                Some(path) => {
                    atomic_write(&path, &report)?;
                    println!("report written to {}", path.display());
                }
                None => print!("{report}"),
            }
        }
        Command::Ablate { name, dry_run, problem, dataset, count, seed, out } => {
            let suite = ablation_suite(&name)?;
            if dry_run {
                for run in &suite {
                    println!(
                        "{} [{}]: {}",
                        run.name,
                        run.method.name(),
                        serde_json::to_string(&run.config)?
                    );
                }
                return Ok(());
            }
            let dataset_dir = match dataset {
                Some(dir) => dir,
                None => {
                    let dir = out.join("dataset");
                    generate_dataset(problem, count, seed, &dir)?;
                    dir
                }
            };
            let mut manifests = Vec::with_capacity(suite.len());
            for run in &suite {
                let run_out = out.join(&run.name);
                let manifest = run_experiment(&RunRequest {
                    label: run.name.clone(),
                    method: run.method,
                    config: run.config.clone(),
                    dataset_dir: &dataset_dir,
                    out_dir: &run_out,
                    provider_mode: ProviderMode::Scripted,
                    fixtures: None,
                })?;
                println!("completed {}", run.name);
                manifests.push(manifest);
            }
            let report_path = out.join("report.md");
            atomic_write(&report_path, &aggregate_report(&manifests)?)?;
            println!("suite {name} done; report at {}", report_path.display());
        }
    }
    Ok(())
}
