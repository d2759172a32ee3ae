use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use evogate_core::baselines::{run_bon, run_dp, BonConfig};
use evogate_core::engine::{Engine, ErrorSource, FitnessSource};
use evogate_core::llm::http::HttpProvider;
use evogate_core::llm::offline::OfflineProvider;
use evogate_core::llm::replay::ReplayProvider;
use evogate_core::{
    CompletionRequest, EvolutionConfig, ProblemInstance, ProblemKind, ProblemMetrics, Provider,
    ProviderError,
};

use crate::dataset::load_dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dp,
    Bon,
    Evo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::Bon => "bon",
            Method::Evo => "evo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProviderMode {
    Live,
    Scripted,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessKind {
    #[default]
    Oracle,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    #[default]
    Verifier,
    Llm,
}

fn default_model() -> String {
    "offline-sim".to_string()
}

/// Everything a run needs beyond the method and dataset; loaded from the
/// `--config` JSON file, every field optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: String,
    /// Separate scoring model for the LLM fitness evaluator; `null` reuses
    /// the candidate-generating model.
    #[serde(default)]
    pub evaluator_model: Option<String>,
    #[serde(default)]
    pub fitness_source: FitnessKind,
    #[serde(default)]
    pub error_source: ErrorKind,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub bon: BonConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: default_model(),
            evaluator_model: None,
            fitness_source: FitnessKind::default(),
            error_source: ErrorKind::default(),
            evolution: EvolutionConfig::default(),
            bon: BonConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(
            &fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?,
        )?;
        config.evolution.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub config_hash: String,
    pub best_solution: String,
    pub correct: bool,
    pub penalized_score: f64,
    pub metrics: ProblemMetrics,
    pub provider_calls: usize,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub label: String,
    pub method: Method,
    pub model: String,
    pub problem: ProblemKind,
    pub dataset: String,
    pub config_hash: String,
    pub results: Vec<InstanceResult>,
    pub wall_ms: u128,
}

/// Counts calls passing through to any inner provider.
struct CountingProvider<P> {
    inner: P,
    calls: AtomicUsize,
}

impl<P> CountingProvider<P> {
    fn new(inner: P) -> Self {
        CountingProvider { inner, calls: AtomicUsize::new(0) }
    }

    fn count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: Provider> Provider for CountingProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }
}

/// Stable identity of (method, config) for resumability checks.
pub fn config_hash(method: Method, config: &RunConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(method.name().as_bytes());
    hasher.update(serde_json::to_string(config).expect("config serializes").as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Write via a temp file in the same directory, then rename into place.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let parent = path.parent().context("target path has no parent")?;
    fs::create_dir_all(parent)?;
    let tmp = parent.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn build_provider(
    mode: ProviderMode,
    instance: &ProblemInstance,
    seed: u64,
    fixtures: Option<&Path>,
) -> Result<Box<dyn Provider>> {
    Ok(match mode {
        ProviderMode::Live => Box::new(HttpProvider::from_env()?),
        ProviderMode::Scripted => Box::new(OfflineProvider::new(instance.clone(), seed)),
        ProviderMode::Replay => {
            let path = fixtures.context("--provider replay requires --fixtures FILE")?;
            Box::new(ReplayProvider::load(path)?)
        }
    })
}

pub struct RunRequest<'a> {
    pub label: String,
    pub method: Method,
    pub config: RunConfig,
    pub dataset_dir: &'a Path,
    pub out_dir: &'a Path,
    pub provider_mode: ProviderMode,
    pub fixtures: Option<PathBuf>,
}

/// Execute one method over every dataset instance. Completed instances
/// (matching result file with the same config hash) are skipped, so an
/// interrupted run resumes where it stopped.
pub fn run_experiment(request: &RunRequest<'_>) -> Result<RunManifest> {
    let (dataset_manifest, instances) = load_dataset(request.dataset_dir)?;
    let hash = config_hash(request.method, &request.config);
    let results_dir = request.out_dir.join("results");
    let traces_dir = request.out_dir.join("traces");
    fs::create_dir_all(&results_dir)?;

    let run_started = Instant::now();
    let mut results = Vec::with_capacity(instances.len());
    for (instance_id, instance) in &instances {
        let result_path = results_dir.join(format!("{instance_id}.json"));
        if let Ok(raw) = fs::read_to_string(&result_path) {
            if let Ok(existing) = serde_json::from_str::<InstanceResult>(&raw) {
                if existing.config_hash == hash {
                    results.push(existing);
                    continue;
                }
            }
        }

        let provider = CountingProvider::new(build_provider(
            request.provider_mode,
            instance,
            request.config.evolution.rng_seed,
            request.fixtures.as_deref(),
        )?);
        let plugin = instance.plugin();
        let started = Instant::now();
        let best = match request.method {
            Method::Dp => run_dp(plugin.as_ref(), &provider, &request.config.model)?,
            Method::Bon => run_bon(
                plugin.as_ref(),
                &provider,
                &request.config.model,
                &request.config.bon,
            )?,
            Method::Evo => {
                let fitness = match request.config.fitness_source {
                    FitnessKind::Oracle => FitnessSource::Oracle,
                    FitnessKind::Llm => FitnessSource::Llm {
                        model: request.config.evaluator_model.clone(),
                    },
                };
                let errors = match request.config.error_source {
                    ErrorKind::Verifier => ErrorSource::Verifier,
                    ErrorKind::Llm => ErrorSource::Llm,
                };
                let engine = Engine::new(
                    &request.config.evolution,
                    plugin.as_ref(),
                    &provider,
                    request.config.model.clone(),
                )
                .with_fitness_source(fitness)
                .with_error_source(errors);
                let outcome = engine
                    .run()
                    .map_err(|e| anyhow::anyhow!("evolution run failed: {e}"))?;
                let trace_lines: Vec<String> = outcome
                    .trace
                    .iter()
                    .map(|t| serde_json::to_string(t).expect("trace serializes"))
                    .collect();
                atomic_write(
                    &traces_dir.join(format!("{instance_id}.jsonl")),
                    &format!("{}\n", trace_lines.join("\n")),
                )?;
                outcome.best
            }
        };
        let result = InstanceResult {
            instance_id: instance_id.clone(),
            config_hash: hash.clone(),
            best_solution: best.canonical(),
            correct: plugin.is_correct(&best),
            penalized_score: plugin.oracle_fitness(&best).value(),
            metrics: plugin.metrics(&best),
            provider_calls: provider.count(),
            wall_ms: started.elapsed().as_millis(),
        };
        atomic_write(&result_path, &serde_json::to_string_pretty(&result)?)?;
        results.push(result);
    }

    if dataset_manifest.problem != instances.first().map(|(_, i)| i.kind()).unwrap_or(dataset_manifest.problem) {
        bail!("dataset manifest problem kind disagrees with instance files");
    }
    let manifest = RunManifest {
        label: request.label.clone(),
        method: request.method,
        model: request.config.model.clone(),
        problem: dataset_manifest.problem,
        dataset: request.dataset_dir.display().to_string(),
        config_hash: hash,
        results,
        wall_ms: run_started.elapsed().as_millis(),
    };
    atomic_write(
        &request.out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}
