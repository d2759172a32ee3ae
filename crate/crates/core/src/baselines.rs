use serde::{Deserialize, Serialize};

use crate::candidate::{Candidate, PopulationMember};
use crate::engine::dedup::deduplicate;
use crate::llm::templates::RenderedPrompt;
use crate::llm::{CompletionRequest, Provider, ProviderError};
use crate::problem::{ProblemPlugin, PromptRequest};

/// Best-of-N sampling parameters; `samples` is matched to the evolutionary
/// run's LLM budget when comparing methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonConfig {
    pub samples: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_dedup_attempts: usize,
}

impl Default for BonConfig {
    fn default() -> Self {
        BonConfig {
            samples: 345,
            temperature: 0.7,
            max_tokens: 4096,
            max_dedup_attempts: 3,
        }
    }
}

fn direct_prompt(plugin: &dyn ProblemPlugin) -> RenderedPrompt {
    plugin
        .build_prompt(&PromptRequest::Direct)
        .expect("shipped templates bind all placeholders")
}

fn sample(
    plugin: &dyn ProblemPlugin,
    provider: &dyn Provider,
    prompt: &RenderedPrompt,
    model: &str,
    temperature: f64,
    max_tokens: u32,
) -> Result<Candidate, ProviderError> {
    let text = provider.complete(&CompletionRequest {
        prompt: prompt.text.clone(),
        temperature,
        max_tokens,
        model: model.to_string(),
        fingerprint: Some(prompt.fingerprint.clone()),
    })?;
    Ok(plugin.parse(&text))
}

/// Direct prompting: one greedy completion (temperature 0).
pub fn run_dp(
    plugin: &dyn ProblemPlugin,
    provider: &dyn Provider,
    model: &str,
) -> Result<Candidate, ProviderError> {
    let prompt = direct_prompt(plugin);
    sample(plugin, provider, &prompt, model, 0.0, 4096)
}

/// Best-of-N: up to N diverse samples through the deduplicator; the sample
/// with the best oracle penalized score wins, a correct solution dominating
/// any score tie, earlier samples winning remaining ties.
pub fn run_bon(
    plugin: &dyn ProblemPlugin,
    provider: &dyn Provider,
    model: &str,
    config: &BonConfig,
) -> Result<Candidate, ProviderError> {
    assert!(config.samples >= 1, "best-of-N needs at least one sample");
    let prompt = direct_prompt(plugin);
    let mut draw = || {
        sample(
            plugin,
            provider,
            &prompt,
            model,
            config.temperature,
            config.max_tokens,
        )
    };
    let mut retained: Vec<Candidate> = Vec::new();
    let mut best: Option<(Candidate, f64, bool)> = None;
    for _ in 0..config.samples {
        let fresh = draw()?;
        let unique = deduplicate(&retained, fresh, config.max_dedup_attempts, &mut draw)?;
        let score = plugin.oracle_fitness(&unique).value();
        let correct = plugin.is_correct(&unique);
        let wins = match &best {
            None => true,
            Some((_, best_score, best_correct)) => {
                (correct, score) > (*best_correct, *best_score)
            }
        };
        if wins {
            best = Some((unique.clone(), score, correct));
        }
        retained.push(unique);
    }
    Ok(best.expect("at least one sample was drawn").0)
}

/// Evaluation record the harness keeps per baseline answer.
pub fn score_candidate(plugin: &dyn ProblemPlugin, candidate: Candidate) -> PopulationMember {
    let fitness = plugin.oracle_fitness(&candidate);
    let errors = plugin.detect_errors(&candidate, usize::MAX);
    PopulationMember { candidate, fitness, errors }
}
