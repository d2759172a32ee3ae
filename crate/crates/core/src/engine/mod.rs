pub mod dedup;
pub mod replay;
pub mod select;
pub mod trace;

use log::warn;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::candidate::{Candidate, ErrorReport, FitnessScore, PopulationMember};
use crate::config::EvolutionConfig;
use crate::llm::parse::{parse_llm_errors, parse_llm_fitness};
use crate::llm::templates::RenderedPrompt;
use crate::llm::{CompletionRequest, Provider, ProviderError};
use crate::problem::{ProblemPlugin, PromptRequest};
use crate::rng::{substream, StreamId};
use dedup::deduplicate;
use rand::Rng;
use replay::replay_from_pool;
use select::select;
use trace::{ExperiencePool, GenerationTrace};

/// Where fitness scores come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitnessSource {
    /// The problem's exact penalized-score metric.
    Oracle,
    /// An LLM prompted with the fitness-evaluation template; `model` being
    /// `None` means the candidate-generating model also evaluates.
    Llm { model: Option<String> },
}

/// Where error reports come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorSource {
    Verifier,
    Llm,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("provider failure: {source}")]
    Provider {
        source: ProviderError,
        /// Stages completed before the failure.
        trace: Vec<GenerationTrace>,
    },
}

/// Result of a full evolutionary run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Candidate,
    pub best_fitness: f64,
    pub trace: Vec<GenerationTrace>,
    pub experience_pool: ExperiencePool,
    pub llm_calls: usize,
}

pub struct Engine<'a> {
    config: &'a EvolutionConfig,
    plugin: &'a dyn ProblemPlugin,
    provider: &'a dyn Provider,
    model: String,
    fitness_source: FitnessSource,
    error_source: ErrorSource,
}

/// Mutable per-run state threaded through the phases.
struct RunState {
    selection_rng: ChaCha12Rng,
    crossover_rng: ChaCha12Rng,
    mutation_rng: ChaCha12Rng,
    operator_rng: ChaCha12Rng,
    llm_calls: usize,
}

impl<'a> Engine<'a> {
    pub fn new(
        config: &'a EvolutionConfig,
        plugin: &'a dyn ProblemPlugin,
        provider: &'a dyn Provider,
        model: impl Into<String>,
    ) -> Self {
        Engine {
            config,
            plugin,
            provider,
            model: model.into(),
            fitness_source: FitnessSource::Oracle,
            error_source: ErrorSource::Verifier,
        }
    }

    pub fn with_fitness_source(mut self, source: FitnessSource) -> Self {
        self.fitness_source = source;
        self
    }

    pub fn with_error_source(mut self, source: ErrorSource) -> Self {
        self.error_source = source;
        self
    }

    fn complete(
        &self,
        state: &mut RunState,
        prompt: &RenderedPrompt,
        model: &str,
    ) -> Result<String, ProviderError> {
        state.llm_calls += 1;
        self.provider.complete(&CompletionRequest {
            prompt: prompt.text.clone(),
            temperature: self.config.llm_temperature,
            max_tokens: self.config.llm_max_tokens,
            model: model.to_string(),
            fingerprint: Some(prompt.fingerprint.clone()),
        })
    }

    fn generate(
        &self,
        state: &mut RunState,
        request: &PromptRequest<'_>,
    ) -> Result<Candidate, ProviderError> {
        let prompt = self
            .plugin
            .build_prompt(request)
            .expect("shipped templates bind all placeholders");
        let text = self.complete(state, &prompt, &self.model)?;
        Ok(self.plugin.parse(&text))
    }

    fn evaluate(
        &self,
        state: &mut RunState,
        candidate: Candidate,
    ) -> Result<PopulationMember, ProviderError> {
        let fitness = match &self.fitness_source {
            FitnessSource::Oracle => self.plugin.oracle_fitness(&candidate),
            FitnessSource::Llm { model } => {
                if candidate.is_syntax_failure() {
                    FitnessScore::ZERO
                } else {
                    let prompt = self
                        .plugin
                        .build_prompt(&PromptRequest::Fitness { candidate: &candidate })
                        .expect("shipped templates bind all placeholders");
                    let evaluator = model.as_deref().unwrap_or(&self.model);
                    let text = self.complete(state, &prompt, evaluator)?;
                    match parse_llm_fitness(&text) {
                        Ok(score) => FitnessScore::new(score),
                        Err(err) => {
                            warn!("fitness evaluation unusable ({err}); scoring 0");
                            FitnessScore::ZERO
                        }
                    }
                }
            }
        };
        let errors = match self.error_source {
            ErrorSource::Verifier => self
                .plugin
                .detect_errors(&candidate, self.config.max_detected_errors),
            ErrorSource::Llm => {
                if candidate.is_syntax_failure() {
                    ErrorReport::syntax_failure()
                } else {
                    let prompt = self
                        .plugin
                        .build_prompt(&PromptRequest::DetectErrors { candidate: &candidate })
                        .expect("shipped templates bind all placeholders");
                    let text = self.complete(state, &prompt, &self.model)?;
                    parse_llm_errors(&text, self.plugin.kind())
                        .truncated(self.config.max_detected_errors)
                }
            }
        };
        Ok(PopulationMember { candidate, fitness, errors })
    }

    fn initialize(&self, state: &mut RunState) -> Result<Vec<PopulationMember>, ProviderError> {
        let mut population: Vec<PopulationMember> = Vec::with_capacity(self.config.population_size);
        for _ in 0..self.config.population_size {
            let existing: Vec<Candidate> =
                population.iter().map(|m| m.candidate.clone()).collect();
            let fresh = self.generate(state, &PromptRequest::Direct)?;
            let unique = deduplicate(&existing, fresh, self.config.max_dedup_attempts, || {
                self.generate(state, &PromptRequest::Direct)
            })?;
            population.push(self.evaluate(state, unique)?);
        }
        Ok(population)
    }

    /// One offspring attempt: draw parents, then crossover (external or
    /// LLM) with probability η, else pass a uniformly chosen parent through.
    fn produce_child(
        &self,
        state: &mut RunState,
        selected: &[PopulationMember],
    ) -> Result<Candidate, ProviderError> {
        let x = state.crossover_rng.random_range(0..selected.len());
        let y = state.crossover_rng.random_range(0..selected.len());
        let (first, second) = (&selected[x], &selected[y]);
        if state.crossover_rng.random::<f64>() < self.config.crossover_rate {
            if state.crossover_rng.random::<f64>() < self.config.external_crossover_rate {
                Ok(self.plugin.external_crossover(
                    &first.candidate,
                    &second.candidate,
                    &mut state.operator_rng,
                ))
            } else {
                self.generate(
                    state,
                    &PromptRequest::Crossover {
                        first: &first.candidate,
                        second: &second.candidate,
                        first_score: first.fitness,
                        second_score: second.fitness,
                        first_errors: &first.errors,
                        second_errors: &second.errors,
                    },
                )
            }
        } else if state.crossover_rng.random::<f64>() < 0.5 {
            Ok(first.candidate.clone())
        } else {
            Ok(second.candidate.clone())
        }
    }

    fn crossover_phase(
        &self,
        state: &mut RunState,
        selected: &[PopulationMember],
    ) -> Result<Vec<PopulationMember>, ProviderError> {
        let mut offspring: Vec<PopulationMember> = Vec::with_capacity(self.config.population_size);
        for _ in 0..self.config.population_size {
            let existing: Vec<Candidate> =
                offspring.iter().map(|m| m.candidate.clone()).collect();
            let fresh = self.produce_child(state, selected)?;
            // Regeneration repeats the whole attempt: new parents, new rates.
            let unique = deduplicate(&existing, fresh, self.config.max_dedup_attempts, || {
                self.produce_child(state, selected)
            })?;
            offspring.push(self.evaluate(state, unique)?);
        }
        Ok(offspring)
    }

    /// One mutation attempt for a single offspring member.
    fn produce_mutant(
        &self,
        state: &mut RunState,
        member: &PopulationMember,
    ) -> Result<Candidate, ProviderError> {
        if state.mutation_rng.random::<f64>() < self.config.mutation_rate {
            if state.mutation_rng.random::<f64>() < self.config.external_mutation_rate {
                Ok(self
                    .plugin
                    .external_mutation(&member.candidate, &mut state.operator_rng))
            } else {
                self.generate(
                    state,
                    &PromptRequest::Mutation {
                        candidate: &member.candidate,
                        score: member.fitness,
                        errors: &member.errors,
                    },
                )
            }
        } else {
            Ok(member.candidate.clone())
        }
    }

    fn mutation_phase(
        &self,
        state: &mut RunState,
        offspring: Vec<PopulationMember>,
    ) -> Result<Vec<PopulationMember>, ProviderError> {
        let mut mutated: Vec<PopulationMember> = Vec::with_capacity(offspring.len());
        for member in &offspring {
            let existing: Vec<Candidate> =
                mutated.iter().map(|m| m.candidate.clone()).collect();
            let fresh = self.produce_mutant(state, member)?;
            // Regeneration re-rolls the rates for the same member.
            let unique = deduplicate(&existing, fresh, self.config.max_dedup_attempts, || {
                self.produce_mutant(state, member)
            })?;
            mutated.push(self.evaluate(state, unique)?);
        }
        Ok(mutated)
    }

    pub fn run(&self) -> Result<RunOutcome, EngineError> {
        let seed = self.config.rng_seed;
        let mut state = RunState {
            selection_rng: substream(seed, StreamId::Selection),
            crossover_rng: substream(seed, StreamId::Crossover),
            mutation_rng: substream(seed, StreamId::Mutation),
            operator_rng: substream(seed, StreamId::Operator),
            llm_calls: 0,
        };
        let mut trace: Vec<GenerationTrace> = Vec::new();
        let mut pool = ExperiencePool::new();

        let fail = |source: ProviderError, trace: Vec<GenerationTrace>| EngineError::Provider {
            source,
            trace,
        };

        let mut population = match self.initialize(&mut state) {
            Ok(population) => population,
            Err(source) => return Err(fail(source, trace)),
        };
        pool.absorb(&population, 0);

        let mut best = best_member(&population).clone();
        trace.push(GenerationTrace {
            generation: 0,
            population: population.clone(),
            best_fitness: best.fitness.value(),
            best_solution: best.candidate.clone(),
            llm_calls_made: state.llm_calls,
        });
        if best.fitness.value() >= self.config.fitness_threshold {
            return Ok(self.outcome(best, trace, pool, state.llm_calls));
        }

        for generation in 1..=self.config.generations {
            population = replay_from_pool(population, &pool, self.config.replay_rate);
            let selected = select(
                &population,
                self.config.elite_count,
                &mut state.selection_rng,
            );
            let offspring = match self.crossover_phase(&mut state, &selected) {
                Ok(offspring) => offspring,
                Err(source) => return Err(fail(source, trace)),
            };
            population = match self.mutation_phase(&mut state, offspring) {
                Ok(mutated) => mutated,
                Err(source) => return Err(fail(source, trace)),
            };
            pool.absorb(&population, generation);

            let generation_best = best_member(&population);
            if generation_best.fitness.value() > best.fitness.value() {
                best = generation_best.clone();
            }
            trace.push(GenerationTrace {
                generation,
                population: population.clone(),
                best_fitness: best.fitness.value(),
                best_solution: best.candidate.clone(),
                llm_calls_made: state.llm_calls,
            });
            if best.fitness.value() >= self.config.fitness_threshold {
                break;
            }
        }
        Ok(self.outcome(best, trace, pool, state.llm_calls))
    }

    fn outcome(
        &self,
        best: PopulationMember,
        trace: Vec<GenerationTrace>,
        experience_pool: ExperiencePool,
        llm_calls: usize,
    ) -> RunOutcome {
        RunOutcome {
            best_fitness: best.fitness.value(),
            best: best.candidate,
            trace,
            experience_pool,
            llm_calls,
        }
    }
}

fn best_member(population: &[PopulationMember]) -> &PopulationMember {
    population
        .iter()
        .max_by(|a, b| {
            a.fitness
                .value()
                .partial_cmp(&b.fitness.value())
                .expect("fitness is never NaN")
        })
        .expect("population is never empty")
}
