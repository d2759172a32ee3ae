use serde::{Deserialize, Serialize};
use thiserror::Error;

/// All rates and budgets of the evolutionary loop. Serializes to/from JSON
/// with exactly these snake_case field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub elite_count: usize,
    pub max_detected_errors: usize,
    pub replay_rate: f64,
    pub max_dedup_attempts: usize,
    pub crossover_rate: f64,
    pub external_crossover_rate: f64,
    pub mutation_rate: f64,
    pub external_mutation_rate: f64,
    pub fitness_threshold: f64,
    pub llm_temperature: f64,
    pub llm_max_tokens: u32,
    pub rng_seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("population_size must be at least 1")]
    EmptyPopulation,
    #[error("elite_count {elite} exceeds population_size {population}")]
    EliteOverflow { elite: usize, population: usize },
    #[error("{field} must lie in [0, 1], got {value}")]
    RateOutOfRange { field: &'static str, value: f64 },
    #[error("fitness_threshold must lie in [0, 100], got {0}")]
    ThresholdOutOfRange(f64),
    #[error("llm_temperature must be non-negative, got {0}")]
    NegativeTemperature(f64),
    #[error("llm_max_tokens must be at least 1")]
    ZeroMaxTokens,
}

impl EvolutionConfig {
    /// Elite count used when a config does not pin one: ceil(0.1 * n_p).
    pub fn default_elite_count(population_size: usize) -> usize {
        population_size.div_ceil(10)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size == 0 {
            return Err(ConfigError::EmptyPopulation);
        }
        if self.elite_count > self.population_size {
            return Err(ConfigError::EliteOverflow {
                elite: self.elite_count,
                population: self.population_size,
            });
        }
        for (field, value) in [
            ("replay_rate", self.replay_rate),
            ("crossover_rate", self.crossover_rate),
            ("external_crossover_rate", self.external_crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("external_mutation_rate", self.external_mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(ConfigError::RateOutOfRange { field, value });
            }
        }
        if !(0.0..=100.0).contains(&self.fitness_threshold) {
            return Err(ConfigError::ThresholdOutOfRange(self.fitness_threshold));
        }
        if self.llm_temperature < 0.0 || self.llm_temperature.is_nan() {
            return Err(ConfigError::NegativeTemperature(self.llm_temperature));
        }
        if self.llm_max_tokens == 0 {
            return Err(ConfigError::ZeroMaxTokens);
        }
        Ok(())
    }
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 30,
            generations: 15,
            elite_count: Self::default_elite_count(30),
            max_detected_errors: 3,
            replay_rate: 0.6,
            max_dedup_attempts: 3,
            crossover_rate: 0.7,
            external_crossover_rate: 0.3,
            mutation_rate: 0.3,
            external_mutation_rate: 0.3,
            fitness_threshold: 100.0,
            llm_temperature: 0.7,
            llm_max_tokens: 4096,
            rng_seed: 0,
        }
    }
}

/// Upper bound on candidate-generating LLM calls for one run:
/// initialization plus the expected LLM crossover and mutation calls per
/// generation. Real-valued; round half-up when an integer count is needed.
pub fn compute_llm_budget(config: &EvolutionConfig) -> f64 {
    let n_p = config.population_size as f64;
    let n_g = config.generations as f64;
    let lco = n_p * config.crossover_rate * (1.0 - config.external_crossover_rate);
    let lmo = n_p * config.mutation_rate * (1.0 - config.external_mutation_rate);
    n_p + (lco + lmo) * n_g
}

/// Round half-up to an integer sample count (22.5 -> 23). Values are
/// snapped to nanodigit precision first so products of decimal rates
/// (e.g. 0.7 * 0.7 * 5 * 5) land exactly on their half-points.
pub fn round_half_up(value: f64) -> u64 {
    let snapped = (value * 1e9).round() / 1e9;
    (snapped + 0.5).floor() as u64
}
