//! Evolutionary search driven by LLM operators, with three NP benchmark
//! problems (Sudoku, graph coloring, TSP), exact verifiers and metrics,
//! external repair operators, and direct-prompting / best-of-N baselines.

pub mod baselines;
pub mod candidate;
pub mod config;
pub mod engine;
pub mod llm;
pub mod problem;
pub mod problems;
pub mod rng;

pub use candidate::{
    Candidate, CellError, ConstraintKind, ErrorReport, ExperienceEntry, FitnessScore,
    ParsedSolution, PopulationMember, SemanticErrors,
};
pub use config::{compute_llm_budget, round_half_up, ConfigError, EvolutionConfig};
pub use llm::{CompletionRequest, Provider, ProviderError};
pub use problem::{ProblemInstance, ProblemKind, ProblemMetrics, ProblemPlugin, PromptRequest};
