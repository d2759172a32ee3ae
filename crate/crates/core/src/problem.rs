use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::candidate::{Candidate, ErrorReport, FitnessScore};
use crate::llm::templates::{RenderedPrompt, TemplateError};
use crate::problems::graph_coloring::{GcProblem, GraphColoringInstance};
use crate::problems::sudoku::{SudokuProblem, SudokuPuzzle};
use crate::problems::tsp::{TspInstance, TspProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    #[serde(alias = "sudoku")]
    Sk,
    #[serde(alias = "graph_coloring")]
    Gc,
    #[serde(alias = "tsp")]
    Tsp,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Sk => "sk",
            ProblemKind::Gc => "gc",
            ProblemKind::Tsp => "tsp",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sk" | "sudoku" => Ok(ProblemKind::Sk),
            "gc" | "graph-coloring" => Ok(ProblemKind::Gc),
            "tsp" => Ok(ProblemKind::Tsp),
            other => Err(format!("unknown problem kind: {other}")),
        }
    }
}

/// Problem-specific reporting metrics for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProblemMetrics {
    Sudoku { score: f64, penalized_score: f64 },
    Coloring {
        score: f64,
        penalized_score: f64,
        excess_color_usage: i64,
        conflict_ratio: f64,
    },
    Route {
        penalized_score: f64,
        excess_distance_multiplier: Option<f64>,
        missing_cities: Option<usize>,
    },
}

impl ProblemMetrics {
    pub fn penalized_score(&self) -> f64 {
        match self {
            ProblemMetrics::Sudoku { penalized_score, .. }
            | ProblemMetrics::Coloring { penalized_score, .. }
            | ProblemMetrics::Route { penalized_score, .. } => *penalized_score,
        }
    }
}

/// Which prompt a plugin should build for the gateway.
pub enum PromptRequest<'a> {
    Direct,
    DetectErrors { candidate: &'a Candidate },
    Fitness { candidate: &'a Candidate },
    Crossover {
        first: &'a Candidate,
        second: &'a Candidate,
        first_score: FitnessScore,
        second_score: FitnessScore,
        first_errors: &'a ErrorReport,
        second_errors: &'a ErrorReport,
    },
    Mutation {
        candidate: &'a Candidate,
        score: FitnessScore,
        errors: &'a ErrorReport,
    },
}

/// Per-problem contract the engine, baselines, and harness evolve against.
/// Implementations are pure over immutable instance data and safe to share.
pub trait ProblemPlugin: Sync {
    fn kind(&self) -> ProblemKind;

    /// Parse raw model/operator output into a candidate; never fails, a
    /// rejected text yields a syntax-failure candidate.
    fn parse(&self, raw_text: &str) -> Candidate;

    /// Penalized score in [0, 100]; 0 for syntax failures.
    fn oracle_fitness(&self, candidate: &Candidate) -> FitnessScore;

    /// Verifier-based error detection, truncated to `max_errors` entries.
    fn detect_errors(&self, candidate: &Candidate, max_errors: usize) -> ErrorReport;

    fn is_correct(&self, candidate: &Candidate) -> bool;

    fn external_crossover(
        &self,
        first: &Candidate,
        second: &Candidate,
        rng: &mut dyn RngCore,
    ) -> Candidate;

    fn external_mutation(&self, candidate: &Candidate, rng: &mut dyn RngCore) -> Candidate;

    fn build_prompt(&self, request: &PromptRequest<'_>) -> Result<RenderedPrompt, TemplateError>;

    fn metrics(&self, candidate: &Candidate) -> ProblemMetrics;
}

/// One benchmark instance: immutable task description plus oracle data.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemInstance {
    Sudoku(SudokuPuzzle),
    GraphColoring(GraphColoringInstance),
    Tsp(TspInstance),
}

impl ProblemInstance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemInstance::Sudoku(_) => ProblemKind::Sk,
            ProblemInstance::GraphColoring(_) => ProblemKind::Gc,
            ProblemInstance::Tsp(_) => ProblemKind::Tsp,
        }
    }

    pub fn plugin(&self) -> Box<dyn ProblemPlugin> {
        match self {
            ProblemInstance::Sudoku(p) => Box::new(SudokuProblem::new(p.clone())),
            ProblemInstance::GraphColoring(i) => Box::new(GcProblem::new(i.clone())),
            ProblemInstance::Tsp(i) => Box::new(TspProblem::new(i.clone())),
        }
    }
}
