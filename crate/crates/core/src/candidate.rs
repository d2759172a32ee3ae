use serde::{Deserialize, Serialize};

use crate::problems::graph_coloring::ColoringAssignment;
use crate::problems::sudoku::SudokuSolution;
use crate::problems::tsp::Route;

/// One proposed solution: the verbatim text it came from plus the parsed
/// problem-specific form, or a syntax-failure marker when parsing rejected it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub raw_text: String,
    pub parsed: ParsedSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParsedSolution {
    Sudoku(SudokuSolution),
    Coloring(ColoringAssignment),
    Route(Route),
    SyntaxFailure,
}

impl Candidate {
    pub fn syntax_failure(raw_text: impl Into<String>) -> Self {
        Candidate {
            raw_text: raw_text.into(),
            parsed: ParsedSolution::SyntaxFailure,
        }
    }

    pub fn is_syntax_failure(&self) -> bool {
        matches!(self.parsed, ParsedSolution::SyntaxFailure)
    }

    /// Canonical text used for duplicate comparison: the normalized parsed
    /// form when parsing succeeded, otherwise the exact raw text.
    pub fn canonical(&self) -> String {
        match &self.parsed {
            ParsedSolution::Sudoku(s) => s.format(),
            ParsedSolution::Coloring(c) => c.format(),
            ParsedSolution::Route(r) => r.format(),
            ParsedSolution::SyntaxFailure => self.raw_text.clone(),
        }
    }
}

/// Fitness in [0, 100]; out-of-range inputs are clamped at construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FitnessScore(f64);

impl FitnessScore {
    pub const ZERO: FitnessScore = FitnessScore(0.0);

    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            return FitnessScore(0.0);
        }
        FitnessScore(value.clamp(0.0, 100.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    Row,
    Col,
    Subgrid,
}

impl ConstraintKind {
    pub fn label(self) -> &'static str {
        match self {
            ConstraintKind::Row => "row",
            ConstraintKind::Col => "col",
            ConstraintKind::Subgrid => "subgrid",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "row" => Some(ConstraintKind::Row),
            "col" => Some(ConstraintKind::Col),
            "subgrid" => Some(ConstraintKind::Subgrid),
            _ => None,
        }
    }
}

/// One violated-constraint entry for a Sudoku cell at a removed position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellError {
    pub row: usize,
    pub col: usize,
    pub constraint: ConstraintKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SemanticErrors {
    Empty,
    Sudoku(Vec<CellError>),
    Coloring {
        conflict_edges: Vec<(usize, usize)>,
        excess_colors: i64,
    },
    Route {
        missing_cities: Vec<usize>,
        excess_distance: f64,
    },
}

/// Structured defect report for one candidate. When `syntax_error` is set the
/// semantic part is always `Empty`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub syntax_error: bool,
    pub semantic: SemanticErrors,
}

impl ErrorReport {
    pub fn syntax_failure() -> Self {
        ErrorReport {
            syntax_error: true,
            semantic: SemanticErrors::Empty,
        }
    }

    pub fn clean() -> Self {
        ErrorReport {
            syntax_error: false,
            semantic: SemanticErrors::Empty,
        }
    }

    pub fn semantic(semantic: SemanticErrors) -> Self {
        ErrorReport {
            syntax_error: false,
            semantic,
        }
    }

    pub fn is_clean(&self) -> bool {
        if self.syntax_error {
            return false;
        }
        match &self.semantic {
            SemanticErrors::Empty => true,
            SemanticErrors::Sudoku(entries) => entries.is_empty(),
            SemanticErrors::Coloring { conflict_edges, excess_colors } => {
                conflict_edges.is_empty() && *excess_colors <= 0
            }
            SemanticErrors::Route { missing_cities, excess_distance } => {
                missing_cities.is_empty() && *excess_distance <= 0.0
            }
        }
    }

    /// Truncate listed entries to at most `max_entries`, keeping scan order.
    pub fn truncated(mut self, max_entries: usize) -> Self {
        match &mut self.semantic {
            SemanticErrors::Sudoku(entries) => entries.truncate(max_entries),
            SemanticErrors::Coloring { conflict_edges, .. } => conflict_edges.truncate(max_entries),
            SemanticErrors::Route { missing_cities, .. } => missing_cities.truncate(max_entries),
            SemanticErrors::Empty => {}
        }
        self
    }

    /// Human-readable rendering embedded into crossover/mutation prompts.
    pub fn render_for_prompt(&self) -> String {
        if self.syntax_error {
            return "Syntax is wrong".to_string();
        }
        match &self.semantic {
            SemanticErrors::Empty => "No errors".to_string(),
            SemanticErrors::Sudoku(entries) => {
                if entries.is_empty() {
                    return "No errors".to_string();
                }
                entries
                    .iter()
                    .map(|e| format!("{},{},{}", e.row, e.col, e.constraint.label()))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            SemanticErrors::Coloring { conflict_edges, excess_colors } => {
                if conflict_edges.is_empty() && *excess_colors == 0 {
                    return "No errors".to_string();
                }
                let edges = if conflict_edges.is_empty() {
                    "none".to_string()
                } else {
                    conflict_edges
                        .iter()
                        .map(|(u, v)| format!("({u},{v})"))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                format!("Conflict edges: {edges}\nExcess colors count: {excess_colors}")
            }
            SemanticErrors::Route { missing_cities, excess_distance } => {
                if missing_cities.is_empty() && *excess_distance == 0.0 {
                    return "No errors".to_string();
                }
                let missing = if missing_cities.is_empty() {
                    "none".to_string()
                } else {
                    missing_cities
                        .iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                format!("Missing cities: {missing}\nExcess distance: {excess_distance:.2}")
            }
        }
    }
}

/// Candidate plus the evaluation artifacts produced from it; the unit of
/// evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationMember {
    pub candidate: Candidate,
    pub fitness: FitnessScore,
    pub errors: ErrorReport,
}

/// Immutable archive entry in the experience pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceEntry {
    pub candidate: Candidate,
    pub score: FitnessScore,
    pub errors: ErrorReport,
    pub generation_added: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitness_is_clamped() {
        assert_eq!(FitnessScore::new(-3.0).value(), 0.0);
        assert_eq!(FitnessScore::new(250.0).value(), 100.0);
        assert_eq!(FitnessScore::new(f64::NAN).value(), 0.0);
        assert_eq!(FitnessScore::new(42.5).value(), 42.5);
    }

    #[test]
    fn syntax_failure_report_has_empty_semantics() {
        let report = ErrorReport::syntax_failure();
        assert!(report.syntax_error);
        assert_eq!(report.semantic, SemanticErrors::Empty);
        assert_eq!(report.render_for_prompt(), "Syntax is wrong");
    }

    #[test]
    fn truncation_counts_entries_not_cells() {
        let report = ErrorReport::semantic(SemanticErrors::Sudoku(vec![
            CellError { row: 0, col: 0, constraint: ConstraintKind::Row },
            CellError { row: 0, col: 0, constraint: ConstraintKind::Col },
            CellError { row: 1, col: 2, constraint: ConstraintKind::Subgrid },
        ]));
        let truncated = report.truncated(2);
        match truncated.semantic {
            SemanticErrors::Sudoku(entries) => assert_eq!(entries.len(), 2),
            other => panic!("unexpected semantics: {other:?}"),
        }
    }

    #[test]
    fn prompt_rendering_matches_detector_style() {
        let report = ErrorReport::semantic(SemanticErrors::Sudoku(vec![CellError {
            row: 1,
            col: 0,
            constraint: ConstraintKind::Subgrid,
        }]));
        assert_eq!(report.render_for_prompt(), "1,0,subgrid");
        assert_eq!(ErrorReport::clean().render_for_prompt(), "No errors");
    }
}
