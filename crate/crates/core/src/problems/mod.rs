pub mod graph_coloring;
pub mod sudoku;
pub mod tsp;

/// Solution body a prompt should embed for a candidate: the canonical parsed
/// form when available (templates wrap it in their own code fences),
/// otherwise the raw text as-is.
pub(crate) fn embed_candidate(candidate: &crate::candidate::Candidate) -> String {
    candidate.canonical()
}

pub(crate) fn format_score(score: crate::candidate::FitnessScore) -> String {
    format!("{:.1}", score.value())
}
