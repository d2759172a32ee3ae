use serde::{Deserialize, Serialize};

use crate::candidate::{Candidate, ExperienceEntry, PopulationMember};

/// Snapshot after one completed stage (t = 0 is initialization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub generation: usize,
    pub population: Vec<PopulationMember>,
    pub best_fitness: f64,
    pub best_solution: Candidate,
    pub llm_calls_made: usize,
}

/// Append-only archive of every scored candidate across the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperiencePool {
    entries: Vec<ExperienceEntry>,
}

impl ExperiencePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[ExperienceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn absorb(&mut self, members: &[PopulationMember], generation: usize) {
        for member in members {
            self.entries.push(ExperienceEntry {
                candidate: member.candidate.clone(),
                score: member.fitness,
                errors: member.errors.clone(),
                generation_added: generation,
            });
        }
    }

    /// Entries ordered best-first (stable: insertion order breaks ties).
    pub fn best_first(&self) -> Vec<&ExperienceEntry> {
        let mut sorted: Vec<&ExperienceEntry> = self.entries.iter().collect();
        sorted.sort_by(|a, b| {
            b.score
                .value()
                .partial_cmp(&a.score.value())
                .expect("fitness is never NaN")
        });
        sorted
    }
}
