use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use super::{CompletionRequest, Provider, ProviderError};
use crate::problem::{ProblemInstance, ProblemKind};

/// Fully offline stand-in for a live model: answers any prompt built from
/// the shipped templates with syntactically valid, seed-deterministic text.
/// Candidate quality varies per call so the evolutionary loop has a real
/// gradient to climb. The response depends on (prompt, seed, repeat count):
/// re-asking the same prompt varies the answer, like resampling a model at
/// nonzero temperature, while a fresh provider replays the same sequence.
pub struct OfflineProvider {
    instance: ProblemInstance,
    seed: u64,
    repeats: std::sync::Mutex<std::collections::HashMap<u64, u64>>,
}

impl OfflineProvider {
    pub fn new(instance: ProblemInstance, seed: u64) -> Self {
        OfflineProvider {
            instance,
            seed,
            repeats: std::sync::Mutex::new(std::collections::HashMap::new()),
        }
    }

    fn rng_for(&self, prompt: &str) -> ChaCha12Rng {
        let digest = Sha256::digest(prompt.as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        let prompt_key = u64::from_le_bytes(bytes);
        let mut repeats = self.repeats.lock().expect("repeat map lock");
        let ordinal = repeats.entry(prompt_key).or_insert(0);
        *ordinal += 1;
        ChaCha12Rng::seed_from_u64(
            prompt_key ^ self.seed ^ ordinal.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        )
    }

    fn candidate_text(&self, rng: &mut ChaCha12Rng) -> String {
        match &self.instance {
            ProblemInstance::Sudoku(puzzle) => {
                // Blend random digits with solution digits at a per-call rate
                // so fitness spreads over the population.
                let accuracy: f64 = rng.random();
                let mut grid = puzzle.grid;
                for &(i, j) in &puzzle.removed_positions {
                    grid[i][j] = if rng.random::<f64>() < accuracy {
                        puzzle.solution[i][j]
                    } else {
                        rng.random_range(1..=9)
                    };
                }
                let body = grid
                    .iter()
                    .map(|row| {
                        row.iter().map(u8::to_string).collect::<Vec<_>>().join(" ")
                    })
                    .collect::<Vec<_>>()
                    .join("\n");
                format!("Here is my attempt:\n```\n{body}\n```")
            }
            ProblemInstance::GraphColoring(instance) => {
                let colors: Vec<String> = (0..instance.n_vertices)
                    .map(|_| rng.random_range(0..instance.color_count).to_string())
                    .collect();
                format!("Proposed coloring:\n```\n{}\n```", colors.join(","))
            }
            ProblemInstance::Tsp(instance) => {
                let mut middle: Vec<usize> = (1..instance.n_cities).collect();
                middle.shuffle(rng);
                let mut route = vec![0];
                route.extend(middle);
                route.push(0);
                let body = route
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",");
                format!("Proposed route:\n```\n{body}\n```")
            }
        }
    }
}

impl Provider for OfflineProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let mut rng = self.rng_for(&request.prompt);
        // Classify by instruction phrases present in the shipped templates.
        if request.prompt.contains("can evaluate whether") {
            let score: f64 = rng.random_range(0.0..=100.0);
            return Ok(format!("The candidate earns a score of {score:.1}"));
        }
        if request.prompt.contains("errors in a") {
            let verdict = match self.instance.kind() {
                ProblemKind::Sk => "```\nNo errors\n```",
                ProblemKind::Gc | ProblemKind::Tsp => "```t3\nNo errors\n```",
            };
            return Ok(verdict.to_string());
        }
        Ok(self.candidate_text(&mut rng))
    }
}
