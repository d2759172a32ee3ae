use super::trace::ExperiencePool;
use crate::candidate::PopulationMember;

/// Experience replay: the pool's k = ⌊ρ·n⌋ best entries challenge the
/// population's k worst, slot by slot; a slot is replaced only when the pool
/// entry's score strictly exceeds the incumbent's. Output order is the
/// ascending-by-fitness arrangement the replacement was computed over.
pub fn replay_from_pool(
    population: Vec<PopulationMember>,
    pool: &ExperiencePool,
    replay_rate: f64,
) -> Vec<PopulationMember> {
    let n = population.len();
    let k = (replay_rate * n as f64).floor() as usize;
    let mut ascending = population;
    ascending.sort_by(|a, b| {
        a.fitness
            .value()
            .partial_cmp(&b.fitness.value())
            .expect("fitness is never NaN")
    });
    let best = pool.best_first();
    for slot in 0..k.min(n).min(best.len()) {
        let challenger = best[slot];
        if challenger.score.value() > ascending[slot].fitness.value() {
            ascending[slot] = PopulationMember {
                candidate: challenger.candidate.clone(),
                fitness: challenger.score,
                errors: challenger.errors.clone(),
            };
        }
    }
    ascending
}
