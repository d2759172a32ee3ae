use rand::Rng;

use crate::candidate::PopulationMember;

/// Hybrid selection: the k_e fittest members (descending), then n − k_e
/// tournament winners. Each tournament draws an index pair i.i.d. uniform
/// over the input and keeps the fitter member; on a tie the second-drawn
/// member wins. Winners carry their fitness and error records forward.
pub fn select<R: Rng + ?Sized>(
    members: &[PopulationMember],
    elite_count: usize,
    rng: &mut R,
) -> Vec<PopulationMember> {
    let n = members.len();
    assert!(elite_count <= n, "elite_count exceeds population size");
    let mut by_fitness: Vec<&PopulationMember> = members.iter().collect();
    by_fitness.sort_by(|a, b| {
        b.fitness
            .value()
            .partial_cmp(&a.fitness.value())
            .expect("fitness is never NaN")
    });
    let mut selected: Vec<PopulationMember> = by_fitness
        .into_iter()
        .take(elite_count)
        .cloned()
        .collect();
    for _ in elite_count..n {
        let x = rng.random_range(0..n);
        let y = rng.random_range(0..n);
        let winner = if members[x].fitness.value() > members[y].fitness.value() {
            x
        } else {
            y
        };
        selected.push(members[winner].clone());
    }
    selected
}
