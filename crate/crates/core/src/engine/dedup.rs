use crate::candidate::Candidate;

/// Accept `fresh` unless an existing candidate has the same canonical form;
/// on a duplicate, try up to `max_attempts` regenerations and keep the first
/// unique one. If every regeneration also duplicates, the last one is
/// accepted anyway — the population must not starve.
pub fn deduplicate<E>(
    existing: &[Candidate],
    fresh: Candidate,
    max_attempts: usize,
    mut regenerate: impl FnMut() -> Result<Candidate, E>,
) -> Result<Candidate, E> {
    let is_duplicate = |candidate: &Candidate| {
        let canonical = candidate.canonical();
        existing.iter().any(|seen| seen.canonical() == canonical)
    };
    if !is_duplicate(&fresh) {
        return Ok(fresh);
    }
    let mut last = fresh;
    for _ in 0..max_attempts {
        let attempt = regenerate()?;
        if !is_duplicate(&attempt) {
            return Ok(attempt);
        }
        last = attempt;
    }
    Ok(last)
}
