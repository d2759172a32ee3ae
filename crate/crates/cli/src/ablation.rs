use anyhow::{bail, Result};
use evogate_core::{compute_llm_budget, round_half_up, EvolutionConfig};

use crate::runner::{ErrorKind, FitnessKind, Method, RunConfig};

/// One run in an ablation suite.
#[derive(Debug, Clone)]
pub struct AblationRun {
    pub name: String,
    pub method: Method,
    pub config: RunConfig,
}

fn evo_run(name: String, evolution: EvolutionConfig) -> AblationRun {
    AblationRun {
        name,
        method: Method::Evo,
        config: RunConfig { evolution, ..RunConfig::default() },
    }
}

/// Compute-scaling suite: six (n_p, n_g) pairings, each with a best-of-N
/// baseline whose sample count matches the evolutionary run's LLM budget.
fn scale_suite() -> Vec<AblationRun> {
    let pairs = [(5, 5), (10, 10), (20, 20), (30, 30), (40, 40), (50, 50)];
    let mut runs = Vec::new();
    for (population, generations) in pairs {
        let evolution = EvolutionConfig {
            population_size: population,
            generations,
            elite_count: EvolutionConfig::default_elite_count(population),
            ..EvolutionConfig::default()
        };
        let budget = round_half_up(compute_llm_budget(&evolution));
        runs.push(evo_run(format!("evo_np{population}_ng{generations}"), evolution));
        let mut config = RunConfig::default();
        config.bon.samples = budget;
        runs.push(AblationRun {
            name: format!("bon_n{budget}"),
            method: Method::Bon,
            config,
        });
    }
    runs
}

/// Fixed-axis scaling splits: vary one of n_p/n_g while pinning the other.
fn scale_split_suite() -> Vec<AblationRun> {
    let mut runs = Vec::new();
    for population in [10, 30, 50] {
        runs.push(evo_run(
            format!("evo_np{population}_ng10"),
            EvolutionConfig {
                population_size: population,
                generations: 10,
                elite_count: EvolutionConfig::default_elite_count(population),
                ..EvolutionConfig::default()
            },
        ));
    }
    for generations in [30, 50] {
        runs.push(evo_run(
            format!("evo_np10_ng{generations}"),
            EvolutionConfig {
                population_size: 10,
                generations,
                elite_count: EvolutionConfig::default_elite_count(10),
                ..EvolutionConfig::default()
            },
        ));
    }
    runs
}

/// Fitness-evaluation source: exact oracle, self-evaluating LLM, and a
/// separate evaluator model.
fn fe_suite() -> Vec<AblationRun> {
    let mut oracle = RunConfig::default();
    oracle.fitness_source = FitnessKind::Oracle;
    let mut llm_self = RunConfig::default();
    llm_self.fitness_source = FitnessKind::Llm;
    let mut llm_alt = RunConfig::default();
    llm_alt.fitness_source = FitnessKind::Llm;
    llm_alt.evaluator_model = Some("offline-sim-evaluator".to_string());
    vec![
        AblationRun { name: "fe_oracle".into(), method: Method::Evo, config: oracle },
        AblationRun { name: "fe_llm_self".into(), method: Method::Evo, config: llm_self },
        AblationRun { name: "fe_llm_alt".into(), method: Method::Evo, config: llm_alt },
    ]
}

/// Error-detection budget ε: how many detected errors feed back into the
/// crossover/mutation prompts.
fn ed_suite() -> Vec<AblationRun> {
    [0usize, 3, 6, 9]
        .into_iter()
        .map(|eps| {
            let mut run = evo_run(
                format!("ed_eps{eps}"),
                EvolutionConfig { max_detected_errors: eps, ..EvolutionConfig::default() },
            );
            run.config.error_source = ErrorKind::Verifier;
            run
        })
        .collect()
}

/// Experience-replay rate ρ.
fn ep_suite() -> Vec<AblationRun> {
    [0.0, 0.3, 0.6]
        .into_iter()
        .map(|rho| {
            evo_run(
                format!("ep_rho{:02}", (rho * 10.0) as u32),
                EvolutionConfig { replay_rate: rho, ..EvolutionConfig::default() },
            )
        })
        .collect()
}

/// Deduplication retry budget τ.
fn dd_suite() -> Vec<AblationRun> {
    [0usize, 3, 6]
        .into_iter()
        .map(|tau| {
            evo_run(
                format!("dd_tau{tau}"),
                EvolutionConfig { max_dedup_attempts: tau, ..EvolutionConfig::default() },
            )
        })
        .collect()
}

/// External-operator usage rates (ξ, μ): all-LLM, default mix, operator-heavy.
fn ops_suite() -> Vec<AblationRun> {
    [(0.0, 0.0), (0.3, 0.3), (0.6, 0.6)]
        .into_iter()
        .map(|(xi, mu)| {
            evo_run(
                format!("ops_xi{:02}_mu{:02}", (xi * 10.0) as u32, (mu * 10.0) as u32),
                EvolutionConfig {
                    external_crossover_rate: xi,
                    external_mutation_rate: mu,
                    ..EvolutionConfig::default()
                },
            )
        })
        .collect()
}

pub const SUITE_NAMES: &[&str] = &["scale", "scale-split", "fe", "ed", "ep", "dd", "ops"];

/// Look up a named suite; aliases `replay` → `ep` and `dedup` → `dd`.
pub fn ablation_suite(name: &str) -> Result<Vec<AblationRun>> {
    Ok(match name {
        "scale" => scale_suite(),
        "scale-split" => scale_split_suite(),
        "fe" => fe_suite(),
        "ed" => ed_suite(),
        "ep" | "replay" => ep_suite(),
        "dd" | "dedup" => dd_suite(),
        "ops" => ops_suite(),
        other => bail!(
            "unknown ablation suite {other:?}; expected one of {}",
            SUITE_NAMES.join(", ")
        ),
    })
}
