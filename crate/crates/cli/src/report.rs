use std::collections::BTreeMap;

use anyhow::{bail, Result};
use evogate_core::{round_half_up, ProblemKind, ProblemMetrics};

use crate::runner::{Method, RunManifest};

/// Aggregates of one run over its dataset.
struct RowStats {
    label: String,
    method: Method,
    model: String,
    correct_rate: f64,
    mean_score: f64,
    mean_penalized: f64,
    mean_ecu: f64,
    mean_cf: f64,
    mean_edm: Option<f64>,
    mean_mc: f64,
    mean_calls: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        return 0.0;
    }
    collected.iter().sum::<f64>() / collected.len() as f64
}

fn summarize(manifest: &RunManifest) -> Result<RowStats> {
    if manifest.results.is_empty() {
        bail!("run {} has no instance results", manifest.label);
    }
    let n = manifest.results.len() as f64;
    let correct = manifest.results.iter().filter(|r| r.correct).count() as f64;
    let mut scores = Vec::new();
    let mut ecus = Vec::new();
    let mut cfs = Vec::new();
    let mut edms = Vec::new();
    let mut mcs = Vec::new();
    for result in &manifest.results {
        match &result.metrics {
            ProblemMetrics::Sudoku { score, .. } => scores.push(*score),
            ProblemMetrics::Coloring {
                score,
                excess_color_usage,
                conflict_ratio,
                ..
            } => {
                scores.push(*score);
                ecus.push(*excess_color_usage as f64);
                cfs.push(*conflict_ratio);
            }
            ProblemMetrics::Route {
                excess_distance_multiplier,
                missing_cities,
                ..
            } => {
                if let Some(edm) = excess_distance_multiplier {
                    edms.push(*edm);
                }
                mcs.push(missing_cities.map(|m| m as f64).unwrap_or(f64::NAN));
            }
        }
    }
    let mean_mc = mean(mcs.iter().copied().filter(|v| !v.is_nan()));
    Ok(RowStats {
        label: manifest.label.clone(),
        method: manifest.method,
        model: manifest.model.clone(),
        correct_rate: 100.0 * correct / n,
        mean_score: mean(scores.into_iter()),
        mean_penalized: mean(manifest.results.iter().map(|r| r.penalized_score)),
        mean_ecu: mean(ecus.into_iter()),
        mean_cf: mean(cfs.into_iter()),
        mean_edm: if edms.is_empty() {
            None
        } else {
            Some(mean(edms.into_iter()))
        },
        mean_mc,
        mean_calls: mean(manifest.results.iter().map(|r| r.provider_calls as f64)),
    })
}

/// Delta annotation against one baseline, e.g. `↑12 vs dp`.
fn delta(current: f64, baseline: Option<f64>, name: &str) -> Option<String> {
    let baseline = baseline?;
    let diff = round_half_up(current) as i64 - round_half_up(baseline) as i64;
    Some(match diff.cmp(&0) {
        std::cmp::Ordering::Greater => format!("↑{diff} vs {name}"),
        std::cmp::Ordering::Less => format!("↓{} vs {name}", -diff),
        std::cmp::Ordering::Equal => format!("= vs {name}"),
    })
}

fn annotated(value: f64, deltas: &[Option<String>]) -> String {
    let notes: Vec<&str> = deltas.iter().flatten().map(String::as_str).collect();
    if notes.is_empty() {
        format!("{}", round_half_up(value))
    } else {
        format!("{} ({})", round_half_up(value), notes.join(", "))
    }
}

fn problem_title(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Sk => "Sudoku",
        ProblemKind::Gc => "Graph Coloring",
        ProblemKind::Tsp => "Traveling Salesman",
    }
}

/// Render a markdown report over any mix of problems, methods, and models.
/// Scores and rates are integers (half-up); continuous diagnostics keep two
/// decimals. Evolutionary rows carry ↑/↓ deltas against the DP and BoN rows
/// that share their model and problem.
pub fn aggregate_report(manifests: &[RunManifest]) -> Result<String> {
    if manifests.is_empty() {
        bail!("no run manifests to report on");
    }
    let mut by_problem: BTreeMap<&'static str, Vec<(&RunManifest, RowStats)>> = BTreeMap::new();
    for manifest in manifests {
        by_problem
            .entry(problem_title(manifest.problem))
            .or_default()
            .push((manifest, summarize(manifest)?));
    }

    let mut out = String::from("# Experiment Report\n");
    for (title, mut rows) in by_problem {
        rows.sort_by_key(|(m, _)| (m.model.clone(), m.method as usize, m.label.clone()));
        let kind = rows[0].0.problem;
        out.push_str(&format!("\n## {title}\n\n"));
        match kind {
            ProblemKind::Sk => {
                out.push_str("| Run | Model | CR | SC | PS | Calls |\n");
                out.push_str("|---|---|---|---|---|---|\n");
            }
            ProblemKind::Gc => {
                out.push_str("| Run | Model | CR | SC | PS | ECU | CF | Calls |\n");
                out.push_str("|---|---|---|---|---|---|---|---|\n");
            }
            ProblemKind::Tsp => {
                out.push_str("| Run | Model | CR | PS | EDM | MC | Calls |\n");
                out.push_str("|---|---|---|---|---|---|---|\n");
            }
        }
        for (_, stats) in &rows {
            // Baselines for delta annotations share model and problem.
            let baseline = |method: Method, pick: fn(&RowStats) -> f64| -> Option<f64> {
                if stats.method != Method::Evo {
                    return None;
                }
                rows.iter()
                    .find(|(m, s)| m.method == method && s.model == stats.model)
                    .map(|(_, s)| pick(s))
            };
            let cr = annotated(
                stats.correct_rate,
                &[
                    delta(stats.correct_rate, baseline(Method::Dp, |s| s.correct_rate), "dp"),
                    delta(stats.correct_rate, baseline(Method::Bon, |s| s.correct_rate), "bon"),
                ],
            );
            let ps = annotated(
                stats.mean_penalized,
                &[
                    delta(stats.mean_penalized, baseline(Method::Dp, |s| s.mean_penalized), "dp"),
                    delta(stats.mean_penalized, baseline(Method::Bon, |s| s.mean_penalized), "bon"),
                ],
            );
            let calls = format!("{:.1}", stats.mean_calls);
            let line = match kind {
                ProblemKind::Sk => format!(
                    "| {} | {} | {} | {} | {} | {} |\n",
                    stats.label,
                    stats.model,
                    cr,
                    round_half_up(stats.mean_score),
                    ps,
                    calls
                ),
                ProblemKind::Gc => format!(
                    "| {} | {} | {} | {} | {} | {:.2} | {:.2} | {} |\n",
                    stats.label,
                    stats.model,
                    cr,
                    round_half_up(stats.mean_score),
                    ps,
                    stats.mean_ecu,
                    stats.mean_cf,
                    calls
                ),
                ProblemKind::Tsp => format!(
                    "| {} | {} | {} | {} | {} | {:.2} | {} |\n",
                    stats.label,
                    stats.model,
                    cr,
                    ps,
                    stats
                        .mean_edm
                        .map(|v| format!("{v:.2}"))
                        .unwrap_or_else(|| "—".to_string()),
                    stats.mean_mc,
                    calls
                ),
            };
            out.push_str(&line);
        }
    }
    Ok(out)
}
