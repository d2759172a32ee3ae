//! Acceptance gate: ten checks, one test per criterion. Each prints a
//! single `ACCEPTANCE <id>: PASS` line on success; a failure panics before
//! the line is printed. Run with `cargo test --test acceptance -- --nocapture`
//! to see all lines.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use evogate_core::engine::dedup::deduplicate;
use evogate_core::engine::replay::replay_from_pool;
use evogate_core::engine::trace::ExperiencePool;
use evogate_core::engine::Engine;
use evogate_core::llm::offline::OfflineProvider;
use evogate_core::llm::scripted::ScriptedProvider;
use evogate_core::baselines::{run_bon, run_dp, BonConfig};
use evogate_core::problems::graph_coloring::{generate_gc, GraphColoringInstance};
use evogate_core::problems::sudoku::{generate_sudoku, SudokuPuzzle, BLANKS, GRID};
use evogate_core::problems::tsp::{generate_tsp, TspInstance};
use evogate_core::{
    compute_llm_budget, round_half_up, Candidate, ErrorReport, EvolutionConfig, FitnessScore,
    ParsedSolution, PopulationMember, ProblemInstance, ProblemKind, ProblemMetrics, ProblemPlugin,
    PromptRequest,
};

fn pass(id: &str, detail: &str) {
    println!("ACCEPTANCE {id}: PASS ({detail})");
}

fn assert_within(elapsed: Duration, limit: Duration, what: &str) {
    assert!(
        elapsed <= limit,
        "{what} took {elapsed:?}, over the {limit:?} budget"
    );
}

fn instance(kind: ProblemKind, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match kind {
        ProblemKind::Sk => ProblemInstance::Sudoku(generate_sudoku(&mut rng)),
        ProblemKind::Gc => ProblemInstance::GraphColoring(generate_gc(&mut rng)),
        ProblemKind::Tsp => ProblemInstance::Tsp(generate_tsp(&mut rng)),
    }
}

// --- C1: LLM budget formula -------------------------------------------------

#[test]
fn c1_budget_formula_reproduces_reference_counts() {
    let default = EvolutionConfig::default();
    assert_eq!(round_half_up(compute_llm_budget(&default)), 345);

    let expected = [(5, 5, 23u64), (10, 10, 80), (20, 20, 300), (30, 30, 660), (40, 40, 1160), (50, 50, 1800)];
    for (population, generations, samples) in expected {
        let config = EvolutionConfig {
            population_size: population,
            generations,
            ..EvolutionConfig::default()
        };
        assert_eq!(
            round_half_up(compute_llm_budget(&config)),
            samples,
            "budget for ({population}, {generations})"
        );
    }
    pass("C1", "default budget 345; six scaling pairs match");
}

// --- C2: metric recounts over 1000 random candidates ------------------------

fn naive_sudoku_valid_units(grid: &[[u8; GRID]; GRID]) -> usize {
    let full = |cells: [u8; 9]| -> bool {
        let mut seen = [false; 10];
        for v in cells {
            if v == 0 || seen[v as usize] {
                return false;
            }
            seen[v as usize] = true;
        }
        true
    };
    let mut valid = 0;
    for i in 0..9 {
        valid += full(grid[i]) as usize;
        valid += full(std::array::from_fn(|j| grid[j][i])) as usize;
    }
    for bi in 0..3 {
        for bj in 0..3 {
            valid +=
                full(std::array::from_fn(|t| grid[bi * 3 + t / 3][bj * 3 + t % 3])) as usize;
        }
    }
    valid
}

#[test]
fn c2_metrics_match_independent_recounts() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(99);

    // Sudoku: constraint score is 100 * valid-units / 27.
    let ProblemInstance::Sudoku(puzzle) = instance(ProblemKind::Sk, 10) else { unreachable!() };
    let sk_plugin = instance(ProblemKind::Sk, 10).plugin();
    for _ in 0..1000 {
        let mut grid = puzzle.grid;
        for &(i, j) in &puzzle.removed_positions {
            grid[i][j] = rng.random_range(1..=9);
        }
        let text = grid
            .iter()
            .map(|row| row.iter().map(u8::to_string).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n");
        let candidate = sk_plugin.parse(&text);
        let ProblemMetrics::Sudoku { score, penalized_score } = sk_plugin.metrics(&candidate)
        else {
            panic!("wrong metric family")
        };
        let expected = 100.0 * naive_sudoku_valid_units(&grid) as f64 / 27.0;
        assert!((score - expected).abs() <= 1e-9);
        assert!((0.0..=100.0).contains(&penalized_score));
        assert!(penalized_score <= score + 1e-9, "PS must not exceed SC");
    }
    // A known-correct solution scores exactly 100.
    let solved_text = puzzle
        .solution
        .iter()
        .map(|row| row.iter().map(u8::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n");
    let solved = sk_plugin.parse(&solved_text);
    assert_eq!(sk_plugin.oracle_fitness(&solved).value(), 100.0);
    assert!(sk_plugin.is_correct(&solved));

    // Graph coloring: conflict ratio recounted edge by edge.
    let ProblemInstance::GraphColoring(graph) = instance(ProblemKind::Gc, 11) else {
        unreachable!()
    };
    let gc_plugin = instance(ProblemKind::Gc, 11).plugin();
    for _ in 0..1000 {
        let colors: Vec<usize> =
            (0..graph.n_vertices).map(|_| rng.random_range(0..4)).collect();
        let text = colors.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let candidate = gc_plugin.parse(&text);
        let ProblemMetrics::Coloring { score, conflict_ratio, excess_color_usage, penalized_score } =
            gc_plugin.metrics(&candidate)
        else {
            panic!("wrong metric family")
        };
        let conflicts = graph
            .edges
            .iter()
            .filter(|(u, v)| colors[*u] == colors[*v])
            .count();
        let expected_cf = conflicts as f64 / graph.edges.len() as f64;
        assert!((conflict_ratio - expected_cf).abs() <= 1e-9);
        assert!((score - (1.0 - expected_cf) * 100.0).abs() <= 1e-9);
        let distinct: BTreeSet<usize> = colors.iter().copied().collect();
        assert_eq!(excess_color_usage, distinct.len() as i64 - graph.color_count as i64);
        assert!((0.0..=100.0).contains(&penalized_score));
        assert!(penalized_score <= score + 1e-9, "PS must not exceed Score");
    }
    // A proper 3-coloring (found by enumeration) scores exactly 100.
    let proper = (0..3usize.pow(graph.n_vertices as u32))
        .map(|mut code| {
            (0..graph.n_vertices)
                .map(|_| {
                    let c = code % 3;
                    code /= 3;
                    c
                })
                .collect::<Vec<usize>>()
        })
        .find(|colors| graph.edges.iter().all(|&(u, v)| colors[u] != colors[v]))
        .expect("instances are 3-colorable by construction");
    let proper_candidate =
        gc_plugin.parse(&proper.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
    assert_eq!(gc_plugin.oracle_fitness(&proper_candidate).value(), 100.0);
    assert!(gc_plugin.is_correct(&proper_candidate));

    // TSP: penalized score recomputed from a leg-by-leg distance sum.
    let ProblemInstance::Tsp(tsp) = instance(ProblemKind::Tsp, 12) else { unreachable!() };
    let tsp_plugin = instance(ProblemKind::Tsp, 12).plugin();
    for trial in 0..1000 {
        let mut middle: Vec<usize> = (1..tsp.n_cities).collect();
        middle.shuffle(&mut rng);
        // Every third candidate is truncated so missing-city paths are hit.
        let keep = if trial % 3 == 0 { rng.random_range(1..middle.len()) } else { middle.len() };
        let mut route = vec![0usize];
        route.extend(&middle[..keep]);
        route.push(0);
        let text = route.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let candidate = tsp_plugin.parse(&text);
        let ProblemMetrics::Route { penalized_score, excess_distance_multiplier, missing_cities } =
            tsp_plugin.metrics(&candidate)
        else {
            panic!("wrong metric family")
        };
        let distance: f64 = route.windows(2).map(|w| tsp.distance_matrix[w[0]][w[1]]).sum();
        let edm = ((distance - tsp.optimal_distance) / tsp.optimal_distance).min(3.0);
        let present: BTreeSet<usize> = route.iter().copied().collect();
        let mc = tsp.n_cities - present.len();
        assert_eq!(missing_cities, Some(mc));
        // Truncated routes can undercut the optimal distance; the reported
        // multiplier never goes below zero.
        assert!((excess_distance_multiplier.unwrap() - edm.max(0.0)).abs() <= 1e-9);
        let expected_ps =
            100.0 * (1.0 - edm.max(0.0) / 3.0).min(1.0 - mc as f64 / tsp.n_cities as f64);
        assert!((penalized_score - expected_ps).abs() <= 1e-9, "trial {trial}");
    }
    // The stored optimal route scores exactly 100.
    let optimal_text =
        tsp.optimal_route.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let optimal = tsp_plugin.parse(&optimal_text);
    assert_eq!(tsp_plugin.oracle_fitness(&optimal).value(), 100.0);
    assert!(tsp_plugin.is_correct(&optimal));

    assert_within(started.elapsed(), Duration::from_secs(30), "metric recounts");
    pass("C2", "3000 random candidates recounted within 1e-9; correct solutions score 100");
}

// --- C3: dataset integrity against independent solvers ----------------------

fn naive_count_sudoku_solutions(grid: &mut [[u8; GRID]; GRID], limit: usize) -> usize {
    fn fits(grid: &[[u8; GRID]; GRID], r: usize, c: usize, v: u8) -> bool {
        for k in 0..9 {
            if grid[r][k] == v || grid[k][c] == v {
                return false;
            }
        }
        let (br, bc) = (r / 3 * 3, c / 3 * 3);
        for i in 0..3 {
            for j in 0..3 {
                if grid[br + i][bc + j] == v {
                    return false;
                }
            }
        }
        true
    }
    fn recurse(grid: &mut [[u8; GRID]; GRID], limit: usize) -> usize {
        let Some((r, c)) = (0..81).map(|i| (i / 9, i % 9)).find(|&(r, c)| grid[r][c] == 0)
        else {
            return 1;
        };
        let mut found = 0;
        for v in 1..=9 {
            if fits(grid, r, c, v) {
                grid[r][c] = v;
                found += recurse(grid, limit - found);
                grid[r][c] = 0;
                if found >= limit {
                    break;
                }
            }
        }
        found
    }
    recurse(grid, limit)
}

fn naive_is_3_colorable(graph: &GraphColoringInstance) -> bool {
    let n = graph.n_vertices;
    'outer: for mut code in 0..3usize.pow(n as u32) {
        let mut colors = vec![0usize; n];
        for slot in colors.iter_mut() {
            *slot = code % 3;
            code /= 3;
        }
        for &(u, v) in &graph.edges {
            if colors[u] == colors[v] {
                continue 'outer;
            }
        }
        return true;
    }
    false
}

fn naive_optimal_distance(tsp: &TspInstance) -> f64 {
    fn recurse(
        tsp: &TspInstance,
        remaining: &mut Vec<usize>,
        current: usize,
        so_far: f64,
        best: &mut f64,
    ) {
        if remaining.is_empty() {
            let total = so_far + tsp.distance_matrix[current][0];
            if total < *best {
                *best = total;
            }
            return;
        }
        for i in 0..remaining.len() {
            let next = remaining.remove(i);
            recurse(
                tsp,
                remaining,
                next,
                so_far + tsp.distance_matrix[current][next],
                best,
            );
            remaining.insert(i, next);
        }
    }
    let mut best = f64::INFINITY;
    let mut remaining: Vec<usize> = (1..tsp.n_cities).collect();
    recurse(tsp, &mut remaining, 0, 0.0, &mut best);
    best
}

#[test]
fn c3_generated_datasets_pass_independent_verification() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(1234);
    for i in 0..10u64 {
        let ProblemInstance::Sudoku(puzzle) = instance(ProblemKind::Sk, 100 + i) else {
            unreachable!()
        };
        assert_eq!(puzzle.removed_positions.len(), BLANKS);
        let mut grid = puzzle.grid;
        assert_eq!(naive_count_sudoku_solutions(&mut grid, 2), 1, "puzzle {i}");

        let ProblemInstance::GraphColoring(graph) = instance(ProblemKind::Gc, 200 + i) else {
            unreachable!()
        };
        assert!(naive_is_3_colorable(&graph), "graph {i}");

        let ProblemInstance::Tsp(tsp) = instance(ProblemKind::Tsp, 300 + i) else {
            unreachable!()
        };
        let best = naive_optimal_distance(&tsp);
        assert!(
            (best - tsp.optimal_distance).abs() <= 1e-9,
            "tsp {i}: stored {} vs enumerated {best}",
            tsp.optimal_distance
        );
        // No random tour beats the stored optimum.
        for _ in 0..10_000 {
            let mut middle: Vec<usize> = (1..tsp.n_cities).collect();
            middle.shuffle(&mut rng);
            let mut route = vec![0usize];
            route.extend(middle);
            route.push(0);
            let distance: f64 =
                route.windows(2).map(|w| tsp.distance_matrix[w[0]][w[1]]).sum();
            assert!(distance >= tsp.optimal_distance - 1e-9);
        }
    }
    assert_within(started.elapsed(), Duration::from_secs(120), "dataset verification");
    pass("C3", "10 instances per problem verified by independent solvers");
}

// --- C4: external operator contracts ----------------------------------------

fn random_sudoku_candidate(
    puzzle: &SudokuPuzzle,
    plugin: &dyn ProblemPlugin,
    rng: &mut impl Rng,
) -> Candidate {
    let mut grid = puzzle.grid;
    for &(i, j) in &puzzle.removed_positions {
        grid[i][j] = rng.random_range(1..=9);
    }
    let text = grid
        .iter()
        .map(|row| row.iter().map(u8::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n");
    plugin.parse(&text)
}

fn sudoku_grid(candidate: &Candidate) -> [[u8; GRID]; GRID] {
    match &candidate.parsed {
        ParsedSolution::Sudoku(sol) => sol.grid,
        other => panic!("expected sudoku, got {other:?}"),
    }
}

#[test]
fn c4_external_operators_honor_their_contracts() {
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    let mut op_rng = ChaCha12Rng::seed_from_u64(32);

    let ProblemInstance::Sudoku(puzzle) = instance(ProblemKind::Sk, 40) else { unreachable!() };
    let sk = instance(ProblemKind::Sk, 40).plugin();
    for _ in 0..1000 {
        let a = random_sudoku_candidate(&puzzle, sk.as_ref(), &mut rng);
        let b = random_sudoku_candidate(&puzzle, sk.as_ref(), &mut rng);
        let child = sk.external_crossover(&a, &b, &mut op_rng);
        let (ga, gb, gc) = (sudoku_grid(&a), sudoku_grid(&b), sudoku_grid(&child));
        for i in 0..9 {
            for j in 0..9 {
                if puzzle.grid[i][j] != 0 {
                    assert_eq!(gc[i][j], puzzle.grid[i][j], "crossover touched a given");
                } else {
                    assert!(gc[i][j] == ga[i][j] || gc[i][j] == gb[i][j]);
                }
            }
        }
        let mutant = sk.external_mutation(&a, &mut op_rng);
        let gm = sudoku_grid(&mutant);
        let changed: Vec<(usize, usize)> = (0..81)
            .map(|t| (t / 9, t % 9))
            .filter(|&(i, j)| gm[i][j] != ga[i][j])
            .collect();
        assert!(changed.len() <= 1, "mutation rewrote {} cells", changed.len());
        for (i, j) in changed {
            assert!(puzzle.removed_positions.contains(&(i, j)));
        }
    }

    let ProblemInstance::GraphColoring(graph) = instance(ProblemKind::Gc, 41) else {
        unreachable!()
    };
    let gc = instance(ProblemKind::Gc, 41).plugin();
    for _ in 0..1000 {
        let colors_a: Vec<usize> = (0..graph.n_vertices).map(|_| rng.random_range(0..3)).collect();
        let colors_b: Vec<usize> = (0..graph.n_vertices).map(|_| rng.random_range(0..3)).collect();
        let text = |c: &[usize]| c.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let a = gc.parse(&text(&colors_a));
        let b = gc.parse(&text(&colors_b));
        let child = gc.external_crossover(&a, &b, &mut op_rng);
        let ParsedSolution::Coloring(child_colors) = &child.parsed else {
            panic!("crossover output must parse")
        };
        assert_eq!(child_colors.colors.len(), graph.n_vertices);
        let mutant = gc.external_mutation(&a, &mut op_rng);
        let ParsedSolution::Coloring(mutant_colors) = &mutant.parsed else {
            panic!("mutation output must parse")
        };
        let diffs = mutant_colors
            .colors
            .iter()
            .zip(&colors_a)
            .filter(|(m, o)| m != o)
            .count();
        assert!(diffs <= 1, "mutation recolored {diffs} vertices");
        assert!(mutant_colors.colors.iter().all(|&c| c < graph.color_count));
    }

    let ProblemInstance::Tsp(tsp) = instance(ProblemKind::Tsp, 42) else { unreachable!() };
    let tp = instance(ProblemKind::Tsp, 42).plugin();
    for _ in 0..1000 {
        let route = |rng: &mut ChaCha12Rng| {
            let mut middle: Vec<usize> = (1..tsp.n_cities).collect();
            middle.shuffle(rng);
            let mut cities = vec![0usize];
            cities.extend(middle);
            cities.push(0);
            cities
        };
        let ra = route(&mut rng);
        let rb = route(&mut rng);
        let text = |r: &[usize]| r.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let a = tp.parse(&text(&ra));
        let b = tp.parse(&text(&rb));
        let child = tp.external_crossover(&a, &b, &mut op_rng);
        let ParsedSolution::Route(child_route) = &child.parsed else {
            panic!("crossover output must parse")
        };
        // One-point: a prefix of the first parent, then a suffix of the second.
        let cities = &child_route.cities;
        assert_eq!(cities[0], 0);
        let k = (0..ra.len().min(cities.len()))
            .take_while(|&i| cities[i] == ra[i])
            .count();
        assert!(k >= 1, "child shares no prefix with the first parent");
        let suffix = &cities[k..];
        assert!(
            suffix.is_empty() || rb.windows(suffix.len()).any(|w| w == suffix),
            "child suffix does not come from the second parent"
        );

        // Mutation on a complete route repairs to a full permutation.
        let mutant = tp.external_mutation(&a, &mut op_rng);
        let ParsedSolution::Route(mutant_route) = &mutant.parsed else {
            panic!("mutation output must parse")
        };
        let mut seen: Vec<usize> = mutant_route.cities[..tsp.n_cities].to_vec();
        seen.sort_unstable();
        assert_eq!(seen, (0..tsp.n_cities).collect::<Vec<_>>());
    }

    // A semantically perfect parent passes through crossover unchanged.
    let optimal_text =
        tsp.optimal_route.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let perfect = tp.parse(&optimal_text);
    let other = tp.parse("0,1,2,3,4,5,6,7,8,9,0");
    for _ in 0..100 {
        let child = tp.external_crossover(&perfect, &other, &mut op_rng);
        assert_eq!(child.canonical(), perfect.canonical());
        let child = tp.external_crossover(&other, &perfect, &mut op_rng);
        assert_eq!(child.canonical(), perfect.canonical());
    }

    // Length-valid routes with duplicated cities: mutation repairs exactly
    // max(0, |missing| − |surplus|) cities short of a full tour.
    for _ in 0..1000 {
        let cities: Vec<usize> = std::iter::once(0)
            .chain((0..tsp.n_cities - 1).map(|_| rng.random_range(0..tsp.n_cities)))
            .chain(std::iter::once(0))
            .collect();
        let text = cities.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let candidate = tp.parse(&text);
        let missing: BTreeSet<usize> =
            (0..tsp.n_cities).filter(|c| !cities.contains(c)).collect();
        let mut seen = BTreeSet::new();
        // The final return-to-start 0 is sanctioned, not surplus.
        let surplus = cities[..cities.len() - 1]
            .iter()
            .filter(|&&c| !seen.insert(c))
            .count();
        let mutant = tp.external_mutation(&candidate, &mut op_rng);
        let ParsedSolution::Route(mutant_route) = &mutant.parsed else {
            panic!("mutation output must parse")
        };
        let remaining_missing = (0..tsp.n_cities)
            .filter(|c| !mutant_route.cities.contains(c))
            .count();
        assert_eq!(remaining_missing, missing.len().saturating_sub(surplus));
    }

    pass("C4", "sudoku/coloring/route operators held over 1000 trials each");
}

// --- C5: engine determinism, monotonicity, early stop -----------------------

#[test]
fn c5_engine_is_deterministic_and_monotone() {
    let started = Instant::now();
    let gc = instance(ProblemKind::Gc, 50);
    let config = EvolutionConfig {
        population_size: 6,
        generations: 3,
        elite_count: 1,
        ..EvolutionConfig::default()
    };
    let run = || {
        let plugin = gc.plugin();
        let provider = OfflineProvider::new(gc.clone(), 9);
        Engine::new(&config, plugin.as_ref(), &provider, "sim").run().unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(
        serde_json::to_string(&a.trace).unwrap(),
        serde_json::to_string(&b.trace).unwrap(),
        "identical seeds must give bit-identical traces"
    );
    let mut last = f64::MIN;
    for entry in &a.trace {
        assert!(entry.best_fitness >= last);
        last = entry.best_fitness;
    }

    let stopped = {
        let plugin = gc.plugin();
        let provider = OfflineProvider::new(gc.clone(), 9);
        let early = EvolutionConfig { fitness_threshold: 0.0, ..config.clone() };
        Engine::new(&early, plugin.as_ref(), &provider, "sim").run().unwrap()
    };
    assert_eq!(stopped.trace.len(), 1, "zero threshold stops after init");

    // A perfect scripted answer in the initial population stops the run at
    // generation 0 with a fitness of exactly 100.
    let ProblemInstance::GraphColoring(graph) = &gc else { unreachable!() };
    let proper = (0..3usize.pow(graph.n_vertices as u32))
        .map(|mut code| {
            (0..graph.n_vertices)
                .map(|_| {
                    let c = code % 3;
                    code /= 3;
                    c
                })
                .collect::<Vec<usize>>()
        })
        .find(|colors| graph.edges.iter().all(|&(u, v)| colors[u] != colors[v]))
        .unwrap();
    let perfect_text = format!(
        "```\n{}\n```",
        proper.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    );
    let plugin = gc.plugin();
    let provider = ScriptedProvider::cycling(vec![perfect_text]);
    let solved = Engine::new(&config, plugin.as_ref(), &provider, "m").run().unwrap();
    assert_eq!(solved.trace.len(), 1, "perfect initial answer stops at generation 0");
    assert_eq!(solved.best_fitness, 100.0);

    assert_within(started.elapsed(), Duration::from_secs(10), "engine runs");
    pass("C5", "bit-identical traces, monotone best, early stop");
}

// --- C6: deduplication retry budgets ----------------------------------------

#[test]
fn c6_dedup_respects_each_retry_budget() {
    for tau in [0usize, 3, 6] {
        let existing = [Candidate::syntax_failure("dup")];
        let mut calls = 0;
        let accepted = deduplicate(&existing, Candidate::syntax_failure("dup"), tau, || {
            calls += 1;
            Ok::<_, ()>(Candidate::syntax_failure("dup"))
        })
        .unwrap();
        assert_eq!(calls, tau, "a full storm burns exactly τ regenerations");
        assert_eq!(accepted.raw_text, "dup", "exhausted budget keeps the last");

        if tau > 0 {
            let mut calls = 0;
            let accepted =
                deduplicate(&existing, Candidate::syntax_failure("dup"), tau, || {
                    calls += 1;
                    Ok::<_, ()>(Candidate::syntax_failure("unique"))
                })
                .unwrap();
            assert_eq!(calls, 1, "first unique regeneration is kept immediately");
            assert_eq!(accepted.raw_text, "unique");
        }
    }
    pass("C6", "retry budgets 0/3/6 behave per contract");
}

// --- C7: experience replay fixtures -----------------------------------------

fn member(tag: &str, fitness: f64) -> PopulationMember {
    PopulationMember {
        candidate: Candidate::syntax_failure(tag),
        fitness: FitnessScore::new(fitness),
        errors: ErrorReport::clean(),
    }
}

#[test]
fn c7_replay_replaces_the_weakest_on_strict_improvement() {
    let population: Vec<PopulationMember> =
        (0..10).map(|i| member(&format!("p{i}"), i as f64)).collect();
    let mut pool = ExperiencePool::new();
    pool.absorb(
        &[
            member("e0", 100.0),
            member("e1", 99.0),
            member("e2", 98.0),
            member("e3", 50.0),
            member("e4", 2.0),
        ],
        0,
    );

    // ρ = 0: only the ascending sort happens.
    let unchanged = replay_from_pool(population.clone(), &pool, 0.0);
    let fitnesses = |members: &[PopulationMember]| -> Vec<f64> {
        members.iter().map(|m| m.fitness.value()).collect()
    };
    assert_eq!(fitnesses(&unchanged), (0..10).map(f64::from).collect::<Vec<_>>());

    // ρ = 0.3: the three weakest (0, 1, 2) give way to the pool's best
    // three, paired slot by slot (weakest member vs best pool entry).
    let replaced = replay_from_pool(population.clone(), &pool, 0.3);
    assert_eq!(fitnesses(&replaced), vec![100.0, 99.0, 98.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);

    // ρ = 0.6: six slots considered; the fifth pool entry (score 2) does
    // not strictly beat its paired member (fitness 4), so that slot keeps
    // the incumbent, and there is no sixth pool entry at all.
    let partial = replay_from_pool(population, &pool, 0.6);
    assert_eq!(
        fitnesses(&partial),
        vec![100.0, 99.0, 98.0, 50.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]
    );
    pass("C7", "ρ ∈ {0, 0.3, 0.6} hand fixtures reproduce");
}

// --- C8: baseline methods ----------------------------------------------------

#[test]
fn c8_baselines_behave() {
    let gc = instance(ProblemKind::Gc, 80);
    let plugin = gc.plugin();

    let provider = ScriptedProvider::sequence(vec!["```\n0,0,0,0,0,0,0,0,0\n```".to_string()]);
    run_dp(plugin.as_ref(), &provider, "m").unwrap();
    assert_eq!(provider.call_count(), 1);
    assert_eq!(provider.call_log()[0].temperature, 0.0, "DP is greedy");

    // BoN keeps the best-scoring sample and is bounded by N * (1 + τ).
    let provider = ScriptedProvider::cycling(vec![
        "```\n0,0,0,0,0,0,0,0,0\n```".to_string(),
        "```\n0,1,2,0,1,2,0,1,2\n```".to_string(),
        "```\n1,1,1,1,1,1,1,1,1\n```".to_string(),
    ]);
    let config = BonConfig { samples: 3, max_dedup_attempts: 3, ..BonConfig::default() };
    let best = run_bon(plugin.as_ref(), &provider, "m", &config).unwrap();
    let scores: Vec<f64> = ["0,0,0,0,0,0,0,0,0", "0,1,2,0,1,2,0,1,2", "1,1,1,1,1,1,1,1,1"]
        .iter()
        .map(|t| plugin.oracle_fitness(&plugin.parse(t)).value())
        .collect();
    let best_score = plugin.oracle_fitness(&best).value();
    assert_eq!(best_score, scores.iter().cloned().fold(f64::MIN, f64::max));
    assert!(provider.call_count() as u64 <= config.samples * (1 + config.max_dedup_attempts as u64));
    pass("C8", "DP greedy single call; BoN bounded and best-of");
}

// --- C9: the ablation harness end to end -------------------------------------

#[test]
fn c9_scale_ablation_runs_offline_end_to_end() {
    let started = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_evogate"))
        .args([
            "ablate",
            "--name",
            "scale",
            "--problem",
            "gc",
            "--count",
            "1",
            "--seed",
            "0",
            "--out",
        ])
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success(), "ablate exited nonzero");

    let report = std::fs::read_to_string(out.path().join("report.md")).unwrap();
    let labels = [
        "evo_np5_ng5", "bon_n23", "evo_np10_ng10", "bon_n80", "evo_np20_ng20", "bon_n300",
        "evo_np30_ng30", "bon_n660", "evo_np40_ng40", "bon_n1160", "evo_np50_ng50", "bon_n1800",
    ];
    for label in labels {
        assert!(report.contains(label), "report is missing {label}");
        assert!(
            out.path().join(label).join("manifest.json").exists(),
            "{label} produced no manifest"
        );
    }

    // Unknown suites are rejected loudly.
    let bad = std::process::Command::new(env!("CARGO_BIN_EXE_evogate"))
        .args(["ablate", "--name", "no-such-suite", "--dry-run"])
        .output()
        .unwrap();
    assert!(!bad.status.success());

    assert_within(started.elapsed(), Duration::from_secs(300), "scale ablation");
    pass("C9", "12 budget-matched runs completed with a grouped report");
}

// --- C10: frozen prompt templates --------------------------------------------

#[test]
fn c10_rendered_templates_match_frozen_goldens() {
    let golden_dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/goldens/prompts");
    let mut checked = 0;
    for kind in [ProblemKind::Sk, ProblemKind::Gc, ProblemKind::Tsp] {
        let plugin = instance(kind, 42).plugin();
        let (first_text, second_text) = match kind {
            ProblemKind::Sk => (
                "1 1 1 1 1 1 1 1 1\n1 1 1 1 1 1 1 1 1\n1 1 1 1 1 1 1 1 1\n\
                 1 1 1 1 1 1 1 1 1\n1 1 1 1 1 1 1 1 1\n1 1 1 1 1 1 1 1 1\n\
                 1 1 1 1 1 1 1 1 1\n1 1 1 1 1 1 1 1 1\n1 1 1 1 1 1 1 1 1",
                "1 2 3 4 5 6 7 8 9\n1 2 3 4 5 6 7 8 9\n1 2 3 4 5 6 7 8 9\n\
                 1 2 3 4 5 6 7 8 9\n1 2 3 4 5 6 7 8 9\n1 2 3 4 5 6 7 8 9\n\
                 1 2 3 4 5 6 7 8 9\n1 2 3 4 5 6 7 8 9\n1 2 3 4 5 6 7 8 9",
            ),
            ProblemKind::Gc => ("0,0,0,0,0,0,0,0,0", "0,1,2,0,1,2,0,1,2"),
            ProblemKind::Tsp => ("0,1,2,3,4,0", "0,9,8,7,6,5,4,3,2,1,0"),
        };
        let first = plugin.parse(first_text);
        let second = plugin.parse(second_text);
        let first_errors = plugin.detect_errors(&first, 3);
        let second_errors = plugin.detect_errors(&second, 3);
        let requests: Vec<PromptRequest<'_>> = vec![
            PromptRequest::Direct,
            PromptRequest::DetectErrors { candidate: &first },
            PromptRequest::Fitness { candidate: &first },
            PromptRequest::Crossover {
                first: &first,
                second: &second,
                first_score: FitnessScore::new(37.0),
                second_score: FitnessScore::new(64.5),
                first_errors: &first_errors,
                second_errors: &second_errors,
            },
            PromptRequest::Mutation {
                candidate: &first,
                score: FitnessScore::new(37.0),
                errors: &first_errors,
            },
        ];
        for request in &requests {
            let prompt = plugin.build_prompt(request).unwrap();
            let golden = std::fs::read_to_string(
                golden_dir.join(format!("{}.txt", prompt.template.name())),
            )
            .unwrap();
            assert_eq!(prompt.text, golden, "{} drifted", prompt.template.name());
            checked += 1;
        }
    }
    assert_eq!(checked, 15);
    pass("C10", "all 15 templates byte-identical to goldens");
}
