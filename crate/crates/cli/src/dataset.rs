use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use evogate_core::problems::graph_coloring::{generate_gc, is_colorable, GraphColoringInstance};
use evogate_core::problems::sudoku::{count_solutions, generate_sudoku, SudokuPuzzle, BLANKS};
use evogate_core::problems::tsp::{generate_tsp, optimal_tour, TspInstance};
use evogate_core::{ProblemInstance, ProblemKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub problem: ProblemKind,
    pub count: usize,
    pub seed: u64,
    pub instances: Vec<String>,
    /// Generation-time acceptance filters applied to every instance.
    pub filters: Vec<String>,
}

/// On-disk Sudoku schema: rows as dot-for-blank strings.
#[derive(Serialize, Deserialize)]
struct SudokuFile {
    grid: Vec<String>,
    solution: Vec<String>,
    removed_positions: Vec<(usize, usize)>,
}

fn grid_to_rows(grid: &[[u8; 9]; 9]) -> Vec<String> {
    grid.iter()
        .map(|row| {
            row.iter()
                .map(|&v| if v == 0 { ".".to_string() } else { v.to_string() })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn rows_to_grid(rows: &[String]) -> Result<[[u8; 9]; 9]> {
    if rows.len() != 9 {
        bail!("expected 9 grid rows, got {}", rows.len());
    }
    let mut grid = [[0u8; 9]; 9];
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split_whitespace().collect();
        if cells.len() != 9 {
            bail!("row {i} has {} cells", cells.len());
        }
        for (j, cell) in cells.iter().enumerate() {
            grid[i][j] = match *cell {
                "." => 0,
                digit => digit
                    .parse::<u8>()
                    .ok()
                    .filter(|v| (1..=9).contains(v))
                    .with_context(|| format!("bad cell {digit:?} at ({i},{j})"))?,
            };
        }
    }
    Ok(grid)
}

/// On-disk GC schema, including the adjacency rendering used in prompts.
#[derive(Serialize, Deserialize)]
struct GcFile {
    n_vertices: usize,
    color_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency_matrix: String,
}

fn instance_to_json(instance: &ProblemInstance) -> serde_json::Value {
    match instance {
        ProblemInstance::Sudoku(p) => serde_json::to_value(SudokuFile {
            grid: grid_to_rows(&p.grid),
            solution: grid_to_rows(&p.solution),
            removed_positions: p.removed_positions.iter().copied().collect(),
        }),
        ProblemInstance::GraphColoring(g) => serde_json::to_value(GcFile {
            n_vertices: g.n_vertices,
            color_count: g.color_count,
            edges: g.edges.clone(),
            adjacency_matrix: g.adjacency_text(),
        }),
        ProblemInstance::Tsp(t) => serde_json::to_value(t),
    }
    .expect("instance serialization is infallible")
}

fn instance_from_json(problem: ProblemKind, value: serde_json::Value) -> Result<ProblemInstance> {
    Ok(match problem {
        ProblemKind::Sk => {
            let file: SudokuFile = serde_json::from_value(value)?;
            ProblemInstance::Sudoku(SudokuPuzzle {
                grid: rows_to_grid(&file.grid)?,
                solution: rows_to_grid(&file.solution)?,
                removed_positions: file.removed_positions.into_iter().collect(),
            })
        }
        ProblemKind::Gc => {
            let file: GcFile = serde_json::from_value(value)?;
            ProblemInstance::GraphColoring(GraphColoringInstance {
                n_vertices: file.n_vertices,
                color_count: file.color_count,
                edges: file.edges,
            })
        }
        ProblemKind::Tsp => ProblemInstance::Tsp(serde_json::from_value::<TspInstance>(value)?),
    })
}

fn generate_instance(problem: ProblemKind, rng: &mut ChaCha12Rng) -> ProblemInstance {
    match problem {
        ProblemKind::Sk => ProblemInstance::Sudoku(generate_sudoku(rng)),
        ProblemKind::Gc => ProblemInstance::GraphColoring(generate_gc(rng)),
        ProblemKind::Tsp => ProblemInstance::Tsp(generate_tsp(rng)),
    }
}

fn filters_for(problem: ProblemKind) -> Vec<String> {
    match problem {
        ProblemKind::Sk => vec!["unique-completion".to_string(), "exactly-40-blanks".to_string()],
        ProblemKind::Gc => vec!["3-colorable".to_string()],
        ProblemKind::Tsp => vec!["exact-optimum-by-enumeration".to_string()],
    }
    .into_iter()
    .chain(["pairwise-distinct".to_string()])
    .collect()
}

/// Deterministically generate `count` distinct instances plus a manifest
/// into `dir`. Rerunning with the same arguments reproduces the same bytes.
pub fn generate_dataset(
    problem: ProblemKind,
    count: usize,
    seed: u64,
    dir: &Path,
) -> Result<DatasetManifest> {
    fs::create_dir_all(dir)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut instances = Vec::with_capacity(count);
    while instances.len() < count {
        let instance = generate_instance(problem, &mut rng);
        let json = serde_json::to_string_pretty(&instance_to_json(&instance))?;
        if !seen.insert(json.clone()) {
            continue; // duplicate draw; the stream moves on regardless
        }
        let name = format!("{}_{:03}.json", problem.name(), instances.len());
        fs::write(dir.join(&name), format!("{json}\n"))?;
        instances.push(name);
    }
    let manifest = DatasetManifest {
        problem,
        count,
        seed,
        instances,
        filters: filters_for(problem),
    };
    fs::write(
        dir.join("manifest.json"),
        format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;
    Ok(manifest)
}

/// Re-validate one instance against its generation-time oracle.
fn revalidate(instance: &ProblemInstance) -> Result<()> {
    match instance {
        ProblemInstance::Sudoku(p) => {
            if p.removed_positions.len() != BLANKS {
                bail!("sudoku instance has {} blanks", p.removed_positions.len());
            }
            if count_solutions(&p.grid, 2) != 1 {
                bail!("sudoku instance lost solution uniqueness");
            }
        }
        ProblemInstance::GraphColoring(g) => {
            if !is_colorable(g.n_vertices, g.color_count, &g.edges) {
                bail!("graph instance is not {}-colorable", g.color_count);
            }
        }
        ProblemInstance::Tsp(t) => {
            let (_, distance) = optimal_tour(&t.distance_matrix);
            if (distance - t.optimal_distance).abs() > 1e-9 {
                bail!(
                    "stored optimum {} disagrees with enumeration {}",
                    t.optimal_distance,
                    distance
                );
            }
        }
    }
    Ok(())
}

/// Load a dataset directory, re-running each instance's oracle validation.
pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<(String, ProblemInstance)>)> {
    let manifest: DatasetManifest = serde_json::from_str(
        &fs::read_to_string(dir.join("manifest.json"))
            .with_context(|| format!("no dataset manifest under {}", dir.display()))?,
    )?;
    let mut instances = Vec::with_capacity(manifest.instances.len());
    for name in &manifest.instances {
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join(name))?)?;
        let instance = instance_from_json(manifest.problem, value)
            .with_context(|| format!("malformed instance file {name}"))?;
        revalidate(&instance).with_context(|| format!("instance {name} failed re-validation"))?;
        let id = name.trim_end_matches(".json").to_string();
        instances.push((id, instance));
    }
    Ok((manifest, instances))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_reloads_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        generate_dataset(ProblemKind::Gc, 3, 7, &a).unwrap();
        generate_dataset(ProblemKind::Gc, 3, 7, &b).unwrap();
        for name in ["manifest.json", "gc_000.json", "gc_001.json", "gc_002.json"] {
            assert_eq!(
                fs::read_to_string(a.join(name)).unwrap(),
                fs::read_to_string(b.join(name)).unwrap(),
                "{name} differs between identical generations"
            );
        }
        let (manifest, instances) = load_dataset(&a).unwrap();
        assert_eq!(manifest.count, 3);
        assert_eq!(instances.len(), 3);
    }

    #[test]
    fn count_zero_writes_an_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_dataset(ProblemKind::Tsp, 0, 1, dir.path()).unwrap();
        assert!(manifest.instances.is_empty());
        let (_, instances) = load_dataset(dir.path()).unwrap();
        assert!(instances.is_empty());
    }

    #[test]
    fn sudoku_round_trips_through_the_file_schema() {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(ProblemKind::Sk, 1, 3, dir.path()).unwrap();
        let (_, instances) = load_dataset(dir.path()).unwrap();
        let ProblemInstance::Sudoku(puzzle) = &instances[0].1 else {
            panic!("expected a sudoku instance");
        };
        assert_eq!(puzzle.removed_positions.len(), BLANKS);

        // The stored file uses dot-for-blank strings.
        let raw = fs::read_to_string(dir.path().join("sk_000.json")).unwrap();
        let value: serde_json::Value = serde_json::from_str(&raw).unwrap();
        let first_row = value["grid"][0].as_str().unwrap();
        assert_eq!(first_row.split_whitespace().count(), 9);
    }

    #[test]
    fn corrupted_instances_fail_revalidation() {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(ProblemKind::Tsp, 1, 5, dir.path()).unwrap();
        let path = dir.path().join("tsp_000.json");
        let mut value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        value["optimal_distance"] = serde_json::json!(0.001);
        fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
        assert!(load_dataset(dir.path()).is_err());
    }
}
