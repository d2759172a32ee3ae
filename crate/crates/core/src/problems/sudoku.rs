use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::candidate::{
    Candidate, CellError, ConstraintKind, ErrorReport, FitnessScore, ParsedSolution,
    SemanticErrors,
};
use crate::llm::parse::extract_solution_block;
use crate::llm::templates::{render_prompt, Bindings, RenderedPrompt, TemplateError, TemplateId};
use crate::problem::{ProblemKind, ProblemMetrics, ProblemPlugin, PromptRequest};

pub const GRID: usize = 9;
pub const BLANKS: usize = 40;

/// A 9×9 instance: the clue grid (0 = blank), the 40 removed positions, and
/// the unique completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SudokuPuzzle {
    pub grid: [[u8; GRID]; GRID],
    pub removed_positions: BTreeSet<(usize, usize)>,
    pub solution: [[u8; GRID]; GRID],
}

/// A fully filled 9×9 grid as parsed from candidate text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SudokuSolution {
    pub grid: [[u8; GRID]; GRID],
}

impl SudokuSolution {
    pub fn format(&self) -> String {
        format_grid(&self.grid, false)
    }
}

fn format_grid(grid: &[[u8; GRID]; GRID], dots_for_blanks: bool) -> String {
    grid.iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if v == 0 && dots_for_blanks {
                        ".".to_string()
                    } else {
                        v.to_string()
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

impl SudokuPuzzle {
    /// Prompt rendering: blanks as dots, cells space-separated.
    pub fn puzzle_text(&self) -> String {
        format_grid(&self.grid, true)
    }
}

fn box_index(row: usize, col: usize) -> usize {
    (row / 3) * 3 + col / 3
}

fn unit_cells(kind: ConstraintKind, index: usize) -> [(usize, usize); GRID] {
    let mut cells = [(0, 0); GRID];
    for (slot, cell) in cells.iter_mut().enumerate() {
        *cell = match kind {
            ConstraintKind::Row => (index, slot),
            ConstraintKind::Col => (slot, index),
            ConstraintKind::Subgrid => {
                ((index / 3) * 3 + slot / 3, (index % 3) * 3 + slot % 3)
            }
        };
    }
    cells
}

fn unit_is_valid(grid: &[[u8; GRID]; GRID], kind: ConstraintKind, index: usize) -> bool {
    let mut mask: u16 = 0;
    for (i, j) in unit_cells(kind, index) {
        let v = grid[i][j];
        if !(1..=9).contains(&v) {
            return false;
        }
        mask |= 1 << v;
    }
    mask == 0b11_1111_1110
}

/// (valid rows, valid columns, valid subgrids) out of 9 each.
pub fn valid_unit_counts(grid: &[[u8; GRID]; GRID]) -> (usize, usize, usize) {
    let count = |kind| (0..GRID).filter(|&i| unit_is_valid(grid, kind, i)).count();
    (
        count(ConstraintKind::Row),
        count(ConstraintKind::Col),
        count(ConstraintKind::Subgrid),
    )
}

/// SC: percentage of the 27 units that are exact permutations of 1..9.
pub fn sudoku_score(sol: &SudokuSolution) -> f64 {
    let (r, c, b) = valid_unit_counts(&sol.grid);
    100.0 * (r + c + b) as f64 / 27.0
}

/// PS: geometric mean of per-constraint validity fractions, scaled to 100.
pub fn sudoku_penalized_score(sol: &SudokuSolution) -> f64 {
    let (r, c, b) = valid_unit_counts(&sol.grid);
    let product = (r as f64 / 9.0) * (c as f64 / 9.0) * (b as f64 / 9.0);
    100.0 * product.cbrt()
}

pub fn sudoku_correct(sol: &SudokuSolution, puzzle: &SudokuPuzzle) -> bool {
    let (r, c, b) = valid_unit_counts(&sol.grid);
    if (r, c, b) != (9, 9, 9) {
        return false;
    }
    for i in 0..GRID {
        for j in 0..GRID {
            if puzzle.grid[i][j] != 0 && sol.grid[i][j] != puzzle.grid[i][j] {
                return false;
            }
        }
    }
    true
}

/// Untruncated semantic-error positions: removed cells participating in any
/// violated unit.
fn error_positions(sol: &SudokuSolution, puzzle: &SudokuPuzzle) -> BTreeSet<(usize, usize)> {
    full_error_entries(sol, puzzle)
        .into_iter()
        .map(|e| (e.row, e.col))
        .collect()
}

fn full_error_entries(sol: &SudokuSolution, puzzle: &SudokuPuzzle) -> Vec<CellError> {
    let row_bad: Vec<bool> = (0..GRID)
        .map(|i| !unit_is_valid(&sol.grid, ConstraintKind::Row, i))
        .collect();
    let col_bad: Vec<bool> = (0..GRID)
        .map(|j| !unit_is_valid(&sol.grid, ConstraintKind::Col, j))
        .collect();
    let box_bad: Vec<bool> = (0..GRID)
        .map(|b| !unit_is_valid(&sol.grid, ConstraintKind::Subgrid, b))
        .collect();
    let mut entries = Vec::new();
    for i in 0..GRID {
        for j in 0..GRID {
            if !puzzle.removed_positions.contains(&(i, j)) {
                continue;
            }
            if row_bad[i] {
                entries.push(CellError { row: i, col: j, constraint: ConstraintKind::Row });
            }
            if col_bad[j] {
                entries.push(CellError { row: i, col: j, constraint: ConstraintKind::Col });
            }
            if box_bad[box_index(i, j)] {
                entries.push(CellError { row: i, col: j, constraint: ConstraintKind::Subgrid });
            }
        }
    }
    entries
}

pub fn sudoku_detect_errors(
    candidate: &Candidate,
    puzzle: &SudokuPuzzle,
    max_errors: usize,
) -> ErrorReport {
    let ParsedSolution::Sudoku(sol) = &candidate.parsed else {
        return ErrorReport::syntax_failure();
    };
    ErrorReport::semantic(SemanticErrors::Sudoku(full_error_entries(sol, puzzle)))
        .truncated(max_errors)
}

fn solution_candidate(grid: [[u8; GRID]; GRID]) -> Candidate {
    let sol = SudokuSolution { grid };
    Candidate {
        raw_text: sol.format(),
        parsed: ParsedSolution::Sudoku(sol),
    }
}

/// ECO Φ: an error-free parent wins outright; otherwise copy the first
/// parent's values into the second at the second's error positions that the
/// first got right.
pub fn sudoku_eco(c1: &Candidate, c2: &Candidate, puzzle: &SudokuPuzzle) -> Candidate {
    let (s1, s2) = match (&c1.parsed, &c2.parsed) {
        (ParsedSolution::Sudoku(a), ParsedSolution::Sudoku(b)) => (a, b),
        (ParsedSolution::Sudoku(_), _) => return c1.clone(),
        (_, ParsedSolution::Sudoku(_)) => return c2.clone(),
        _ => return c1.clone(),
    };
    let se1 = error_positions(s1, puzzle);
    if se1.is_empty() {
        return c1.clone();
    }
    let se2 = error_positions(s2, puzzle);
    if se2.is_empty() {
        return c2.clone();
    }
    let mut child = s2.grid;
    for &(i, j) in &se2 {
        // P_corr(c1) = removed positions where c1 is error-free.
        if !se1.contains(&(i, j)) {
            child[i][j] = s1.grid[i][j];
        }
    }
    solution_candidate(child)
}

/// EMO Θ: rewrite one uniformly chosen error cell with a uniform digit.
pub fn sudoku_emo<R: Rng + ?Sized>(
    candidate: &Candidate,
    puzzle: &SudokuPuzzle,
    rng: &mut R,
) -> Candidate {
    let ParsedSolution::Sudoku(sol) = &candidate.parsed else {
        return candidate.clone();
    };
    let positions: Vec<(usize, usize)> = error_positions(sol, puzzle).into_iter().collect();
    if positions.is_empty() {
        return candidate.clone();
    }
    let (i, j) = positions[rng.random_range(0..positions.len())];
    let v: u8 = rng.random_range(1..=9);
    let mut grid = sol.grid;
    grid[i][j] = v;
    solution_candidate(grid)
}

/// Number of completions of `grid` (0 = blank), counting up to `limit`.
pub fn count_solutions(grid: &[[u8; GRID]; GRID], limit: usize) -> usize {
    let mut rows = [0u16; GRID];
    let mut cols = [0u16; GRID];
    let mut boxes = [0u16; GRID];
    let mut blanks = Vec::new();
    for i in 0..GRID {
        for j in 0..GRID {
            let v = grid[i][j];
            if v == 0 {
                blanks.push((i, j));
            } else {
                let bit = 1u16 << v;
                if rows[i] & bit != 0 || cols[j] & bit != 0 || boxes[box_index(i, j)] & bit != 0 {
                    return 0;
                }
                rows[i] |= bit;
                cols[j] |= bit;
                boxes[box_index(i, j)] |= bit;
            }
        }
    }
    fn recurse(
        blanks: &[(usize, usize)],
        rows: &mut [u16; GRID],
        cols: &mut [u16; GRID],
        boxes: &mut [u16; GRID],
        limit: usize,
        found: &mut usize,
    ) {
        if *found >= limit {
            return;
        }
        if blanks.is_empty() {
            *found += 1;
            return;
        }
        // Most-constrained-cell heuristic keeps the search shallow.
        let (pick, _) = blanks
            .iter()
            .enumerate()
            .map(|(idx, &(i, j))| {
                let used = rows[i] | cols[j] | boxes[box_index(i, j)];
                (idx, (1..=9).filter(|v| used & (1 << v) == 0).count())
            })
            .min_by_key(|&(_, options)| options)
            .unwrap();
        let (i, j) = blanks[pick];
        let mut rest: Vec<(usize, usize)> = blanks.to_vec();
        rest.swap_remove(pick);
        let b = box_index(i, j);
        for v in 1..=9u16 {
            let bit = 1 << v;
            if rows[i] & bit != 0 || cols[j] & bit != 0 || boxes[b] & bit != 0 {
                continue;
            }
            rows[i] |= bit;
            cols[j] |= bit;
            boxes[b] |= bit;
            recurse(&rest, rows, cols, boxes, limit, found);
            rows[i] &= !bit;
            cols[j] &= !bit;
            boxes[b] &= !bit;
        }
    }
    let mut found = 0;
    recurse(&blanks, &mut rows, &mut cols, &mut boxes, limit, &mut found);
    found
}

fn full_grid<R: Rng + ?Sized>(rng: &mut R) -> [[u8; GRID]; GRID] {
    fn fill<R: Rng + ?Sized>(grid: &mut [[u8; GRID]; GRID], cell: usize, rng: &mut R) -> bool {
        if cell == GRID * GRID {
            return true;
        }
        let (i, j) = (cell / GRID, cell % GRID);
        let mut digits: Vec<u8> = (1..=9).collect();
        digits.shuffle(rng);
        for v in digits {
            let conflict = (0..GRID).any(|k| {
                grid[i][k] == v || grid[k][j] == v || {
                    let (bi, bj) = ((i / 3) * 3 + k / 3, (j / 3) * 3 + k % 3);
                    grid[bi][bj] == v
                }
            });
            if conflict {
                continue;
            }
            grid[i][j] = v;
            if fill(grid, cell + 1, rng) {
                return true;
            }
            grid[i][j] = 0;
        }
        false
    }
    let mut grid = [[0u8; GRID]; GRID];
    assert!(fill(&mut grid, 0, rng), "empty grid is always completable");
    grid
}

/// Random puzzle with exactly 40 blanks and a unique completion.
pub fn generate_sudoku<R: Rng + ?Sized>(rng: &mut R) -> SudokuPuzzle {
    const MAX_RESTARTS: usize = 100;
    for _ in 0..MAX_RESTARTS {
        let solution = full_grid(rng);
        let mut grid = solution;
        let mut removed = BTreeSet::new();
        let mut order: Vec<(usize, usize)> = (0..GRID)
            .flat_map(|i| (0..GRID).map(move |j| (i, j)))
            .collect();
        order.shuffle(rng);
        for (i, j) in order {
            if removed.len() == BLANKS {
                break;
            }
            let kept = grid[i][j];
            grid[i][j] = 0;
            if count_solutions(&grid, 2) == 1 {
                removed.insert((i, j));
            } else {
                grid[i][j] = kept;
            }
        }
        if removed.len() == BLANKS {
            return SudokuPuzzle { grid, removed_positions: removed, solution };
        }
    }
    unreachable!("sudoku removal search failed {MAX_RESTARTS} times in a row")
}

/// Parse a 9×9 space-separated digit matrix, taken from the last code block
/// when the text carries one, else from the whole text.
pub fn parse_sudoku(raw_text: &str) -> Candidate {
    let body = extract_solution_block(raw_text).unwrap_or_else(|_| raw_text.to_string());
    let rows: Vec<&str> = body.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if rows.len() != GRID {
        return Candidate::syntax_failure(raw_text);
    }
    let mut grid = [[0u8; GRID]; GRID];
    for (i, row) in rows.iter().enumerate() {
        let tokens: Vec<&str> = row.split_whitespace().collect();
        if tokens.len() != GRID {
            return Candidate::syntax_failure(raw_text);
        }
        for (j, token) in tokens.iter().enumerate() {
            match token.parse::<u8>() {
                Ok(v) if (1..=9).contains(&v) => grid[i][j] = v,
                _ => return Candidate::syntax_failure(raw_text),
            }
        }
    }
    Candidate {
        raw_text: raw_text.to_string(),
        parsed: ParsedSolution::Sudoku(SudokuSolution { grid }),
    }
}

pub struct SudokuProblem {
    puzzle: SudokuPuzzle,
}

impl SudokuProblem {
    pub fn new(puzzle: SudokuPuzzle) -> Self {
        SudokuProblem { puzzle }
    }

    pub fn puzzle(&self) -> &SudokuPuzzle {
        &self.puzzle
    }

    fn base_bindings(&self) -> Bindings {
        let mut bindings = Bindings::new();
        bindings.insert("puzzle".into(), self.puzzle.puzzle_text());
        bindings.insert("subgrid_size".into(), "3".into());
        bindings.insert("puzzle_grid_size".into(), "9".into());
        bindings
    }
}

impl ProblemPlugin for SudokuProblem {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Sk
    }

    fn parse(&self, raw_text: &str) -> Candidate {
        parse_sudoku(raw_text)
    }

    fn oracle_fitness(&self, candidate: &Candidate) -> FitnessScore {
        match &candidate.parsed {
            ParsedSolution::Sudoku(sol) => FitnessScore::new(sudoku_penalized_score(sol)),
            _ => FitnessScore::ZERO,
        }
    }

    fn detect_errors(&self, candidate: &Candidate, max_errors: usize) -> ErrorReport {
        sudoku_detect_errors(candidate, &self.puzzle, max_errors)
    }

    fn is_correct(&self, candidate: &Candidate) -> bool {
        match &candidate.parsed {
            ParsedSolution::Sudoku(sol) => sudoku_correct(sol, &self.puzzle),
            _ => false,
        }
    }

    fn external_crossover(
        &self,
        first: &Candidate,
        second: &Candidate,
        _rng: &mut dyn rand::RngCore,
    ) -> Candidate {
        sudoku_eco(first, second, &self.puzzle)
    }

    fn external_mutation(&self, candidate: &Candidate, rng: &mut dyn rand::RngCore) -> Candidate {
        sudoku_emo(candidate, &self.puzzle, rng)
    }

    fn build_prompt(&self, request: &PromptRequest<'_>) -> Result<RenderedPrompt, TemplateError> {
        let mut bindings = self.base_bindings();
        let template = match request {
            PromptRequest::Direct => TemplateId::SudokuDp,
            PromptRequest::DetectErrors { candidate } => {
                bindings.insert("candidate".into(), super::embed_candidate(candidate));
                TemplateId::SudokuEd
            }
            PromptRequest::Fitness { candidate } => {
                bindings.insert("candidate".into(), super::embed_candidate(candidate));
                bindings.insert("delta".into(), "0".into());
                TemplateId::SudokuFe
            }
            PromptRequest::Crossover {
                first,
                second,
                first_score,
                second_score,
                first_errors,
                second_errors,
            } => {
                bindings.insert("c1".into(), super::embed_candidate(first));
                bindings.insert("c2".into(), super::embed_candidate(second));
                bindings.insert("s1".into(), super::format_score(*first_score));
                bindings.insert("s2".into(), super::format_score(*second_score));
                bindings.insert("c1_error".into(), first_errors.render_for_prompt());
                bindings.insert("c2_error".into(), second_errors.render_for_prompt());
                TemplateId::SudokuLco
            }
            PromptRequest::Mutation { candidate, score, errors } => {
                bindings.insert("candidate".into(), super::embed_candidate(candidate));
                bindings.insert("score".into(), super::format_score(*score));
                bindings.insert("error".into(), errors.render_for_prompt());
                TemplateId::SudokuLmo
            }
        };
        render_prompt(template, &bindings)
    }

    fn metrics(&self, candidate: &Candidate) -> ProblemMetrics {
        match &candidate.parsed {
            ParsedSolution::Sudoku(sol) => ProblemMetrics::Sudoku {
                score: sudoku_score(sol),
                penalized_score: sudoku_penalized_score(sol),
            },
            _ => ProblemMetrics::Sudoku { score: 0.0, penalized_score: 0.0 },
        }
    }
}
