use log::warn;
use thiserror::Error;

use crate::candidate::{CellError, ConstraintKind, ErrorReport, SemanticErrors};
use crate::problem::ProblemKind;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("response contains no triple-backtick code block")]
    NoCodeBlock,
    #[error("response contains no numeric token")]
    NoNumber,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeBlock {
    pub language: Option<String>,
    pub content: String,
}

/// All triple-backtick fenced blocks, in order of appearance. The fence line
/// may carry a language indicator; it is not part of the content.
pub fn code_blocks(text: &str) -> Vec<CodeBlock> {
    let mut blocks = Vec::new();
    let mut current: Option<(Option<String>, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("```") {
            match current.take() {
                Some((language, lines)) => blocks.push(CodeBlock {
                    language,
                    content: lines.join("\n"),
                }),
                None => {
                    let tag = rest.trim();
                    let language = if tag.is_empty() { None } else { Some(tag.to_string()) };
                    current = Some((language, Vec::new()));
                }
            }
        } else if let Some((_, lines)) = current.as_mut() {
            lines.push(line);
        }
    }
    // An unterminated final block still counts; models often stop mid-fence.
    if let Some((language, lines)) = current {
        if !lines.is_empty() {
            blocks.push(CodeBlock {
                language,
                content: lines.join("\n"),
            });
        }
    }
    blocks
}

/// Content of the LAST code block: templates instruct the model to finish
/// with the solution block, so intermediate reasoning blocks are skipped.
pub fn extract_solution_block(text: &str) -> Result<String, ParseError> {
    code_blocks(text)
        .into_iter()
        .last()
        .map(|b| b.content)
        .ok_or(ParseError::NoCodeBlock)
}

fn number_regex() -> &'static regex::Regex {
    static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"-?\d+(?:\.\d+)?").unwrap())
}

/// The last real-number token in the text, clamped to [0, 100].
pub fn parse_llm_fitness(text: &str) -> Result<f64, ParseError> {
    let value = number_regex()
        .find_iter(text)
        .last()
        .and_then(|m| m.as_str().parse::<f64>().ok())
        .ok_or(ParseError::NoNumber)?;
    Ok(value.clamp(0.0, 100.0))
}

/// Parse an LLM error-detector response into a structured report. Malformed
/// output degrades to an empty report with a logged warning; the detector is
/// allowed to hallucinate, the engine is not allowed to abort on it.
pub fn parse_llm_errors(text: &str, problem: ProblemKind) -> ErrorReport {
    let blocks = code_blocks(text);
    if blocks.is_empty() {
        warn!("error-detector response without code block; treating as no errors");
        return ErrorReport::clean();
    }
    match problem {
        ProblemKind::Sk => parse_sudoku_errors(&blocks),
        ProblemKind::Gc => parse_gc_errors(&blocks),
        ProblemKind::Tsp => parse_tsp_errors(&blocks),
    }
}

fn parse_sudoku_errors(blocks: &[CodeBlock]) -> ErrorReport {
    // Untagged format: only the last block is the verdict.
    let content = blocks.last().map(|b| b.content.trim()).unwrap_or("");
    if content.eq_ignore_ascii_case("syntax is wrong") {
        return ErrorReport::syntax_failure();
    }
    if content.eq_ignore_ascii_case("no errors") || content.is_empty() {
        return ErrorReport::clean();
    }
    let mut entries = Vec::new();
    for line in content.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match parts.as_slice() {
            [i, j, t] => match (i.parse::<usize>(), j.parse::<usize>(), ConstraintKind::from_label(t)) {
                (Ok(row), Ok(col), Some(constraint)) if row < 9 && col < 9 => {
                    Some(CellError { row, col, constraint })
                }
                _ => None,
            },
            _ => None,
        };
        match parsed {
            Some(entry) => entries.push(entry),
            None => {
                warn!("unparseable sudoku error line {line:?}; dropping report");
                return ErrorReport::clean();
            }
        }
    }
    ErrorReport::semantic(SemanticErrors::Sudoku(entries))
}

fn tagged<'a>(blocks: &'a [CodeBlock], tag: &str) -> Option<&'a CodeBlock> {
    blocks
        .iter()
        .rev()
        .find(|b| b.language.as_deref() == Some(tag))
}

fn parse_gc_errors(blocks: &[CodeBlock]) -> ErrorReport {
    if tagged(blocks, "t1").is_some()
        || blocks.last().is_some_and(|b| b.content.trim().eq_ignore_ascii_case("syntax is wrong"))
    {
        return ErrorReport::syntax_failure();
    }
    if tagged(blocks, "t3").is_some()
        || blocks.last().is_some_and(|b| b.content.trim().eq_ignore_ascii_case("no errors"))
    {
        return ErrorReport::clean();
    }
    let mut conflict_edges = Vec::new();
    if let Some(block) = tagged(blocks, "t2.1") {
        for line in block.content.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let parts: Vec<Option<usize>> = line.split(',').map(|p| p.trim().parse().ok()).collect();
            match parts.as_slice() {
                // "i,j,color": the color column is advisory, keep the edge.
                [Some(u), Some(v), _] | [Some(u), Some(v)] => conflict_edges.push((*u, *v)),
                _ => {
                    warn!("unparseable gc conflict line {line:?}; dropping report");
                    return ErrorReport::clean();
                }
            }
        }
    }
    let excess_colors = match tagged(blocks, "t2.2") {
        Some(block) => match block.content.trim().parse::<i64>() {
            Ok(n) => n,
            Err(_) => {
                warn!("unparseable gc excess-colors block; dropping report");
                return ErrorReport::clean();
            }
        },
        None => 0,
    };
    if conflict_edges.is_empty() && excess_colors == 0 && tagged(blocks, "t2.1").is_none() && tagged(blocks, "t2.2").is_none() {
        warn!("gc error-detector response with no recognized blocks; treating as no errors");
        return ErrorReport::clean();
    }
    ErrorReport::semantic(SemanticErrors::Coloring { conflict_edges, excess_colors })
}

fn parse_tsp_errors(blocks: &[CodeBlock]) -> ErrorReport {
    if tagged(blocks, "t1").is_some()
        || blocks.last().is_some_and(|b| b.content.trim().eq_ignore_ascii_case("syntax is wrong"))
    {
        return ErrorReport::syntax_failure();
    }
    if tagged(blocks, "t3").is_some()
        || blocks.last().is_some_and(|b| b.content.trim().eq_ignore_ascii_case("no errors"))
    {
        return ErrorReport::clean();
    }
    let mut missing_cities = Vec::new();
    if let Some(block) = tagged(blocks, "t2.1") {
        for token in block.content.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match token.parse::<usize>() {
                Ok(city) => missing_cities.push(city),
                Err(_) => {
                    warn!("unparseable tsp missing-city token {token:?}; dropping report");
                    return ErrorReport::clean();
                }
            }
        }
    }
    let excess_distance = match tagged(blocks, "t2.2") {
        Some(block) => match block.content.trim().parse::<f64>() {
            Ok(d) => d,
            Err(_) => {
                warn!("unparseable tsp excess-distance block; dropping report");
                return ErrorReport::clean();
            }
        },
        None => 0.0,
    };
    if tagged(blocks, "t2.1").is_none() && tagged(blocks, "t2.2").is_none() {
        warn!("tsp error-detector response with no recognized blocks; treating as no errors");
        return ErrorReport::clean();
    }
    ErrorReport::semantic(SemanticErrors::Route { missing_cities, excess_distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extraction_takes_the_last_block() {
        let text = "first try\n```\n1 2 3\n```\nbetter:\n```\n4 5 6\n```\n";
        assert_eq!(extract_solution_block(text).unwrap(), "4 5 6");
    }

    #[test]
    fn extraction_strips_language_indicator() {
        let text = "```text\n0,1,2\n```";
        assert_eq!(extract_solution_block(text).unwrap(), "0,1,2");
    }

    #[test]
    fn extraction_without_block_errors() {
        assert_eq!(extract_solution_block("no fences here"), Err(ParseError::NoCodeBlock));
    }

    #[test]
    fn fitness_takes_last_number_and_clamps() {
        assert_eq!(parse_llm_fitness("the score is 87.5").unwrap(), 87.5);
        assert_eq!(parse_llm_fitness("100.0").unwrap(), 100.0);
        assert_eq!(parse_llm_fitness("between 40 and 60. Final: 55").unwrap(), 55.0);
        assert_eq!(parse_llm_fitness("score: 120").unwrap(), 100.0);
        assert_eq!(parse_llm_fitness("score: -5").unwrap(), 0.0);
        assert_eq!(parse_llm_fitness("nothing numeric"), Err(ParseError::NoNumber));
    }

    #[test]
    fn sudoku_error_lines_parse() {
        let report = parse_llm_errors("```\n0,0,row\n1,0,subgrid\n```", ProblemKind::Sk);
        assert_eq!(
            report.semantic,
            SemanticErrors::Sudoku(vec![
                CellError { row: 0, col: 0, constraint: ConstraintKind::Row },
                CellError { row: 1, col: 0, constraint: ConstraintKind::Subgrid },
            ])
        );
    }

    #[test]
    fn no_errors_block_is_clean() {
        assert!(parse_llm_errors("```\nNo errors\n```", ProblemKind::Sk).is_clean());
        assert!(parse_llm_errors("```t3\nNo errors\n```", ProblemKind::Gc).is_clean());
    }

    #[test]
    fn gc_tagged_blocks_parse() {
        let report = parse_llm_errors("```t2.2\n1\n```", ProblemKind::Gc);
        assert_eq!(
            report.semantic,
            SemanticErrors::Coloring { conflict_edges: vec![], excess_colors: 1 }
        );
        let report = parse_llm_errors("```t2.1\n0,1,2\n1,2,0\n```", ProblemKind::Gc);
        assert_eq!(
            report.semantic,
            SemanticErrors::Coloring { conflict_edges: vec![(0, 1), (1, 2)], excess_colors: 0 }
        );
    }

    #[test]
    fn tsp_tagged_blocks_parse() {
        let report = parse_llm_errors("```t2.1\n3,7\n```\n```t2.2\n10.5\n```", ProblemKind::Tsp);
        assert_eq!(
            report.semantic,
            SemanticErrors::Route { missing_cities: vec![3, 7], excess_distance: 10.5 }
        );
    }

    #[test]
    fn syntax_verdicts_parse() {
        assert!(parse_llm_errors("```\nSyntax is wrong\n```", ProblemKind::Sk).syntax_error);
        assert!(parse_llm_errors("```t1\nSyntax is wrong\n```", ProblemKind::Tsp).syntax_error);
    }

    #[test]
    fn hallucinated_output_degrades_to_empty_report() {
        assert!(parse_llm_errors("```\ncompletely bogus line\n```", ProblemKind::Sk).is_clean());
        assert!(parse_llm_errors("no blocks at all", ProblemKind::Gc).is_clean());
    }
}
