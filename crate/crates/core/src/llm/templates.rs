use std::collections::BTreeMap;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// The fifteen prompt templates: five roles times three problems. Bodies are
/// shipped as plain-text assets and substituted with named placeholders only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    SudokuDp,
    SudokuEd,
    SudokuFe,
    SudokuLco,
    SudokuLmo,
    GcDp,
    GcEd,
    GcFe,
    GcLco,
    GcLmo,
    TspDp,
    TspEd,
    TspFe,
    TspLco,
    TspLmo,
}

impl TemplateId {
    pub const ALL: [TemplateId; 15] = [
        TemplateId::SudokuDp,
        TemplateId::SudokuEd,
        TemplateId::SudokuFe,
        TemplateId::SudokuLco,
        TemplateId::SudokuLmo,
        TemplateId::GcDp,
        TemplateId::GcEd,
        TemplateId::GcFe,
        TemplateId::GcLco,
        TemplateId::GcLmo,
        TemplateId::TspDp,
        TemplateId::TspEd,
        TemplateId::TspFe,
        TemplateId::TspLco,
        TemplateId::TspLmo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::SudokuDp => "sudoku_dp",
            TemplateId::SudokuEd => "sudoku_ed",
            TemplateId::SudokuFe => "sudoku_fe",
            TemplateId::SudokuLco => "sudoku_lco",
            TemplateId::SudokuLmo => "sudoku_lmo",
            TemplateId::GcDp => "gc_dp",
            TemplateId::GcEd => "gc_ed",
            TemplateId::GcFe => "gc_fe",
            TemplateId::GcLco => "gc_lco",
            TemplateId::GcLmo => "gc_lmo",
            TemplateId::TspDp => "tsp_dp",
            TemplateId::TspEd => "tsp_ed",
            TemplateId::TspFe => "tsp_fe",
            TemplateId::TspLco => "tsp_lco",
            TemplateId::TspLmo => "tsp_lmo",
        }
    }

    pub fn body(self) -> &'static str {
        match self {
            TemplateId::SudokuDp => include_str!("../../assets/templates/sudoku_dp.txt"),
            TemplateId::SudokuEd => include_str!("../../assets/templates/sudoku_ed.txt"),
            TemplateId::SudokuFe => include_str!("../../assets/templates/sudoku_fe.txt"),
            TemplateId::SudokuLco => include_str!("../../assets/templates/sudoku_lco.txt"),
            TemplateId::SudokuLmo => include_str!("../../assets/templates/sudoku_lmo.txt"),
            TemplateId::GcDp => include_str!("../../assets/templates/gc_dp.txt"),
            TemplateId::GcEd => include_str!("../../assets/templates/gc_ed.txt"),
            TemplateId::GcFe => include_str!("../../assets/templates/gc_fe.txt"),
            TemplateId::GcLco => include_str!("../../assets/templates/gc_lco.txt"),
            TemplateId::GcLmo => include_str!("../../assets/templates/gc_lmo.txt"),
            TemplateId::TspDp => include_str!("../../assets/templates/tsp_dp.txt"),
            TemplateId::TspEd => include_str!("../../assets/templates/tsp_ed.txt"),
            TemplateId::TspFe => include_str!("../../assets/templates/tsp_fe.txt"),
            TemplateId::TspLco => include_str!("../../assets/templates/tsp_lco.txt"),
            TemplateId::TspLmo => include_str!("../../assets/templates/tsp_lmo.txt"),
        }
    }
}

pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Error, PartialEq)]
pub enum TemplateError {
    #[error("template {template}: placeholder {{{placeholder}}} has no binding")]
    UnboundPlaceholder { template: &'static str, placeholder: String },
}

/// A rendered prompt plus the stable fingerprint of (template id, bindings)
/// used to key scripted and replay fixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub template: TemplateId,
    pub text: String,
    pub fingerprint: String,
}

fn template_regex() -> &'static regex::Regex {
    static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"\{([A-Za-z_][A-Za-z0-9_ -]*)\}").unwrap())
}

/// Pure placeholder substitution, single pass, byte-stable. Fails on any
/// placeholder without a binding; substituted values are never re-scanned.
pub fn render(template: TemplateId, bindings: &Bindings) -> Result<String, TemplateError> {
    let body = template.body();
    let re = template_regex();
    for caps in re.captures_iter(body) {
        let name = &caps[1];
        if !bindings.contains_key(name) {
            return Err(TemplateError::UnboundPlaceholder {
                template: template.name(),
                placeholder: name.to_string(),
            });
        }
    }
    let rendered = re.replace_all(body, |caps: &regex::Captures<'_>| {
        bindings[&caps[1]].clone()
    });
    Ok(rendered.into_owned())
}

/// Stable fixture key: sha256 over the template id and the sorted bindings,
/// so cosmetic template-whitespace edits do not invalidate fixtures keyed on
/// the same inputs.
pub fn fingerprint(template: TemplateId, bindings: &Bindings) -> String {
    let mut hasher = Sha256::new();
    hasher.update(template.name().as_bytes());
    for (key, value) in bindings {
        hasher.update([0u8]);
        hasher.update(key.as_bytes());
        hasher.update([1u8]);
        hasher.update(value.as_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn render_prompt(template: TemplateId, bindings: &Bindings) -> Result<RenderedPrompt, TemplateError> {
    let text = render(template, bindings)?;
    let fingerprint = fingerprint(template, bindings);
    Ok(RenderedPrompt { template, text, fingerprint })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, &str)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn sudoku_dp_embeds_puzzle_verbatim() {
        let puzzle = ". 3 5 6 7 8 9 1 2\n6 7 2 1 9 5 3 4 8";
        let bindings = bind(&[
            ("puzzle", puzzle),
            ("subgrid_size", "3"),
            ("puzzle_grid_size", "9"),
        ]);
        let text = render(TemplateId::SudokuDp, &bindings).unwrap();
        assert!(text.contains(puzzle));
        assert!(text.contains("3x3 square exactly contain 9 number"));
    }

    #[test]
    fn missing_binding_fails_loudly() {
        let err = render(TemplateId::SudokuDp, &bind(&[("puzzle", "x")])).unwrap_err();
        assert!(matches!(err, TemplateError::UnboundPlaceholder { .. }));
    }

    #[test]
    fn fingerprint_is_stable_and_binding_sensitive() {
        let a = bind(&[("puzzle", "x"), ("subgrid_size", "3"), ("puzzle_grid_size", "9")]);
        let b = bind(&[("puzzle", "y"), ("subgrid_size", "3"), ("puzzle_grid_size", "9")]);
        assert_eq!(fingerprint(TemplateId::SudokuDp, &a), fingerprint(TemplateId::SudokuDp, &a));
        assert_ne!(fingerprint(TemplateId::SudokuDp, &a), fingerprint(TemplateId::SudokuDp, &b));
        assert_ne!(fingerprint(TemplateId::SudokuDp, &a), fingerprint(TemplateId::SudokuLmo, &a));
    }

    #[test]
    fn every_template_loads_nonempty() {
        for id in TemplateId::ALL {
            assert!(!id.body().is_empty(), "{} is empty", id.name());
        }
    }
}
