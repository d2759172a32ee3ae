use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::candidate::{Candidate, ErrorReport, FitnessScore, ParsedSolution, SemanticErrors};
use crate::llm::parse::extract_solution_block;
use crate::llm::templates::{render_prompt, Bindings, RenderedPrompt, TemplateError, TemplateId};
use crate::problem::{ProblemKind, ProblemMetrics, ProblemPlugin, PromptRequest};

pub const CITIES: usize = 10;
/// EDM saturation ceiling.
pub const EDM_CAP: f64 = 3.0;
/// Distance-equality tolerance for correctness: Euclidean sums are not
/// reproducible to the last bit across summation orders.
pub const DISTANCE_TOLERANCE: f64 = 1e-9;

/// Ten uniform points in [0,100]² with the exact optimal tour, found by
/// enumerating all (n−1)! Hamiltonian cycles anchored at city 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    pub n_cities: usize,
    pub coords: Vec<(f64, f64)>,
    pub distance_matrix: Vec<Vec<f64>>,
    pub optimal_route: Vec<usize>,
    pub optimal_distance: f64,
}

/// A city sequence as parsed from candidate text; well-formed routes have
/// n+1 entries with both endpoints 0, but shorter or repetitive routes are
/// still syntactically valid (the error detector scores those defects).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub cities: Vec<usize>,
}

impl Route {
    pub fn format(&self) -> String {
        self.cities
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl TspInstance {
    /// Prompt rendering: 2-decimal fixed formatting, full precision retained
    /// in `distance_matrix` itself.
    pub fn distance_matrix_text(&self) -> String {
        self.distance_matrix
            .iter()
            .map(|row| {
                row.iter()
                    .map(|d| format!("{d:.2}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Sum of the legs of the explicit city sequence (positions 1..len−1).
pub fn route_distance(route: &Route, instance: &TspInstance) -> f64 {
    route
        .cities
        .windows(2)
        .map(|pair| instance.distance_matrix[pair[0]][pair[1]])
        .sum()
}

pub fn tsp_edm(route: &Route, instance: &TspInstance) -> f64 {
    let d = route_distance(route, instance);
    ((d - instance.optimal_distance) / instance.optimal_distance).min(EDM_CAP)
}

pub fn tsp_missing_cities(route: &Route, instance: &TspInstance) -> Vec<usize> {
    (0..instance.n_cities)
        .filter(|city| !route.cities.contains(city))
        .collect()
}

pub fn tsp_missing_cities_count(route: &Route, instance: &TspInstance) -> usize {
    tsp_missing_cities(route, instance).len()
}

pub fn tsp_penalized_score(route: &Route, instance: &TspInstance) -> f64 {
    let edm = tsp_edm(route, instance).max(0.0);
    let mc = tsp_missing_cities_count(route, instance) as f64;
    let n = instance.n_cities as f64;
    100.0 * (1.0 - edm / EDM_CAP).min(1.0 - mc / n)
}

pub fn tsp_correct(route: &Route, instance: &TspInstance) -> bool {
    let n = instance.n_cities;
    if route.cities.len() != n + 1 || route.cities[0] != 0 || route.cities[n] != 0 {
        return false;
    }
    let mut seen = vec![false; n];
    for &city in &route.cities[..n] {
        if seen[city] {
            return false;
        }
        seen[city] = true;
    }
    (route_distance(route, instance) - instance.optimal_distance).abs() <= DISTANCE_TOLERANCE
}

pub fn tsp_detect_errors(
    candidate: &Candidate,
    instance: &TspInstance,
    max_errors: usize,
) -> ErrorReport {
    let ParsedSolution::Route(route) = &candidate.parsed else {
        return ErrorReport::syntax_failure();
    };
    let mut excess = route_distance(route, instance) - instance.optimal_distance;
    if excess.abs() <= DISTANCE_TOLERANCE {
        excess = 0.0;
    }
    ErrorReport::semantic(SemanticErrors::Route {
        missing_cities: tsp_missing_cities(route, instance),
        excess_distance: excess.max(0.0),
    })
    .truncated(max_errors)
}

fn route_candidate(cities: Vec<usize>) -> Candidate {
    let route = Route { cities };
    Candidate {
        raw_text: route.format(),
        parsed: ParsedSolution::Route(route),
    }
}

fn semantically_perfect(route: &Route, instance: &TspInstance) -> bool {
    tsp_missing_cities_count(route, instance) == 0
        && (route_distance(route, instance) - instance.optimal_distance).abs()
            <= DISTANCE_TOLERANCE
}

/// ECO Ψ: a semantically perfect parent wins outright; otherwise one-point
/// splice at a uniform cut k ∈ [1, n−1] — positions ≤ k from the first
/// parent, the rest (through the closing endpoint) from the second.
pub fn tsp_eco<R: Rng + ?Sized>(
    c1: &Candidate,
    c2: &Candidate,
    instance: &TspInstance,
    rng: &mut R,
) -> Candidate {
    let (r1, r2) = match (&c1.parsed, &c2.parsed) {
        (ParsedSolution::Route(a), ParsedSolution::Route(b)) => (a, b),
        (ParsedSolution::Route(_), _) => return c1.clone(),
        (_, ParsedSolution::Route(_)) => return c2.clone(),
        _ => return c1.clone(),
    };
    if semantically_perfect(r1, instance) {
        return c1.clone();
    }
    if semantically_perfect(r2, instance) {
        return c2.clone();
    }
    let k = rng.random_range(1..instance.n_cities);
    let mut cities: Vec<usize> = r1.cities.iter().copied().take(k + 1).collect();
    cities.extend(r2.cities.iter().copied().skip(k + 1));
    route_candidate(cities)
}

/// EMO Ω: replace surplus city occurrences (later occurrences, scanning left
/// to right; the closing 0 endpoint is sanctioned) with missing cities in
/// ascending order, up to min(|surplus|, |missing|) substitutions.
pub fn tsp_emo(candidate: &Candidate, instance: &TspInstance) -> Candidate {
    let ParsedSolution::Route(route) = &candidate.parsed else {
        return candidate.clone();
    };
    let missing = tsp_missing_cities(route, instance);
    if missing.is_empty() {
        return candidate.clone();
    }
    let mut cities = route.cities.clone();
    let last = cities.len() - 1;
    let mut seen = vec![false; instance.n_cities];
    let mut surplus_positions = Vec::new();
    for (pos, &city) in cities.iter().enumerate() {
        let sanctioned_endpoint = pos == last && city == 0 && cities[0] == 0;
        if seen[city] && !sanctioned_endpoint {
            surplus_positions.push(pos);
        }
        seen[city] = true;
    }
    for (&pos, &city) in surplus_positions.iter().zip(missing.iter()) {
        cities[pos] = city;
    }
    route_candidate(cities)
}

/// Exhaustive optimum over permutations of cities 1..n−1, anchored at 0.
/// Partial-sum pruning discards provably worse prefixes; the search order is
/// still a complete enumeration.
pub fn optimal_tour(distance_matrix: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = distance_matrix.len();
    fn dfs(
        current: usize,
        partial: f64,
        remaining: &mut Vec<usize>,
        path: &mut Vec<usize>,
        best: &mut (Vec<usize>, f64),
        d: &[Vec<f64>],
    ) {
        if partial >= best.1 {
            return;
        }
        if remaining.is_empty() {
            let total = partial + d[current][0];
            if total < best.1 {
                let mut route = path.clone();
                route.push(0);
                *best = (route, total);
            }
            return;
        }
        for idx in 0..remaining.len() {
            let next = remaining.remove(idx);
            path.push(next);
            dfs(next, partial + d[current][next], remaining, path, best, d);
            path.pop();
            remaining.insert(idx, next);
        }
    }
    let mut remaining: Vec<usize> = (1..n).collect();
    let mut path = vec![0];
    let mut best = (Vec::new(), f64::INFINITY);
    dfs(0, 0.0, &mut remaining, &mut path, &mut best, distance_matrix);
    best
}

pub fn generate_tsp<R: Rng + ?Sized>(rng: &mut R) -> TspInstance {
    let coords: Vec<(f64, f64)> = (0..CITIES)
        .map(|_| (rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0))
        .collect();
    let distance_matrix: Vec<Vec<f64>> = coords
        .iter()
        .map(|&(x1, y1)| {
            coords
                .iter()
                .map(|&(x2, y2)| ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt())
                .collect()
        })
        .collect();
    let (optimal_route, optimal_distance) = optimal_tour(&distance_matrix);
    TspInstance {
        n_cities: CITIES,
        coords,
        distance_matrix,
        optimal_route,
        optimal_distance,
    }
}

/// Parse a comma-separated city list with in-range ids and both endpoints 0,
/// taken from the last code block when present.
pub fn parse_route(raw_text: &str, n_cities: usize) -> Candidate {
    let body = extract_solution_block(raw_text).unwrap_or_else(|_| raw_text.to_string());
    let body = body.trim();
    let tokens: Vec<&str> = body.split(',').map(str::trim).collect();
    if tokens.len() < 2 {
        return Candidate::syntax_failure(raw_text);
    }
    let mut cities = Vec::with_capacity(tokens.len());
    for token in tokens {
        match token.parse::<usize>() {
            Ok(city) if city < n_cities => cities.push(city),
            _ => return Candidate::syntax_failure(raw_text),
        }
    }
    if cities[0] != 0 || *cities.last().unwrap() != 0 {
        return Candidate::syntax_failure(raw_text);
    }
    Candidate {
        raw_text: raw_text.to_string(),
        parsed: ParsedSolution::Route(Route { cities }),
    }
}

pub struct TspProblem {
    instance: TspInstance,
}

impl TspProblem {
    pub fn new(instance: TspInstance) -> Self {
        TspProblem { instance }
    }

    pub fn instance(&self) -> &TspInstance {
        &self.instance
    }

    fn base_bindings(&self) -> Bindings {
        let mut bindings = Bindings::new();
        bindings.insert("distance_matrix".into(), self.instance.distance_matrix_text());
        bindings.insert("n_cities".into(), self.instance.n_cities.to_string());
        bindings.insert("n_cities - 1".into(), (self.instance.n_cities - 1).to_string());
        bindings
    }
}

impl ProblemPlugin for TspProblem {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Tsp
    }

    fn parse(&self, raw_text: &str) -> Candidate {
        parse_route(raw_text, self.instance.n_cities)
    }

    fn oracle_fitness(&self, candidate: &Candidate) -> FitnessScore {
        match &candidate.parsed {
            ParsedSolution::Route(route) => {
                FitnessScore::new(tsp_penalized_score(route, &self.instance))
            }
            _ => FitnessScore::ZERO,
        }
    }

    fn detect_errors(&self, candidate: &Candidate, max_errors: usize) -> ErrorReport {
        tsp_detect_errors(candidate, &self.instance, max_errors)
    }

    fn is_correct(&self, candidate: &Candidate) -> bool {
        match &candidate.parsed {
            ParsedSolution::Route(route) => tsp_correct(route, &self.instance),
            _ => false,
        }
    }

    fn external_crossover(
        &self,
        first: &Candidate,
        second: &Candidate,
        rng: &mut dyn rand::RngCore,
    ) -> Candidate {
        tsp_eco(first, second, &self.instance, rng)
    }

    fn external_mutation(&self, candidate: &Candidate, _rng: &mut dyn rand::RngCore) -> Candidate {
        tsp_emo(candidate, &self.instance)
    }

    fn build_prompt(&self, request: &PromptRequest<'_>) -> Result<RenderedPrompt, TemplateError> {
        let mut bindings = self.base_bindings();
        let template = match request {
            PromptRequest::Direct => TemplateId::TspDp,
            PromptRequest::DetectErrors { candidate } => {
                bindings.insert("candidate".into(), super::embed_candidate(candidate));
                TemplateId::TspEd
            }
            PromptRequest::Fitness { candidate } => {
                bindings.insert("candidate".into(), super::embed_candidate(candidate));
                bindings.insert("DEFAULT_EDM".into(), format!("{EDM_CAP:.1}"));
                TemplateId::TspFe
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
                TemplateId::TspLco
            }
            PromptRequest::Mutation { candidate, score, errors } => {
                bindings.insert("candidate".into(), super::embed_candidate(candidate));
                bindings.insert("score".into(), super::format_score(*score));
                bindings.insert("error".into(), errors.render_for_prompt());
                TemplateId::TspLmo
            }
        };
        render_prompt(template, &bindings)
    }

    fn metrics(&self, candidate: &Candidate) -> ProblemMetrics {
        match &candidate.parsed {
            ParsedSolution::Route(route) => ProblemMetrics::Route {
                penalized_score: tsp_penalized_score(route, &self.instance),
                excess_distance_multiplier: Some(tsp_edm(route, &self.instance).max(0.0)),
                missing_cities: Some(tsp_missing_cities_count(route, &self.instance)),
            },
            _ => ProblemMetrics::Route {
                penalized_score: 0.0,
                excess_distance_multiplier: None,
                missing_cities: None,
            },
        }
    }
}
