//! Solver selection: pick the solver with the smallest PAR10 penalty over
//! the query's k nearest training instances, breaking ties on the whole
//! training set.

use crate::features::FeatureVector;
use crate::knowledge_base::{KbError, KnowledgeBase};
use crate::metrics::Distance;

/// A neighbor as reported in a `SelectionResult`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborInfo {
    pub instance_id: String,
    pub distance: f64,
}

/// Full trace of one selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen_solver: String,
    /// The k nearest training instances, ascending by distance.
    pub neighborhood: Vec<NeighborInfo>,
    /// PAR10 penalty of every solver over the neighborhood, in knowledge
    /// base solver order.
    pub neighborhood_penalties: Vec<(String, f64)>,
    /// Solvers attaining the minimal neighborhood penalty.
    pub tied_on_neighborhood: Vec<String>,
    /// Whether the full-training-set tie break was needed (more than one
    /// solver tied on the neighborhood).
    pub global_tiebreak_used: bool,
    /// Solvers still tied after the full-training-set comparison; the
    /// chosen solver is the lexicographically smallest of these.
    pub final_candidates: Vec<String>,
}

/// Selects a solver for a query feature vector.
///
/// The neighborhood is the k nearest records; the winner minimizes the
/// PAR10 penalty over it. If several solvers tie, the penalty over the
/// whole training set decides; should that still tie, the smallest solver
/// id wins so that selection is deterministic.
pub fn select_solver(
    kb: &KnowledgeBase,
    query: &FeatureVector,
    k: usize,
    dist: &Distance,
) -> Result<SelectionResult, KbError> {
    select_excluding(kb, query, k, dist, None)
}

pub(crate) fn select_excluding(
    kb: &KnowledgeBase,
    query: &FeatureVector,
    k: usize,
    dist: &Distance,
    exclude: Option<usize>,
) -> Result<SelectionResult, KbError> {
    if kb.is_empty() {
        return Err(KbError::EmptyKnowledgeBase);
    }
    let neighbors = kb.nearest_excluding(query, k, dist, exclude)?;
    let neighbor_indices: Vec<usize> = neighbors.iter().map(|n| n.index).collect();

    let penalties: Vec<f64> = (0..kb.solvers().len())
        .map(|s| kb.penalty_over_idx(s, neighbor_indices.iter().copied()))
        .collect();
    let min_penalty = penalties.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..kb.solvers().len())
        .filter(|&s| penalties[s] == min_penalty)
        .collect();

    let (global_tiebreak_used, finalists) = if tied.len() > 1 {
        let full: Vec<f64> = tied.iter().map(|&s| kb.full_penalty_idx(s)).collect();
        let min_full = full.iter().copied().fold(f64::INFINITY, f64::min);
        let finalists: Vec<usize> = tied
            .iter()
            .zip(full.iter())
            .filter(|(_, &p)| p == min_full)
            .map(|(&s, _)| s)
            .collect();
        (true, finalists)
    } else {
        (false, tied.clone())
    };

    // Solver order equals id order only by accident; pick the smallest id.
    let chosen = finalists
        .iter()
        .map(|&s| kb.solvers()[s].as_str())
        .min()
        .expect("at least one solver attains the minimum")
        .to_string();

    Ok(SelectionResult {
        chosen_solver: chosen,
        neighborhood: neighbors
            .iter()
            .map(|n| NeighborInfo {
                instance_id: kb.records()[n.index].instance_id().to_string(),
                distance: n.distance,
            })
            .collect(),
        neighborhood_penalties: kb
            .solvers()
            .iter()
            .cloned()
            .zip(penalties.iter().copied())
            .collect(),
        tied_on_neighborhood: tied.iter().map(|&s| kb.solvers()[s].clone()).collect(),
        global_tiebreak_used,
        final_candidates: finalists.iter().map(|&s| kb.solvers()[s].clone()).collect(),
    })
}

/// All solvers ordered by neighborhood penalty, with full-training-set
/// penalty and then solver id as tie breakers. The first entry is the
/// solver `select_solver` would choose; the rest form the fallback order.
pub fn rank_solvers(
    kb: &KnowledgeBase,
    query: &FeatureVector,
    k: usize,
    dist: &Distance,
) -> Result<Vec<(String, f64)>, KbError> {
    if kb.is_empty() {
        return Err(KbError::EmptyKnowledgeBase);
    }
    let neighbors = kb.nearest_excluding(query, k, dist, None)?;
    let neighbor_indices: Vec<usize> = neighbors.iter().map(|n| n.index).collect();
    let mut ranked: Vec<(usize, f64, f64)> = (0..kb.solvers().len())
        .map(|s| {
            (
                s,
                kb.penalty_over_idx(s, neighbor_indices.iter().copied()),
                kb.full_penalty_idx(s),
            )
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(a.2.total_cmp(&b.2))
            .then_with(|| kb.solvers()[a.0].cmp(&kb.solvers()[b.0]))
    });
    Ok(ranked
        .into_iter()
        .map(|(s, neighborhood_penalty, _)| (kb.solvers()[s].clone(), neighborhood_penalty))
        .collect())
}
