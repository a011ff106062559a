use std::collections::HashMap;

use super::bits::DocSet;
use super::TrainingSet;
use crate::concept_graph::{ConceptGraph, ConceptId, GraphError};
use crate::query::{eval_concept, eval_query, QueryTree, SensitivityConfig};

/// Harmonic mean of precision `tp/retrieved` and recall `tp/relevant`.
/// Zero when nothing is retrieved, nothing is relevant, or `P + R = 0`.
pub fn f_score(true_positives: usize, retrieved: usize, relevant: usize) -> f64 {
    if retrieved == 0 || relevant == 0 {
        return 0.0;
    }
    let p = true_positives as f64 / retrieved as f64;
    let r = true_positives as f64 / relevant as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// F-score of `query` on the training set, evaluating every document afresh.
pub fn fitness(
    query: &QueryTree,
    training: &TrainingSet,
    graph: &ConceptGraph,
    cfg: &SensitivityConfig,
) -> Result<f64, GraphError> {
    let (mut tp, mut retrieved, mut relevant) = (0, 0, 0);
    for (profile, rel) in training.items() {
        let hit = eval_query(graph, query, profile, cfg)?;
        retrieved += hit as usize;
        relevant += *rel as usize;
        tp += (hit && *rel) as usize;
    }
    Ok(f_score(tp, retrieved, relevant))
}

/// Concept-evaluator results precomputed for a fixed terminal set, one
/// bitset per terminal over the training documents. Scoring a tree then
/// costs a handful of word operations per node.
#[derive(Debug, Clone)]
pub struct FitnessScorer {
    rows: HashMap<ConceptId, DocSet>,
    relevant: DocSet,
    relevant_count: usize,
    len: usize,
}

impl FitnessScorer {
    pub fn new(
        graph: &ConceptGraph,
        training: &TrainingSet,
        terminals: &[ConceptId],
        cfg: &SensitivityConfig,
    ) -> Result<Self, GraphError> {
        let len = training.len();
        let mut relevant = DocSet::empty(len);
        for (i, (_, rel)) in training.items().iter().enumerate() {
            if *rel {
                relevant.set(i);
            }
        }
        let mut rows = HashMap::with_capacity(terminals.len());
        for &v in terminals {
            let mut row = DocSet::empty(len);
            for (i, (profile, _)) in training.items().iter().enumerate() {
                if eval_concept(graph, v, profile, cfg)? {
                    row.set(i);
                }
            }
            rows.insert(v, row);
        }
        Ok(Self {
            relevant_count: relevant.count(),
            relevant,
            rows,
            len,
        })
    }

    fn matches(&self, query: &QueryTree) -> Result<DocSet, GraphError> {
        query.fold(
            |v| self.rows.get(&v).cloned().ok_or(GraphError::UnknownId(v)),
            DocSet::not,
            DocSet::and,
            DocSet::or,
        )
    }

    /// `(true positives, retrieved, relevant)` for `query`.
    pub fn counts(&self, query: &QueryTree) -> Result<(usize, usize, usize), GraphError> {
        let hits = self.matches(query)?;
        Ok((hits.and_count(&self.relevant), hits.count(), self.relevant_count))
    }

    /// Fails only for terminals outside the scorer's terminal set.
    pub fn fitness(&self, query: &QueryTree) -> Result<f64, GraphError> {
        let (tp, retrieved, relevant) = self.counts(query)?;
        Ok(f_score(tp, retrieved, relevant))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}
