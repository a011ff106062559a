//! Concept queries, the concept evaluator, and weighted-vote rules.

mod rule;
mod tree;

pub use rule::{RuleError, WeightedQuery, WikiEsRule};
pub use tree::{Node, ParseError, ParseErrorKind, QueryTree, TreeError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::DocumentProfile;
use crate::concept_graph::{ConceptGraph, ConceptId, GraphError};

/// How a query terminal is matched against a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Matcher {
    /// Presence, or relatedness above the concept's threshold.
    #[serde(rename = "wiki")]
    WikiRelatedness,
    /// Presence only (the bag-of-words baseline).
    #[serde(rename = "exact")]
    ExactToken,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid sensitivity: {0}")]
pub struct SensitivityError(String);

/// Relatedness thresholds: `c1` for named entities, `c2` for general concepts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSensitivity")]
pub struct SensitivityConfig {
    pub matcher: Matcher,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensitivity {
    matcher: Matcher,
    c1: f64,
    c2: f64,
}

impl TryFrom<RawSensitivity> for SensitivityConfig {
    type Error = SensitivityError;

    fn try_from(raw: RawSensitivity) -> Result<Self, Self::Error> {
        Self::new(raw.matcher, raw.c1, raw.c2)
    }
}

impl SensitivityConfig {
    pub const DEFAULT_C1: f64 = 0.95;
    pub const DEFAULT_C2: f64 = 0.5;

    pub fn new(matcher: Matcher, c1: f64, c2: f64) -> Result<Self, SensitivityError> {
        for (name, c) in [("c1", c1), ("c2", c2)] {
            if !(c > 0.0 && c <= 1.0) {
                return Err(SensitivityError(format!("{name} = {c} is outside (0, 1]")));
            }
        }
        Ok(Self { matcher, c1, c2 })
    }

    pub fn exact() -> Self {
        Self {
            matcher: Matcher::ExactToken,
            ..Self::default()
        }
    }

    /// Threshold applied to a concept of the given kind.
    pub fn threshold(&self, named_entity: bool) -> f64 {
        if named_entity {
            self.c1
        } else {
            self.c2
        }
    }
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            matcher: Matcher::WikiRelatedness,
            c1: Self::DEFAULT_C1,
            c2: Self::DEFAULT_C2,
        }
    }
}

/// The concept evaluator: is concept `v` present in the document, either
/// literally or (in relatedness mode) through a related concept whose
/// document relatedness strictly exceeds `v`'s threshold?
pub fn eval_concept(
    graph: &ConceptGraph,
    v: ConceptId,
    profile: &DocumentProfile,
    cfg: &SensitivityConfig,
) -> Result<bool, GraphError> {
    let named_entity = graph.is_named_entity(v)?;
    if profile.contains(v) {
        return Ok(true);
    }
    match cfg.matcher {
        Matcher::ExactToken => Ok(false),
        Matcher::WikiRelatedness => Ok(graph.d_rel(v, profile)? > cfg.threshold(named_entity)),
    }
}

pub fn eval_query(
    graph: &ConceptGraph,
    query: &QueryTree,
    profile: &DocumentProfile,
    cfg: &SensitivityConfig,
) -> Result<bool, GraphError> {
    query.eval(|v| eval_concept(graph, v, profile, cfg))
}
