use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tree::{ParseError, QueryTree};
use super::{eval_query, Matcher, SensitivityConfig, SensitivityError};
use crate::annotator::DocumentProfile;
use crate::concept_graph::{ConceptGraph, ConceptId, GraphError};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("a rule needs at least one query")]
    Empty,
    #[error("query {index}: fitness {fitness} is outside [0, 1]")]
    FitnessOutOfRange { index: usize, fitness: f64 },
    #[error("rule file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("query {index}: {source}")]
    Expression {
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error("vocabulary has {vocabulary} entries but the terminal set has {terminals}")]
    VocabularyMismatch { vocabulary: usize, terminals: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuery {
    pub query: QueryTree,
    pub fitness: f64,
}

/// A weighted vote over queries: a document is relevant when the
/// fitness-weighted share of queries matching it is strictly above 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct WikiEsRule {
    queries: Vec<WeightedQuery>,
    sensitivity: SensitivityConfig,
    terminal_set: Vec<ConceptId>,
    vocabulary: Vec<String>,
}

/// Rounds to 12 significant digits, the precision of the rule file.
fn quantize(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

impl WikiEsRule {
    /// Fitness values are rounded to 12 significant digits so that a rule
    /// written to disk and read back is identical to the one in memory.
    pub fn new(
        queries: Vec<WeightedQuery>,
        sensitivity: SensitivityConfig,
        terminal_set: Vec<ConceptId>,
    ) -> Result<Self, RuleError> {
        if queries.is_empty() {
            return Err(RuleError::Empty);
        }
        let mut queries = queries;
        for (index, q) in queries.iter_mut().enumerate() {
            if !(0.0..=1.0).contains(&q.fitness) {
                return Err(RuleError::FitnessOutOfRange {
                    index,
                    fitness: q.fitness,
                });
            }
            q.fitness = quantize(q.fitness);
        }
        Ok(Self {
            queries,
            sensitivity,
            terminal_set,
            vocabulary: Vec::new(),
        })
    }

    /// Attaches the surface token of each terminal, needed to re-create the
    /// bag-of-words view when the rule is applied to new documents.
    pub fn with_vocabulary(mut self, vocabulary: Vec<String>) -> Result<Self, RuleError> {
        if !vocabulary.is_empty() && vocabulary.len() != self.terminal_set.len() {
            return Err(RuleError::VocabularyMismatch {
                vocabulary: vocabulary.len(),
                terminals: self.terminal_set.len(),
            });
        }
        self.vocabulary = vocabulary;
        Ok(self)
    }

    /// Same queries, matched under different thresholds.
    pub fn with_sensitivity(mut self, sensitivity: SensitivityConfig) -> Self {
        self.sensitivity = sensitivity;
        self
    }

    pub fn queries(&self) -> &[WeightedQuery] {
        &self.queries
    }

    pub fn sensitivity(&self) -> &SensitivityConfig {
        &self.sensitivity
    }

    pub fn terminal_set(&self) -> &[ConceptId] {
        &self.terminal_set
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    /// `(terminal id, token)` pairs; empty unless a vocabulary is attached.
    pub fn vocabulary_pairs(&self) -> Vec<(ConceptId, String)> {
        self.terminal_set
            .iter()
            .copied()
            .zip(self.vocabulary.iter().cloned())
            .collect()
    }

    /// Weighted share of matching queries; 0 when all weights are 0.
    pub fn vote(&self, graph: &ConceptGraph, profile: &DocumentProfile) -> Result<f64, GraphError> {
        let total: f64 = self.queries.iter().map(|q| q.fitness).sum();
        if total <= 0.0 {
            return Ok(0.0);
        }
        let mut hits = 0.0;
        for q in &self.queries {
            if eval_query(graph, &q.query, profile, &self.sensitivity)? {
                hits += q.fitness;
            }
        }
        Ok(hits / total)
    }

    pub fn classify(&self, graph: &ConceptGraph, profile: &DocumentProfile) -> Result<bool, GraphError> {
        Ok(self.vote(graph, profile)? > 0.5)
    }

    /// Rule file text (pretty JSON with a trailing newline).
    pub fn to_json(&self) -> String {
        let file = RuleFile {
            matcher: self.sensitivity.matcher,
            c1: self.sensitivity.c1,
            c2: self.sensitivity.c2,
            terminal_set: self.terminal_set.clone(),
            vocabulary: self.vocabulary.clone(),
            queries: self
                .queries
                .iter()
                .map(|q| QueryEntry {
                    expr: q.query.to_string(),
                    fitness: q.fitness,
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("rule serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, RuleError> {
        let file: RuleFile = serde_json::from_str(text)?;
        let sensitivity = SensitivityConfig::new(file.matcher, file.c1, file.c2)?;
        let queries = file
            .queries
            .into_iter()
            .enumerate()
            .map(|(index, e)| {
                Ok(WeightedQuery {
                    query: e
                        .expr
                        .parse()
                        .map_err(|source| RuleError::Expression { index, source })?,
                    fitness: e.fitness,
                })
            })
            .collect::<Result<Vec<_>, RuleError>>()?;
        Self::new(queries, sensitivity, file.terminal_set)?.with_vocabulary(file.vocabulary)
    }

    pub fn matcher(&self) -> Matcher {
        self.sensitivity.matcher
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    matcher: Matcher,
    c1: f64,
    c2: f64,
    terminal_set: Vec<ConceptId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    vocabulary: Vec<String>,
    queries: Vec<QueryEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryEntry {
    expr: String,
    fitness: f64,
}
