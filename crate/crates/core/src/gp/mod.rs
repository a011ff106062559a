//! Co-evolutionary genetic programming over query trees.
//!
//! `M` islands of `n` trees each evolve against the same training set.
//! Parents come from binary tournaments; with probability `1/M` the second
//! parent is drawn from another island. After `n` offspring, each island
//! keeps the `n` best of parents and offspring. The best tree of every
//! island, weighted by its F-score, forms the final rule.

mod bits;
mod calibrate;
mod evolve;
mod fitness;
mod operators;

pub use calibrate::{calibrate_thresholds, ThresholdGrid};
pub use evolve::{evolve, evolve_traced, Evolution, Subpopulation};
pub use fitness::{f_score, fitness, FitnessScorer};
pub use operators::{crossover, init_individual, mutate, tournament, CrossoverOutcome, CROSSOVER_RETRIES};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::DocumentProfile;
use crate::concept_graph::{ConceptId, GraphError};
use crate::query::{QueryTree, RuleError, SensitivityError};

#[derive(Debug, Error)]
pub enum GpError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no candidate terminals")]
    NoCandidateTerminals,
    #[error("degenerate training set: {relevant} relevant and {irrelevant} irrelevant items")]
    DegenerateTraining { relevant: usize, irrelevant: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
}

/// Algorithm parameters. Missing fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub generations: usize,
    pub subpopulations: usize,
    pub subpopulation_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub per_node_mutation_rate: f64,
    pub initial_depth: usize,
    pub max_crossover_depth: usize,
    pub terminal_cap: usize,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            generations: 250,
            subpopulations: 10,
            subpopulation_size: 100,
            crossover_prob: 0.9,
            mutation_prob: 0.9,
            per_node_mutation_rate: 0.1,
            initial_depth: 4,
            max_crossover_depth: 8,
            terminal_cap: 15,
            seed: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), GpError> {
        let fail = |m: String| Err(GpError::Config(m));
        if self.generations == 0 {
            return fail("generations must be positive".into());
        }
        if self.subpopulations == 0 {
            return fail("subpopulations must be positive".into());
        }
        if self.subpopulation_size == 0 || !self.subpopulation_size.is_multiple_of(2) {
            return fail(format!(
                "subpopulation_size must be a positive even number, got {}",
                self.subpopulation_size
            ));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
            ("per_node_mutation_rate", self.per_node_mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        if self.initial_depth == 0 {
            return fail("initial_depth must be positive".into());
        }
        if self.max_crossover_depth < self.initial_depth {
            return fail(format!(
                "max_crossover_depth ({}) is below initial_depth ({})",
                self.max_crossover_depth, self.initial_depth
            ));
        }
        if self.terminal_cap == 0 {
            return fail("terminal_cap must be positive".into());
        }
        Ok(())
    }
}

/// Relevance-labeled training documents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    items: Vec<(DocumentProfile, bool)>,
}

impl TrainingSet {
    pub fn new(items: Vec<(DocumentProfile, bool)>) -> Self {
        Self { items }
    }

    pub fn items(&self) -> &[(DocumentProfile, bool)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn relevant_count(&self) -> usize {
        self.items.iter().filter(|(_, r)| *r).count()
    }

    /// Learning needs at least one relevant and one irrelevant example.
    pub fn ensure_non_degenerate(&self) -> Result<(), GpError> {
        let relevant = self.relevant_count();
        let irrelevant = self.items.len() - relevant;
        if relevant == 0 || irrelevant == 0 {
            return Err(GpError::DegenerateTraining { relevant, irrelevant });
        }
        Ok(())
    }
}

/// Up to `k` concepts ranked by how many relevant documents contain them,
/// ties going to the smaller id.
pub fn select_terminals(training: &TrainingSet, k: usize) -> Result<Vec<ConceptId>, GpError> {
    let mut freq: HashMap<ConceptId, usize> = HashMap::new();
    for (profile, _) in training.items().iter().filter(|(_, r)| *r) {
        for id in profile.concepts() {
            *freq.entry(id).or_default() += 1;
        }
    }
    if freq.is_empty() {
        return Err(GpError::NoCandidateTerminals);
    }
    let mut ranked: Vec<(ConceptId, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked.into_iter().take(k).map(|(id, _)| id).collect())
}

/// A tree with its cached fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub tree: QueryTree,
    pub fitness: f64,
}
