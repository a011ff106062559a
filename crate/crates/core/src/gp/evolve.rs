use std::cmp::Ordering;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fitness::FitnessScorer;
use super::operators::{crossover, init_individual, mutate, tournament};
use super::{select_terminals, GpConfig, GpError, Member, TrainingSet};
use crate::concept_graph::{ConceptGraph, ConceptId, GraphError};
use crate::query::{QueryTree, SensitivityConfig, WeightedQuery, WikiEsRule};

/// Final state of one island, sorted best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Subpopulation {
    pub index: usize,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub rule: WikiEsRule,
    /// `best_history[g][i]`: best fitness on island `i` after generation `g`,
    /// with `g = 0` the initial population.
    pub best_history: Vec<Vec<f64>>,
    pub islands: Vec<Subpopulation>,
}

struct Island {
    index: usize,
    rng: ChaCha8Rng,
    members: Vec<Member>,
    cache: HashMap<QueryTree, f64>,
}

impl Island {
    fn score(&mut self, tree: QueryTree, scorer: &FitnessScorer) -> Result<Member, GraphError> {
        let fitness = match self.cache.get(&tree) {
            Some(&f) => f,
            None => {
                let f = scorer.fitness(&tree)?;
                self.cache.insert(tree.clone(), f);
                f
            }
        };
        Ok(Member { tree, fitness })
    }

    fn best(&self) -> f64 {
        self.members[0].fitness
    }
}

/// Higher fitness first, then fewer nodes.
fn rank(a: &Member, b: &Member) -> Ordering {
    b.fitness
        .partial_cmp(&a.fitness)
        .unwrap_or(Ordering::Equal)
        .then(a.tree.len().cmp(&b.tree.len()))
}

/// Learns a rule from `training`; see [`evolve_traced`].
pub fn evolve(
    training: &TrainingSet,
    graph: &ConceptGraph,
    sensitivity: &SensitivityConfig,
    cfg: &GpConfig,
) -> Result<WikiEsRule, GpError> {
    evolve_traced(training, graph, sensitivity, cfg).map(|e| e.rule)
}

/// Runs the full co-evolution and keeps the per-generation trace.
///
/// Each island draws from its own ChaCha8 stream derived from `cfg.seed`,
/// and every generation reads a frozen snapshot of all islands, so results
/// do not depend on the number of worker threads.
pub fn evolve_traced(
    training: &TrainingSet,
    graph: &ConceptGraph,
    sensitivity: &SensitivityConfig,
    cfg: &GpConfig,
) -> Result<Evolution, GpError> {
    cfg.validate()?;
    training.ensure_non_degenerate()?;
    let terminals = select_terminals(training, cfg.terminal_cap)?;
    let scorer = FitnessScorer::new(graph, training, &terminals, sensitivity)?;
    log::info!(
        "evolving {} islands of {} over {} documents with {} terminals",
        cfg.subpopulations,
        cfg.subpopulation_size,
        training.len(),
        terminals.len()
    );

    let mut islands: Vec<Island> = (0..cfg.subpopulations)
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index as u64);
            Island {
                index,
                rng,
                members: Vec::with_capacity(2 * cfg.subpopulation_size),
                cache: HashMap::new(),
            }
        })
        .collect();

    islands.par_iter_mut().try_for_each(|island| {
        for _ in 0..cfg.subpopulation_size {
            let tree = init_individual(&terminals, cfg.initial_depth, &mut island.rng);
            let m = island.score(tree, &scorer)?;
            island.members.push(m);
        }
        island.members.sort_by(rank);
        Ok::<_, GraphError>(())
    })?;

    let mut best_history = Vec::with_capacity(cfg.generations + 1);
    best_history.push(islands.iter().map(Island::best).collect::<Vec<_>>());

    for generation in 1..=cfg.generations {
        let snapshot: Vec<Vec<Member>> = islands.iter().map(|i| i.members.clone()).collect();
        islands
            .par_iter_mut()
            .try_for_each(|island| step(island, &snapshot, &terminals, &scorer, cfg))?;
        let bests: Vec<f64> = islands.iter().map(Island::best).collect();
        for (prev, now) in best_history[generation - 1].iter().zip(&bests) {
            debug_assert!(now >= prev, "elitism violated: {prev} -> {now}");
        }
        log::debug!("generation {generation}: best {bests:?}");
        best_history.push(bests);
    }

    let queries = islands
        .iter()
        .map(|i| WeightedQuery {
            query: i.members[0].tree.clone(),
            fitness: i.members[0].fitness,
        })
        .collect();
    let rule = WikiEsRule::new(queries, *sensitivity, terminals)?;
    let islands = islands
        .into_iter()
        .map(|i| Subpopulation {
            index: i.index,
            members: i.members,
        })
        .collect();
    Ok(Evolution {
        rule,
        best_history,
        islands,
    })
}

fn step(
    island: &mut Island,
    snapshot: &[Vec<Member>],
    terminals: &[ConceptId],
    scorer: &FitnessScorer,
    cfg: &GpConfig,
) -> Result<(), GraphError> {
    let m = snapshot.len();
    let own = &snapshot[island.index];
    let mut offspring = Vec::with_capacity(cfg.subpopulation_size);
    while offspring.len() < cfg.subpopulation_size {
        let p1 = tournament(own, &mut island.rng).tree.clone();
        let donor = if m > 1 && island.rng.gen::<f64>() < 1.0 / m as f64 {
            let j = island.rng.gen_range(0..m - 1);
            &snapshot[if j >= island.index { j + 1 } else { j }]
        } else {
            own
        };
        let p2 = tournament(donor, &mut island.rng).tree.clone();
        let (a, b) = if island.rng.gen_bool(cfg.crossover_prob) {
            crossover(&p1, &p2, &mut island.rng, cfg.max_crossover_depth).into_pair()
        } else {
            (p1, p2)
        };
        for child in [a, b] {
            let child = mutate(child, cfg, terminals, &mut island.rng);
            debug_assert!(QueryTree::from_prefix(child.nodes().to_vec()).is_ok());
            debug_assert!(child.depth() <= cfg.max_crossover_depth);
            offspring.push(island.score(child, scorer)?);
        }
    }
    offspring.truncate(cfg.subpopulation_size);
    let mut pool = own.clone();
    pool.extend(offspring);
    pool.sort_by(rank);
    pool.truncate(cfg.subpopulation_size);
    island.members = pool;
    Ok(())
}
