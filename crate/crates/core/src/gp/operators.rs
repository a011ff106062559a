use rand::seq::SliceRandom;
use rand::Rng;

use super::{GpConfig, Member};
use crate::concept_graph::ConceptId;
use crate::query::{Node, QueryTree};

/// Extra attempts at drawing crossover points before giving up.
pub const CROSSOVER_RETRIES: usize = 10;

/// Random tree whose terminals all sit at depth `d`, with `d` drawn
/// uniformly from `1..=max_depth`. Operators are drawn uniformly from
/// AND, OR and NOT; terminals uniformly from `terminals`.
pub fn init_individual<R: Rng + ?Sized>(terminals: &[ConceptId], max_depth: usize, rng: &mut R) -> QueryTree {
    assert!(!terminals.is_empty(), "terminal set is empty");
    assert!(max_depth >= 1);
    let depth = rng.gen_range(1..=max_depth);
    let mut nodes = Vec::new();
    grow(&mut nodes, depth, terminals, rng);
    QueryTree::from_prefix(nodes).expect("grown trees are well formed")
}

fn grow<R: Rng + ?Sized>(out: &mut Vec<Node>, remaining: usize, terminals: &[ConceptId], rng: &mut R) {
    if remaining == 0 {
        out.push(Node::Terminal(*terminals.choose(rng).unwrap()));
        return;
    }
    let op = [Node::And, Node::Or, Node::Not][rng.gen_range(0..3)];
    out.push(op);
    for _ in 0..op.arity() {
        grow(out, remaining - 1, terminals, rng);
    }
}

/// Binary tournament: two uniform draws, higher fitness wins, then fewer
/// nodes, then a coin flip.
pub fn tournament<'a, R: Rng + ?Sized>(pool: &'a [Member], rng: &mut R) -> &'a Member {
    let a = &pool[rng.gen_range(0..pool.len())];
    let b = &pool[rng.gen_range(0..pool.len())];
    if a.fitness != b.fitness {
        return if a.fitness > b.fitness { a } else { b };
    }
    match a.tree.len().cmp(&b.tree.len()) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if rng.gen_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CrossoverOutcome {
    /// Subtrees were exchanged.
    Swapped(QueryTree, QueryTree),
    /// Every attempt broke the depth limit; the parents are returned as is.
    Fallback(QueryTree, QueryTree),
}

impl CrossoverOutcome {
    pub fn into_pair(self) -> (QueryTree, QueryTree) {
        match self {
            Self::Swapped(a, b) | Self::Fallback(a, b) => (a, b),
        }
    }
}

/// Subtree crossover: one uniformly chosen node per parent, subtrees
/// exchanged. Points are re-drawn when an offspring would exceed `max_depth`.
pub fn crossover<R: Rng + ?Sized>(p1: &QueryTree, p2: &QueryTree, rng: &mut R, max_depth: usize) -> CrossoverOutcome {
    for _ in 0..=CROSSOVER_RETRIES {
        let i = rng.gen_range(0..p1.len());
        let j = rng.gen_range(0..p2.len());
        let a = p1.with_subtree(i, p2.subtree(j));
        if a.depth() > max_depth {
            continue;
        }
        let b = p2.with_subtree(j, p1.subtree(i));
        if b.depth() > max_depth {
            continue;
        }
        return CrossoverOutcome::Swapped(a, b);
    }
    CrossoverOutcome::Fallback(p1.clone(), p2.clone())
}

/// Point mutation. With probability `mutation_prob` the tree is visited and
/// each node, with probability `per_node_mutation_rate`, gets a random
/// primitive of the same arity. NOT has no same-arity alternative.
pub fn mutate<R: Rng + ?Sized>(tree: QueryTree, cfg: &GpConfig, terminals: &[ConceptId], rng: &mut R) -> QueryTree {
    if !rng.gen_bool(cfg.mutation_prob) {
        return tree;
    }
    let mut tree = tree;
    for node in tree.nodes_mut() {
        if !rng.gen_bool(cfg.per_node_mutation_rate) {
            continue;
        }
        *node = match *node {
            Node::Terminal(_) => Node::Terminal(*terminals.choose(rng).expect("terminal set is empty")),
            Node::And | Node::Or => {
                if rng.gen_bool(0.5) {
                    Node::And
                } else {
                    Node::Or
                }
            }
            Node::Not => Node::Not,
        };
    }
    tree
}
