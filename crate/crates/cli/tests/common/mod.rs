#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wikies_core::concept_graph::{ConceptId, GraphRecord};

pub fn wikies(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wikies"))
        .args(args)
        .env("WIKIES_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn record(id: u32, title: &str, inlinks: &[u32]) -> GraphRecord {
    GraphRecord {
        id: ConceptId(id),
        title: title.to_string(),
        redirects: vec![],
        anchors: vec![],
        inlinks: inlinks.iter().map(|&i| ConceptId(i)).collect(),
        named_entity: false,
    }
}

pub fn write_graph(path: &Path, records: &[GraphRecord]) {
    let text: String = records
        .iter()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect();
    std::fs::write(path, text).unwrap();
}

pub fn write_lines(path: &Path, values: &[serde_json::Value]) {
    let text: String = values.iter().map(|v| v.to_string() + "\n").collect();
    std::fs::write(path, text).unwrap();
}

/// Pre-annotated documents as `(concept ids, relevance)`.
pub fn concept_corpus(docs: &[(Vec<u32>, bool)]) -> Vec<serde_json::Value> {
    docs.iter()
        .enumerate()
        .map(|(i, (ids, rel))| json!({ "doc_id": format!("d{i}"), "concepts": ids, "relevance": *rel as u8 }))
        .collect()
}

/// Concepts `1..=n` with no inlinks and titles `concept <id>`.
pub fn flat_records(n: u32) -> Vec<GraphRecord> {
    (1..=n).map(|i| record(i, &format!("concept {i}"), &[])).collect()
}

/// Each of `1..=vocab` present independently with probability `p`.
pub fn random_docs(rng: &mut ChaCha8Rng, n: usize, vocab: u32, p: f64) -> Vec<Vec<u32>> {
    (0..n)
        .map(|_| (1..=vocab).filter(|_| rng.gen_bool(p)).collect())
        .collect()
}

/// `(OR (AND c1 (OR c2 c3)) (AND c4 (OR c5 c6)))`
pub fn planted_truth(ids: &[u32]) -> bool {
    let has = |c| ids.contains(&c);
    (has(1) && (has(2) || has(3))) || (has(4) && (has(5) || has(6)))
}

pub const PLANTED_QUERY: &str = "(OR (AND w1 (OR w2 w3)) (AND w4 (OR w5 w6)))";

pub fn planted_docs(seed: u64, n: usize) -> Vec<(Vec<u32>, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_docs(&mut rng, n, 20, 0.3)
        .into_iter()
        .map(|ids| {
            let rel = planted_truth(&ids);
            (ids, rel)
        })
        .collect()
}

/// Graph and text corpora where every training topic concept has a close
/// substitute that shares its inlinks but, for half of the topics, no words.
pub struct SubstituteFixture {
    pub graph: Vec<GraphRecord>,
    pub train: Vec<serde_json::Value>,
    pub held_out: Vec<serde_json::Value>,
}

pub const TOPICS: [&str; 4] = ["Espionage", "Trade secret", "Lawsuit", "Patent"];
pub const SUBSTITUTES: [&str; 4] = [
    "Corporate espionage",
    "Classified information",
    "Litigation",
    "Patent law",
];
pub const NOISE: [&str; 20] = [
    "Weather",
    "Football",
    "Cooking",
    "Opera",
    "Glacier",
    "Volcano",
    "Tennis",
    "Jazz",
    "Orchard",
    "Harbor",
    "Comet",
    "Desert",
    "Violin",
    "Bakery",
    "Canyon",
    "Rainforest",
    "Chess",
    "Lighthouse",
    "Meadow",
    "Sculpture",
];

const TOPIC_ID: u32 = 1;
const SUBSTITUTE_ID: u32 = 11;
const NOISE_ID: u32 = 21;
const HUB_ID: u32 = 101;

impl SubstituteFixture {
    pub fn topic_id(i: usize) -> u32 {
        TOPIC_ID + i as u32
    }

    pub fn substitute_id(i: usize) -> u32 {
        SUBSTITUTE_ID + i as u32
    }

    pub fn new(seed: u64) -> Self {
        // topic i is linked from six hub pages; its substitute from five of them
        let hubs = |i: usize| -> Vec<u32> { (0..6).map(|k| HUB_ID + 6 * i as u32 + k).collect() };
        let mut graph = Vec::new();
        for i in 0..4 {
            graph.push(record(Self::topic_id(i), TOPICS[i], &hubs(i)));
            graph.push(record(Self::substitute_id(i), SUBSTITUTES[i], &hubs(i)[..5]));
        }
        for (k, title) in NOISE.iter().enumerate() {
            let own = HUB_ID + 24 + 2 * k as u32;
            graph.push(record(NOISE_ID + k as u32, title, &[own, own + 1]));
        }
        for h in HUB_ID..HUB_ID + 24 + 40 {
            graph.push(record(h, &format!("Hub page {h}"), &[]));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make = |prefix: &str, substitute: bool| -> Vec<serde_json::Value> {
            (0..160)
                .map(|n| {
                    let relevant = n % 2 == 0;
                    let mut parts: Vec<&str> = NOISE.iter().copied().filter(|_| rng.gen_bool(0.08)).collect();
                    if relevant {
                        let t = (n / 2) % 4;
                        parts.push(if substitute { SUBSTITUTES[t] } else { TOPICS[t] });
                    }
                    if parts.is_empty() {
                        parts.push(NOISE[rng.gen_range(0..NOISE.len())]);
                    }
                    let k = parts.len();
                    let pos = rng.gen_range(0..k);
                    parts.swap(pos, k - 1);
                    json!({
                        "doc_id": format!("{prefix}{n}"),
                        "text": parts.join(". ") + ".",
                        "relevance": relevant as u8,
                    })
                })
                .collect()
        };
        let train = make("train", false);
        let held_out = make("test", true);
        Self { graph, train, held_out }
    }

    pub fn write(&self, dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
        let g = dir.join("graph.jsonl");
        let t = dir.join("train.jsonl");
        let h = dir.join("held_out.jsonl");
        write_graph(&g, &self.graph);
        write_lines(&t, &self.train);
        write_lines(&h, &self.held_out);
        (g, t, h)
    }
}

/// Value of a `name  0.1234` line in a printed report.
pub fn report_value(text: &str, name: &str) -> f64 {
    text.lines()
        .find_map(|l| {
            let mut parts = l.split_whitespace();
            (parts.next() == Some(name)).then(|| parts.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no {name} in\n{text}"))
}

pub fn write_config(path: &Path, config: serde_json::Value) {
    std::fs::write(path, config.to_string()).unwrap();
}
