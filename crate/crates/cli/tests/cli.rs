mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

struct Planted {
    _dir: tempfile::TempDir,
    root: PathBuf,
    graph: PathBuf,
    corpus: PathBuf,
    config: PathBuf,
}

impl Planted {
    /// Relevant exactly when concept 3 is present.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_owned();
        let graph = root.join("graph.jsonl");
        let corpus = root.join("corpus.jsonl");
        let config = root.join("gp.json");
        write_graph(&graph, &flat_records(10));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let docs: Vec<(Vec<u32>, bool)> = random_docs(&mut rng, 60, 10, 0.3)
            .into_iter()
            .map(|ids| {
                let rel = ids.contains(&3);
                (ids, rel)
            })
            .collect();
        write_lines(&corpus, &concept_corpus(&docs));
        write_config(
            &config,
            json!({"generations": 20, "subpopulations": 3, "subpopulation_size": 20, "seed": 4}),
        );
        Self {
            _dir: dir,
            root,
            graph,
            corpus,
            config,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn train(&self, extra: &[&str], out: &Path) -> std::process::Output {
        let mut args = vec![
            "train",
            "--graph",
            path_str(&self.graph),
            "--corpus",
            path_str(&self.corpus),
            "--config",
            path_str(&self.config),
            "--out",
            path_str(out),
        ];
        args.extend_from_slice(extra);
        wikies(&args)
    }
}

fn write_rule(path: &Path, matcher: &str, exprs: &[(&str, f64)], terminals: &[u32]) {
    let queries: Vec<_> = exprs.iter().map(|(e, f)| json!({"expr": e, "fitness": f})).collect();
    let rule = json!({"matcher": matcher, "c1": 0.95, "c2": 0.5, "terminal_set": terminals, "queries": queries});
    fs::write(path, rule.to_string()).unwrap();
}

#[test]
fn missing_graph_is_a_usage_error() {
    let o = wikies(&["train", "--corpus", "c.jsonl", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--graph"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(wikies(&["learn"]).status.code(), Some(2));
    assert_eq!(wikies(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_file_is_a_runtime_error() {
    let p = Planted::new();
    let o = wikies(&[
        "filter",
        "--rule",
        path_str(&p.path("absent.json")),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&p.corpus),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn empty_corpus_filters_to_nothing() {
    let p = Planted::new();
    let rule = p.path("rule.json");
    write_rule(&rule, "wiki", &[("w1", 1.0)], &[1]);
    let empty = p.path("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = wikies(&[
        "filter",
        "--rule",
        path_str(&rule),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&empty),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
}

fn three_of_ten(p: &Planted) -> (PathBuf, PathBuf) {
    let corpus = p.path("ten.jsonl");
    let docs: Vec<(Vec<u32>, bool)> = (0..10)
        .map(|i| {
            if [2, 5, 7].contains(&i) {
                (vec![1, 4], true)
            } else {
                (vec![4], false)
            }
        })
        .collect();
    write_lines(&corpus, &concept_corpus(&docs));
    let rule = p.path("rule.json");
    write_rule(&rule, "wiki", &[("(AND w1 w4)", 0.8), ("w1", 0.6)], &[1, 4]);
    (corpus, rule)
}

#[test]
fn filter_prints_matching_ids_in_corpus_order() {
    let p = Planted::new();
    let (corpus, rule) = three_of_ten(&p);
    let o = wikies(&[
        "filter",
        "--rule",
        path_str(&rule),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&corpus),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "d2\nd5\nd7\n");
}

#[test]
fn scores_have_six_decimals() {
    let p = Planted::new();
    let (corpus, rule) = three_of_ten(&p);
    let o = wikies(&[
        "filter",
        "--rule",
        path_str(&rule),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&corpus),
        "--with-scores",
    ]);
    assert_eq!(stdout(&o), "d2\t1.000000\nd5\t1.000000\nd7\t1.000000\n");

    // only the 0.6 query matches: 0.6 / 1.4 = 0.428571 is below the cut
    let rule2 = p.path("rule2.json");
    write_rule(&rule2, "wiki", &[("(AND w1 w4)", 0.8), ("w1", 0.6)], &[1, 4]);
    let corpus2 = p.path("one.jsonl");
    write_lines(&corpus2, &concept_corpus(&[(vec![1], true), (vec![1, 4], true)]));
    let o = wikies(&[
        "filter",
        "--rule",
        path_str(&rule2),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&corpus2),
        "--with-scores",
    ]);
    assert_eq!(stdout(&o), "d1\t1.000000\n");
}

#[test]
fn compare_needs_two_rules() {
    let p = Planted::new();
    let rule = p.path("rule.json");
    write_rule(&rule, "wiki", &[("w3", 1.0)], &[3]);
    let o = wikies(&[
        "eval",
        "--rule",
        path_str(&rule),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&p.corpus),
        "--compare",
    ]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("need ≥2 rules"), "{}", stderr(&o));
}

#[test]
fn eval_prints_reports_and_matrix() {
    let p = Planted::new();
    let good = p.path("good.json");
    let weak = p.path("weak.json");
    write_rule(&good, "wiki", &[("w3", 1.0)], &[3]);
    write_rule(&weak, "wiki", &[("(OR w3 w5)", 1.0)], &[3, 5]);
    let o = wikies(&[
        "eval",
        "--rule",
        path_str(&good),
        "--compare",
        path_str(&weak),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&p.corpus),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(report_value(&out, "f_score"), 1.0);
    let last = out.lines().last().unwrap();
    assert!(last.contains("weak.json") && last.ends_with("0.00%"), "{out}");
    let first_row = out.lines().rev().nth(1).unwrap();
    assert!(first_row.contains('-') && first_row.contains('%'), "{out}");
}

#[test]
fn unlabeled_corpus_cannot_be_evaluated() {
    let p = Planted::new();
    let rule = p.path("rule.json");
    write_rule(&rule, "wiki", &[("w3", 1.0)], &[3]);
    let corpus = p.path("unlabeled.jsonl");
    write_lines(&corpus, &[json!({"doc_id": "x", "concepts": [3]})]);
    let o = wikies(&[
        "eval",
        "--rule",
        path_str(&rule),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&corpus),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no relevance label"));
}

#[test]
fn qrels_supply_labels() {
    let p = Planted::new();
    let rule = p.path("rule.json");
    write_rule(&rule, "wiki", &[("w3", 1.0)], &[3]);
    let corpus = p.path("unlabeled.jsonl");
    write_lines(
        &corpus,
        &[
            json!({"doc_id": "a", "concepts": [3]}),
            json!({"doc_id": "b", "concepts": [4]}),
        ],
    );
    let qrels = p.path("qrels.tsv");
    fs::write(&qrels, "t1\ta\t1\nt1\tb\t0\nt2\ta\t0\nt2\tb\t1\n").unwrap();
    let run = |topic: Option<&str>| {
        let mut args = vec![
            "eval",
            "--rule",
            path_str(&rule),
            "--graph",
            path_str(&p.graph),
            "--corpus",
            path_str(&corpus),
            "--qrels",
            path_str(&qrels),
        ];
        if let Some(t) = topic {
            args.extend(["--topic", t]);
        }
        wikies(&args)
    };
    assert_eq!(report_value(&stdout(&run(Some("t1"))), "f_score"), 1.0);
    assert_eq!(report_value(&stdout(&run(Some("t2"))), "f_score"), 0.0);
    assert_eq!(run(None).status.code(), Some(2));
}

#[test]
fn train_writes_rule_manifest_and_report() {
    let p = Planted::new();
    let out = p.path("rule.json");
    let o = p.train(&[], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report_value(&stdout(&o), "f_score"), 1.0);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.path("rule.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["config"]["gp"]["generations"], 20);
    let inputs = manifest["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 3);
    for input in inputs {
        let path = Path::new(input["path"].as_str().unwrap());
        let digest = input["sha256"].as_str().unwrap();
        assert_eq!(digest.len(), 64);
        // recomputed with an independent tool when available
        if let Ok(o) = std::process::Command::new("sha256sum").arg(path).output() {
            if o.status.success() {
                assert!(String::from_utf8(o.stdout).unwrap().starts_with(digest));
            }
        }
    }

    let e = wikies(&[
        "eval",
        "--rule",
        path_str(&out),
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&p.corpus),
    ]);
    assert_eq!(report_value(&stdout(&e), "f_score"), 1.0);
}

#[test]
fn seed_flag_controls_reproducibility() {
    let p = Planted::new();
    let a = p.path("a.json");
    let b = p.path("b.json");
    let c = p.path("c.json");
    assert!(p.train(&["--seed", "11"], &a).status.success());
    assert!(p.train(&["--seed", "11", "--threads", "1"], &b).status.success());
    assert!(p.train(&["--seed", "11", "--threads", "3"], &c).status.success());
    let ra = fs::read(&a).unwrap();
    assert_eq!(ra, fs::read(&b).unwrap());
    assert_eq!(ra, fs::read(&c).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.path("a.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
}

#[test]
fn exact_matcher_training_is_the_baseline() {
    let fx = SubstituteFixture::new(1);
    let dir = tempfile::tempdir().unwrap();
    let (graph, train, _) = fx.write(dir.path());
    let config = dir.path().join("gp.json");
    write_config(
        &config,
        json!({"generations": 10, "subpopulations": 2, "subpopulation_size": 20}),
    );
    let t = dir.path().join("t.json");
    let b = dir.path().join("b.json");
    let common = [
        "--graph",
        path_str(&graph),
        "--corpus",
        path_str(&train),
        "--config",
        path_str(&config),
        "--seed",
        "3",
    ];
    let mut args = vec!["train", "--matcher", "exact", "--out", path_str(&t)];
    args.extend(common);
    assert!(wikies(&args).status.success());
    let mut args = vec!["baseline", "--out", path_str(&b)];
    args.extend(common);
    let o = wikies(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = fs::read(&b).unwrap();
    assert_eq!(fs::read(&t).unwrap(), bytes);
    let rule: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(rule["matcher"], "exact");
    assert_eq!(
        rule["vocabulary"].as_array().unwrap().len(),
        rule["terminal_set"].as_array().unwrap().len()
    );

    // the token rule applies to new text through its stored vocabulary
    let f = wikies(&[
        "filter",
        "--rule",
        path_str(&b),
        "--graph",
        path_str(&graph),
        "--corpus",
        path_str(&train),
    ]);
    assert!(f.status.success(), "{}", stderr(&f));
    assert!(stdout(&f).lines().count() > 0);
}

#[test]
fn calibrated_thresholds_feed_training() {
    let fx = SubstituteFixture::new(2);
    let dir = tempfile::tempdir().unwrap();
    let (graph, train, _) = fx.write(dir.path());
    let sens = dir.path().join("sens.json");
    let o = wikies(&[
        "calibrate",
        "--graph",
        path_str(&graph),
        "--corpus",
        path_str(&train),
        "--out",
        path_str(&sens),
        "--grid-c1",
        "0.9,0.99",
        "--grid-c2",
        "0.4,0.6",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sens).unwrap()).unwrap();
    // nothing related to a topic concept occurs in training, so the stricter point wins
    assert_eq!(cfg["c1"], 0.99);
    assert_eq!(cfg["c2"], 0.6);
    assert!(dir.path().join("sens.json.manifest.json").exists());

    let config = dir.path().join("gp.json");
    write_config(
        &config,
        json!({"generations": 5, "subpopulations": 2, "subpopulation_size": 10}),
    );
    let rule = dir.path().join("rule.json");
    let o = wikies(&[
        "train",
        "--graph",
        path_str(&graph),
        "--corpus",
        path_str(&train),
        "--config",
        path_str(&config),
        "--sensitivity",
        path_str(&sens),
        "--out",
        path_str(&rule),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rule).unwrap()).unwrap();
    assert_eq!((r["c1"].clone(), r["c2"].clone()), (json!(0.99), json!(0.6)));
}

#[test]
fn bad_grid_values_are_rejected() {
    let p = Planted::new();
    let o = wikies(&[
        "calibrate",
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&p.corpus),
        "--out",
        path_str(&p.path("s.json")),
        "--grid-c1",
        "0.9,abc",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = wikies(&[
        "calibrate",
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&p.corpus),
        "--out",
        path_str(&p.path("s.json")),
        "--grid-c2",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn degenerate_training_reports_an_error() {
    let p = Planted::new();
    let corpus = p.path("pos.jsonl");
    write_lines(&corpus, &concept_corpus(&[(vec![1], true), (vec![2], true)]));
    let o = wikies(&[
        "train",
        "--graph",
        path_str(&p.graph),
        "--corpus",
        path_str(&corpus),
        "--out",
        path_str(&p.path("r.json")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("degenerate training set"));
    assert!(!p.path("r.json").exists());
}
