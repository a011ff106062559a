use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::json;

use wikies_core::annotator::{document_tokens, load_corpus, token_view, CorpusDocument, Qrels, TokenVocabulary};
use wikies_core::concept_graph::ConceptGraph;
use wikies_core::evaluation::{compare, score, MetricsReport};
use wikies_core::gp::{calibrate_thresholds, evolve, GpConfig, ThresholdGrid, TrainingSet};
use wikies_core::query::{Matcher, SensitivityConfig, WikiEsRule};

use crate::args::{CalibrateArgs, EvalArgs, FilterArgs, LabelArgs, TrainArgs};
use crate::manifest::{digests, write_atomic, RunManifest};
use crate::UsageError;

fn load_graph(path: &Path) -> Result<ConceptGraph> {
    let graph = ConceptGraph::load(path)?;
    log::info!("loaded {} concepts from {}", graph.total_count(), path.display());
    Ok(graph)
}

fn load_rule(path: &Path) -> Result<WikiEsRule> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read rule {}", path.display()))?;
    WikiEsRule::from_json(&text).with_context(|| format!("invalid rule {}", path.display()))
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<GpConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => GpConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_sensitivity(path: &Path) -> Result<SensitivityConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid sensitivity file {}", path.display()))
}

/// Loads the corpus and applies qrels judgments when given.
fn load_documents(graph: &ConceptGraph, corpus: &Path, labels: &LabelArgs) -> Result<Vec<CorpusDocument>> {
    let mut docs = load_corpus(corpus, graph)?;
    if let Some(path) = &labels.qrels {
        let qrels = Qrels::load(path)?;
        let topic = match &labels.topic {
            Some(t) => t.clone(),
            None => {
                let topics: Vec<&str> = qrels.topics().collect();
                match topics.as_slice() {
                    [only] => only.to_string(),
                    _ => {
                        return Err(UsageError(format!(
                            "{} holds {} topics; choose one with --topic",
                            path.display(),
                            topics.len()
                        ))
                        .into())
                    }
                }
            }
        };
        let judged = qrels.apply(&topic, &mut docs);
        log::info!("topic {topic}: {judged} of {} documents judged", docs.len());
    } else if labels.topic.is_some() {
        return Err(UsageError("--topic requires --qrels".into()).into());
    }
    Ok(docs)
}

fn labels(docs: &[CorpusDocument]) -> Result<Vec<bool>> {
    docs.iter()
        .map(|d| match d.relevance {
            Some(r) => Ok(r),
            None => bail!("document {} has no relevance label", d.doc_id()),
        })
        .collect()
}

/// Profiles in the representation a rule expects: concepts, or tokens
/// when the rule carries a vocabulary.
struct View {
    vocabulary: Option<TokenVocabulary>,
    profiles: Vec<wikies_core::annotator::DocumentProfile>,
}

impl View {
    fn new(rule: &WikiEsRule, graph: &ConceptGraph, docs: &[CorpusDocument]) -> Result<Self> {
        if rule.vocabulary().is_empty() {
            return Ok(Self {
                vocabulary: None,
                profiles: docs.iter().map(|d| d.profile.clone()).collect(),
            });
        }
        let vocabulary = TokenVocabulary::from_pairs(rule.vocabulary_pairs())?;
        let profiles = docs
            .iter()
            .map(|d| {
                let tokens = document_tokens(graph, d)?;
                Ok(vocabulary.profile(d.doc_id(), tokens.iter().map(String::as_str)))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            vocabulary: Some(vocabulary),
            profiles,
        })
    }

    fn graph<'a>(&'a self, concepts: &'a ConceptGraph) -> &'a ConceptGraph {
        self.vocabulary.as_ref().map_or(concepts, TokenVocabulary::graph)
    }
}

fn override_matcher(rule: WikiEsRule, matcher: Option<Matcher>) -> WikiEsRule {
    match matcher {
        Some(m) => {
            let sens = SensitivityConfig {
                matcher: m,
                ..*rule.sensitivity()
            };
            rule.with_sensitivity(sens)
        }
        None => rule,
    }
}

/// Trains a rule; `bag_of_words` selects the token pipeline.
pub fn train(args: &TrainArgs, command: &str, bag_of_words: bool) -> Result<()> {
    let start = Instant::now();
    let graph = load_graph(&args.graph)?;
    let docs = load_documents(&graph, &args.corpus, &args.labels)?;
    let labels = labels(&docs)?;
    let cfg = load_config(args.config.as_deref(), args.seed)?;

    let (rule, report, sensitivity) = if bag_of_words {
        let (vocabulary, profiles) = token_view(&graph, &docs)?;
        log::info!("bag-of-words vocabulary of {} tokens", vocabulary.len());
        let training = TrainingSet::new(profiles.into_iter().zip(labels).collect());
        let sens = SensitivityConfig::exact();
        let rule = evolve(&training, vocabulary.graph(), &sens, &cfg)?;
        let tokens = rule
            .terminal_set()
            .iter()
            .map(|&id| vocabulary.token(id).map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .context("terminal outside the token vocabulary")?;
        let rule = rule.with_vocabulary(tokens)?;
        let report = score(
            &rule,
            vocabulary.graph(),
            training.items().iter().map(|(p, r)| (p, Some(*r))),
        )?;
        (rule, report, sens)
    } else {
        let sens = match &args.sensitivity {
            Some(p) => SensitivityConfig {
                matcher: Matcher::WikiRelatedness,
                ..load_sensitivity(p)?
            },
            None => SensitivityConfig::default(),
        };
        let training = TrainingSet::new(docs.iter().map(|d| d.profile.clone()).zip(labels).collect());
        let rule = evolve(&training, &graph, &sens, &cfg)?;
        let report = score(&rule, &graph, training.items().iter().map(|(p, r)| (p, Some(*r))))?;
        (rule, report, sens)
    };

    write_atomic(&args.out, rule.to_json().as_bytes())?;
    println!("training ({} documents)", report.total());
    println!("{report}");

    let mut inputs: Vec<&Path> = vec![&args.graph, &args.corpus];
    inputs.extend(args.config.as_deref());
    inputs.extend(args.sensitivity.as_deref().filter(|_| !bag_of_words));
    inputs.extend(args.labels.qrels.as_deref());
    RunManifest {
        command: command.to_string(),
        config: json!({ "gp": cfg, "sensitivity": sensitivity, "topic": args.labels.topic }),
        inputs: digests(inputs)?,
        seed: Some(cfg.seed),
        artifacts: vec![args.out.clone()],
        duration_secs: 0.0,
    }
    .with_duration(start.elapsed())
    .write_beside(&args.out)?;
    Ok(())
}

pub fn filter(args: &FilterArgs) -> Result<()> {
    let graph = load_graph(&args.graph)?;
    let rule = override_matcher(load_rule(&args.rule)?, args.matcher.map(Into::into));
    let docs = load_corpus(&args.corpus, &graph)?;
    let view = View::new(&rule, &graph, &docs)?;
    let g = view.graph(&graph);
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for profile in &view.profiles {
        let mu = rule.vote(g, profile)?;
        if mu > 0.5 {
            if args.with_scores {
                writeln!(out, "{}\t{mu:.6}", profile.doc_id)?;
            } else {
                writeln!(out, "{}", profile.doc_id)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn evaluate(rule: &WikiEsRule, graph: &ConceptGraph, docs: &[CorpusDocument]) -> Result<MetricsReport> {
    let view = View::new(rule, graph, docs)?;
    let g = view.graph(graph);
    Ok(score(
        rule,
        g,
        view.profiles.iter().zip(docs).map(|(p, d)| (p, d.relevance)),
    )?)
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let mut paths: Vec<&PathBuf> = args.rule.iter().collect();
    if let Some(more) = &args.compare {
        paths.extend(more);
        if paths.len() < 2 {
            return Err(UsageError("need ≥2 rules".into()).into());
        }
    }
    if paths.is_empty() {
        return Err(UsageError("eval needs --rule".into()).into());
    }
    let graph = load_graph(&args.graph)?;
    let docs = load_documents(&graph, &args.corpus, &args.labels)?;
    let mut reports = Vec::with_capacity(paths.len());
    for path in paths {
        let rule = override_matcher(load_rule(path)?, args.matcher.map(Into::into));
        let report = evaluate(&rule, &graph, &docs)?;
        println!("{}", path.display());
        println!("{report}");
        println!();
        reports.push((path.display().to_string(), report));
    }
    if args.compare.is_some() {
        print!("{}", compare(&reports)?.to_table());
    }
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let start = Instant::now();
    let graph = load_graph(&args.graph)?;
    let docs = load_documents(&graph, &args.corpus, &args.labels)?;
    let labels = labels(&docs)?;
    let cfg = load_config(args.config.as_deref(), None)?;
    let mut grid = ThresholdGrid::default();
    if let Some(c1) = &args.grid_c1 {
        grid.c1 = c1.clone();
    }
    if let Some(c2) = &args.grid_c2 {
        grid.c2 = c2.clone();
    }
    let training = TrainingSet::new(docs.into_iter().map(|d| d.profile).zip(labels).collect());
    let (sens, mean_f) = calibrate_thresholds(&training, &graph, &grid, cfg.terminal_cap)?;
    let mut text = serde_json::to_string_pretty(&sens)?;
    text.push('\n');
    write_atomic(&args.out, text.as_bytes())?;
    println!("c1 {}  c2 {}  mean single-concept F {mean_f:.4}", sens.c1, sens.c2);

    let mut inputs: Vec<&Path> = vec![&args.graph, &args.corpus];
    inputs.extend(args.config.as_deref());
    inputs.extend(args.labels.qrels.as_deref());
    RunManifest {
        command: "calibrate".into(),
        config: json!({ "grid_c1": grid.c1, "grid_c2": grid.c2, "terminal_cap": cfg.terminal_cap, "topic": args.labels.topic }),
        inputs: digests(inputs)?,
        seed: None,
        artifacts: vec![args.out.clone()],
        duration_secs: 0.0,
    }
    .with_duration(start.elapsed())
    .write_beside(&args.out)?;
    Ok(())
}
