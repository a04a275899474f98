//! `mpsched train`: run the learning pipeline over a corpus and emit the
//! rule base, per-graph Pareto fronts, statistics and checkpoints.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use mpsched_core::evolution::{learn, EvolutionConfig, GraphLearnOutcome};
use mpsched_core::fuzzy::RuleBase;
use mpsched_core::graphs::AppGraph;
use mpsched_core::sim::SchedulerConfig;

use crate::error::CliError;
use crate::exports;
use crate::manifest::{load_config, sha256_hex, ManifestBuilder};

use super::{ensure_out_dir, expand_corpus, load_arch};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Config file (or a manifest from a previous `train` run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (required: no hidden entropy).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Architecture JSON (builtin quad-core platform when omitted).
    #[arg(long)]
    pub arch: Option<PathBuf>,
    /// Training graphs: files or directories of *.json.
    #[arg(long, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub pc: Option<f64>,
    #[arg(long)]
    pub pm: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub sets: Option<usize>,
    /// Mean firing strength above which a rule counts as active.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Concurrent fitness evaluations.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Thermal cap enabling cooling slacks, kelvin.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    pub arch: Option<PathBuf>,
    pub corpus: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub evolution: EvolutionConfig,
    pub scheduler: SchedulerConfig,
}

impl TrainArgs {
    pub fn resolve(&self) -> Result<TrainConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config::<TrainConfig>(path, "train")?,
            None => TrainConfig {
                seed: 0,
                arch: None,
                corpus: Vec::new(),
                out_dir: PathBuf::from("."),
                evolution: EvolutionConfig::default(),
                scheduler: SchedulerConfig::default(),
            },
        };
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        } else if self.config.is_none() {
            return Err(CliError::Validation(
                "--seed is required (all randomness is explicit)".into(),
            ));
        }
        if self.arch.is_some() {
            cfg.arch = self.arch.clone();
        }
        if !self.corpus.is_empty() {
            cfg.corpus = expand_corpus(&self.corpus)?;
        }
        if cfg.corpus.is_empty() {
            return Err(CliError::Validation("--corpus is required".into()));
        }
        if let Some(v) = self.pop {
            cfg.evolution.pop_size = v;
        }
        if let Some(v) = self.generations {
            cfg.evolution.iterations = v;
        }
        if let Some(v) = self.pc {
            cfg.evolution.p_crossover = v;
        }
        if let Some(v) = self.pm {
            cfg.evolution.p_mutation = v;
        }
        if let Some(v) = self.sigma {
            cfg.evolution.mutation_sigma = v;
        }
        if let Some(v) = self.sets {
            cfg.evolution.sets_per_input = v;
        }
        if let Some(v) = self.threshold {
            cfg.evolution.active_rule_threshold = v;
        }
        if self.jobs.is_some() {
            cfg.evolution.jobs = self.jobs;
        }
        if self.t_max.is_some() {
            cfg.scheduler.t_max = self.t_max;
        }
        if let Some(v) = self.max_step {
            cfg.scheduler.max_step = v;
        }
        cfg.evolution.seed = cfg.seed;
        Ok(cfg)
    }
}

/// One persisted per-graph training result, resumable when the graph and
/// the training settings still match.
#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    graph_sha: String,
    settings_sha: String,
    outcome: GraphLearnOutcome,
}

/// Digest of everything that determines a per-graph outcome, excluding the
/// evaluation thread count (parallelism does not change results).
fn settings_digest(cfg: &TrainConfig) -> Result<String, CliError> {
    let mut evo = cfg.evolution.clone();
    evo.jobs = None;
    let doc = serde_json::json!({
        "evolution": evo,
        "scheduler": cfg.scheduler,
        "seed": cfg.seed,
    });
    Ok(sha256_hex(serde_json::to_string(&doc)?.as_bytes()))
}

fn checkpoint_name(idx: usize) -> String {
    format!("checkpoint_{idx:02}.json")
}

pub fn run(args: &TrainArgs, version: &str) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    ensure_out_dir(&cfg.out_dir)?;
    let mut mb = ManifestBuilder::new("train", &cfg, &cfg.out_dir)?;
    let arch = load_arch(&cfg.arch, &mut mb)?;

    let mut corpus = Vec::new();
    let mut graph_shas = Vec::new();
    for path in &cfg.corpus {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
        mb.record_input_bytes(&format!("graph:{}", path.display()), text.as_bytes());
        graph_shas.push(sha256_hex(text.as_bytes()));
        corpus.push(AppGraph::from_json_str(&text)?);
    }
    mb.stage_done("load");

    // Pick up matching checkpoints from an interrupted run.
    let settings_sha = settings_digest(&cfg)?;
    let mut resume: BTreeMap<usize, GraphLearnOutcome> = BTreeMap::new();
    for (idx, graph_sha) in graph_shas.iter().enumerate() {
        let path = cfg.out_dir.join(checkpoint_name(idx));
        let Ok(text) = fs::read_to_string(&path) else {
            continue;
        };
        let Ok(ckpt) = serde_json::from_str::<CheckpointFile>(&text) else {
            continue;
        };
        if &ckpt.graph_sha == graph_sha && ckpt.settings_sha == settings_sha {
            resume.insert(idx, ckpt.outcome);
        }
    }
    if !resume.is_empty() {
        println!(
            "resuming: {} graph(s) restored from checkpoints",
            resume.len()
        );
    }

    let out_dir = cfg.out_dir.clone();
    let graph_shas_cb = graph_shas.clone();
    let settings_cb = settings_sha.clone();
    let mut persist = move |idx: usize, outcome: &GraphLearnOutcome| {
        let ckpt = CheckpointFile {
            graph_sha: graph_shas_cb[idx].clone(),
            settings_sha: settings_cb.clone(),
            outcome: outcome.clone(),
        };
        if let Ok(mut text) = serde_json::to_string_pretty(&ckpt) {
            text.push('\n');
            let _ = fs::write(out_dir.join(checkpoint_name(idx)), text);
        }
        println!(
            "graph {idx}: front size {}, chosen cost [{:.4e}, {:.4}, {:.4}, {:.4e}]",
            outcome.front.members.len(),
            outcome.chosen_cost[0],
            outcome.chosen_cost[1],
            outcome.chosen_cost[2],
            outcome.chosen_cost[3],
        );
    };

    let learned = learn(
        &corpus,
        &arch,
        &cfg.evolution,
        &cfg.scheduler,
        &resume,
        &mut persist,
    )?;
    mb.stage_done("learn");

    // Re-emit all per-graph artifacts through the manifest (checkpoints
    // written during the run are rewritten byte-identically).
    let template = RuleBase::build_uniform(cfg.evolution.sets_per_input, 4);
    for (idx, outcome) in learned.per_graph.iter().enumerate() {
        let ckpt = CheckpointFile {
            graph_sha: graph_shas[idx].clone(),
            settings_sha: settings_sha.clone(),
            outcome: outcome.clone(),
        };
        let mut text = serde_json::to_string_pretty(&ckpt)?;
        text.push('\n');
        mb.write_output(&checkpoint_name(idx), text.as_bytes())?;

        let mut rows = Vec::new();
        for (j, member) in outcome.front.members.iter().enumerate() {
            let rel = format!("genes/graph{idx:02}_member{j:03}.json");
            let rb = template.clone().with_consequents(&member.genes)?;
            mb.write_output(&rel, rb.to_json_string().as_bytes())?;
            rows.push((member.clone(), rel));
        }
        mb.write_output(
            &format!("pareto_{idx:02}.csv"),
            &exports::pareto_csv(&rows)?,
        )?;
        mb.write_output(
            &format!("stats_{idx:02}.csv"),
            &exports::gen_stats_csv(&outcome.stats)?,
        )?;
    }

    mb.write_output(
        "rulebase.json",
        learned.rulebase.to_json_string().as_bytes(),
    )?;
    mb.stage_done("export");
    mb.finish(version)?;
    println!(
        "trained rule base over {} graph(s) -> {}",
        corpus.len(),
        cfg.out_dir.join("rulebase.json").display()
    );
    Ok(())
}
