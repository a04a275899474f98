//! `mpsched evaluate`: run a corpus through several policies and emit
//! comparison tables.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use mpsched_core::rng;
use mpsched_core::sim::{
    baseline_schedule, schedule_online, validate_schedule, Policy, SchedulerConfig,
};

use crate::error::CliError;
use crate::exports::{self, EvalRow};
use crate::manifest::{load_config, ManifestBuilder};

use super::{
    ensure_out_dir, expand_corpus, file_stem, load_app, load_arch, load_rulebase, OwnedPolicy,
};

const EVAL_SEED_TAG: u64 = 0x4556_414c; // "EVAL"

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Config file (or a manifest from a previous `evaluate` run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (drives the random baseline per graph).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub arch: Option<PathBuf>,
    /// Evaluation graphs: files or directories of *.json.
    #[arg(long, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    /// Trained rule base (needed when evaluating fnn).
    #[arg(long)]
    pub rulebase: Option<PathBuf>,
    /// Policies to compare.
    #[arg(long, num_args = 1..)]
    pub policies: Vec<String>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub seed: u64,
    pub arch: Option<PathBuf>,
    pub corpus: Vec<PathBuf>,
    pub rulebase: Option<PathBuf>,
    pub policies: Vec<String>,
    pub out_dir: PathBuf,
    pub scheduler: SchedulerConfig,
}

impl EvaluateArgs {
    pub fn resolve(&self) -> Result<EvaluateConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config::<EvaluateConfig>(path, "evaluate")?,
            None => EvaluateConfig {
                seed: 0,
                arch: None,
                corpus: Vec::new(),
                rulebase: None,
                policies: vec![
                    "fnn".into(),
                    "greedy-eft".into(),
                    "weighted-sum".into(),
                    "random".into(),
                ],
                out_dir: PathBuf::from("."),
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
                "--seed is required (the random baseline needs it)".into(),
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
        if self.rulebase.is_some() {
            cfg.rulebase = self.rulebase.clone();
        }
        if !self.policies.is_empty() {
            cfg.policies = self.policies.clone();
        }
        if self.t_max.is_some() {
            cfg.scheduler.t_max = self.t_max;
        }
        if let Some(v) = self.max_step {
            cfg.scheduler.max_step = v;
        }
        Ok(cfg)
    }
}

pub fn run(args: &EvaluateArgs, version: &str) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    ensure_out_dir(&cfg.out_dir)?;
    let mut mb = ManifestBuilder::new("evaluate", &cfg, &cfg.out_dir)?;
    let arch = load_arch(&cfg.arch, &mut mb)?;
    let rulebase = match &cfg.rulebase {
        Some(path) => Some(load_rulebase(path, &mut mb)?),
        None => None,
    };
    let mut rows: Vec<EvalRow> = Vec::new();
    for (g_idx, path) in cfg.corpus.iter().enumerate() {
        let app = load_app(path, &mut mb)?;
        let stem = file_stem(path);
        for policy_name in &cfg.policies {
            let per_graph_seed = rng::derive2(cfg.seed, EVAL_SEED_TAG, g_idx as u64);
            let policy =
                OwnedPolicy::parse(policy_name, rulebase.as_ref(), None, Some(per_graph_seed))?;
            let result = match &policy {
                OwnedPolicy::Fnn(rb) => schedule_online(&app, &arch, rb, &cfg.scheduler)?,
                other => {
                    let p: Policy = other.as_policy();
                    baseline_schedule(&app, &arch, &p, &cfg.scheduler)?
                }
            };
            let violations = validate_schedule(&app, &arch, &result);
            if !violations.is_empty() {
                return Err(CliError::Runtime(format!(
                    "{stem}/{policy_name}: schedule failed validation: {}",
                    violations[0]
                )));
            }
            mb.write_output(
                &format!("results/{stem}__{policy_name}.json"),
                &super::schedule::result_json(&result)?,
            )?;
            rows.push(EvalRow {
                graph: stem.clone(),
                policy: policy_name.clone(),
                theta: result.avg_temp,
                power: result.avg_power,
                gsfr: result.gsfr,
                exec_time: result.makespan,
            });
        }
    }
    mb.stage_done("evaluate");
    mb.write_output("table.csv", &exports::eval_table_csv(&rows)?)?;
    mb.write_output("normalized.csv", &exports::eval_normalized_csv(&rows)?)?;
    mb.stage_done("export");
    mb.finish(version)?;
    println!(
        "evaluated {} graph(s) x {} policy(ies) -> {}",
        cfg.corpus.len(),
        cfg.policies.len(),
        cfg.out_dir.join("table.csv").display()
    );
    Ok(())
}
