//! `mpsched generate`: emit synthetic application graphs.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use mpsched_core::graphs::{generate_synthetic, SynthConfig, SynthShape};
use mpsched_core::rng;

use crate::error::CliError;
use crate::manifest::{load_config, ManifestBuilder};

use super::ensure_out_dir;

const GRAPH_SEED_TAG: u64 = 0x47_454e; // "GEN"

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Config file (or a manifest from a previous `generate` run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (required: no hidden entropy).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generate one graph with this many tasks.
    #[arg(long)]
    pub n: Option<usize>,
    /// Generate a corpus of this many graphs instead.
    #[arg(long)]
    pub corpus: Option<usize>,
    /// Smallest corpus graph.
    #[arg(long)]
    pub min: Option<usize>,
    /// Largest corpus graph.
    #[arg(long)]
    pub max: Option<usize>,
    /// Layer width (defaults to roughly sqrt(n)).
    #[arg(long)]
    pub width: Option<usize>,
    /// Layer count (defaults to n / width).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Communication-to-computation ratio.
    #[arg(long)]
    pub ccr: Option<f64>,
    #[arg(long)]
    pub wcet_min: Option<f64>,
    #[arg(long)]
    pub wcet_max: Option<f64>,
    /// Deadline factor over the downstream critical path.
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub n: Option<usize>,
    pub corpus: Option<usize>,
    pub min: usize,
    pub max: usize,
    pub width: Option<usize>,
    pub depth: Option<usize>,
    pub ccr: f64,
    pub wcet_min: f64,
    pub wcet_max: f64,
    pub hetero_min: f64,
    pub hetero_max: f64,
    pub rho: f64,
    pub classes: Vec<String>,
}

impl GenerateArgs {
    pub fn resolve(&self) -> Result<GenerateConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config::<GenerateConfig>(path, "generate")?,
            None => {
                let defaults = SynthConfig::default();
                GenerateConfig {
                    seed: 0,
                    out_dir: PathBuf::from("."),
                    n: None,
                    corpus: None,
                    min: 6,
                    max: 85,
                    width: None,
                    depth: None,
                    ccr: 0.3,
                    wcet_min: defaults.wcet_range.0,
                    wcet_max: defaults.wcet_range.1,
                    hetero_min: defaults.hetero_range.0,
                    hetero_max: defaults.hetero_range.1,
                    rho: defaults.deadline_rho,
                    classes: defaults.classes,
                }
            }
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
        if self.n.is_some() {
            cfg.n = self.n;
        }
        if self.corpus.is_some() {
            cfg.corpus = self.corpus;
        }
        if let Some(v) = self.min {
            cfg.min = v;
        }
        if let Some(v) = self.max {
            cfg.max = v;
        }
        if self.width.is_some() {
            cfg.width = self.width;
        }
        if self.depth.is_some() {
            cfg.depth = self.depth;
        }
        if let Some(v) = self.ccr {
            cfg.ccr = v;
        }
        if let Some(v) = self.wcet_min {
            cfg.wcet_min = v;
        }
        if let Some(v) = self.wcet_max {
            cfg.wcet_max = v;
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        match (cfg.n, cfg.corpus) {
            (Some(_), Some(_)) => Err(CliError::Validation(
                "--n and --corpus are mutually exclusive".into(),
            )),
            (None, None) => Err(CliError::Validation(
                "one of --n or --corpus is required".into(),
            )),
            _ => Ok(cfg),
        }
    }
}

fn synth_config(cfg: &GenerateConfig, n: usize, seed: u64) -> SynthConfig {
    let shape = match (cfg.width, cfg.depth) {
        (None, None) => {
            let width = (n as f64).sqrt().ceil() as usize;
            SynthShape {
                width,
                depth: n.div_ceil(width),
                ccr: cfg.ccr,
            }
        }
        (w, d) => {
            let width = w.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize);
            SynthShape {
                width,
                depth: d.unwrap_or_else(|| n.div_ceil(width)),
                ccr: cfg.ccr,
            }
        }
    };
    SynthConfig {
        n_tasks: n,
        seed,
        shape: Some(shape),
        classes: cfg.classes.clone(),
        wcet_range: (cfg.wcet_min, cfg.wcet_max),
        hetero_range: (cfg.hetero_min, cfg.hetero_max),
        deadline_rho: cfg.rho,
    }
}

/// Corpus sizes spread evenly across [min, max].
pub fn corpus_sizes(count: usize, min: usize, max: usize) -> Vec<usize> {
    if count <= 1 {
        return vec![min];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            (min as f64 + t * (max as f64 - min as f64)).round() as usize
        })
        .collect()
}

pub fn run(args: &GenerateArgs, version: &str) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    ensure_out_dir(&cfg.out_dir)?;
    let mut mb = ManifestBuilder::new("generate", &cfg, &cfg.out_dir)?;

    let jobs: Vec<(String, usize, u64)> = match (cfg.n, cfg.corpus) {
        (Some(n), None) => {
            if n < 1 {
                return Err(CliError::Validation("--n must be >= 1".into()));
            }
            vec![(
                format!("graph_n{n}.json"),
                n,
                rng::derive2(cfg.seed, GRAPH_SEED_TAG, 0),
            )]
        }
        (None, Some(count)) => {
            if count == 0 {
                return Err(CliError::Validation("--corpus must be >= 1".into()));
            }
            if cfg.min < 1 || cfg.max < cfg.min {
                return Err(CliError::Validation(
                    "need 1 <= --min <= --max for a corpus".into(),
                ));
            }
            corpus_sizes(count, cfg.min, cfg.max)
                .into_iter()
                .enumerate()
                .map(|(i, n)| {
                    (
                        format!("corpus_{i:02}_n{n}.json"),
                        n,
                        rng::derive2(cfg.seed, GRAPH_SEED_TAG, i as u64),
                    )
                })
                .collect()
        }
        _ => unreachable!("validated in resolve"),
    };

    for (name, n, seed) in &jobs {
        let graph = generate_synthetic(&synth_config(&cfg, *n, *seed))?;
        let text = graph.to_json_string();
        mb.write_output(name, text.as_bytes())?;
        let weights: Vec<f64> = graph.tasks().iter().map(|t| t.max_wcet()).collect();
        println!(
            "wrote {name}: {} tasks, {} edges, critical path {:.6e} s",
            graph.n_tasks(),
            graph.edges().len(),
            graph.critical_path(&weights)
        );
    }
    mb.stage_done("generate");
    mb.finish(version)
}
