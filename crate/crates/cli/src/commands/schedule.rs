//! `mpsched schedule`: run one application through a scheduling policy and
//! export the simulation result, Gantt data and rule report.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use mpsched_core::sim::{
    baseline_schedule, schedule_online, validate_schedule, SchedulerConfig, SimResult,
};

use crate::error::CliError;
use crate::exports;
use crate::manifest::{load_config, ManifestBuilder};

use super::{ensure_out_dir, load_app, load_arch, load_rulebase, OwnedPolicy};

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Config file (or a manifest from a previous `schedule` run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Application graph JSON.
    #[arg(long)]
    pub app: Option<PathBuf>,
    /// Architecture JSON (builtin quad-core platform when omitted).
    #[arg(long)]
    pub arch: Option<PathBuf>,
    /// Trained rule base (required for the fnn policy).
    #[arg(long)]
    pub rulebase: Option<PathBuf>,
    /// fnn | greedy-eft | weighted-sum | random
    #[arg(long)]
    pub policy: Option<String>,
    /// Weights for weighted-sum: finish,power,temperature,gsfr.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub weights: Option<Vec<f64>>,
    /// Seed for the random policy.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Emit a per-chunk trace CSV.
    #[arg(long)]
    pub trace: bool,
    /// Thermal cap enabling cooling slacks, kelvin.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Select the highest degree instead of the lowest.
    #[arg(long)]
    pub argmax_degree: bool,
    /// Gaussian sensor-noise sigma on predicted temperature/power.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleCmdConfig {
    pub app: PathBuf,
    pub arch: Option<PathBuf>,
    pub rulebase: Option<PathBuf>,
    pub policy: String,
    pub weights: Option<[f64; 4]>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub scheduler: SchedulerConfig,
}

impl ScheduleArgs {
    pub fn resolve(&self) -> Result<ScheduleCmdConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config::<ScheduleCmdConfig>(path, "schedule")?,
            None => {
                let app = self
                    .app
                    .clone()
                    .ok_or_else(|| CliError::Validation("--app is required".into()))?;
                ScheduleCmdConfig {
                    app,
                    arch: None,
                    rulebase: None,
                    policy: "fnn".into(),
                    weights: None,
                    seed: None,
                    out_dir: PathBuf::from("."),
                    scheduler: SchedulerConfig::default(),
                }
            }
        };
        if let Some(app) = &self.app {
            cfg.app = app.clone();
        }
        if self.arch.is_some() {
            cfg.arch = self.arch.clone();
        }
        if self.rulebase.is_some() {
            cfg.rulebase = self.rulebase.clone();
        }
        if let Some(policy) = &self.policy {
            cfg.policy = policy.clone();
        }
        if let Some(w) = &self.weights {
            cfg.weights = Some([w[0], w[1], w[2], w[3]]);
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if self.trace {
            cfg.scheduler.trace = true;
        }
        if self.t_max.is_some() {
            cfg.scheduler.t_max = self.t_max;
        }
        if let Some(v) = self.max_step {
            cfg.scheduler.max_step = v;
        }
        if self.argmax_degree {
            cfg.scheduler.polarity = mpsched_core::sim::DegreePolarity::HigherIsBetter;
        }
        if let Some(sigma) = self.noise_sigma {
            let seed = cfg
                .seed
                .ok_or_else(|| CliError::Validation("--noise-sigma needs --seed".into()))?;
            cfg.scheduler.noise = Some(mpsched_core::sim::NoiseConfig { sigma, seed });
        }
        Ok(cfg)
    }
}

pub fn result_json(result: &SimResult) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(result)?;
    text.push('\n');
    Ok(text.into_bytes())
}

pub fn run(args: &ScheduleArgs, version: &str) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    ensure_out_dir(&cfg.out_dir)?;
    let mut mb = ManifestBuilder::new("schedule", &cfg, &cfg.out_dir)?;
    let arch = load_arch(&cfg.arch, &mut mb)?;
    let app = load_app(&cfg.app, &mut mb)?;
    let rulebase = match &cfg.rulebase {
        Some(path) => Some(load_rulebase(path, &mut mb)?),
        None => None,
    };
    let policy = OwnedPolicy::parse(&cfg.policy, rulebase.as_ref(), cfg.weights, cfg.seed)?;
    mb.stage_done("load");

    let result = match &policy {
        OwnedPolicy::Fnn(rb) => schedule_online(&app, &arch, rb, &cfg.scheduler)?,
        other => baseline_schedule(&app, &arch, &other.as_policy(), &cfg.scheduler)?,
    };
    let violations = validate_schedule(&app, &arch, &result);
    if !violations.is_empty() {
        return Err(CliError::Runtime(format!(
            "produced schedule failed validation: {}",
            violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    mb.stage_done("schedule");

    mb.write_output("result.json", &result_json(&result)?)?;
    mb.write_output("gantt.csv", &exports::gantt_csv(&result)?)?;
    if let (Some(rb), Some(stats)) = (&rulebase, &result.fired_rules) {
        mb.write_output("fired_rules.csv", &exports::fired_rules_csv(rb, stats)?)?;
    }
    if let Some(trace) = &result.trace {
        mb.write_output("trace.csv", &exports::trace_csv(trace)?)?;
    }
    mb.stage_done("export");
    mb.finish(version)?;

    println!(
        "{}: makespan {:.6e} s, avg power {:.4} W, peak temp {:.2} K, avg temp {:.2} K, \
         gsfr {:.4e} /s, deadline misses {}",
        cfg.policy,
        result.makespan,
        result.avg_power,
        result.peak_temp,
        result.avg_temp,
        result.gsfr,
        result.deadline_misses
    );
    Ok(())
}
