//! CSV exports. All numbers use the shortest round-trip float form so
//! reruns are byte-identical.

use mpsched_core::evolution::{FrontMember, GenStats};
use mpsched_core::fuzzy::{FiringStats, RuleBase};
use mpsched_core::sim::{SimResult, TraceRow};

use crate::error::CliError;

fn finish(wtr: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    wtr.into_inner()
        .map_err(|e| CliError::Io(format!("flushing csv: {e}")))
}

fn f(x: f64) -> String {
    format!("{x}")
}

/// Pareto front: one row per member, pointing at its genes file.
pub fn pareto_csv(members: &[(FrontMember, String)]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "makespan_s",
        "avg_temp_K",
        "avg_power_W",
        "gsfr_per_s",
        "genes_file",
    ])
    .map_err(|e| CliError::Io(e.to_string()))?;
    for (m, genes_file) in members {
        w.write_record([
            f(m.cost[0]),
            f(m.cost[1]),
            f(m.cost[2]),
            f(m.cost[3]),
            genes_file.clone(),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    finish(w)
}

/// Per-generation population statistics.
pub fn gen_stats_csv(stats: &[GenStats]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "generation",
        "front0_size",
        "min_makespan_s",
        "min_avg_temp_K",
        "min_avg_power_W",
        "min_gsfr_per_s",
        "mean_makespan_s",
        "mean_avg_temp_K",
        "mean_avg_power_W",
        "mean_gsfr_per_s",
    ])
    .map_err(|e| CliError::Io(e.to_string()))?;
    for s in stats {
        w.write_record([
            s.generation.to_string(),
            s.front0_size.to_string(),
            f(s.min[0]),
            f(s.min[1]),
            f(s.min[2]),
            f(s.min[3]),
            f(s.mean[0]),
            f(s.mean[1]),
            f(s.mean[2]),
            f(s.mean[3]),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    finish(w)
}

/// Gantt rows for offline plotting.
pub fn gantt_csv(result: &SimResult) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["task", "core", "vf", "start", "finish"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    for r in &result.records {
        w.write_record([
            r.task_id.clone(),
            r.core_id.clone(),
            r.vf_index.to_string(),
            f(r.start),
            f(r.finish),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    finish(w)
}

/// Full rule report: antecedent labels, consequent and mean firing
/// strength of every rule (selection thresholds are left to consumers).
pub fn fired_rules_csv(rb: &RuleBase, stats: &FiringStats) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rule_index",
        "u",
        "p",
        "theta",
        "lambda",
        "consequent",
        "mean_firing_strength",
    ])
    .map_err(|e| CliError::Io(e.to_string()))?;
    for i in 0..rb.rule_count() {
        let combo = rb.antecedents_of(i);
        w.write_record([
            i.to_string(),
            rb.set_label(combo[0]),
            rb.set_label(combo[1]),
            rb.set_label(combo[2]),
            rb.set_label(combo[3]),
            f(rb.consequents()[i]),
            f(stats.mean_strength(i)),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    finish(w)
}

/// Per-chunk simulation trace.
pub fn trace_csv(rows: &[TraceRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time", "core", "event", "temp", "power"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record([
            f(r.time),
            r.core.clone(),
            r.event.clone(),
            f(r.temp),
            f(r.power),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    finish(w)
}

/// One comparison row: graph, policy and the four reported objectives.
pub struct EvalRow {
    pub graph: String,
    pub policy: String,
    pub theta: f64,
    pub power: f64,
    pub gsfr: f64,
    pub exec_time: f64,
}

pub fn eval_table_csv(rows: &[EvalRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "graph",
        "policy",
        "theta_K",
        "power_W",
        "gsfr_per_s",
        "exec_time_s",
    ])
    .map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.graph.clone(),
            r.policy.clone(),
            f(r.theta),
            f(r.power),
            f(r.gsfr),
            f(r.exec_time),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    finish(w)
}

/// Per-graph normalization by the per-objective maximum across policies,
/// so every column lies in (0, 1] and the worst policy scores exactly 1.
pub fn eval_normalized_csv(rows: &[EvalRow]) -> Result<Vec<u8>, CliError> {
    use std::collections::BTreeMap;
    let mut max_by_graph: BTreeMap<&str, [f64; 4]> = BTreeMap::new();
    for r in rows {
        let m = max_by_graph
            .entry(r.graph.as_str())
            .or_insert([f64::NEG_INFINITY; 4]);
        m[0] = m[0].max(r.theta);
        m[1] = m[1].max(r.power);
        m[2] = m[2].max(r.gsfr);
        m[3] = m[3].max(r.exec_time);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["graph", "policy", "theta", "power", "gsfr", "exec_time"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        let m = &max_by_graph[r.graph.as_str()];
        w.write_record([
            r.graph.clone(),
            r.policy.clone(),
            f(r.theta / m[0]),
            f(r.power / m[1]),
            f(r.gsfr / m[2]),
            f(r.exec_time / m[3]),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    finish(w)
}
