//! Structural validation of produced schedules.
//!
//! Works purely from the record list: task coverage, per-core overlap,
//! precedence plus communication feasibility, execution-time consistency,
//! reported-metric sanity and the critical-path lower bound.

use std::collections::BTreeMap;
use std::fmt;

use crate::graphs::{AppGraph, ArchGraph};

use super::SimResult;

const TIME_TOL: f64 = 1e-9;

/// One validation failure, human-readable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn exec_time(app: &AppGraph, arch: &ArchGraph, task: usize, core: usize, vf: usize) -> Option<f64> {
    let spec = &arch.cores[core];
    let base = app.task(task).wcet_on_class(&spec.core_class)?;
    Some(base * spec.nominal_frequency() / spec.vf_levels[vf].frequency)
}

/// Longest-path lower bound on the makespan: every task at its fastest
/// placement (best core class at nominal frequency), communication ignored.
pub fn critical_path_bound(app: &AppGraph, arch: &ArchGraph) -> f64 {
    let weights: Vec<f64> = (0..app.n_tasks())
        .map(|t| {
            (0..arch.n_cores())
                .filter_map(|c| {
                    let best_vf = arch.cores[c].vf_levels.len() - 1;
                    exec_time(app, arch, t, c, best_vf)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    app.critical_path(&weights)
}

/// Check a simulation result against the application and architecture.
/// Returns every violation found (empty means valid).
pub fn validate_schedule(app: &AppGraph, arch: &ArchGraph, res: &SimResult) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fail = |msg: String| out.push(Violation(msg));

    // Task coverage: each task exactly once.
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &res.records {
        *seen.entry(r.task_id.as_str()).or_default() += 1;
    }
    for t in app.tasks() {
        match seen.get(t.id.as_str()) {
            None => fail(format!("task {:?} never scheduled", t.id)),
            Some(1) => {}
            Some(n) => fail(format!("task {:?} scheduled {n} times", t.id)),
        }
    }
    for id in seen.keys() {
        if app.index_of(id).is_none() {
            fail(format!("record references unknown task {id:?}"));
        }
    }

    // Record-level consistency.
    let mut finish_of: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut per_core: BTreeMap<&str, Vec<(f64, f64, &str)>> = BTreeMap::new();
    for r in &res.records {
        let Some(task) = app.index_of(&r.task_id) else {
            continue;
        };
        let Some(core) = arch.core_index(&r.core_id) else {
            fail(format!("record references unknown core {:?}", r.core_id));
            continue;
        };
        if r.vf_index >= arch.cores[core].vf_levels.len() {
            fail(format!(
                "task {:?} uses V/F index {} out of range on {:?}",
                r.task_id, r.vf_index, r.core_id
            ));
            continue;
        }
        if !r.finish.is_finite() || !r.start.is_finite() || r.finish <= r.start {
            fail(format!(
                "task {:?} has non-positive duration [{}, {}]",
                r.task_id, r.start, r.finish
            ));
        }
        match exec_time(app, arch, task, core, r.vf_index) {
            Some(exec) => {
                if ((r.finish - r.start) - exec).abs() > TIME_TOL {
                    fail(format!(
                        "task {:?} duration {} differs from model execution time {exec}",
                        r.task_id,
                        r.finish - r.start
                    ));
                }
            }
            None => fail(format!(
                "task {:?} cannot run on core class {:?}",
                r.task_id, arch.cores[core].core_class
            )),
        }
        finish_of.insert(r.task_id.as_str(), (r.finish, core));
        per_core.entry(r.core_id.as_str()).or_default().push((
            r.start,
            r.finish,
            r.task_id.as_str(),
        ));
    }

    // Per-core non-overlap.
    for (core, slots) in per_core.iter_mut() {
        slots.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in slots.windows(2) {
            if w[1].0 < w[0].1 - TIME_TOL {
                fail(format!(
                    "core {core:?}: tasks {:?} and {:?} overlap",
                    w[0].2, w[1].2
                ));
            }
        }
    }

    // Precedence and communication feasibility.
    for r in &res.records {
        let Some(task) = app.index_of(&r.task_id) else {
            continue;
        };
        let Some(core) = arch.core_index(&r.core_id) else {
            continue;
        };
        for &(p, comm) in app.preds(task) {
            let pid = &app.task(p).id;
            match finish_of.get(pid.as_str()) {
                Some(&(pfinish, pcore)) => {
                    let delay = if pcore == core { 0.0 } else { comm };
                    if r.start < pfinish + delay - TIME_TOL {
                        fail(format!(
                            "task {:?} starts at {} before predecessor {:?} data arrives at {}",
                            r.task_id,
                            r.start,
                            pid,
                            pfinish + delay
                        ));
                    }
                }
                None => fail(format!(
                    "task {:?} scheduled but predecessor {:?} is not",
                    r.task_id, pid
                )),
            }
        }
    }

    // Reported metrics.
    let max_finish = res.records.iter().map(|r| r.finish).fold(0.0f64, f64::max);
    if (res.makespan - max_finish).abs() > TIME_TOL {
        fail(format!(
            "makespan {} differs from max finish {max_finish}",
            res.makespan
        ));
    }
    for (c, &u) in res.per_core_utilization.iter().enumerate() {
        if !(0.0..=1.0 + 1e-12).contains(&u) {
            fail(format!("core {c} utilization {u} outside [0, 1]"));
        }
    }
    let bound = critical_path_bound(app, arch);
    if res.makespan < bound - TIME_TOL {
        fail(format!(
            "makespan {} below critical-path bound {bound}",
            res.makespan
        ));
    }

    // Busy-time conservation.
    let busy: f64 = res.records.iter().map(|r| r.finish - r.start).sum();
    let util_busy: f64 = res
        .per_core_utilization
        .iter()
        .map(|u| u * res.makespan)
        .sum();
    if (busy - util_busy).abs() > 1e-6 * busy.max(1.0) {
        fail(format!(
            "sum of record durations {busy} differs from utilization-implied busy time {util_busy}"
        ));
    }

    out
}
