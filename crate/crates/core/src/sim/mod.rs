//! The online scheduling loop and its discrete-event simulation.
//!
//! Each decision step takes the most urgent ready task (smallest
//! deadline-minus-WCET slack), predicts the post-assignment core state for
//! every (core, V/F) candidate, scores the candidates with the configured
//! policy (the fuzzy network by default), commits the argmin and repeats.
//! Candidates on busy cores queue behind them: a candidate's start is
//! `max(data-ready time, core free time)`, with no gap insertion.
//!
//! Predictions are evaluated against the trajectory of already-committed
//! work: the candidate's window is re-simulated on top of the committed
//! timeline with neighbor temperatures evolving at committed event
//! boundaries. Committing an assignment re-chunks the global timeline, and
//! the final reported metrics always come from one authoritative replay of
//! the complete schedule.

mod trajectory;
mod validate;

pub use validate::{critical_path_bound, validate_schedule, Violation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::fuzzy::{FiringStats, FuzzyError, RuleBase, StateVector};
use crate::graphs::{AppGraph, ArchGraph, GraphError};
use crate::physics::{self, CoreState, PhysicsError};
use crate::rng;

use trajectory::{CoreRun, Platform, RunTable, Timeline};

const NOISE_TAG: u64 = 0x4e4f_4953; // "NOIS"
const RANDOM_POLICY_TAG: u64 = 0x5052_4e44; // "PRND"

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scheduler configuration invalid: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("cooling cannot reach t_max = {t_max} K: idle steady state is {t_inf} K")]
    Uncoolable { t_inf: f64, t_max: f64 },
}

/// Where along a task's execution its failure rate is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LambdaSampling {
    /// End-of-task temperature (conservative; the default).
    #[default]
    TaskEnd,
    /// Temperature at the task's midpoint.
    Midpoint,
}

/// Which end of the degree scale wins the selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DegreePolarity {
    /// Select the candidate with the lowest degree (the default).
    #[default]
    LowerIsBetter,
    /// Select the candidate with the highest degree.
    HigherIsBetter,
}

/// Gaussian measurement noise injected into the predicted temperature and
/// power components before scoring (a sensor-uncertainty fixture; the
/// authoritative physics stay noise-free).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// Upper bound on one thermal integration chunk, seconds.
    pub max_step: f64,
    /// Thermal cap enabling cooling slacks, kelvin.
    pub t_max: Option<f64>,
    pub polarity: DegreePolarity,
    pub lambda_sampling: LambdaSampling,
    pub noise: Option<NoiseConfig>,
    /// Record a per-chunk trace during the final replay.
    pub trace: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            max_step: 10e-3,
            t_max: None,
            polarity: DegreePolarity::LowerIsBetter,
            lambda_sampling: LambdaSampling::TaskEnd,
            noise: None,
            trace: false,
        }
    }
}

/// Scoring policies. The fuzzy network is the method under study; the rest
/// are in-repo comparison baselines sharing the same loop and predictions.
#[derive(Debug, Clone)]
pub enum Policy<'a> {
    Fnn(&'a RuleBase),
    /// Earliest finish time.
    GreedyEft,
    /// Weighted sum of (finish seconds, normalized power, temperature,
    /// failure rate).
    WeightedSum([f64; 4]),
    /// Uniform random choice, seeded.
    Random(u64),
}

/// One scored hypothetical placement.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub core_idx: usize,
    pub vf_index: usize,
    pub start: f64,
    pub finish: f64,
    /// Normalized, clamped post-assignment state fed to the policy.
    pub predicted: StateVector,
    /// Model-side values before normalization.
    pub raw_end_temp: f64,
    pub raw_power: f64,
    pub raw_gsfr: f64,
    /// Policy score; lower wins after polarity is applied.
    pub degree: f64,
}

/// One committed assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub task_id: String,
    pub core_id: String,
    pub vf_index: usize,
    pub start: f64,
    pub finish: f64,
}

/// Per-chunk trace sample (slice rows carry the chunk-average power, so
/// summing `power · Δt` reproduces the energy accounting exactly).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub core: String,
    pub event: String,
    pub temp: f64,
    pub power: f64,
}

/// Outcome of one simulated schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimResult {
    pub records: Vec<ScheduleRecord>,
    pub makespan: f64,
    pub avg_power: f64,
    pub peak_temp: f64,
    pub avg_temp: f64,
    pub gsfr: f64,
    pub per_core_utilization: Vec<f64>,
    pub deadline_misses: usize,
    pub fired_rules: Option<FiringStats>,
    #[serde(skip)]
    pub trace: Option<Vec<TraceRow>>,
}

impl SimResult {
    /// Objective vector under minimization: execution time, average
    /// temperature, average power, GSFR.
    pub fn cost(&self) -> [f64; 4] {
        [self.makespan, self.avg_temp, self.avg_power, self.gsfr]
    }
}

/// Smallest idle delay after which executing for `exec` seconds at `vf`
/// ends exactly at `t_max`, starting from `t_now`, with neighbor
/// temperatures frozen in `nbr`. This inverts the closed-form idle
/// relaxation followed by the closed-form heating run. Returns 0 when no
/// delay is needed and `Uncoolable` when idling can never reach the target
/// (idle steady state at or above `t_max`, or the run itself overshoots
/// from any reachable start temperature).
pub fn cooling_delay_closed_form(
    t_now: f64,
    exec: f64,
    vf: &crate::graphs::VfLevel,
    nbr: &physics::NeighborCoupling,
    th: &physics::ThermalSpec,
    pw: &physics::PowerParams,
    t_max: f64,
) -> Result<f64, SimError> {
    let t_inf_idle = physics::steady_state_temp(0.0, nbr, th, pw)?;
    if t_inf_idle >= t_max {
        return Err(SimError::Uncoolable {
            t_inf: t_inf_idle,
            t_max,
        });
    }
    let dyn_p = physics::dynamic_power(vf, pw);
    let t_inf_run = physics::steady_state_temp(dyn_p, nbr, th, pw)?;
    let a = physics::thermal_rate(th, pw, nbr.g_sum);
    // Start temperature from which the run ends exactly at t_max.
    let t_target = t_inf_run + (t_max - t_inf_run) * (a * exec).exp();
    if t_now <= t_target {
        return Ok(0.0);
    }
    if t_target <= t_inf_idle {
        return Err(SimError::Uncoolable {
            t_inf: t_inf_idle,
            t_max,
        });
    }
    Ok(((t_now - t_inf_idle) / (t_target - t_inf_idle)).ln() / a)
}

/// Order ready tasks by urgency: ascending deadline-minus-WCET slack. Tasks
/// without deadlines (infinite slack) fall back to descending WCET; residual
/// ties break on the task id.
pub fn urgency_order(app: &AppGraph, ready: &[usize]) -> Vec<usize> {
    let mut out = ready.to_vec();
    out.sort_by(|&a, &b| {
        let (ta, tb) = (app.task(a), app.task(b));
        let (wa, wb) = (ta.max_wcet(), tb.max_wcet());
        let sa = ta.deadline_or_inf() - wa;
        let sb = tb.deadline_or_inf() - wb;
        sa.total_cmp(&sb)
            .then_with(|| {
                if sa.is_infinite() && sb.is_infinite() {
                    wb.total_cmp(&wa)
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .then_with(|| ta.id.cmp(&tb.id))
    });
    out
}

/// The stepwise scheduling engine. [`schedule_online`] and
/// [`baseline_schedule`] drive it to completion; tests can also probe
/// readiness, candidates and commits one decision at a time.
pub struct SimEngine<'a> {
    app: &'a AppGraph,
    arch: &'a ArchGraph,
    cfg: SchedulerConfig,
    platform: Platform<'a>,
    runs: RunTable,
    records: Vec<ScheduleRecord>,
    scheduled: Vec<bool>,
    n_scheduled: usize,
    finish_time: Vec<f64>,
    core_of: Vec<usize>,
    busy_until: Vec<f64>,
    busy_accum: Vec<f64>,
    timeline: Option<Timeline>,
    noise_rng: Option<ChaCha8Rng>,
    stats: FiringStats,
}

impl<'a> SimEngine<'a> {
    pub fn new(
        app: &'a AppGraph,
        arch: &'a ArchGraph,
        cfg: SchedulerConfig,
    ) -> Result<Self, SimError> {
        if app.n_tasks() == 0 {
            return Err(SimError::Config("application graph has no tasks".into()));
        }
        arch.validate()?;
        for task in app.tasks() {
            let runnable = arch
                .cores
                .iter()
                .any(|c| task.wcet.contains_key(&c.core_class));
            if !runnable {
                return Err(SimError::Config(format!(
                    "task {:?} has no WCET entry for any core class in the architecture",
                    task.id
                )));
            }
        }
        let platform = Platform::new(arch)?;
        let noise_rng = cfg
            .noise
            .filter(|n| n.sigma > 0.0)
            .map(|n| rng::stream(n.seed, NOISE_TAG));
        Ok(SimEngine {
            app,
            arch,
            cfg,
            platform,
            runs: RunTable::new(arch.n_cores()),
            records: Vec::with_capacity(app.n_tasks()),
            scheduled: vec![false; app.n_tasks()],
            n_scheduled: 0,
            finish_time: vec![0.0; app.n_tasks()],
            core_of: vec![usize::MAX; app.n_tasks()],
            busy_until: vec![0.0; arch.n_cores()],
            busy_accum: vec![0.0; arch.n_cores()],
            timeline: None,
            noise_rng,
            stats: FiringStats::new(0),
        })
    }

    pub fn is_done(&self) -> bool {
        self.n_scheduled == self.app.n_tasks()
    }

    /// Assignments committed so far, in decision order.
    pub fn records(&self) -> &[ScheduleRecord] {
        &self.records
    }

    /// Unscheduled tasks whose predecessors are all committed.
    pub fn ready(&self) -> Vec<usize> {
        self.app.ready_indices(&self.scheduled)
    }

    /// The most urgent ready task.
    pub fn next_urgent(&self) -> Option<usize> {
        let ready = self.ready();
        if ready.is_empty() {
            return None;
        }
        Some(urgency_order(self.app, &ready)[0])
    }

    /// Execution time of `task` on `core` at V/F level `vf`: nominal WCET
    /// times the class hetero factor, scaled by nominal-over-actual
    /// frequency.
    pub fn exec_time(&self, task: usize, core: usize, vf: usize) -> Option<f64> {
        let spec = &self.arch.cores[core];
        let base = self.app.task(task).wcet_on_class(&spec.core_class)?;
        let level = &spec.vf_levels[vf];
        Some(base * spec.nominal_frequency() / level.frequency)
    }

    /// Earliest time the task's inputs are available on `core`: predecessor
    /// finish plus communication cost, waived for same-core producers.
    fn data_ready(&self, task: usize, core: usize) -> f64 {
        self.app
            .preds(task)
            .iter()
            .map(|&(p, comm)| {
                debug_assert!(self.scheduled[p]);
                let delay = if self.core_of[p] == core { 0.0 } else { comm };
                self.finish_time[p] + delay
            })
            .fold(0.0, f64::max)
    }

    fn timeline(&mut self) -> Result<&Timeline, SimError> {
        if self.timeline.is_none() {
            let horizon = self.runs.horizon();
            self.timeline = Some(trajectory::replay(
                &self.platform,
                &self.runs,
                self.app.n_tasks(),
                horizon,
                self.cfg.max_step,
                self.cfg.lambda_sampling,
                None,
            )?);
        }
        Ok(self.timeline.as_ref().expect("just built"))
    }

    /// Predict the post-assignment state for placing `task` on
    /// (`core`, `vf`), with an extra start delay (cooling slack).
    pub fn predict(
        &mut self,
        task: usize,
        core: usize,
        vf: usize,
        delay: f64,
    ) -> Result<Option<Candidate>, SimError> {
        let Some(exec) = self.exec_time(task, core, vf) else {
            return Ok(None);
        };
        let start = self.data_ready(task, core).max(self.busy_until[core]) + delay;
        let finish = start + exec;
        let hyp = CoreRun {
            task,
            vf,
            start,
            finish,
        };
        let max_step = self.cfg.max_step;
        let sampling = self.cfg.lambda_sampling;
        let (lambda_weighted, exe_total) = {
            let t = self.timeline()?;
            (t.totals.lambda_weighted, t.totals.exe_total)
        };
        let timeline = self.timeline.as_ref().expect("cached");
        let (end_temp, lam) = timeline.window_with_candidate(
            &self.platform,
            &self.runs,
            &hyp,
            core,
            max_step,
            sampling,
        )?;
        let level = &self.arch.cores[core].vf_levels[vf];
        let raw_power = physics::power(level, end_temp, &self.arch.power);
        let raw_gsfr = (lambda_weighted + lam * exec) / (exe_total + exec);
        let utilization = (self.busy_accum[core] + exec) / finish;

        let ranges = &self.arch.ranges;
        let mut theta_n = end_temp / ranges.theta_max;
        let mut p_n = raw_power / ranges.p_max;
        if let Some(noise_rng) = self.noise_rng.as_mut() {
            let sigma = self.cfg.noise.expect("noise configured").sigma;
            theta_n += sigma * rng::gaussian(noise_rng);
            p_n += sigma * rng::gaussian(noise_rng);
        }
        let predicted = StateVector::clamped(
            utilization / ranges.u_max,
            p_n,
            theta_n,
            raw_gsfr / ranges.lambda_max,
        );
        Ok(Some(Candidate {
            core_idx: core,
            vf_index: vf,
            start,
            finish,
            predicted,
            raw_end_temp: end_temp,
            raw_power,
            raw_gsfr,
            degree: f64::NAN,
        }))
    }

    /// All candidate placements of `task` in (core, V/F) order.
    pub fn candidates(&mut self, task: usize, delay: f64) -> Result<Vec<Candidate>, SimError> {
        let mut out = Vec::new();
        for core in 0..self.arch.n_cores() {
            for vf in 0..self.arch.cores[core].vf_levels.len() {
                if let Some(cand) = self.predict(task, core, vf, delay)? {
                    out.push(cand);
                }
            }
        }
        if out.is_empty() {
            return Err(SimError::Config(format!(
                "task {:?} has no runnable candidate",
                self.app.task(task).id
            )));
        }
        Ok(out)
    }

    /// Commit a candidate assignment.
    pub fn commit(&mut self, task: usize, cand: &Candidate) {
        debug_assert!(!self.scheduled[task]);
        let core = cand.core_idx;
        self.runs.push(
            core,
            CoreRun {
                task,
                vf: cand.vf_index,
                start: cand.start,
                finish: cand.finish,
            },
        );
        self.records.push(ScheduleRecord {
            task_id: self.app.task(task).id.clone(),
            core_id: self.arch.cores[core].id.clone(),
            vf_index: cand.vf_index,
            start: cand.start,
            finish: cand.finish,
        });
        self.scheduled[task] = true;
        self.n_scheduled += 1;
        self.finish_time[task] = cand.finish;
        self.core_of[task] = core;
        self.busy_until[core] = cand.finish;
        self.busy_accum[core] += cand.finish - cand.start;
        self.timeline = None;
    }

    /// Smallest idle delay after which the coolest candidate's predicted
    /// end-of-task temperature falls to `t_max`, from the closed-form
    /// inversion of the idle relaxation (neighbor temperatures frozen at the
    /// candidate start). Errors when idling cannot reach the target.
    pub fn cooling_delay(&mut self, cands: &[Candidate], t_max: f64) -> Result<f64, SimError> {
        let coolest = cands
            .iter()
            .min_by(|a, b| a.raw_end_temp.total_cmp(&b.raw_end_temp))
            .expect("non-empty candidate set");
        let core = coolest.core_idx;
        let max_step = self.cfg.max_step;
        self.timeline()?;
        let timeline = self.timeline.as_ref().expect("cached");
        let temps = timeline.temps_at(&self.platform, &self.runs, coolest.start, max_step)?;
        let nbr = self.platform.coupling(core, &temps);
        let level = &self.arch.cores[core].vf_levels[coolest.vf_index];
        cooling_delay_closed_form(
            temps[core],
            coolest.finish - coolest.start,
            level,
            &nbr,
            &self.arch.thermal,
            &self.arch.power,
            t_max,
        )
    }

    fn score(
        &mut self,
        policy: &Policy,
        cands: &mut [Candidate],
        random_stream: &mut Option<ChaCha8Rng>,
    ) -> Result<(), SimError> {
        match policy {
            Policy::Fnn(rb) => {
                if self.stats.rule_count() != rb.rule_count() {
                    self.stats = FiringStats::for_rulebase(rb);
                }
                for cand in cands.iter_mut() {
                    cand.degree = rb.infer(&cand.predicted, &mut self.stats)?;
                }
            }
            Policy::GreedyEft => {
                for cand in cands.iter_mut() {
                    cand.degree = cand.finish;
                }
            }
            Policy::WeightedSum(w) => {
                for cand in cands.iter_mut() {
                    let s = &cand.predicted;
                    cand.degree =
                        w[0] * cand.finish + w[1] * s.p + w[2] * s.theta + w[3] * s.lambda;
                }
            }
            Policy::Random(_) => {
                let rng = random_stream.as_mut().expect("random stream initialized");
                for cand in cands.iter_mut() {
                    cand.degree = rng.gen::<f64>();
                }
            }
        }
        Ok(())
    }

    fn selection_key(&self, policy: &Policy, cand: &Candidate) -> f64 {
        match (policy, self.cfg.polarity) {
            (Policy::Fnn(_), DegreePolarity::HigherIsBetter) => -cand.degree,
            _ => cand.degree,
        }
    }

    /// Run one decision step under the given policy.
    pub fn step(
        &mut self,
        policy: &Policy,
        random_stream: &mut Option<ChaCha8Rng>,
    ) -> Result<(), SimError> {
        let task = self
            .next_urgent()
            .ok_or_else(|| SimError::Config("no ready task".into()))?;
        let mut cands = self.candidates(task, 0.0)?;
        if let Some(t_max) = self.cfg.t_max {
            let tol = 1e-6;
            if cands.iter().all(|c| c.raw_end_temp > t_max) {
                let delay = self.cooling_delay(&cands, t_max)?;
                cands = self.candidates(task, delay)?;
            }
            // Prefer compliant candidates whenever any exist.
            if cands.iter().any(|c| c.raw_end_temp <= t_max + tol) {
                cands.retain(|c| c.raw_end_temp <= t_max + tol);
            }
        }
        self.score(policy, &mut cands, random_stream)?;
        let best = cands
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                self.selection_key(policy, a)
                    .total_cmp(&self.selection_key(policy, b))
                    .then(a.core_idx.cmp(&b.core_idx))
                    .then(a.vf_index.cmp(&b.vf_index))
            })
            .map(|(i, _)| i)
            .expect("non-empty candidates");
        let chosen = cands.swap_remove(best);
        self.commit(task, &chosen);
        Ok(())
    }

    /// Run the loop to completion and assemble the result from one
    /// authoritative replay of the committed schedule.
    pub fn run(mut self, policy: &Policy) -> Result<SimResult, SimError> {
        let mut random_stream = match policy {
            Policy::Random(seed) => Some(rng::stream(*seed, RANDOM_POLICY_TAG)),
            _ => None,
        };
        while !self.is_done() {
            self.step(policy, &mut random_stream)?;
        }
        self.finalize(policy)
    }

    fn finalize(self, policy: &Policy) -> Result<SimResult, SimError> {
        let makespan = self.runs.horizon();
        let mut trace_rows = self.cfg.trace.then(Vec::new);
        let timeline = trajectory::replay(
            &self.platform,
            &self.runs,
            self.app.n_tasks(),
            makespan,
            self.cfg.max_step,
            self.cfg.lambda_sampling,
            trace_rows.as_mut(),
        )?;
        let totals = &timeline.totals;
        let final_temps = timeline.temps.last().expect("non-empty");
        let core_states: Vec<CoreState> = (0..self.arch.n_cores())
            .map(|c| CoreState {
                temp: final_temps[c],
                busy_until: self.busy_until[c],
                lambda_time_integral: totals.per_core_lambda_weighted[c],
                exe_time_total: totals.per_core_exe[c],
                energy_total: totals.per_core_energy[c],
                utilization_busy: self.busy_accum[c],
            })
            .collect();
        let gsfr = physics::gsfr(&core_states)?;
        let deadline_misses = self
            .app
            .tasks()
            .iter()
            .enumerate()
            .filter(|(i, t)| {
                t.deadline
                    .map(|d| self.finish_time[*i] > d)
                    .unwrap_or(false)
            })
            .count();
        let fired_rules = match policy {
            Policy::Fnn(_) => Some(self.stats),
            _ => None,
        };
        Ok(SimResult {
            records: self.records,
            makespan,
            avg_power: totals.energy / makespan,
            peak_temp: totals.peak_temp,
            avg_temp: totals.temp_time_integral / (self.arch.n_cores() as f64 * makespan),
            gsfr,
            per_core_utilization: self.busy_accum.iter().map(|&b| b / makespan).collect(),
            deadline_misses,
            fired_rules,
            trace: trace_rows,
        })
    }
}

/// Schedule an application with the fuzzy network as the scoring policy.
pub fn schedule_online(
    app: &AppGraph,
    arch: &ArchGraph,
    rb: &RuleBase,
    cfg: &SchedulerConfig,
) -> Result<SimResult, SimError> {
    SimEngine::new(app, arch, cfg.clone())?.run(&Policy::Fnn(rb))
}

/// Schedule with one of the baseline policies.
pub fn baseline_schedule(
    app: &AppGraph,
    arch: &ArchGraph,
    policy: &Policy,
    cfg: &SchedulerConfig,
) -> Result<SimResult, SimError> {
    SimEngine::new(app, arch, cfg.clone())?.run(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate_synthetic, EdgeSpec, SynthConfig, Task};
    use std::collections::BTreeMap;

    fn task(id: &str, wcet_s: f64, deadline: Option<f64>) -> Task {
        Task {
            id: id.into(),
            wcet: [("big".to_string(), wcet_s), ("little".to_string(), wcet_s)].into(),
            deadline,
            hetero: BTreeMap::new(),
        }
    }

    fn rb_constant(k: f64) -> RuleBase {
        RuleBase::build_uniform(5, 4)
            .with_consequents(&vec![k; 625])
            .unwrap()
    }

    #[test]
    fn urgency_prefers_smaller_slack() {
        let app = AppGraph::from_parts(
            vec![task("A", 4.0, Some(10.0)), task("B", 5.0, Some(8.0))],
            vec![],
        )
        .unwrap();
        let order = urgency_order(&app, &[0, 1]);
        assert_eq!(order, vec![1, 0]); // slack 3 < slack 6
    }

    #[test]
    fn urgency_without_deadlines_sorts_by_descending_wcet() {
        let app = AppGraph::from_parts(
            vec![
                task("A", 1.0, None),
                task("B", 5.0, None),
                task("C", 5.0, None),
            ],
            vec![],
        )
        .unwrap();
        let order = urgency_order(&app, &[0, 1, 2]);
        assert_eq!(order, vec![1, 2, 0]); // B,C (wcet 5, id tie), then A
    }

    #[test]
    fn urgency_matches_selection_sort_oracle() {
        let cfg = SynthConfig {
            n_tasks: 6,
            seed: 33,
            ..SynthConfig::default()
        };
        let app = generate_synthetic(&cfg).unwrap();
        let ready: Vec<usize> = (0..6).collect();
        let got = urgency_order(&app, &ready);

        // O(n^2) selection-sort oracle over the same key.
        let mut remaining = ready.clone();
        let mut expect = Vec::new();
        while !remaining.is_empty() {
            let mut best = 0;
            for i in 1..remaining.len() {
                let (a, b) = (remaining[i], remaining[best]);
                let (ta, tb) = (app.task(a), app.task(b));
                let sa = ta.deadline_or_inf() - ta.max_wcet();
                let sb = tb.deadline_or_inf() - tb.max_wcet();
                let better = sa < sb || (sa == sb && ta.id < tb.id);
                if better {
                    best = i;
                }
            }
            expect.push(remaining.remove(best));
        }
        assert_eq!(got, expect);
    }

    #[test]
    fn forced_single_assignment() {
        let mut arch = ArchGraph::default_quad();
        arch.cores.truncate(1);
        arch.cores[0].neighbors.clear();
        arch.cores[0].vf_levels.truncate(1);
        let app = AppGraph::from_parts(vec![task("A", 1e-3, None)], vec![]).unwrap();
        let rb = rb_constant(0.5);
        let res = schedule_online(&app, &arch, &rb, &SchedulerConfig::default()).unwrap();
        assert_eq!(res.records.len(), 1);
        let exec = 1e-3 * 900e6 / 300e6; // one level at 300 MHz, nominal 300 MHz
                                         // Single V/F level means nominal == that level's frequency.
        let _ = exec;
        assert!((res.makespan - 1e-3).abs() < 1e-12);
        assert_eq!(res.records[0].core_id, "c0");
    }

    #[test]
    fn chain_respects_precedence() {
        let arch = ArchGraph::default_quad();
        let app = AppGraph::from_parts(
            vec![task("A", 2e-3, None), task("B", 2e-3, None)],
            vec![EdgeSpec {
                src: "A".into(),
                dst: "B".into(),
                comm: 0.0,
            }],
        )
        .unwrap();
        let rb = rb_constant(0.5);
        let res = schedule_online(&app, &arch, &rb, &SchedulerConfig::default()).unwrap();
        let a = res.records.iter().find(|r| r.task_id == "A").unwrap();
        let b = res.records.iter().find(|r| r.task_id == "B").unwrap();
        assert!(b.start >= a.finish - 1e-15);
    }

    #[test]
    fn cold_system_utilization_prediction_is_one() {
        let arch = ArchGraph::default_quad();
        let app = AppGraph::from_parts(vec![task("A", 3e-3, None)], vec![]).unwrap();
        let mut engine = SimEngine::new(&app, &arch, SchedulerConfig::default()).unwrap();
        let cand = engine.predict(0, 0, 0, 0.0).unwrap().unwrap();
        // busy and elapsed both equal the execution span.
        assert!((cand.predicted.u - 1.0).abs() < 1e-12);
        assert_eq!(cand.start, 0.0);
    }

    #[test]
    fn hotter_core_predicts_higher_theta() {
        let arch = ArchGraph::default_quad();
        // Heat core 0 with a long prior task, then compare predictions for a
        // new source task on core 0 vs core 1.
        let app = AppGraph::from_parts(
            vec![task("HEAT", 50e-3, None), task("X", 5e-3, None)],
            vec![],
        )
        .unwrap();
        let mut engine = SimEngine::new(&app, &arch, SchedulerConfig::default()).unwrap();
        let heat = engine.predict(0, 0, 2, 0.0).unwrap().unwrap();
        engine.commit(0, &heat);
        let on_hot = engine.predict(1, 0, 0, 0.0).unwrap().unwrap(); // queues after HEAT
        let on_cold = engine.predict(1, 1, 0, 0.0).unwrap().unwrap();
        assert!(
            on_hot.raw_end_temp > on_cold.raw_end_temp,
            "{} vs {}",
            on_hot.raw_end_temp,
            on_cold.raw_end_temp
        );
    }

    #[test]
    fn schedule_is_deterministic() {
        let cfg = SynthConfig {
            n_tasks: 12,
            seed: 5,
            ..SynthConfig::default()
        };
        let app = generate_synthetic(&cfg).unwrap();
        let arch = ArchGraph::default_quad();
        let mut genes = vec![0.0; 625];
        for (i, g) in genes.iter_mut().enumerate() {
            *g = (i as f64 * 0.37) % 1.0;
        }
        let rb = RuleBase::build_uniform(5, 4)
            .with_consequents(&genes)
            .unwrap();
        let scfg = SchedulerConfig::default();
        let a = schedule_online(&app, &arch, &rb, &scfg).unwrap();
        let b = schedule_online(&app, &arch, &rb, &scfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn random_policy_is_seed_deterministic() {
        let cfg = SynthConfig {
            n_tasks: 10,
            seed: 8,
            ..SynthConfig::default()
        };
        let app = generate_synthetic(&cfg).unwrap();
        let arch = ArchGraph::default_quad();
        let scfg = SchedulerConfig::default();
        let a = baseline_schedule(&app, &arch, &Policy::Random(3), &scfg).unwrap();
        let b = baseline_schedule(&app, &arch, &Policy::Random(3), &scfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = baseline_schedule(&app, &arch, &Policy::Random(4), &scfg).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn greedy_eft_matches_weighted_time_only() {
        let cfg = SynthConfig {
            n_tasks: 15,
            seed: 21,
            ..SynthConfig::default()
        };
        let app = generate_synthetic(&cfg).unwrap();
        let arch = ArchGraph::default_quad();
        let scfg = SchedulerConfig::default();
        let eft = baseline_schedule(&app, &arch, &Policy::GreedyEft, &scfg).unwrap();
        let ws = baseline_schedule(
            &app,
            &arch,
            &Policy::WeightedSum([1.0, 0.0, 0.0, 0.0]),
            &scfg,
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&eft.records).unwrap(),
            serde_json::to_string(&ws.records).unwrap()
        );
    }

    #[test]
    fn noise_perturbs_predictions_deterministically() {
        let cfg = SynthConfig {
            n_tasks: 10,
            seed: 2,
            ..SynthConfig::default()
        };
        let app = generate_synthetic(&cfg).unwrap();
        let arch = ArchGraph::default_quad();
        let rb = rb_constant(0.4);
        let noisy = SchedulerConfig {
            noise: Some(NoiseConfig {
                sigma: 0.05,
                seed: 77,
            }),
            ..SchedulerConfig::default()
        };
        let a = schedule_online(&app, &arch, &rb, &noisy).unwrap();
        let b = schedule_online(&app, &arch, &rb, &noisy).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn cooling_slack_cases() {
        let arch = ArchGraph::default_quad();
        let app = AppGraph::from_parts(
            vec![task("W", 80e-3, None), task("X", 10e-3, None)],
            vec![EdgeSpec {
                src: "W".into(),
                dst: "X".into(),
                comm: 0.0,
            }],
        )
        .unwrap();

        // Generous cap: no delay needed anywhere.
        let lax = SchedulerConfig {
            t_max: Some(1000.0),
            ..SchedulerConfig::default()
        };
        let mut engine = SimEngine::new(&app, &arch, lax).unwrap();
        let w = engine.predict(0, 0, 2, 0.0).unwrap().unwrap();
        engine.commit(0, &w);
        let cands = engine.candidates(1, 0.0).unwrap();
        assert_eq!(engine.cooling_delay(&cands, 1000.0).unwrap(), 0.0);

        // Impossible cap below the idle steady state.
        let err = engine.cooling_delay(&cands, 300.0).unwrap_err();
        assert!(matches!(err, SimError::Uncoolable { .. }));
    }

    #[test]
    fn cooling_delay_matches_bisection_oracle() {
        use crate::graphs::VfLevel;
        use crate::physics::{self, NeighborCoupling, PowerParams, ThermalSpec};

        // Constants with a cool idle steady state so a finite delay exists.
        let th = ThermalSpec {
            c: 0.03,
            g: 0.3,
            t_amb: 293.0,
        };
        let pw = PowerParams {
            c_eff: 1e-8,
            alpha: 0.05,
            beta: -5.0,
        };
        let vf = VfLevel {
            voltage: 1.2,
            frequency: 900e6,
        };
        let nbr = NeighborCoupling::from_pairs(&[(0.1, 330.0), (0.1, 320.0), (0.1, 310.0)]);
        let (t_now, exec, t_max) = (390.0, 20e-3, 370.0);

        let delay = cooling_delay_closed_form(t_now, exec, &vf, &nbr, &th, &pw, t_max).unwrap();
        assert!(delay > 0.0);

        // Bisection on temp_after: idle for d, then run for exec, same
        // frozen coupling.
        let end_temp = |d: f64| -> f64 {
            let cooled = physics::temp_after(t_now, d, None, &nbr, &th, &pw).unwrap();
            physics::temp_after(cooled, exec, Some(&vf), &nbr, &th, &pw).unwrap()
        };
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        assert!(end_temp(lo) > t_max && end_temp(hi) < t_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if end_temp(mid) > t_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(
            (delay - hi).abs() < 1e-9,
            "closed form {delay} vs bisection {hi}"
        );
        assert!((end_temp(delay) - t_max).abs() < 1e-9);

        // No delay needed when the target is already met.
        let zero = cooling_delay_closed_form(300.0, exec, &vf, &nbr, &th, &pw, 400.0).unwrap();
        assert_eq!(zero, 0.0);

        // Idle steady state above the cap: uncoolable.
        let err = cooling_delay_closed_form(t_now, exec, &vf, &nbr, &th, &pw, 250.0).unwrap_err();
        assert!(matches!(err, SimError::Uncoolable { .. }));
    }

    #[test]
    fn polarity_flip_equals_inverted_consequents() {
        // With the consequent sum being a convex combination, inverting
        // every consequent maps the degree y to 1 - y, so argmax over the
        // original equals argmin over the inverted rule base.
        let cfg = SynthConfig {
            n_tasks: 14,
            seed: 44,
            ..SynthConfig::default()
        };
        let app = generate_synthetic(&cfg).unwrap();
        let arch = ArchGraph::default_quad();
        let mut rng_genes = vec![0.0; 625];
        for (i, g) in rng_genes.iter_mut().enumerate() {
            *g = ((i * 7919) % 1000) as f64 / 1000.0;
        }
        let rb = RuleBase::build_uniform(5, 4)
            .with_consequents(&rng_genes)
            .unwrap();
        let inverted: Vec<f64> = rng_genes.iter().map(|y| 1.0 - y).collect();
        let rb_inv = RuleBase::build_uniform(5, 4)
            .with_consequents(&inverted)
            .unwrap();

        let flipped_cfg = SchedulerConfig {
            polarity: DegreePolarity::HigherIsBetter,
            ..SchedulerConfig::default()
        };
        let a = schedule_online(&app, &arch, &rb, &flipped_cfg).unwrap();
        let b = schedule_online(&app, &arch, &rb_inv, &SchedulerConfig::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&a.records).unwrap(),
            serde_json::to_string(&b.records).unwrap()
        );
    }

    #[test]
    fn midpoint_sampling_sees_cooler_temperatures() {
        // A single task heating from ambient is strictly hotter at its end
        // than at its midpoint, so the midpoint-sampled failure rate is
        // lower.
        let arch = ArchGraph::default_quad();
        let app = AppGraph::from_parts(vec![task("A", 40e-3, None)], vec![]).unwrap();
        let rb = rb_constant(0.5);
        let end_cfg = SchedulerConfig::default();
        let mid_cfg = SchedulerConfig {
            lambda_sampling: LambdaSampling::Midpoint,
            ..SchedulerConfig::default()
        };
        let end = schedule_online(&app, &arch, &rb, &end_cfg).unwrap();
        let mid = schedule_online(&app, &arch, &rb, &mid_cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&end.records).unwrap(),
            serde_json::to_string(&mid.records).unwrap()
        );
        assert!(
            mid.gsfr < end.gsfr,
            "midpoint {} vs end {}",
            mid.gsfr,
            end.gsfr
        );
    }

    #[test]
    fn thermal_cap_filters_candidates() {
        // Long tasks at the top operating point would exceed the cap; with
        // t_max set the engine must keep committed end-of-task predictions
        // at or under it (up to the re-prediction tolerance).
        let cfg = SynthConfig {
            n_tasks: 20,
            seed: 77,
            wcet_range: (40e-3, 80e-3),
            ..SynthConfig::default()
        };
        let app = generate_synthetic(&cfg).unwrap();
        let arch = ArchGraph::default_quad();
        let rb = rb_constant(0.5);

        let uncapped = schedule_online(&app, &arch, &rb, &SchedulerConfig::default()).unwrap();
        assert!(uncapped.peak_temp > 405.0, "workload too cool to exercise the cap");

        let capped_cfg = SchedulerConfig {
            t_max: Some(405.0),
            ..SchedulerConfig::default()
        };
        let capped = schedule_online(&app, &arch, &rb, &capped_cfg).unwrap();
        assert!(validate_schedule(&app, &arch, &capped).is_empty());
        assert!(
            capped.peak_temp < uncapped.peak_temp,
            "cap did not reduce the peak: {} vs {}",
            capped.peak_temp,
            uncapped.peak_temp
        );
    }

    #[test]
    fn chain_without_freedom_same_makespan_for_eft_and_fnn() {
        // One core, one V/F level: every policy is forced into the same
        // serial schedule.
        let mut arch = ArchGraph::default_quad();
        arch.cores.truncate(1);
        arch.cores[0].neighbors.clear();
        arch.cores[0].vf_levels.truncate(1);
        let app = AppGraph::from_parts(
            vec![
                task("A", 2e-3, None),
                task("B", 3e-3, None),
                task("C", 1e-3, None),
            ],
            vec![
                EdgeSpec {
                    src: "A".into(),
                    dst: "B".into(),
                    comm: 1e-4,
                },
                EdgeSpec {
                    src: "B".into(),
                    dst: "C".into(),
                    comm: 1e-4,
                },
            ],
        )
        .unwrap();
        let cfg = SchedulerConfig::default();
        let rb = rb_constant(0.3);
        let fnn = schedule_online(&app, &arch, &rb, &cfg).unwrap();
        let eft = baseline_schedule(&app, &arch, &Policy::GreedyEft, &cfg).unwrap();
        assert_eq!(fnn.makespan, eft.makespan);
    }

    #[test]
    fn empty_graph_rejected() {
        let arch = ArchGraph::default_quad();
        let app = AppGraph::from_parts(vec![], vec![]).unwrap();
        match SimEngine::new(&app, &arch, SchedulerConfig::default()) {
            Err(SimError::Config(_)) => {}
            Err(other) => panic!("unexpected error {other:?}"),
            Ok(_) => panic!("empty graph accepted"),
        }
    }
}
