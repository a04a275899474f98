//! Chunked thermal and accounting replay over committed task runs.
//!
//! The simulation advances in chunks delimited by task start/finish events,
//! further subdivided so no chunk exceeds `max_step`. Within a chunk each
//! core's temperature follows the closed-form RC solution with neighbor
//! temperatures frozen at the chunk start; all cores update simultaneously.
//! Energy uses the exact `∫T dt` of the closed form, so accumulated energy
//! equals the time integral of the power model over the replayed timeline.
//!
//! A task's failure rate is sampled once per run (at its finish by default,
//! optionally at its midpoint) and contributes `λ · duration` to the GSFR
//! numerator.

use crate::graphs::ArchGraph;
use crate::physics::{self, NeighborCoupling, PhysicsError};

use super::{LambdaSampling, SimError, TraceRow};

/// One committed execution of a task on a core.
#[derive(Debug, Clone)]
pub(crate) struct CoreRun {
    pub task: usize,
    pub vf: usize,
    pub start: f64,
    pub finish: f64,
}

impl CoreRun {
    fn sample_time(&self, sampling: LambdaSampling) -> f64 {
        match sampling {
            LambdaSampling::TaskEnd => self.finish,
            LambdaSampling::Midpoint => 0.5 * (self.start + self.finish),
        }
    }
}

/// Per-core runs in start-time order (per-core commits are append-only).
#[derive(Debug, Clone, Default)]
pub(crate) struct RunTable {
    pub per_core: Vec<Vec<CoreRun>>,
}

impl RunTable {
    pub fn new(n_cores: usize) -> Self {
        RunTable {
            per_core: vec![Vec::new(); n_cores],
        }
    }

    pub fn push(&mut self, core: usize, run: CoreRun) {
        if let Some(last) = self.per_core[core].last() {
            debug_assert!(run.start >= last.finish);
        }
        self.per_core[core].push(run);
    }

    pub fn horizon(&self) -> f64 {
        self.per_core
            .iter()
            .filter_map(|runs| runs.last())
            .map(|r| r.finish)
            .fold(0.0, f64::max)
    }

    /// Run active on `core` over an interval starting at `t` (the caller
    /// guarantees no run boundary lies strictly inside the interval).
    fn active_at(&self, core: usize, t: f64) -> Option<&CoreRun> {
        let runs = &self.per_core[core];
        let idx = runs.partition_point(|r| r.finish <= t);
        runs.get(idx).filter(|r| r.start <= t)
    }

    /// Event boundary times strictly inside `(lo, hi)`, ascending.
    fn event_times_within(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .per_core
            .iter()
            .flatten()
            .flat_map(|r| [r.start, r.finish])
            .filter(|&t| t > lo && t < hi)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

/// Precomputed per-core physics: exponential rate, neighbor list and the
/// dynamic power of each V/F level.
#[derive(Debug, Clone)]
struct CoreCtx {
    neighbors: Vec<(usize, f64)>,
    dyn_power: Vec<f64>,
}

/// The platform with derived per-core constants. Construction fails if any
/// core's thermal network is unstable (`a <= 0`).
#[derive(Debug, Clone)]
pub(crate) struct Platform<'a> {
    pub arch: &'a ArchGraph,
    cores: Vec<CoreCtx>,
}

impl<'a> Platform<'a> {
    pub fn new(arch: &'a ArchGraph) -> Result<Self, SimError> {
        let mut cores = Vec::with_capacity(arch.cores.len());
        for spec in &arch.cores {
            let neighbors: Vec<(usize, f64)> = spec
                .neighbors
                .iter()
                .map(|(id, &g)| {
                    let idx = arch
                        .core_index(id)
                        .ok_or_else(|| SimError::Config(format!("unknown neighbor {id:?}")))?;
                    Ok((idx, g))
                })
                .collect::<Result<_, SimError>>()?;
            let g_sum: f64 = neighbors.iter().map(|&(_, g)| g).sum();
            let rate_a = physics::thermal_rate(&arch.thermal, &arch.power, g_sum);
            if rate_a <= 0.0 {
                return Err(SimError::Physics(PhysicsError::Instability { a: rate_a }));
            }
            let dyn_power = spec
                .vf_levels
                .iter()
                .map(|vf| physics::dynamic_power(vf, &arch.power))
                .collect();
            cores.push(CoreCtx {
                neighbors,
                dyn_power,
            });
        }
        Ok(Platform { arch, cores })
    }

    pub fn n_cores(&self) -> usize {
        self.cores.len()
    }

    pub fn initial_temps(&self) -> Vec<f64> {
        vec![self.arch.thermal.t_amb; self.cores.len()]
    }

    /// Neighbor coupling of `core` with the given frozen temperatures.
    pub fn coupling(&self, core: usize, temps: &[f64]) -> NeighborCoupling {
        let mut g_sum = 0.0;
        let mut gt_sum = 0.0;
        for &(n, g) in &self.cores[core].neighbors {
            g_sum += g;
            gt_sum += g * temps[n];
        }
        NeighborCoupling { g_sum, gt_sum }
    }

    fn chunk_dyn_power(&self, core: usize, vf: Option<usize>) -> f64 {
        vf.map_or(0.0, |v| self.cores[core].dyn_power[v])
    }
}

/// Accumulated quantities of one replay.
#[derive(Debug, Clone)]
pub(crate) struct Totals {
    pub energy: f64,
    pub temp_time_integral: f64,
    pub peak_temp: f64,
    pub lambda_weighted: f64,
    pub exe_total: f64,
    pub per_task_lambda: Vec<f64>,
    pub per_core_energy: Vec<f64>,
    pub per_core_lambda_weighted: Vec<f64>,
    pub per_core_exe: Vec<f64>,
}

impl Totals {
    fn new(n_cores: usize, n_tasks: usize, t_amb: f64) -> Self {
        Totals {
            energy: 0.0,
            temp_time_integral: 0.0,
            peak_temp: t_amb,
            lambda_weighted: 0.0,
            exe_total: 0.0,
            per_task_lambda: vec![f64::NAN; n_tasks],
            per_core_energy: vec![0.0; n_cores],
            per_core_lambda_weighted: vec![0.0; n_cores],
            per_core_exe: vec![0.0; n_cores],
        }
    }
}

/// Full replay result: per-subchunk checkpoints plus accumulated totals.
#[derive(Debug, Clone)]
pub(crate) struct Timeline {
    pub times: Vec<f64>,
    pub temps: Vec<Vec<f64>>,
    pub totals: Totals,
}

/// Split `[lo, hi]` into equal subchunks no longer than `max_step`,
/// returning the interior and final boundary times.
fn subchunk_ends(lo: f64, hi: f64, max_step: f64) -> Vec<f64> {
    let span = hi - lo;
    debug_assert!(span > 0.0);
    let k = (span / max_step).ceil().max(1.0) as usize;
    (1..=k)
        .map(|j| {
            if j == k {
                hi
            } else {
                lo + span * (j as f64 / k as f64)
            }
        })
        .collect()
}

struct StepInputs<'r> {
    platform: &'r Platform<'r>,
    runs: &'r RunTable,
    /// Hypothetical run overlaid on `hyp_core` (which has no committed run
    /// overlapping the stepped span).
    hyp: Option<(&'r CoreRun, usize)>,
    max_step: f64,
    sampling: LambdaSampling,
}

#[derive(Default)]
struct StepSinks<'s> {
    checkpoints: Option<(&'s mut Vec<f64>, &'s mut Vec<Vec<f64>>)>,
    trace: Option<&'s mut Vec<TraceRow>>,
    /// Receives the hypothetical run's sampled failure rate.
    hyp_lambda: Option<&'s mut f64>,
}

/// Advance all cores over `[t0, t1]` (no run boundary strictly inside),
/// subdividing by `max_step`; updates `temps` in place and accumulates into
/// `totals`.
fn advance_interval(
    inp: &StepInputs,
    t0: f64,
    t1: f64,
    temps: &mut [f64],
    totals: &mut Totals,
    sinks: &mut StepSinks,
) -> Result<(), SimError> {
    let arch = inp.platform.arch;
    let n_cores = inp.platform.n_cores();
    let mut active: Vec<Option<&CoreRun>> = (0..n_cores)
        .map(|c| match inp.hyp {
            Some((run, core)) if core == c => Some(run).filter(|r| r.start <= t0 && t0 < r.finish),
            _ => inp.runs.active_at(c, t0),
        })
        .collect();

    let mut lo = t0;
    for hi in subchunk_ends(t0, t1, inp.max_step) {
        let dt = hi - lo;
        let frozen = temps.to_vec();
        for c in 0..n_cores {
            let run = active[c];
            let dyn_p = inp.platform.chunk_dyn_power(c, run.map(|r| r.vf));
            let nbr = inp.platform.coupling(c, &frozen);
            let (t_end, t_int) = physics::temp_step_with_integral(
                frozen[c],
                dt,
                dyn_p,
                &nbr,
                &arch.thermal,
                &arch.power,
            )?;
            let chunk_energy = dyn_p * dt + arch.power.alpha * t_int + arch.power.beta * dt;
            totals.energy += chunk_energy;
            totals.per_core_energy[c] += chunk_energy;
            totals.temp_time_integral += t_int;
            totals.peak_temp = totals.peak_temp.max(t_end);

            // λ sample crossing: rate at the sampled temperature, weighted
            // by the run's full duration.
            if let Some(r) = run {
                let sample = r.sample_time(inp.sampling);
                if lo < sample && sample <= hi {
                    let t_sample = if sample == hi {
                        t_end
                    } else {
                        physics::temp_step_with_integral(
                            frozen[c],
                            sample - lo,
                            dyn_p,
                            &nbr,
                            &arch.thermal,
                            &arch.power,
                        )?
                        .0
                    };
                    let vf = &arch.cores[c].vf_levels[r.vf];
                    let lam =
                        physics::mechanism_failure_rates(t_sample, vf, &arch.reliability)?.total();
                    let is_hyp = matches!(inp.hyp, Some((_, core)) if core == c);
                    if is_hyp {
                        if let Some(slot) = sinks.hyp_lambda.as_deref_mut() {
                            *slot = lam;
                        }
                    } else {
                        let dur = r.finish - r.start;
                        totals.lambda_weighted += lam * dur;
                        totals.exe_total += dur;
                        if r.task < totals.per_task_lambda.len() {
                            totals.per_task_lambda[r.task] = lam;
                        }
                        totals.per_core_lambda_weighted[c] += lam * dur;
                        totals.per_core_exe[c] += dur;
                    }
                }
            }

            if let Some(rows) = sinks.trace.as_deref_mut() {
                rows.push(TraceRow {
                    time: hi,
                    core: arch.cores[c].id.clone(),
                    event: "slice".into(),
                    temp: t_end,
                    power: chunk_energy / dt,
                });
            }
            temps[c] = t_end;
        }
        if let Some((times, snaps)) = sinks.checkpoints.as_mut() {
            times.push(hi);
            snaps.push(temps.to_vec());
        }
        // Runs ending exactly at `hi` stop here; runs starting at `hi`
        // belong to the next interval, which re-resolves the active set.
        for slot in active.iter_mut() {
            if let Some(r) = slot {
                if r.finish <= hi {
                    *slot = None;
                }
            }
        }
        lo = hi;
    }
    Ok(())
}

/// Replay the committed runs from a cold start (all cores at ambient) up to
/// `upto >= horizon`, producing checkpoints and totals.
pub(crate) fn replay(
    platform: &Platform,
    runs: &RunTable,
    n_tasks: usize,
    upto: f64,
    max_step: f64,
    sampling: LambdaSampling,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<Timeline, SimError> {
    let t_amb = platform.arch.thermal.t_amb;
    let mut temps = platform.initial_temps();
    let mut times = vec![0.0];
    let mut snaps = vec![temps.clone()];
    let mut totals = Totals::new(platform.n_cores(), n_tasks, t_amb);

    if let Some(rows) = trace.as_deref_mut() {
        for core in &platform.arch.cores {
            rows.push(TraceRow {
                time: 0.0,
                core: core.id.clone(),
                event: "init".into(),
                temp: t_amb,
                power: physics::idle_power(t_amb, &platform.arch.power),
            });
        }
    }

    if upto > 0.0 {
        let inp = StepInputs {
            platform,
            runs,
            hyp: None,
            max_step,
            sampling,
        };
        let mut boundaries = runs.event_times_within(0.0, upto);
        boundaries.push(upto);
        let mut lo = 0.0;
        for hi in boundaries {
            if let Some(rows) = trace.as_deref_mut() {
                record_run_events(platform, runs, lo, rows, &temps);
            }
            let mut sinks = StepSinks {
                checkpoints: Some((&mut times, &mut snaps)),
                trace: trace.as_deref_mut(),
                hyp_lambda: None,
            };
            advance_interval(&inp, lo, hi, &mut temps, &mut totals, &mut sinks)?;
            lo = hi;
        }
        if let Some(rows) = trace.as_mut() {
            record_run_events(platform, runs, lo, rows, &temps);
        }
    }

    Ok(Timeline {
        times,
        temps: snaps,
        totals,
    })
}

/// Emit start/finish trace rows for runs with a boundary at time `t`.
fn record_run_events(
    platform: &Platform,
    runs: &RunTable,
    t: f64,
    rows: &mut Vec<TraceRow>,
    temps: &[f64],
) {
    for (c, core_runs) in runs.per_core.iter().enumerate() {
        for r in core_runs {
            if r.finish != t && r.start != t {
                continue;
            }
            let vf = &platform.arch.cores[c].vf_levels[r.vf];
            let event = if r.start == t { "start" } else { "finish" };
            rows.push(TraceRow {
                time: t,
                core: platform.arch.cores[c].id.clone(),
                event: format!("{event}:{}", r.task),
                temp: temps[c],
                power: physics::power(vf, temps[c], &platform.arch.power),
            });
        }
    }
}

impl Timeline {
    /// Temperatures at an arbitrary time `t >= 0`, re-deriving partial
    /// chunks with exactly the stepping a full replay would use.
    pub(crate) fn temps_at(
        &self,
        platform: &Platform,
        runs: &RunTable,
        t: f64,
        max_step: f64,
    ) -> Result<Vec<f64>, SimError> {
        debug_assert!(t >= 0.0);
        let idx = self.times.partition_point(|&x| x <= t) - 1;
        let cp_time = self.times[idx];
        let mut temps = self.temps[idx].clone();
        if cp_time == t {
            return Ok(temps);
        }
        let inp = StepInputs {
            platform,
            runs,
            hyp: None,
            max_step,
            sampling: LambdaSampling::TaskEnd,
        };
        let mut dummy = Totals::new(platform.n_cores(), 0, platform.arch.thermal.t_amb);
        let last = *self.times.last().expect("non-empty timeline");
        if t <= last {
            // Checkpoints exist at every subchunk boundary, so the span back
            // to the previous checkpoint has no interior events.
            let mut sinks = StepSinks::default();
            advance_interval(&inp, cp_time, t, &mut temps, &mut dummy, &mut sinks)?;
            return Ok(temps);
        }
        // Extrapolate past the replayed horizon, keeping the interval and
        // subchunk discipline a longer replay would use.
        let mut lo = last;
        let mut bounds = runs.event_times_within(lo, t);
        bounds.push(t);
        for hi in bounds {
            let mut sinks = StepSinks::default();
            advance_interval(&inp, lo, hi, &mut temps, &mut dummy, &mut sinks)?;
            lo = hi;
        }
        Ok(temps)
    }

    /// Simulate a hypothetical run overlaid on the committed table over its
    /// own window, starting from the committed-trajectory state at the run's
    /// start. Returns the hypothetical core's end-of-run temperature and the
    /// run's sampled failure rate.
    pub(crate) fn window_with_candidate(
        &self,
        platform: &Platform,
        runs: &RunTable,
        hyp: &CoreRun,
        hyp_core: usize,
        max_step: f64,
        sampling: LambdaSampling,
    ) -> Result<(f64, f64), SimError> {
        let mut temps = self.temps_at(platform, runs, hyp.start, max_step)?;
        let mut totals = Totals::new(platform.n_cores(), 0, platform.arch.thermal.t_amb);
        let mut lambda = f64::NAN;
        let inp = StepInputs {
            platform,
            runs,
            hyp: Some((hyp, hyp_core)),
            max_step,
            sampling,
        };
        let mut lo = hyp.start;
        let mut bounds = runs.event_times_within(hyp.start, hyp.finish);
        bounds.push(hyp.finish);
        for hi in bounds {
            let mut sinks = StepSinks {
                checkpoints: None,
                trace: None,
                hyp_lambda: Some(&mut lambda),
            };
            advance_interval(&inp, lo, hi, &mut temps, &mut totals, &mut sinks)?;
            lo = hi;
        }
        debug_assert!(lambda.is_finite(), "sample point must lie in the window");
        Ok((temps[hyp_core], lambda))
    }
}
