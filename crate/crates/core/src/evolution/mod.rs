//! NSGA-II over consequent vectors and the rule-learning pipeline.
//!
//! An individual is one consequent vector (one gene per rule). Fitness is
//! the four-objective cost of scheduling the training graph with those
//! consequents: execution time, average temperature, average power and
//! GSFR, all minimized. Selection is binary tournament on (rank, crowding);
//! survivors come from the elitist parent+offspring merge truncated by
//! (rank, crowding).
//!
//! Learning runs one evolution per training graph, takes the Pareto middle
//! point of each front (the member with minimum total squared distance to
//! the rest after per-objective normalization), and averages the chosen
//! consequents per rule over the graphs where that rule actually fired;
//! rules that fired nowhere receive the mean of the learned active values.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{FiringStats, FuzzyError, RuleBase};
use crate::graphs::{AppGraph, ArchGraph};
use crate::rng;
use crate::sim::{schedule_online, SchedulerConfig, SimError};

const EVOLVE_TAG: u64 = 0x45564f4c; // "EVOL"
const LEARN_TAG: u64 = 0x4c524e; // "LRN"

/// Four-objective cost vector under minimization:
/// [execution time, average temperature, average power, GSFR].
pub type CostVec = [f64; 4];

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("evolution configuration invalid: {0}")]
    Config(String),
    #[error("fitness evaluation failed (genes follow for replay): {source}\n{genes}")]
    Evaluation { source: SimError, genes: String },
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// One chromosome with its evaluation and ranking state.
#[derive(Debug, Clone)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub cost: Option<CostVec>,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    fn new(genes: Vec<f64>) -> Self {
        Individual {
            genes,
            cost: None,
            rank: 0,
            crowding: 0.0,
        }
    }

    fn cost(&self) -> &CostVec {
        self.cost.as_ref().expect("cost evaluated")
    }
}

/// A rank-0 front: genes and costs of mutually non-dominated solutions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontMember {
    pub genes: Vec<f64>,
    pub cost: CostVec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParetoFront {
    pub members: Vec<FrontMember>,
}

/// Per-generation population statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenStats {
    pub generation: usize,
    pub front0_size: usize,
    pub min: CostVec,
    pub mean: CostVec,
    /// Cost vectors of the rank-0 front members.
    pub front0_costs: Vec<CostVec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub pop_size: usize,
    pub iterations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub mutation_sigma: f64,
    /// Per-gene mutation probability once an individual mutates;
    /// `None` means `p_mutation / rule_count`.
    pub per_gene_rate: Option<f64>,
    pub tournament_size: usize,
    pub seed: u64,
    /// Fitness-evaluation thread count; `None` uses all cores.
    pub jobs: Option<usize>,
    pub sets_per_input: usize,
    /// Mean firing strength above which a rule counts as active when
    /// combining learned solutions.
    pub active_rule_threshold: f64,
    /// Test hook: explicit initial population instead of uniform random.
    #[serde(skip)]
    pub init: Option<Vec<Vec<f64>>>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            pop_size: 200,
            iterations: 500,
            p_crossover: 0.40,
            p_mutation: 0.70,
            mutation_sigma: 0.1,
            per_gene_rate: None,
            tournament_size: 2,
            seed: 0,
            jobs: None,
            sets_per_input: 5,
            active_rule_threshold: 0.0,
            init: None,
        }
    }
}

impl EvolutionConfig {
    fn validate(&self) -> Result<(), EvolutionError> {
        if self.pop_size < 2 || !self.pop_size.is_multiple_of(2) {
            return Err(EvolutionError::Config(
                "pop_size must be even and at least 2".into(),
            ));
        }
        for (name, p) in [
            ("p_crossover", self.p_crossover),
            ("p_mutation", self.p_mutation),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(EvolutionError::Config(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        if self.tournament_size < 1 {
            return Err(EvolutionError::Config(
                "tournament_size must be >= 1".into(),
            ));
        }
        if self.sets_per_input < 2 {
            return Err(EvolutionError::Config("sets_per_input must be >= 2".into()));
        }
        Ok(())
    }
}

/// Pareto dominance under minimization: `a` is nowhere worse and somewhere
/// strictly better.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Fast non-dominated sort: returns index fronts, rank 0 first; every
/// individual lands in exactly one front.
pub fn non_dominated_sort(costs: &[CostVec]) -> Vec<Vec<usize>> {
    let n = costs.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dom_count = vec![0usize; n];
    let mut current: Vec<usize> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if dominates(&costs[i], &costs[j]) {
                dominated[i].push(j);
            } else if dominates(&costs[j], &costs[i]) {
                dom_count[i] += 1;
            }
        }
        if dom_count[i] == 0 {
            current.push(i);
        }
    }
    let mut fronts = Vec::new();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated[p] {
                dom_count[q] -= 1;
                if dom_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distances of one front (parallel to `front`): boundary members
/// per objective get infinity, interior members accumulate normalized
/// neighbor gaps, zero-range objectives contribute nothing.
#[allow(clippy::needless_range_loop)] // objective index spans several arrays
pub fn crowding_distance(costs: &[CostVec], front: &[usize]) -> Vec<f64> {
    let l = front.len();
    let mut dist = vec![0.0f64; l];
    if l <= 2 {
        return vec![f64::INFINITY; l];
    }
    let mut order: Vec<usize> = (0..l).collect();
    for m in 0..4 {
        order.sort_by(|&a, &b| costs[front[a]][m].total_cmp(&costs[front[b]][m]));
        let lo = costs[front[order[0]]][m];
        let hi = costs[front[order[l - 1]]][m];
        dist[order[0]] = f64::INFINITY;
        dist[order[l - 1]] = f64::INFINITY;
        if hi > lo {
            let range = hi - lo;
            for w in 1..l - 1 {
                let gap = costs[front[order[w + 1]]][m] - costs[front[order[w - 1]]][m];
                dist[order[w]] += gap / range;
            }
        }
    }
    dist
}

/// Index of the Pareto middle point: the member minimizing total squared
/// distance to all others after per-objective min-max normalization; ties
/// resolve to the lowest index.
pub fn middle_point(front: &ParetoFront) -> usize {
    let n = front.members.len();
    assert!(n > 0, "empty front");
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for m in &front.members {
        for k in 0..4 {
            lo[k] = lo[k].min(m.cost[k]);
            hi[k] = hi[k].max(m.cost[k]);
        }
    }
    let norm = |c: &CostVec| -> [f64; 4] {
        std::array::from_fn(|k| {
            if hi[k] > lo[k] {
                (c[k] - lo[k]) / (hi[k] - lo[k])
            } else {
                0.0
            }
        })
    };
    let pts: Vec<[f64; 4]> = front.members.iter().map(|m| norm(&m.cost)).collect();
    let mut best = 0;
    let mut best_sum = f64::INFINITY;
    for (i, pi) in pts.iter().enumerate() {
        let mut sum = 0.0;
        for pj in &pts {
            let mut d2 = 0.0;
            for k in 0..4 {
                let d = pi[k] - pj[k];
                d2 += d * d;
            }
            sum += d2;
        }
        if sum < best_sum {
            best_sum = sum;
            best = i;
        }
    }
    best
}

/// Result of one evolution run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveOutcome {
    pub front: ParetoFront,
    pub stats: Vec<GenStats>,
}

fn evaluate_population(
    pop: &mut [Individual],
    template: &RuleBase,
    app: &AppGraph,
    arch: &ArchGraph,
    sched: &SchedulerConfig,
    pool: &rayon::ThreadPool,
) -> Result<(), EvolutionError> {
    use rayon::prelude::*;
    let results: Vec<Result<CostVec, EvolutionError>> = pool.install(|| {
        pop.par_iter()
            .map(|ind| {
                if let Some(c) = ind.cost {
                    return Ok(c);
                }
                let rb = template
                    .clone()
                    .with_consequents(&ind.genes)
                    .map_err(EvolutionError::Fuzzy)?;
                let res = schedule_online(app, arch, &rb, sched).map_err(|source| {
                    EvolutionError::Evaluation {
                        source,
                        genes: serde_json::to_string(&ind.genes).unwrap_or_default(),
                    }
                })?;
                Ok(res.cost())
            })
            .collect()
    });
    for (ind, res) in pop.iter_mut().zip(results) {
        ind.cost = Some(res?);
    }
    Ok(())
}

/// Assign ranks and crowding over the whole population; returns the fronts.
fn rank_population(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let costs: Vec<CostVec> = pop.iter().map(|i| *i.cost()).collect();
    let fronts = non_dominated_sort(&costs);
    for (rank, front) in fronts.iter().enumerate() {
        let crowd = crowding_distance(&costs, front);
        for (slot, &idx) in front.iter().enumerate() {
            pop[idx].rank = rank;
            pop[idx].crowding = crowd[slot];
        }
    }
    fronts
}

fn tournament_pick(pop: &[Individual], rng: &mut ChaCha8Rng, size: usize) -> usize {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..size {
        let ch = rng.gen_range(0..pop.len());
        let better = pop[ch]
            .rank
            .cmp(&pop[best].rank)
            .then_with(|| pop[best].crowding.total_cmp(&pop[ch].crowding))
            .then_with(|| ch.cmp(&best));
        if better.is_lt() {
            best = ch;
        }
    }
    best
}

fn make_offspring(
    pop: &[Individual],
    cfg: &EvolutionConfig,
    gene_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Individual> {
    let mut out = Vec::with_capacity(cfg.pop_size);
    while out.len() < cfg.pop_size {
        let a = tournament_pick(pop, rng, cfg.tournament_size);
        let b = tournament_pick(pop, rng, cfg.tournament_size);
        let mut g1 = pop[a].genes.clone();
        let mut g2 = pop[b].genes.clone();
        let mut fresh1 = false;
        let mut fresh2 = false;
        if rng.gen::<f64>() < cfg.p_crossover {
            for (x, y) in g1.iter_mut().zip(g2.iter_mut()) {
                if rng.gen::<f64>() < 0.5 {
                    std::mem::swap(x, y);
                }
            }
            fresh1 = true;
            fresh2 = true;
        }
        for (genes, fresh) in [(&mut g1, &mut fresh1), (&mut g2, &mut fresh2)] {
            if rng.gen::<f64>() < cfg.p_mutation {
                for g in genes.iter_mut() {
                    if rng.gen::<f64>() < gene_rate {
                        *g = (*g + cfg.mutation_sigma * rng::gaussian(rng)).clamp(0.0, 1.0);
                        *fresh = true;
                    }
                }
            }
        }
        // Untouched clones keep the parent's evaluated cost.
        let mut c1 = Individual::new(g1);
        if !fresh1 {
            c1.cost = pop[a].cost;
        }
        let mut c2 = Individual::new(g2);
        if !fresh2 {
            c2.cost = pop[b].cost;
        }
        out.push(c1);
        if out.len() < cfg.pop_size {
            out.push(c2);
        }
    }
    out
}

/// Elitist truncation of the merged population to `n` by (rank, crowding).
fn truncate(mut merged: Vec<Individual>, n: usize) -> Vec<Individual> {
    let fronts = rank_population(&mut merged);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
            if keep.len() == n {
                break;
            }
        } else {
            let mut boundary = front;
            boundary.sort_by(|&a, &b| {
                merged[b]
                    .crowding
                    .total_cmp(&merged[a].crowding)
                    .then(a.cmp(&b))
            });
            keep.extend(boundary.into_iter().take(n - keep.len()));
            break;
        }
    }
    let mut sorted = keep;
    sorted.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut iter = sorted.into_iter().peekable();
    for (i, ind) in merged.into_iter().enumerate() {
        if iter.peek() == Some(&i) {
            out.push(ind);
            iter.next();
        }
    }
    out
}

fn population_stats(pop: &[Individual], generation: usize, front0: &[usize]) -> GenStats {
    let mut min = [f64::INFINITY; 4];
    let mut mean = [0.0f64; 4];
    for ind in pop {
        let c = ind.cost();
        for k in 0..4 {
            min[k] = min[k].min(c[k]);
            mean[k] += c[k];
        }
    }
    for m in mean.iter_mut() {
        *m /= pop.len() as f64;
    }
    GenStats {
        generation,
        front0_size: front0.len(),
        min,
        mean,
        front0_costs: front0.iter().map(|&i| *pop[i].cost()).collect(),
    }
}

fn build_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, EvolutionError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| EvolutionError::Config(format!("thread pool: {e}")))
}

/// Run NSGA-II against one training graph; returns the final rank-0 front
/// and per-generation statistics. Deterministic for a fixed config.
pub fn evolve(
    app: &AppGraph,
    arch: &ArchGraph,
    evo: &EvolutionConfig,
    sched: &SchedulerConfig,
) -> Result<EvolveOutcome, EvolutionError> {
    evo.validate()?;
    let template = RuleBase::build_uniform(evo.sets_per_input, 4);
    let r = template.rule_count();
    let gene_rate = evo.per_gene_rate.unwrap_or(evo.p_mutation / r as f64);
    let pool = build_pool(evo.jobs)?;
    let mut rng = rng::stream(evo.seed, EVOLVE_TAG);

    let mut pop: Vec<Individual> = match &evo.init {
        Some(init) => {
            if init.len() != evo.pop_size || init.iter().any(|g| g.len() != r) {
                return Err(EvolutionError::Config(
                    "explicit initial population has wrong shape".into(),
                ));
            }
            init.iter().cloned().map(Individual::new).collect()
        }
        None => (0..evo.pop_size)
            .map(|_| Individual::new((0..r).map(|_| rng.gen::<f64>()).collect()))
            .collect(),
    };
    evaluate_population(&mut pop, &template, app, arch, sched, &pool)?;
    let fronts = rank_population(&mut pop);
    let mut stats = vec![population_stats(&pop, 0, &fronts[0])];

    for generation in 1..=evo.iterations {
        let mut offspring = make_offspring(&pop, evo, gene_rate, &mut rng);
        evaluate_population(&mut offspring, &template, app, arch, sched, &pool)?;
        let mut merged = pop;
        merged.extend(offspring);
        pop = truncate(merged, evo.pop_size);
        let fronts = rank_population(&mut pop);
        stats.push(population_stats(&pop, generation, &fronts[0]));
    }

    let members = pop
        .iter()
        .filter(|i| i.rank == 0)
        .map(|i| FrontMember {
            genes: i.genes.clone(),
            cost: *i.cost(),
        })
        .collect();
    Ok(EvolveOutcome {
        front: ParetoFront { members },
        stats,
    })
}

/// Outcome of learning on one training graph, checkpointable as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphLearnOutcome {
    pub front: ParetoFront,
    pub stats: Vec<GenStats>,
    pub chosen_genes: Vec<f64>,
    pub chosen_cost: CostVec,
    pub active_mask: Vec<bool>,
    pub firing: FiringStats,
}

/// Outcome of the full learning pipeline.
#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub rulebase: RuleBase,
    pub per_graph: Vec<GraphLearnOutcome>,
}

/// Seed for the evolution run of training graph `idx` under `master`.
pub fn graph_seed(master: u64, idx: usize) -> u64 {
    rng::derive2(master, LEARN_TAG, idx as u64)
}

/// Learn one training graph: evolve, pick the middle point, re-run the
/// chosen consequents to collect firing statistics and the active-rule mask.
pub fn learn_one_graph(
    idx: usize,
    app: &AppGraph,
    arch: &ArchGraph,
    evo: &EvolutionConfig,
    sched: &SchedulerConfig,
) -> Result<GraphLearnOutcome, EvolutionError> {
    let mut per_graph_cfg = evo.clone();
    per_graph_cfg.seed = graph_seed(evo.seed, idx);
    let outcome = evolve(app, arch, &per_graph_cfg, sched)?;
    let mid = middle_point(&outcome.front);
    let chosen = &outcome.front.members[mid];
    let template = RuleBase::build_uniform(evo.sets_per_input, 4);
    let rb = template.with_consequents(&chosen.genes)?;
    let res =
        schedule_online(app, arch, &rb, sched).map_err(|source| EvolutionError::Evaluation {
            source,
            genes: serde_json::to_string(&chosen.genes).unwrap_or_default(),
        })?;
    let firing = res.fired_rules.expect("FNN policy records stats");
    let active_mask = firing.active_rule_mask(evo.active_rule_threshold)?;
    Ok(GraphLearnOutcome {
        front: outcome.front.clone(),
        stats: outcome.stats,
        chosen_genes: chosen.genes.clone(),
        chosen_cost: chosen.cost,
        active_mask,
        firing,
    })
}

/// Combine per-graph chosen solutions into the final consequent vector:
/// per-rule mean over the runs where the rule was active; rules active
/// nowhere get the mean of all learned active consequents.
#[allow(clippy::needless_range_loop)] // rule index spans several arrays
pub fn combine_chosen(per_graph: &[GraphLearnOutcome], rule_count: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; rule_count];
    let mut active_rules = Vec::new();
    for r in 0..rule_count {
        let mut sum = 0.0;
        let mut count = 0usize;
        for g in per_graph {
            if g.active_mask[r] {
                sum += g.chosen_genes[r];
                count += 1;
            }
        }
        if count > 0 {
            out[r] = sum / count as f64;
            active_rules.push(r);
        } else {
            out[r] = f64::NAN;
        }
    }
    let fill = if active_rules.is_empty() {
        let all: f64 = per_graph
            .iter()
            .flat_map(|g| g.chosen_genes.iter())
            .sum::<f64>();
        let n = per_graph.len() * rule_count;
        if n > 0 {
            all / n as f64
        } else {
            0.0
        }
    } else {
        active_rules.iter().map(|&r| out[r]).sum::<f64>() / active_rules.len() as f64
    };
    for v in out.iter_mut() {
        if v.is_nan() {
            *v = fill;
        }
    }
    out
}

/// Run the learning pipeline over a training corpus. `resume` supplies
/// checkpointed per-graph outcomes by corpus index; `on_graph_done` fires
/// after each freshly computed graph so the caller can persist it.
pub fn learn(
    corpus: &[AppGraph],
    arch: &ArchGraph,
    evo: &EvolutionConfig,
    sched: &SchedulerConfig,
    resume: &BTreeMap<usize, GraphLearnOutcome>,
    on_graph_done: &mut dyn FnMut(usize, &GraphLearnOutcome),
) -> Result<LearnOutcome, EvolutionError> {
    if corpus.is_empty() {
        return Err(EvolutionError::Config("empty training corpus".into()));
    }
    let template = RuleBase::build_uniform(evo.sets_per_input, 4);
    let mut per_graph = Vec::with_capacity(corpus.len());
    for (idx, app) in corpus.iter().enumerate() {
        let outcome = match resume.get(&idx) {
            Some(ckpt) => ckpt.clone(),
            None => {
                let fresh = learn_one_graph(idx, app, arch, evo, sched)?;
                on_graph_done(idx, &fresh);
                fresh
            }
        };
        per_graph.push(outcome);
    }
    let genes = combine_chosen(&per_graph, template.rule_count());
    let rulebase = template.with_consequents(&genes)?;
    Ok(LearnOutcome {
        rulebase,
        per_graph,
    })
}
