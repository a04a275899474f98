//! Seeded generation of layered random application DAGs.

use std::collections::BTreeMap;

use rand::Rng;

use super::app::{AppGraph, EdgeSpec, Task};
use super::GraphError;
use crate::rng;

const STREAM_TAG: u64 = 0x5359_4e54; // "SYNT"

/// Layered-DAG shape controls.
#[derive(Debug, Clone)]
pub struct SynthShape {
    /// Maximum tasks per layer.
    pub width: usize,
    /// Number of layers.
    pub depth: usize,
    /// Target communication-to-computation cost ratio.
    pub ccr: f64,
}

/// Generator parameters. `shape: None` derives width ≈ √n.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_tasks: usize,
    pub seed: u64,
    pub shape: Option<SynthShape>,
    /// Core classes to emit WCET/hetero entries for.
    pub classes: Vec<String>,
    /// Uniform range for nominal WCET draws, seconds.
    pub wcet_range: (f64, f64),
    /// Uniform range for per-class hetero factors.
    pub hetero_range: (f64, f64),
    /// Deadline = rho × downstream critical path.
    pub deadline_rho: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_tasks: 8,
            seed: 0,
            shape: None,
            classes: vec!["big".into(), "little".into()],
            wcet_range: (1e-3, 8e-3),
            hetero_range: (0.75, 1.5),
            deadline_rho: 2.0,
        }
    }
}

/// Generate a layered random DAG, deterministic for a given config.
///
/// Every task not in the last layer gets at least one successor in the next
/// layer, and every task not in the first layer at least one predecessor, so
/// the graph is connected front-to-back and trivially acyclic. Deadlines are
/// `rho` times the task's downstream critical path (computation only); edge
/// costs are scaled so total communication ≈ `ccr` × total computation.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<AppGraph, GraphError> {
    if cfg.n_tasks < 1 {
        return Err(GraphError::InvalidParams("n_tasks must be >= 1".into()));
    }
    if cfg.classes.is_empty() {
        return Err(GraphError::InvalidParams("at least one core class".into()));
    }
    let (w_lo, w_hi) = cfg.wcet_range;
    if !(w_lo > 0.0 && w_hi >= w_lo) {
        return Err(GraphError::InvalidParams("bad wcet range".into()));
    }
    let n = cfg.n_tasks;
    let default_width = (n as f64).sqrt().ceil() as usize;
    let (width, depth, ccr) = match &cfg.shape {
        Some(s) => {
            if s.width < 1 || s.depth < 1 {
                return Err(GraphError::InvalidParams(
                    "width and depth must be >= 1".into(),
                ));
            }
            if s.ccr < 0.0 {
                return Err(GraphError::InvalidParams("ccr must be non-negative".into()));
            }
            (s.width, s.depth, s.ccr)
        }
        None => (default_width, n.div_ceil(default_width), 0.3),
    };
    if width * depth < n {
        return Err(GraphError::InvalidParams(format!(
            "shape {width}x{depth} cannot hold {n} tasks"
        )));
    }

    let mut rng = rng::stream(cfg.seed, STREAM_TAG);

    // Layer sizes: one task per used layer, remainder spread at random.
    let n_layers = depth.min(n);
    let mut layer_sizes = vec![1usize; n_layers];
    let mut remaining = n - n_layers;
    while remaining > 0 {
        let open: Vec<usize> = (0..n_layers).filter(|&l| layer_sizes[l] < width).collect();
        let pick = open[rng.gen_range(0..open.len())];
        layer_sizes[pick] += 1;
        remaining -= 1;
    }

    let digits = ((n.max(2) - 1) as f64).log10() as usize + 1;
    let mut layers: Vec<Vec<usize>> = Vec::with_capacity(n_layers);
    let mut next_id = 0usize;
    for &size in &layer_sizes {
        layers.push(
            (0..size)
                .map(|_| {
                    let id = next_id;
                    next_id += 1;
                    id
                })
                .collect(),
        );
    }
    let id_of = |i: usize| format!("T{i:0digits$}");

    // WCET base per task; hetero factor per (task, class).
    let mut wcet_base = vec![0.0f64; n];
    let mut hetero: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); n];
    for i in 0..n {
        wcet_base[i] = if w_hi > w_lo {
            rng.gen_range(w_lo..w_hi)
        } else {
            w_lo
        };
        for class in &cfg.classes {
            let (h_lo, h_hi) = cfg.hetero_range;
            let h = if h_hi > h_lo {
                rng.gen_range(h_lo..h_hi)
            } else {
                h_lo
            };
            hetero[i].insert(class.clone(), h);
        }
    }

    // Edges between consecutive layers.
    let mut edge_pairs: Vec<(usize, usize)> = Vec::new();
    for l in 0..n_layers.saturating_sub(1) {
        let targets = &layers[l + 1];
        for &u in &layers[l] {
            let cap = targets.len().min(3);
            let deg = rng.gen_range(1..=cap);
            let mut pool: Vec<usize> = targets.clone();
            for k in 0..deg {
                let j = rng.gen_range(k..pool.len());
                pool.swap(k, j);
            }
            for &v in pool.iter().take(deg) {
                edge_pairs.push((u, v));
            }
        }
        // Keep every next-layer task reachable.
        for &v in targets {
            if !edge_pairs.iter().any(|&(_, d)| d == v) {
                let u = layers[l][rng.gen_range(0..layers[l].len())];
                edge_pairs.push((u, v));
            }
        }
    }
    edge_pairs.sort_unstable();
    edge_pairs.dedup();

    // Communication costs scaled to the requested CCR.
    let comp_total: f64 = (0..n)
        .map(|i| {
            let mean_h: f64 = hetero[i].values().sum::<f64>() / hetero[i].len() as f64;
            wcet_base[i] * mean_h
        })
        .sum();
    let raw: Vec<f64> = edge_pairs.iter().map(|_| rng.gen_range(0.5..1.5)).collect();
    let raw_sum: f64 = raw.iter().sum();
    let comm_scale = if raw_sum > 0.0 {
        ccr * comp_total / raw_sum
    } else {
        0.0
    };

    // Deadlines from the downstream critical path over max-class WCETs.
    let weight: Vec<f64> = (0..n)
        .map(|i| wcet_base[i] * hetero[i].values().copied().fold(0.0f64, f64::max))
        .collect();
    let mut down = vec![0.0f64; n];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &edge_pairs {
        succs[u].push(v);
    }
    for i in (0..n).rev() {
        // Task ids ascend with layer order, so reverse index order is a
        // valid reverse-topological sweep.
        let tail = succs[i].iter().map(|&s| down[s]).fold(0.0, f64::max);
        down[i] = weight[i] + tail;
    }

    let tasks: Vec<Task> = (0..n)
        .map(|i| Task {
            id: id_of(i),
            wcet: cfg
                .classes
                .iter()
                .map(|c| (c.clone(), wcet_base[i]))
                .collect(),
            deadline: Some(cfg.deadline_rho * down[i]),
            hetero: hetero[i].clone(),
        })
        .collect();
    let edges: Vec<EdgeSpec> = edge_pairs
        .iter()
        .zip(&raw)
        .map(|(&(u, v), r)| EdgeSpec {
            src: id_of(u),
            dst: id_of(v),
            comm: r * comm_scale,
        })
        .collect();

    AppGraph::from_parts(tasks, edges)
}
