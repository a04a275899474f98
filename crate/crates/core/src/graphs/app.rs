//! Application task graphs: parsing, validation, readiness and path queries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{non_negative_finite, positive_finite, GraphError};

/// One application task.
///
/// `wcet` maps a core class to the worst-case execution time in seconds at
/// the nominal (highest) frequency of that class; `hetero` holds the
/// per-class compatibility scaling factor (missing entries default to 1.0).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub wcet: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<f64>,
    #[serde(default)]
    pub hetero: BTreeMap<String, f64>,
}

impl Task {
    /// Nominal-frequency WCET on the given core class including the hetero
    /// factor, or `None` when the task cannot run on that class.
    pub fn wcet_on_class(&self, class: &str) -> Option<f64> {
        let base = *self.wcet.get(class)?;
        Some(base * self.hetero.get(class).copied().unwrap_or(1.0))
    }

    /// Largest nominal WCET across all classes the task can run on.
    /// This is the WCET used by the urgency ordering, so it is independent
    /// of the eventual mapping.
    pub fn max_wcet(&self) -> f64 {
        self.wcet
            .keys()
            .filter_map(|c| self.wcet_on_class(c))
            .fold(0.0, f64::max)
    }

    /// Deadline in seconds; tasks without one sort as infinitely lax.
    pub fn deadline_or_inf(&self) -> f64 {
        self.deadline.unwrap_or(f64::INFINITY)
    }
}

/// Edge description used when building a graph from parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub src: String,
    pub dst: String,
    pub comm: f64,
}

#[derive(Serialize, Deserialize)]
struct AppGraphDoc {
    tasks: Vec<Task>,
    edges: Vec<EdgeSpec>,
}

/// A validated application DAG.
///
/// Tasks are addressed by index internally; adjacency lists carry the
/// communication cost of each edge. Graphs are immutable after construction
/// and safe to share across concurrent evaluations.
#[derive(Debug, Clone)]
pub struct AppGraph {
    tasks: Vec<Task>,
    edges: Vec<(usize, usize, f64)>,
    index: BTreeMap<String, usize>,
    preds: Vec<Vec<(usize, f64)>>,
    succs: Vec<Vec<(usize, f64)>>,
}

impl AppGraph {
    /// Build and validate a graph from task and edge lists.
    pub fn from_parts(tasks: Vec<Task>, edges: Vec<EdgeSpec>) -> Result<Self, GraphError> {
        let mut index = BTreeMap::new();
        for (i, t) in tasks.iter().enumerate() {
            if index.insert(t.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateTask(t.id.clone()));
            }
            if t.wcet.is_empty() {
                return Err(GraphError::EmptyWcet { task: t.id.clone() });
            }
            for (class, &w) in &t.wcet {
                if !positive_finite(w) {
                    return Err(GraphError::NonPositiveWcet {
                        task: t.id.clone(),
                        class: class.clone(),
                    });
                }
            }
            if let Some(d) = t.deadline {
                if !positive_finite(d) {
                    return Err(GraphError::NonPositiveDeadline { task: t.id.clone() });
                }
            }
            for (class, &h) in &t.hetero {
                if !positive_finite(h) {
                    return Err(GraphError::NonPositiveHetero {
                        task: t.id.clone(),
                        class: class.clone(),
                    });
                }
            }
        }

        let mut seen = BTreeSet::new();
        let mut idx_edges = Vec::with_capacity(edges.len());
        for e in &edges {
            if e.src == e.dst {
                return Err(GraphError::SelfEdge(e.src.clone()));
            }
            let src = *index.get(&e.src).ok_or_else(|| GraphError::DanglingEdge {
                src: e.src.clone(),
                dst: e.dst.clone(),
                missing: e.src.clone(),
            })?;
            let dst = *index.get(&e.dst).ok_or_else(|| GraphError::DanglingEdge {
                src: e.src.clone(),
                dst: e.dst.clone(),
                missing: e.dst.clone(),
            })?;
            if !seen.insert((src, dst)) {
                return Err(GraphError::DuplicateEdge {
                    src: e.src.clone(),
                    dst: e.dst.clone(),
                });
            }
            if !non_negative_finite(e.comm) {
                return Err(GraphError::NegativeComm {
                    src: e.src.clone(),
                    dst: e.dst.clone(),
                });
            }
            idx_edges.push((src, dst, e.comm));
        }

        let n = tasks.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &(s, d, c) in &idx_edges {
            succs[s].push((d, c));
            preds[d].push((s, c));
        }

        let graph = AppGraph {
            tasks,
            edges: idx_edges,
            index,
            preds,
            succs,
        };
        graph.topo_order()?;
        Ok(graph)
    }

    /// Parse a graph from its JSON document form.
    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let doc: AppGraphDoc =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        Self::from_parts(doc.tasks, doc.edges)
    }

    /// Serialize to the JSON document form (stable field and map ordering).
    pub fn to_json_string(&self) -> String {
        let doc = AppGraphDoc {
            tasks: self.tasks.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(s, d, c)| EdgeSpec {
                    src: self.tasks[s].id.clone(),
                    dst: self.tasks[d].id.clone(),
                    comm: c,
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("graph serialization");
        out.push('\n');
        out
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, i: usize) -> &Task {
        &self.tasks[i]
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Predecessors of task `i` with their incoming communication costs.
    pub fn preds(&self, i: usize) -> &[(usize, f64)] {
        &self.preds[i]
    }

    /// Successors of task `i` with their outgoing communication costs.
    pub fn succs(&self, i: usize) -> &[(usize, f64)] {
        &self.succs[i]
    }

    /// Kahn topological order, smallest task index first among ready nodes.
    /// Fails naming a task on a cycle.
    pub fn topo_order(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.tasks.len();
        let mut in_deg: Vec<usize> = (0..n).map(|i| self.preds[i].len()).collect();
        let mut frontier: BTreeSet<usize> = (0..n).filter(|&i| in_deg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&i) = frontier.iter().next() {
            frontier.remove(&i);
            order.push(i);
            for &(j, _) in &self.succs[i] {
                in_deg[j] -= 1;
                if in_deg[j] == 0 {
                    frontier.insert(j);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| in_deg[i] > 0).expect("cycle member");
            return Err(GraphError::Cycle(self.tasks[stuck].id.clone()));
        }
        Ok(order)
    }

    /// Index form of the ready set: uncompleted tasks whose predecessors are
    /// all completed. `done[i]` marks completion.
    pub fn ready_indices(&self, done: &[bool]) -> Vec<usize> {
        (0..self.tasks.len())
            .filter(|&i| !done[i] && self.preds[i].iter().all(|&(p, _)| done[p]))
            .collect()
    }

    /// Ready set over task ids. Ids not present in the graph are ignored.
    pub fn ready_set(&self, completed: &BTreeSet<String>) -> BTreeSet<String> {
        let mut done = vec![false; self.tasks.len()];
        for id in completed {
            if let Some(i) = self.index_of(id) {
                done[i] = true;
            }
        }
        self.ready_indices(&done)
            .into_iter()
            .map(|i| self.tasks[i].id.clone())
            .collect()
    }

    /// Longest path through the graph under the given per-task weights,
    /// ignoring communication costs.
    pub fn critical_path(&self, weight: &[f64]) -> f64 {
        assert_eq!(weight.len(), self.tasks.len());
        let order = self.topo_order().expect("validated graph");
        let mut dist = vec![0.0_f64; self.tasks.len()];
        let mut best = 0.0_f64;
        for &i in &order {
            let up = self.preds[i]
                .iter()
                .map(|&(p, _)| dist[p])
                .fold(0.0, f64::max);
            dist[i] = up + weight[i];
            best = best.max(dist[i]);
        }
        best
    }

    /// Per-task downstream critical path (the task's own weight plus the
    /// heaviest weight-path to any sink), ignoring communication costs.
    pub fn downstream_critical_path(&self, weight: &[f64]) -> Vec<f64> {
        assert_eq!(weight.len(), self.tasks.len());
        let order = self.topo_order().expect("validated graph");
        let mut down = vec![0.0_f64; self.tasks.len()];
        for &i in order.iter().rev() {
            let tail = self.succs[i]
                .iter()
                .map(|&(s, _)| down[s])
                .fold(0.0, f64::max);
            down[i] = weight[i] + tail;
        }
        down
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: &str, wcet: f64) -> Task {
        Task {
            id: id.into(),
            wcet: [("classA".to_string(), wcet)].into(),
            deadline: None,
            hetero: BTreeMap::new(),
        }
    }

    fn edge(src: &str, dst: &str) -> EdgeSpec {
        EdgeSpec {
            src: src.into(),
            dst: dst.into(),
            comm: 0.0,
        }
    }

    #[test]
    fn minimal_two_task_graph_parses() {
        let text = r#"{"tasks":[{"id":"A","wcet":{"classA":1.0e-3}},
                                 {"id":"B","wcet":{"classA":2.0e-3}}],
                       "edges":[{"src":"A","dst":"B","comm":1.0e-4}]}"#;
        let g = AppGraph::from_json_str(text).unwrap();
        assert_eq!(g.n_tasks(), 2);
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn self_edge_rejected() {
        let err = AppGraph::from_parts(vec![task("A", 1.0)], vec![edge("A", "A")]).unwrap_err();
        assert!(matches!(err, GraphError::SelfEdge(id) if id == "A"));
    }

    #[test]
    fn cycle_rejected_naming_member() {
        let err = AppGraph::from_parts(
            vec![task("A", 1.0), task("B", 1.0)],
            vec![edge("A", "B"), edge("B", "A")],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Cycle(_)));
    }

    #[test]
    fn dangling_edge_names_missing_task() {
        let err = AppGraph::from_parts(vec![task("A", 1.0)], vec![edge("A", "Z")]).unwrap_err();
        match err {
            GraphError::DanglingEdge { missing, .. } => assert_eq!(missing, "Z"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_positive_wcet_rejected() {
        let err = AppGraph::from_parts(vec![task("A", 0.0)], vec![]).unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveWcet { .. }));
    }

    // Longest-path oracle: DP over a topological order, checked here against
    // the hand-computable 3-task chain (2 + 3 + 4 seconds).
    #[test]
    fn chain_critical_path_is_wcet_sum() {
        let g = AppGraph::from_parts(
            vec![task("A", 2.0), task("B", 3.0), task("C", 4.0)],
            vec![edge("A", "B"), edge("B", "C")],
        )
        .unwrap();
        let w: Vec<f64> = g.tasks().iter().map(|t| t.max_wcet()).collect();
        assert_eq!(g.critical_path(&w), 9.0);
    }

    #[test]
    fn ready_set_chain_and_diamond() {
        let chain = AppGraph::from_parts(
            vec![task("A", 1.0), task("B", 1.0), task("C", 1.0)],
            vec![edge("A", "B"), edge("B", "C")],
        )
        .unwrap();
        let none = BTreeSet::new();
        assert_eq!(chain.ready_set(&none), BTreeSet::from(["A".to_string()]));
        let done_a = BTreeSet::from(["A".to_string()]);
        assert_eq!(chain.ready_set(&done_a), BTreeSet::from(["B".to_string()]));

        let diamond = AppGraph::from_parts(
            vec![
                task("A", 1.0),
                task("B", 1.0),
                task("C", 1.0),
                task("D", 1.0),
            ],
            vec![
                edge("A", "B"),
                edge("A", "C"),
                edge("B", "D"),
                edge("C", "D"),
            ],
        )
        .unwrap();
        let done = BTreeSet::from(["A".to_string(), "B".to_string()]);
        // Brute-force predecessor check over every task agrees.
        let mut expect = BTreeSet::new();
        for t in diamond.tasks() {
            let i = diamond.index_of(&t.id).unwrap();
            let all_preds_done = diamond
                .preds(i)
                .iter()
                .all(|&(p, _)| done.contains(&diamond.task(p).id));
            if !done.contains(&t.id) && all_preds_done {
                expect.insert(t.id.clone());
            }
        }
        assert_eq!(diamond.ready_set(&done), expect);
        assert_eq!(expect, BTreeSet::from(["C".to_string()]));
    }

    #[test]
    fn json_roundtrip_preserves_structure() {
        let g = AppGraph::from_parts(
            vec![task("A", 2.0), task("B", 3.0)],
            vec![EdgeSpec {
                src: "A".into(),
                dst: "B".into(),
                comm: 0.5,
            }],
        )
        .unwrap();
        let text = g.to_json_string();
        let g2 = AppGraph::from_json_str(&text).unwrap();
        assert_eq!(g2.to_json_string(), text);
    }
}
