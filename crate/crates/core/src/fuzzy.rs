//! The fuzzy neural network scoring candidate (core, V/F) assignments.
//!
//! Five layers: inputs (normalized utilization, power, temperature, failure
//! rate), triangular fuzzification over fixed uniform partitions, min T-norm
//! firing strengths, firing-strength normalization, and a weighted-sum
//! defuzzified output. Antecedents are fixed by uniform partitioning; only
//! the per-rule consequent vector is learnable (it is the NSGA-II
//! chromosome).
//!
//! Firing statistics are accumulated in a separate [`FiringStats`] buffer so
//! concurrent evaluations each own their buffer and merge results
//! explicitly; a [`RuleBase`] itself is immutable during inference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FuzzyError {
    #[error("no rule fired (sum of firing strengths is zero); partition is malformed")]
    NoRuleFired,
    #[error("firing statistics empty: no inference has run")]
    StatsEmpty,
    #[error("invalid rule base: {0}")]
    InvalidRuleBase(String),
}

/// Triangular membership function on normalized inputs. `left == apex`
/// (or `apex == right`) marks a shoulder set that stays flat at 1 beyond its
/// apex, used at the domain boundaries to preserve the partition of unity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularMf {
    pub left: f64,
    pub apex: f64,
    pub right: f64,
}

impl TriangularMf {
    pub fn new(left: f64, apex: f64, right: f64) -> Self {
        assert!(left <= apex && apex <= right, "feet must straddle the apex");
        TriangularMf { left, apex, right }
    }

    /// Membership degree of `x`; piecewise linear between the feet, 1 on the
    /// flat side of a shoulder.
    pub fn membership(&self, x: f64) -> f64 {
        if self.left == self.apex && x <= self.apex {
            return 1.0;
        }
        if self.apex == self.right && x >= self.apex {
            return 1.0;
        }
        if x < self.left || x > self.right {
            0.0
        } else if x <= self.apex {
            (x - self.left) / (self.apex - self.left)
        } else {
            (self.right - x) / (self.right - self.apex)
        }
    }
}

/// An ordered family of membership functions covering [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPartition {
    pub sets: Vec<TriangularMf>,
}

impl FuzzyPartition {
    /// Uniform partition with apexes at `i / (sets - 1)` and shoulder sets at
    /// both ends; adjacent ramps overlap so memberships sum to one on [0, 1].
    pub fn uniform(sets: usize) -> Self {
        assert!(sets >= 2, "need at least two sets");
        let h = 1.0 / (sets - 1) as f64;
        let apex = |i: usize| i as f64 * h;
        let mfs = (0..sets)
            .map(|i| {
                let a = if i == 0 { 0.0 } else { apex(i - 1) };
                let c = apex(i);
                let b = if i == sets - 1 { 1.0 } else { apex(i + 1) };
                TriangularMf::new(a.min(c), c, b.max(c))
            })
            .collect();
        FuzzyPartition { sets: mfs }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Memberships of `x` in every set.
    pub fn memberships(&self, x: f64) -> Vec<f64> {
        self.sets.iter().map(|m| m.membership(x)).collect()
    }
}

/// Normalized core-state inputs fed to the network, each clamped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub u: f64,
    pub p: f64,
    pub theta: f64,
    pub lambda: f64,
}

impl StateVector {
    /// Build a state vector, clamping each component into [0, 1].
    pub fn clamped(u: f64, p: f64, theta: f64, lambda: f64) -> Self {
        let c = |x: f64| x.clamp(0.0, 1.0);
        StateVector {
            u: c(u),
            p: c(p),
            theta: c(theta),
            lambda: c(lambda),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.u, self.p, self.theta, self.lambda]
    }
}

#[derive(Serialize, Deserialize)]
struct RuleBaseDoc {
    sets_per_input: usize,
    n_inputs: usize,
    consequents: Vec<f64>,
}

/// The rule base: fixed uniform antecedent partitions plus one scalar
/// consequent per rule. Rule index `i` encodes the antecedent combination in
/// mixed radix with input 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    sets_per_input: usize,
    n_inputs: usize,
    partitions: Vec<FuzzyPartition>,
    consequents: Vec<f64>,
}

/// Linguistic labels used in reports for the standard five-set partition.
pub const FIVE_SET_LABELS: [&str; 5] = ["VL", "L", "M", "H", "VH"];

impl RuleBase {
    /// Uniformly partitioned rule base with zero-initialized consequents.
    pub fn build_uniform(sets_per_input: usize, n_inputs: usize) -> Self {
        assert!(sets_per_input >= 2, "need at least two sets per input");
        assert!(n_inputs >= 1, "need at least one input");
        let rules = sets_per_input.pow(n_inputs as u32);
        RuleBase {
            sets_per_input,
            n_inputs,
            partitions: (0..n_inputs)
                .map(|_| FuzzyPartition::uniform(sets_per_input))
                .collect(),
            consequents: vec![0.0; rules],
        }
    }

    pub fn sets_per_input(&self) -> usize {
        self.sets_per_input
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn rule_count(&self) -> usize {
        self.consequents.len()
    }

    pub fn partitions(&self) -> &[FuzzyPartition] {
        &self.partitions
    }

    pub fn consequents(&self) -> &[f64] {
        &self.consequents
    }

    /// Replace the consequent vector (the chromosome).
    pub fn set_consequents(&mut self, genes: &[f64]) -> Result<(), FuzzyError> {
        if genes.len() != self.rule_count() {
            return Err(FuzzyError::InvalidRuleBase(format!(
                "expected {} consequents, got {}",
                self.rule_count(),
                genes.len()
            )));
        }
        if let Some(bad) = genes.iter().find(|g| !g.is_finite()) {
            return Err(FuzzyError::InvalidRuleBase(format!(
                "non-finite consequent {bad}"
            )));
        }
        self.consequents.clear();
        self.consequents.extend_from_slice(genes);
        Ok(())
    }

    pub fn with_consequents(mut self, genes: &[f64]) -> Result<Self, FuzzyError> {
        self.set_consequents(genes)?;
        Ok(self)
    }

    /// Mixed-radix rule index of an antecedent combination.
    pub fn rule_index(&self, combo: &[usize]) -> usize {
        debug_assert_eq!(combo.len(), self.n_inputs);
        combo
            .iter()
            .fold(0, |acc, &set| acc * self.sets_per_input + set)
    }

    /// Antecedent combination of a rule index.
    pub fn antecedents_of(&self, mut index: usize) -> Vec<usize> {
        let mut combo = vec![0; self.n_inputs];
        for slot in combo.iter_mut().rev() {
            *slot = index % self.sets_per_input;
            index /= self.sets_per_input;
        }
        combo
    }

    /// Display label for a fuzzy-set index within a partition.
    pub fn set_label(&self, set: usize) -> String {
        if self.sets_per_input == 5 {
            FIVE_SET_LABELS[set].to_string()
        } else {
            format!("S{set}")
        }
    }

    /// Rules with nonzero firing strength for the given input, as
    /// (rule index, firing strength) pairs. At most two sets per dimension
    /// are active under the uniform partitions, so at most 2^n rules fire.
    #[allow(clippy::needless_range_loop)] // input index spans several arrays
    pub fn fired_rules(&self, s: &StateVector) -> Vec<(usize, f64)> {
        let x = s.as_array();
        let mut active: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.n_inputs);
        for d in 0..self.n_inputs {
            let sets: Vec<(usize, f64)> = self.partitions[d]
                .sets
                .iter()
                .enumerate()
                .filter_map(|(i, mf)| {
                    let mu = mf.membership(x[d]);
                    (mu > 0.0).then_some((i, mu))
                })
                .collect();
            if sets.is_empty() {
                return Vec::new();
            }
            active.push(sets);
        }
        let mut fired = Vec::with_capacity(1 << self.n_inputs);
        let mut combo = vec![0usize; self.n_inputs];
        self.walk_active(&active, 0, &mut combo, f64::INFINITY, &mut fired);
        fired
    }

    fn walk_active(
        &self,
        active: &[Vec<(usize, f64)>],
        depth: usize,
        combo: &mut [usize],
        strength: f64,
        out: &mut Vec<(usize, f64)>,
    ) {
        if depth == active.len() {
            out.push((self.rule_index(combo), strength));
            return;
        }
        for &(set, mu) in &active[depth] {
            combo[depth] = set;
            self.walk_active(active, depth + 1, combo, strength.min(mu), out);
        }
    }

    /// Run the network: min T-norm firing strengths, normalization, weighted
    /// consequent sum. Records firing strengths into `stats`.
    pub fn infer(&self, s: &StateVector, stats: &mut FiringStats) -> Result<f64, FuzzyError> {
        let fired = self.fired_rules(s);
        let total: f64 = fired.iter().map(|&(_, f)| f).sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(FuzzyError::NoRuleFired);
        }
        stats.record(&fired);
        Ok(fired
            .iter()
            .map(|&(i, f)| f / total * self.consequents[i])
            .sum())
    }

    /// Serialize to the rule-base JSON document.
    pub fn to_json_string(&self) -> String {
        let doc = RuleBaseDoc {
            sets_per_input: self.sets_per_input,
            n_inputs: self.n_inputs,
            consequents: self.consequents.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("rulebase serialization");
        out.push('\n');
        out
    }

    pub fn from_json_str(text: &str) -> Result<Self, FuzzyError> {
        let doc: RuleBaseDoc =
            serde_json::from_str(text).map_err(|e| FuzzyError::InvalidRuleBase(e.to_string()))?;
        if doc.sets_per_input < 2 || doc.n_inputs < 1 {
            return Err(FuzzyError::InvalidRuleBase(
                "need sets_per_input >= 2 and n_inputs >= 1".into(),
            ));
        }
        RuleBase::build_uniform(doc.sets_per_input, doc.n_inputs).with_consequents(&doc.consequents)
    }
}

/// Running per-rule mean firing strength over a sequence of inferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiringStats {
    sums: Vec<f64>,
    inferences: u64,
}

impl FiringStats {
    pub fn new(rule_count: usize) -> Self {
        FiringStats {
            sums: vec![0.0; rule_count],
            inferences: 0,
        }
    }

    pub fn for_rulebase(rb: &RuleBase) -> Self {
        Self::new(rb.rule_count())
    }

    pub fn record(&mut self, fired: &[(usize, f64)]) {
        self.inferences += 1;
        for &(i, f) in fired {
            self.sums[i] += f;
        }
    }

    pub fn inferences(&self) -> u64 {
        self.inferences
    }

    pub fn rule_count(&self) -> usize {
        self.sums.len()
    }

    /// Mean firing strength of one rule over all recorded inferences.
    pub fn mean_strength(&self, rule: usize) -> f64 {
        if self.inferences == 0 {
            0.0
        } else {
            self.sums[rule] / self.inferences as f64
        }
    }

    /// Fold another buffer into this one (same rule base).
    pub fn merge(&mut self, other: &FiringStats) {
        assert_eq!(self.sums.len(), other.sums.len());
        self.inferences += other.inferences;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
    }

    /// Rules whose mean firing strength exceeds `threshold`. Errors when no
    /// inference has been recorded.
    pub fn active_rule_mask(&self, threshold: f64) -> Result<Vec<bool>, FuzzyError> {
        if self.inferences == 0 {
            return Err(FuzzyError::StatsEmpty);
        }
        Ok((0..self.sums.len())
            .map(|i| self.mean_strength(i) > threshold)
            .collect())
    }
}
