//! Architecture graphs: heterogeneous cores, V/F levels, thermal coupling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{non_negative_finite, positive_finite, GraphError};
use crate::physics::{PowerParams, ReliabilityParams, ThermalSpec};

/// One operating point of a core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VfLevel {
    /// Supply voltage, V.
    pub voltage: f64,
    /// Clock frequency, Hz.
    pub frequency: f64,
}

/// One processing core.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoreSpec {
    pub id: String,
    /// Class key into `Task::wcet` / `Task::hetero`.
    pub core_class: String,
    /// Operating points sorted ascending by frequency.
    pub vf_levels: Vec<VfLevel>,
    /// Thermal conductance to each neighbor core, W/K.
    pub neighbors: BTreeMap<String, f64>,
}

impl CoreSpec {
    /// Nominal frequency of the core: its highest operating point.
    pub fn nominal_frequency(&self) -> f64 {
        self.vf_levels
            .last()
            .expect("validated non-empty")
            .frequency
    }
}

/// Per-objective normalization maxima for the scheduler's state vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ranges {
    pub u_max: f64,
    pub p_max: f64,
    pub theta_max: f64,
    pub lambda_max: f64,
}

/// A validated heterogeneous MPSoC platform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchGraph {
    pub cores: Vec<CoreSpec>,
    pub thermal: ThermalSpec,
    pub power: PowerParams,
    pub reliability: ReliabilityParams,
    pub ranges: Ranges,
}

impl ArchGraph {
    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let arch: ArchGraph =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        arch.validate()?;
        Ok(arch)
    }

    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("arch serialization");
        out.push('\n');
        out
    }

    pub fn n_cores(&self) -> usize {
        self.cores.len()
    }

    pub fn core_index(&self, id: &str) -> Option<usize> {
        self.cores.iter().position(|c| c.id == id)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let fail = |msg: String| Err(GraphError::InvalidArch(msg));
        if self.cores.is_empty() {
            return fail("no cores defined".into());
        }
        let mut ids = BTreeMap::new();
        for (i, core) in self.cores.iter().enumerate() {
            if ids.insert(core.id.clone(), i).is_some() {
                return fail(format!("duplicate core id {:?}", core.id));
            }
            if core.vf_levels.is_empty() {
                return fail(format!("core {:?} has no V/F levels", core.id));
            }
            for vf in &core.vf_levels {
                if !positive_finite(vf.voltage) || !positive_finite(vf.frequency) {
                    return fail(format!("core {:?} has a non-positive V/F level", core.id));
                }
            }
            if core
                .vf_levels
                .windows(2)
                .any(|w| w[0].frequency >= w[1].frequency)
            {
                return fail(format!(
                    "core {:?} V/F levels not sorted ascending by frequency",
                    core.id
                ));
            }
        }
        for core in &self.cores {
            for (nbr, &g) in &core.neighbors {
                if !non_negative_finite(g) {
                    return fail(format!(
                        "core {:?} has negative conductance to {:?}",
                        core.id, nbr
                    ));
                }
                let Some(other_idx) = ids.get(nbr) else {
                    return fail(format!(
                        "core {:?} lists unknown neighbor {:?}",
                        core.id, nbr
                    ));
                };
                let back = self.cores[*other_idx].neighbors.get(&core.id).copied();
                if back != Some(g) {
                    return fail(format!(
                        "asymmetric conductance between {:?} and {:?}",
                        core.id, nbr
                    ));
                }
            }
        }
        let th = &self.thermal;
        if !(positive_finite(th.c) && positive_finite(th.g) && positive_finite(th.t_amb)) {
            return fail("thermal constants must be positive".into());
        }
        if !positive_finite(self.power.c_eff) {
            return fail("c_eff must be positive".into());
        }
        for v in [
            th.c,
            th.g,
            th.t_amb,
            self.power.c_eff,
            self.power.alpha,
            self.power.beta,
        ] {
            if !v.is_finite() {
                return fail("non-finite physical constant".into());
            }
        }
        let r = &self.ranges;
        if !(positive_finite(r.u_max)
            && positive_finite(r.p_max)
            && positive_finite(r.theta_max)
            && positive_finite(r.lambda_max))
        {
            return fail("normalization ranges must be strictly positive".into());
        }
        let rel = &self.reliability;
        if !rel.j.is_finite() || !rel.j_circ.is_finite() || rel.j <= rel.j_circ {
            return fail("current density j must exceed j_circ".into());
        }
        for (mech, &s) in &rel.scale {
            if !positive_finite(s) {
                return fail(format!("scale factor for {mech:?} must be positive"));
            }
        }
        Ok(())
    }

    /// The default simulated platform: four fully connected cores in two
    /// classes, each with three operating points, constants from the
    /// reference ARM-class configuration.
    pub fn default_quad() -> Self {
        let vf_levels = vec![
            VfLevel {
                voltage: 1.06,
                frequency: 300e6,
            },
            VfLevel {
                voltage: 1.1,
                frequency: 600e6,
            },
            VfLevel {
                voltage: 1.2,
                frequency: 900e6,
            },
        ];
        let ids = ["c0", "c1", "c2", "c3"];
        let classes = ["big", "big", "little", "little"];
        let cores = ids
            .iter()
            .enumerate()
            .map(|(i, id)| CoreSpec {
                id: (*id).into(),
                core_class: classes[i].into(),
                vf_levels: vf_levels.clone(),
                neighbors: ids
                    .iter()
                    .filter(|other| **other != *id)
                    .map(|other| ((*other).to_string(), 0.1))
                    .collect(),
            })
            .collect();
        ArchGraph {
            cores,
            thermal: ThermalSpec {
                c: 0.03,
                g: 0.3,
                t_amb: 293.0,
            },
            power: PowerParams {
                c_eff: 1e-8,
                alpha: 0.1,
                beta: -11.0,
            },
            reliability: ReliabilityParams::calibrated_default(),
            ranges: Ranges {
                u_max: 1.0,
                p_max: 50.0,
                theta_max: 450.0,
                lambda_max: 2e-5,
            },
        }
    }
}
