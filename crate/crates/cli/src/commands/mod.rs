pub mod evaluate;
pub mod generate;
pub mod schedule;
pub mod train;

use std::fs;
use std::path::{Path, PathBuf};

use mpsched_core::fuzzy::RuleBase;
use mpsched_core::graphs::{AppGraph, ArchGraph};
use mpsched_core::sim::Policy;

use crate::error::CliError;
use crate::manifest::ManifestBuilder;

/// Load the architecture: an explicit JSON file or the builtin quad-core
/// platform. Either way the manifest records what was used.
pub(crate) fn load_arch(
    path: &Option<PathBuf>,
    mb: &mut ManifestBuilder,
) -> Result<ArchGraph, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::io(&format!("reading {}", p.display()), e))?;
            let arch = ArchGraph::from_json_str(&text)?;
            mb.record_input_bytes(&format!("arch:{}", p.display()), text.as_bytes());
            Ok(arch)
        }
        None => {
            let arch = ArchGraph::default_quad();
            mb.record_input_bytes("arch:builtin-quad", arch.to_json_string().as_bytes());
            Ok(arch)
        }
    }
}

pub(crate) fn load_app(path: &Path, mb: &mut ManifestBuilder) -> Result<AppGraph, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let app = AppGraph::from_json_str(&text)?;
    mb.record_input_bytes(&format!("app:{}", path.display()), text.as_bytes());
    Ok(app)
}

pub(crate) fn load_rulebase(path: &Path, mb: &mut ManifestBuilder) -> Result<RuleBase, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let rb = RuleBase::from_json_str(&text)?;
    mb.record_input_bytes(&format!("rulebase:{}", path.display()), text.as_bytes());
    Ok(rb)
}

/// Expand corpus arguments: directories become their sorted `*.json`
/// contents, files pass through.
pub(crate) fn expand_corpus(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::io(&format!("listing {}", p.display()), e))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|f| {
                    f.extension().is_some_and(|x| x == "json")
                        && f.file_name().is_some_and(|n| n != "manifest.json")
                })
                .collect();
            inner.sort();
            out.extend(inner);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::Validation("corpus is empty".into()));
    }
    Ok(out)
}

/// An owned scoring policy resolved from CLI arguments.
pub(crate) enum OwnedPolicy {
    Fnn(RuleBase),
    GreedyEft,
    WeightedSum([f64; 4]),
    Random(u64),
}

impl OwnedPolicy {
    pub fn parse(
        name: &str,
        rulebase: Option<&RuleBase>,
        weights: Option<[f64; 4]>,
        seed: Option<u64>,
    ) -> Result<Self, CliError> {
        match name {
            "fnn" => {
                let rb = rulebase
                    .ok_or_else(|| CliError::Validation("policy `fnn` needs --rulebase".into()))?;
                Ok(OwnedPolicy::Fnn(rb.clone()))
            }
            "greedy-eft" => Ok(OwnedPolicy::GreedyEft),
            "weighted-sum" => Ok(OwnedPolicy::WeightedSum(
                weights.unwrap_or([1.0, 1.0, 1.0, 1.0]),
            )),
            "random" => {
                let seed = seed
                    .ok_or_else(|| CliError::Validation("policy `random` needs --seed".into()))?;
                Ok(OwnedPolicy::Random(seed))
            }
            other => Err(CliError::Validation(format!(
                "unknown policy {other:?} (expected fnn | greedy-eft | weighted-sum | random)"
            ))),
        }
    }

    pub fn as_policy(&self) -> Policy<'_> {
        match self {
            OwnedPolicy::Fnn(rb) => Policy::Fnn(rb),
            OwnedPolicy::GreedyEft => Policy::GreedyEft,
            OwnedPolicy::WeightedSum(w) => Policy::WeightedSum(*w),
            OwnedPolicy::Random(s) => Policy::Random(*s),
        }
    }
}

pub(crate) fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(&format!("creating {}", path.display()), e))
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".into())
}
