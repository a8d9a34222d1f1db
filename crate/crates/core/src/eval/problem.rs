//! Benchmark problems and suite manifests.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::judge::{judge_source, JudgeSettings, RunnerRegistry, Verdict};
use super::EvalError;

/// Marker in a driver file replaced by the (signature-completed) completion.
pub const COMPLETION_MARKER: &str = "{{COMPLETION}}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProblemType {
    #[serde(rename = "sort")]
    Sort,
    #[serde(rename = "scan")]
    Scan,
    #[serde(rename = "dense_la")]
    DenseLinearAlgebra,
    #[serde(rename = "sparse_la")]
    SparseLinearAlgebra,
    #[serde(rename = "search")]
    Search,
    #[serde(rename = "reduce")]
    Reduce,
    #[serde(rename = "histogram")]
    Histogram,
    #[serde(rename = "stencil")]
    Stencil,
    #[serde(rename = "graph")]
    Graph,
    #[serde(rename = "geometry")]
    Geometry,
    #[serde(rename = "fft")]
    FourierTransform,
    #[serde(rename = "transform")]
    Transform,
}

impl ProblemType {
    pub const ALL: [ProblemType; 12] = [
        ProblemType::Sort,
        ProblemType::Scan,
        ProblemType::DenseLinearAlgebra,
        ProblemType::SparseLinearAlgebra,
        ProblemType::Search,
        ProblemType::Reduce,
        ProblemType::Histogram,
        ProblemType::Stencil,
        ProblemType::Graph,
        ProblemType::Geometry,
        ProblemType::FourierTransform,
        ProblemType::Transform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemType::Sort => "sort",
            ProblemType::Scan => "scan",
            ProblemType::DenseLinearAlgebra => "dense_la",
            ProblemType::SparseLinearAlgebra => "sparse_la",
            ProblemType::Search => "search",
            ProblemType::Reduce => "reduce",
            ProblemType::Histogram => "histogram",
            ProblemType::Stencil => "stencil",
            ProblemType::Graph => "graph",
            ProblemType::Geometry => "geometry",
            ProblemType::FourierTransform => "fft",
            ProblemType::Transform => "transform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExecutionModel {
    #[serde(rename = "serial")]
    Serial,
    #[serde(rename = "omp")]
    OpenMp,
    #[serde(rename = "mpi")]
    Mpi,
    #[serde(rename = "mpi+omp")]
    MpiOpenMp,
    #[serde(rename = "kokkos")]
    Kokkos,
    #[serde(rename = "cuda")]
    Cuda,
    #[serde(rename = "hip")]
    Hip,
}

impl ExecutionModel {
    pub const ALL: [ExecutionModel; 7] = [
        ExecutionModel::Serial,
        ExecutionModel::OpenMp,
        ExecutionModel::Mpi,
        ExecutionModel::MpiOpenMp,
        ExecutionModel::Kokkos,
        ExecutionModel::Cuda,
        ExecutionModel::Hip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExecutionModel::Serial => "serial",
            ExecutionModel::OpenMp => "omp",
            ExecutionModel::Mpi => "mpi",
            ExecutionModel::MpiOpenMp => "mpi+omp",
            ExecutionModel::Kokkos => "kokkos",
            ExecutionModel::Cuda => "cuda",
            ExecutionModel::Hip => "hip",
        }
    }

    /// Build recipe used when a manifest entry does not name one.
    pub fn default_recipe(self) -> &'static str {
        match self {
            ExecutionModel::Serial => "cxx-serial",
            ExecutionModel::OpenMp => "cxx-omp",
            ExecutionModel::Mpi => "mpi",
            ExecutionModel::MpiOpenMp => "mpi-omp",
            ExecutionModel::Kokkos => "kokkos",
            ExecutionModel::Cuda => "cuda",
            ExecutionModel::Hip => "hip",
        }
    }
}

macro_rules! name_traits {
    ($ty:ty, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$ty>::ALL
                    .into_iter()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| format!(concat!("unknown ", $what, " `{}`"), s))
            }
        }
    };
}

name_traits!(ProblemType, "problem type");
name_traits!(ExecutionModel, "execution model");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalProblem {
    pub id: String,
    pub problem_type: ProblemType,
    pub execution_model: ExecutionModel,
    /// Doc comment plus the function signature the model must complete.
    pub prompt: String,
    /// Harness source containing [`COMPLETION_MARKER`].
    pub driver: String,
    pub reference: Option<String>,
    pub build_recipe: String,
    pub timeout_secs: u64,
}

impl EvalProblem {
    /// Last non-blank prompt line: the signature being completed.
    pub fn signature(&self) -> &str {
        self.prompt
            .lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .unwrap_or("")
            .trim()
    }

    /// Program text for `completion`: the prompt is prepended unless the
    /// completion already repeats the signature.
    pub fn splice(&self, completion: &str) -> String {
        let signature = normalize_ws(self.signature().trim_end_matches('{'));
        let body = if !signature.is_empty() && normalize_ws(completion).contains(&signature) {
            completion.to_string()
        } else {
            format!("{}\n{}", self.prompt.trim_end(), completion)
        };
        self.driver.replacen(COMPLETION_MARKER, &body, 1)
    }
}

fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub problem_type: ProblemType,
    pub execution_model: ExecutionModel,
    pub prompt_file: PathBuf,
    pub driver_file: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build_recipe: Option<String>,
    /// Run timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: u64,
}

fn default_timeout() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub name: String,
    #[serde(default, rename = "problem")]
    pub problems: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suite {
    pub name: String,
    pub problems: Vec<EvalProblem>,
}

impl Suite {
    pub fn problem(&self, id: &str) -> Option<&EvalProblem> {
        self.problems.iter().find(|p| p.id == id)
    }

    pub fn problem_types(&self) -> Vec<ProblemType> {
        let present: HashSet<_> = self.problems.iter().map(|p| p.problem_type).collect();
        ProblemType::ALL
            .into_iter()
            .filter(|t| present.contains(t))
            .collect()
    }

    pub fn execution_models(&self) -> Vec<ExecutionModel> {
        let present: HashSet<_> = self.problems.iter().map(|p| p.execution_model).collect();
        ExecutionModel::ALL
            .into_iter()
            .filter(|m| present.contains(m))
            .collect()
    }
}

/// Directory of the desk-scale suite shipped with this crate.
pub fn desk_suite_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("suites")
        .join("desk")
}

pub fn desk_suite_manifest() -> PathBuf {
    desk_suite_dir().join("suite.toml")
}

/// Reads a manifest and every file it references (paths relative to the manifest).
pub fn read_suite(manifest_path: &Path) -> Result<Suite, EvalError> {
    let manifest_err =
        |msg: String| EvalError::Manifest(format!("{}: {msg}", manifest_path.display()));
    let text = std::fs::read_to_string(manifest_path).map_err(|e| manifest_err(e.to_string()))?;
    let manifest: SuiteManifest = toml::from_str(&text).map_err(|e| manifest_err(e.to_string()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let read = |rel: &Path| {
        std::fs::read_to_string(base.join(rel))
            .map_err(|e| manifest_err(format!("{}: {e}", rel.display())))
    };

    let mut ids = HashSet::new();
    let mut problems = Vec::with_capacity(manifest.problems.len());
    for entry in manifest.problems {
        if !ids.insert(entry.id.clone()) {
            return Err(manifest_err(format!("duplicate problem id `{}`", entry.id)));
        }
        if entry.timeout == 0 {
            return Err(manifest_err(format!(
                "problem `{}` has a zero timeout",
                entry.id
            )));
        }
        let driver = read(&entry.driver_file)?;
        if !driver.contains(COMPLETION_MARKER) {
            return Err(manifest_err(format!(
                "driver for `{}` has no {COMPLETION_MARKER} marker",
                entry.id
            )));
        }
        problems.push(EvalProblem {
            prompt: read(&entry.prompt_file)?,
            driver,
            reference: entry.reference_file.as_deref().map(read).transpose()?,
            build_recipe: entry
                .build_recipe
                .unwrap_or_else(|| entry.execution_model.default_recipe().to_string()),
            timeout_secs: entry.timeout,
            id: entry.id,
            problem_type: entry.problem_type,
            execution_model: entry.execution_model,
        });
    }
    Ok(Suite {
        name: manifest.name,
        problems,
    })
}

/// Loads a suite and, where a runner is available, checks that every
/// reference solution judges `Correct`.
pub fn load_suite(
    manifest_path: &Path,
    registry: Option<&RunnerRegistry>,
    settings: &JudgeSettings,
) -> Result<Suite, EvalError> {
    let suite = read_suite(manifest_path)?;
    if let Some(registry) = registry {
        let failures: Vec<String> = suite
            .problems
            .par_iter()
            .filter_map(|p| {
                let reference = p.reference.as_ref()?;
                if !registry.is_available(&p.build_recipe) {
                    return None;
                }
                let (verdict, logs) = judge_source(p, &p.splice(reference), registry, settings);
                (verdict != Verdict::Correct).then(|| {
                    log::warn!("self-check of {} gave {verdict:?}: {logs}", p.id);
                    p.id.clone()
                })
            })
            .collect();
        if let Some(id) = failures.into_iter().next() {
            return Err(EvalError::SelfCheckFailure(id));
        }
    }
    Ok(suite)
}
