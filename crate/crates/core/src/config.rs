//! Pipeline configuration: one TOML file with a section per stage.
//!
//! ```toml
//! seed = 7
//!
//! [paths]
//! corpus = "corpus"
//! suite = "suites/desk/suite.toml"
//!
//! [quotas]
//! C = 20
//! Python = 10
//!
//! [[provider]]
//! name = "mock-a"
//! kind = "mock"
//!
//! [eval]
//! samples = 20
//! k = [1]
//! ```
//!
//! Relative paths resolve against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{LineWindow, QuotaTable};
use crate::eval::judge::CommandRunner;
use crate::gateway::ProviderConfig;
use crate::ids::sha256_hex;
use crate::prompt::KindDistribution;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub datasets: Option<PathBuf>,
    pub journals: Option<PathBuf>,
    pub suite: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub distribution: KindDistribution,
    /// Providers to assign tasks to; all configured providers when empty.
    pub providers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub samples: usize,
    pub k: Vec<u64>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub build_timeout_secs: u64,
    /// Overrides per-problem run timeouts when set.
    pub run_timeout_secs: Option<u64>,
    /// 0 means one worker per CPU.
    pub workers: usize,
    pub exclude_unavailable: bool,
    pub cache: bool,
    /// Extra runners by build recipe, e.g. `cuda`.
    pub runners: BTreeMap<String, CommandRunner>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            samples: 20,
            k: vec![1],
            temperature: 0.2,
            max_tokens: 1024,
            build_timeout_secs: 60,
            run_timeout_secs: None,
            workers: 0,
            exclude_unavailable: false,
            cache: true,
            runners: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub mine: LineWindow,
    /// Per-language seed quotas; mining keeps every snippet when absent.
    pub quotas: Option<QuotaTable>,
    pub plan: PlanSection,
    #[serde(rename = "provider")]
    pub providers: Vec<ProviderConfig>,
    pub eval: EvalSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: DEFAULT_SEED,
            paths: Paths::default(),
            mine: LineWindow::default(),
            quotas: None,
            plan: PlanSection::default(),
            providers: Vec::new(),
            eval: EvalSection::default(),
        }
    }
}

fn rebase(base: &Path, path: &mut Option<PathBuf>) {
    if let Some(p) = path {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Reads, rebases relative paths, and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let read_err = |message: String| ConfigError::Read {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut config.paths;
        for field in [
            &mut p.corpus,
            &mut p.templates,
            &mut p.datasets,
            &mut p.journals,
            &mut p.suite,
        ] {
            rebase(base, field);
        }
        for provider in &mut config.providers {
            rebase(base, &mut provider.mock.responses);
        }
        config.validate()?;
        Ok(config)
    }

    /// Checks values and that every input path exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        for (name, path) in [
            ("paths.corpus", &self.paths.corpus),
            ("paths.templates", &self.paths.templates),
            ("paths.suite", &self.paths.suite),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return invalid(format!("{name} {} does not exist", p.display()));
                }
            }
        }
        self.mine
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("mine: {e}")))?;
        self.plan
            .distribution
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("plan.distribution: {e}")))?;
        let mut names = std::collections::HashSet::new();
        for provider in &self.providers {
            provider
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if !names.insert(provider.name.as_str()) {
                return invalid(format!("provider `{}` defined twice", provider.name));
            }
            if let Some(responses) = &provider.mock.responses {
                if !responses.exists() {
                    return invalid(format!(
                        "provider `{}`: {} does not exist",
                        provider.name,
                        responses.display()
                    ));
                }
            }
        }
        for name in &self.plan.providers {
            if !names.contains(name.as_str()) {
                return invalid(format!("plan.providers names unknown provider `{name}`"));
            }
        }
        if self.eval.samples == 0 {
            return invalid("eval.samples must be at least 1".into());
        }
        if self.eval.k.is_empty()
            || self
                .eval
                .k
                .iter()
                .any(|&k| k == 0 || k as usize > self.eval.samples)
        {
            return invalid(format!(
                "eval.k values must lie in 1..={} (eval.samples)",
                self.eval.samples
            ));
        }
        if self.eval.build_timeout_secs == 0 || self.eval.run_timeout_secs == Some(0) {
            return invalid("eval timeouts must be positive".into());
        }
        Ok(())
    }

    /// Short hash of the effective configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        sha256_hex(json.as_bytes())[..16].to_string()
    }
}
