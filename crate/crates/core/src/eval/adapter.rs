//! Model adapters: `(prompt, sampling params) -> completion text`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::gateway::{CompletionRequest, Provider, SamplingParams};

#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub problem_id: &'a str,
    pub sample_index: usize,
    pub prompt: &'a str,
    pub params: &'a SamplingParams,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub text: String,
    /// Generated token count, when the backend reports one.
    pub generated_tokens: Option<u64>,
}

pub trait ModelAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Generation, String>;
    /// Peak device memory in GB; `None` for remote backends without a probe.
    fn peak_memory_gb(&self) -> Option<f64> {
        None
    }
}

/// Any gateway provider (e.g. an HTTP chat endpoint) used as a model under test.
pub struct ProviderAdapter<P> {
    provider: P,
}

impl<P: Provider> ProviderAdapter<P> {
    pub fn new(provider: P) -> Self {
        ProviderAdapter { provider }
    }
}

impl<P: Provider> ModelAdapter for ProviderAdapter<P> {
    fn name(&self) -> &str {
        self.provider.name()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Generation, String> {
        let task_id = format!("{}#{}", request.problem_id, request.sample_index);
        let reply = self
            .provider
            .complete(&CompletionRequest {
                task_id: &task_id,
                prompt: request.prompt,
                params: request.params,
            })
            .map_err(|e| e.to_string())?;
        Ok(Generation {
            text: reply.text,
            generated_tokens: reply.completion_tokens,
        })
    }
}

/// On-disk form of a [`MockModelAdapter`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockModelFile {
    pub model: String,
    /// Problem id → completions, replayed cyclically by sample index.
    pub completions: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_memory_gb: Option<f64>,
    /// Sample indices at which generation fails, for every problem.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub fail_samples: BTreeSet<usize>,
}

/// Replays canned completions; token counts are whitespace-separated words.
#[derive(Debug, Clone, Default)]
pub struct MockModelAdapter {
    spec: MockModelFile,
}

impl MockModelAdapter {
    pub fn new(model: &str) -> Self {
        MockModelAdapter {
            spec: MockModelFile {
                model: model.to_string(),
                ..Default::default()
            },
        }
    }

    pub fn from_spec(spec: MockModelFile) -> Self {
        MockModelAdapter { spec }
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Adapter(format!("{}: {e}", path.display())))?;
        let spec = serde_json::from_str(&text)
            .map_err(|e| EvalError::Adapter(format!("{}: {e}", path.display())))?;
        Ok(Self::from_spec(spec))
    }

    pub fn with_completions(mut self, problem_id: &str, completions: Vec<String>) -> Self {
        self.spec
            .completions
            .insert(problem_id.to_string(), completions);
        self
    }

    pub fn with_failure(mut self, sample_index: usize) -> Self {
        self.spec.fail_samples.insert(sample_index);
        self
    }

    pub fn with_peak_memory(mut self, gb: f64) -> Self {
        self.spec.peak_memory_gb = Some(gb);
        self
    }
}

impl ModelAdapter for MockModelAdapter {
    fn name(&self) -> &str {
        &self.spec.model
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Generation, String> {
        if self.spec.fail_samples.contains(&request.sample_index) {
            return Err(format!(
                "injected failure at sample {}",
                request.sample_index
            ));
        }
        let pool = self
            .spec
            .completions
            .get(request.problem_id)
            .filter(|c| !c.is_empty())
            .ok_or_else(|| format!("no canned completions for `{}`", request.problem_id))?;
        let text = pool[request.sample_index % pool.len()].clone();
        Ok(Generation {
            generated_tokens: Some(text.split_whitespace().count() as u64),
            text,
        })
    }

    fn peak_memory_gb(&self) -> Option<f64> {
        self.spec.peak_memory_gb
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockProvider;

    fn request<'a>(pid: &'a str, i: usize, params: &'a SamplingParams) -> GenerationRequest<'a> {
        GenerationRequest {
            problem_id: pid,
            sample_index: i,
            prompt: "int f() {",
            params,
        }
    }

    #[test]
    fn mock_cycles_and_fails_on_demand() {
        let params = SamplingParams::default();
        let m = MockModelAdapter::new("m")
            .with_completions("p", vec!["a b".into(), "c".into()])
            .with_failure(3);
        assert_eq!(m.generate(&request("p", 0, &params)).unwrap().text, "a b");
        assert_eq!(
            m.generate(&request("p", 2, &params))
                .unwrap()
                .generated_tokens,
            Some(2)
        );
        assert_eq!(m.generate(&request("p", 1, &params)).unwrap().text, "c");
        assert!(m.generate(&request("p", 3, &params)).is_err());
        assert!(m.generate(&request("q", 0, &params)).is_err());
        assert_eq!(m.peak_memory_gb(), None);
    }

    #[test]
    fn provider_adapter_forwards() {
        let params = SamplingParams::default();
        let a = ProviderAdapter::new(MockProvider::new("prov").with_response("p#4", "return 1;"));
        assert_eq!(a.name(), "prov");
        assert_eq!(
            a.generate(&request("p", 4, &params)).unwrap().text,
            "return 1;"
        );
    }
}
