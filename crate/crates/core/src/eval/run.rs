//! Sampling completions and judging them into a record journal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adapter::{GenerationRequest, ModelAdapter};
use super::judge::{judge, JudgeCache, JudgeSettings, RunnerRegistry, Verdict};
use super::problem::{EvalProblem, Suite};
use crate::gateway::SamplingParams;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub model: String,
    pub problem_id: String,
    pub sample_index: usize,
    pub completion: String,
    #[serde(default)]
    pub verdict: Option<Verdict>,
    /// Set when the adapter failed to produce this sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapter_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub logs: String,
}

/// Exactly `n` records with indices `0..n`; adapter failures are recorded per
/// sample and never abort the batch.
pub fn generate_completions(
    adapter: &dyn ModelAdapter,
    problem: &EvalProblem,
    n: usize,
    params: &SamplingParams,
) -> Vec<CompletionRecord> {
    (0..n)
        .map(|sample_index| {
            let request = GenerationRequest {
                problem_id: &problem.id,
                sample_index,
                prompt: &problem.prompt,
                params,
            };
            let mut record = CompletionRecord {
                model: adapter.name().to_string(),
                problem_id: problem.id.clone(),
                sample_index,
                completion: String::new(),
                verdict: None,
                adapter_error: None,
                generated_tokens: None,
                logs: String::new(),
            };
            match adapter.generate(&request) {
                Ok(generation) => {
                    record.completion = generation.text;
                    record.generated_tokens = generation.generated_tokens;
                }
                Err(e) => {
                    log::warn!("{} sample {sample_index}: {e}", problem.id);
                    record.adapter_error = Some(e);
                }
            }
            record
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub samples: usize,
    pub params: SamplingParams,
    pub judge: JudgeSettings,
    /// Judge worker threads; 0 means one per CPU.
    pub workers: usize,
    /// Reuse verdicts for byte-identical programs.
    pub cache: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            samples: 20,
            params: SamplingParams {
                temperature: 0.2,
                max_tokens: 1024,
            },
            judge: JudgeSettings::default(),
            workers: 0,
            cache: true,
        }
    }
}

/// Assigns a verdict to every record lacking one. Records whose problem is
/// not in the suite, or whose generation failed, become `RunnerUnavailable`.
pub fn judge_records(
    records: &mut [CompletionRecord],
    suite: &Suite,
    registry: &RunnerRegistry,
    options: &EvalOptions,
) {
    let cache = options.cache.then(JudgeCache::default);
    let mut work = || {
        records
            .par_iter_mut()
            .filter(|r| r.verdict.is_none())
            .for_each(|record| {
                let (verdict, logs) =
                    match (&record.adapter_error, suite.problem(&record.problem_id)) {
                        (Some(e), _) => (Verdict::RunnerUnavailable, format!("adapter error: {e}")),
                        (None, None) => (
                            Verdict::RunnerUnavailable,
                            "problem not in suite".to_string(),
                        ),
                        (None, Some(problem)) => judge(
                            problem,
                            &record.completion,
                            registry,
                            &options.judge,
                            cache.as_ref(),
                        ),
                    };
                record.verdict = Some(verdict);
                record.logs = logs;
            });
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
    {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

/// Samples and judges every problem in the suite. Records come back sorted by
/// problem id and sample index.
pub fn evaluate(
    adapter: &dyn ModelAdapter,
    suite: &Suite,
    registry: &RunnerRegistry,
    options: &EvalOptions,
) -> Vec<CompletionRecord> {
    let mut records: Vec<CompletionRecord> = suite
        .problems
        .iter()
        .flat_map(|p| generate_completions(adapter, p, options.samples, &options.params))
        .collect();
    judge_records(&mut records, suite, registry, options);
    records.sort_by(|a, b| {
        (a.problem_id.as_str(), a.sample_index).cmp(&(b.problem_id.as_str(), b.sample_index))
    });
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::adapter::MockModelAdapter;
    use crate::eval::problem::{ExecutionModel, ProblemType};

    fn problem(id: &str) -> EvalProblem {
        EvalProblem {
            id: id.into(),
            problem_type: ProblemType::Reduce,
            execution_model: ExecutionModel::Cuda,
            prompt: "int f() {".into(),
            driver: "{{COMPLETION}}".into(),
            reference: None,
            build_recipe: "none".into(),
            timeout_secs: 1,
        }
    }

    #[test]
    fn twenty_records_with_one_adapter_failure() {
        let adapter = MockModelAdapter::new("m")
            .with_completions("p", vec!["return 1; }".into()])
            .with_failure(7);
        let records = generate_completions(&adapter, &problem("p"), 20, &SamplingParams::default());
        assert_eq!(records.len(), 20);
        assert!(records.iter().enumerate().all(|(i, r)| r.sample_index == i));
        assert!(records.iter().all(|r| r.verdict.is_none()));
        let failed: Vec<_> = records
            .iter()
            .filter(|r| r.adapter_error.is_some())
            .collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].sample_index, 7);

        let suite = Suite {
            name: "t".into(),
            problems: vec![problem("p")],
        };
        let mut judged = records;
        judge_records(
            &mut judged,
            &suite,
            &RunnerRegistry::empty(),
            &EvalOptions::default(),
        );
        assert!(judged
            .iter()
            .all(|r| r.verdict == Some(Verdict::RunnerUnavailable)));
        assert!(judged[7].logs.starts_with("adapter error"));
    }

    #[test]
    fn single_sample() {
        let adapter = MockModelAdapter::new("m").with_completions("p", vec!["x".into()]);
        assert_eq!(
            generate_completions(&adapter, &problem("p"), 1, &SamplingParams::default()).len(),
            1
        );
    }
}
