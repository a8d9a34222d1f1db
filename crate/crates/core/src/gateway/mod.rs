//! Dispatching generation tasks to LLM providers and turning their replies
//! into instruction pairs.
//!
//! Each provider gets a bounded pool of worker threads. Workers send every
//! attempt to a single journal writer (the calling thread), so the journal is
//! the durable source of truth and a rerun resumes where the last one stopped.

pub mod journal;
pub mod parse;
pub mod provider;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use crossbeam_channel::unbounded;

pub use journal::{AttemptOutcome, AttemptRecord, FailureKind, Journal, JournalState, TaskFailure};
pub use parse::{
    harvest, parse_sample, Harvest, InstructPair, ParseFailure, ParseFailureReason, RawCompletion,
};
pub use provider::{
    build_provider, resolve_credentials, CompletionRequest, HttpChatProvider, MockProvider,
    Provider, ProviderConfig, ProviderError, ProviderFile, ProviderKind, RetryPolicy,
    SamplingParams,
};

use crate::clock::Clock;
use crate::prompt::GenerationTask;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("provider `{provider}`: credential variable {env_var} is unset")]
    Auth { provider: String, env_var: String },
    #[error("task references unknown provider `{0}`")]
    UnknownProvider(String),
    #[error("{0}")]
    Config(String),
    #[error("journal {path}: {source}")]
    Journal {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("journal {path}:{line}: {message}")]
    JournalCorrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Terminal outcome of every submitted task, ordered by task id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubmitOutcome {
    pub completions: Vec<RawCompletion>,
    pub failures: Vec<TaskFailure>,
    /// Tasks that were already finished in the journal before this run.
    pub resumed: usize,
}

/// Resolves credentials, builds adapters, and runs [`submit_with_providers`].
///
/// Fails with [`GatewayError::Auth`] before any request when a referenced
/// provider's credential variable is unset.
pub fn submit_tasks<F>(
    tasks: &[GenerationTask],
    configs: &[ProviderConfig],
    journal_dir: &Path,
    clock: &dyn Clock,
    env: F,
) -> Result<SubmitOutcome, GatewayError>
where
    F: Fn(&str) -> Option<String>,
{
    let names: BTreeSet<String> = tasks.iter().map(|t| t.provider.clone()).collect();
    let credentials = resolve_credentials(configs, &names, env)?;
    let mut adapters = Vec::new();
    for config in configs.iter().filter(|c| names.contains(&c.name)) {
        let adapter = build_provider(config, credentials[&config.name].clone())?;
        adapters.push((config.clone(), adapter));
    }
    submit_with_providers(tasks, &adapters, journal_dir, clock)
}

fn failure_of(error: &ProviderError) -> (FailureKind, Option<u16>) {
    match error {
        ProviderError::RateLimited { .. } => (FailureKind::RateLimitExhausted, Some(429)),
        ProviderError::Status { status, .. } => (FailureKind::ProviderError, Some(*status)),
        ProviderError::Auth(_) => (FailureKind::Auth, None),
        ProviderError::Transport(_) => (FailureKind::Transport, None),
        ProviderError::Malformed(_) | ProviderError::NoCannedResponse(_) => {
            (FailureKind::Malformed, None)
        }
    }
}

fn run_task(
    task: &GenerationTask,
    config: &ProviderConfig,
    provider: &dyn Provider,
    prior_attempts: u32,
    clock: &dyn Clock,
    sink: &crossbeam_channel::Sender<AttemptRecord>,
) {
    let policy = config.retry;
    for try_no in 1..=policy.max_attempts {
        let requested_at = clock.now();
        let result = provider.complete(&CompletionRequest {
            task_id: &task.id,
            prompt: &task.prompt.text,
            params: &config.sampling,
        });
        let record = |outcome| AttemptRecord {
            task_id: task.id.clone(),
            provider: config.name.clone(),
            attempt: prior_attempts + try_no,
            outcome,
        };
        match result {
            Ok(reply) => {
                let completion = RawCompletion {
                    task_id: task.id.clone(),
                    provider: config.name.clone(),
                    kind: task.prompt.kind,
                    seed_id: task.prompt.seed_id.clone(),
                    text: reply.text,
                    requested_at,
                    prompt_tokens: reply.prompt_tokens,
                    completion_tokens: reply.completion_tokens,
                };
                let _ = sink.send(record(AttemptOutcome::Completed { completion }));
                return;
            }
            Err(error) => {
                let terminal = !error.is_retryable() || try_no == policy.max_attempts;
                let (failure, status) = failure_of(&error);
                log::debug!("task {} attempt {try_no} failed: {error}", task.id);
                let _ = sink.send(record(AttemptOutcome::Failed {
                    failure,
                    status,
                    error: error.to_string(),
                    terminal,
                }));
                if terminal {
                    return;
                }
                let delay = match error {
                    ProviderError::RateLimited {
                        retry_after: Some(after),
                    } => after.min(std::time::Duration::from_millis(policy.backoff_max_ms)),
                    _ => policy.backoff(try_no),
                };
                std::thread::sleep(delay);
            }
        }
    }
}

/// Runs every unfinished task against its assigned provider and journals each attempt.
pub fn submit_with_providers(
    tasks: &[GenerationTask],
    providers: &[(ProviderConfig, Box<dyn Provider>)],
    journal_dir: &Path,
    clock: &dyn Clock,
) -> Result<SubmitOutcome, GatewayError> {
    let mut seen = HashSet::new();
    let tasks: Vec<&GenerationTask> = tasks.iter().filter(|t| seen.insert(&t.id)).collect();
    for task in &tasks {
        if !providers.iter().any(|(c, _)| c.name == task.provider) {
            return Err(GatewayError::UnknownProvider(task.provider.clone()));
        }
    }
    for (config, _) in providers {
        config.validate()?;
    }

    let (mut journal, mut state) = Journal::open(journal_dir)?;
    let resumed = tasks.iter().filter(|t| state.is_finished(&t.id)).count();
    let mut queues: BTreeMap<&str, Vec<&GenerationTask>> = BTreeMap::new();
    for task in tasks.iter().filter(|t| !state.is_finished(&t.id)) {
        queues.entry(task.provider.as_str()).or_default().push(task);
    }
    let prior = state.attempts.clone();

    let mut write_error = None;
    std::thread::scope(|scope| {
        let (sink, records) = unbounded::<AttemptRecord>();
        for (config, provider) in providers {
            let Some(queue) = queues.get(config.name.as_str()) else {
                continue;
            };
            let (work_tx, work_rx) = unbounded::<&GenerationTask>();
            for task in queue {
                work_tx.send(task).expect("receiver alive");
            }
            drop(work_tx);
            for _ in 0..config.max_concurrent.min(queue.len()) {
                let work_rx = work_rx.clone();
                let sink = sink.clone();
                let prior = &prior;
                let provider = provider.as_ref();
                scope.spawn(move || {
                    for task in work_rx {
                        let before = prior.get(&task.id).copied().unwrap_or(0);
                        run_task(task, config, provider, before, clock, &sink);
                    }
                });
            }
        }
        drop(sink);
        for record in records {
            if write_error.is_none() {
                if let Err(e) = journal.append(&record) {
                    write_error = Some(e);
                }
            }
            state.apply(&record);
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }

    let mut outcome = SubmitOutcome {
        resumed,
        ..Default::default()
    };
    let mut ordered = tasks.clone();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    for task in ordered {
        if let Some(c) = state.completed.get(&task.id) {
            outcome.completions.push(c.clone());
        } else if let Some(f) = state.failed.get(&task.id) {
            outcome.failures.push(f.clone());
        }
    }
    Ok(outcome)
}
