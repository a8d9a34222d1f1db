//! Correctness evaluation of code models: sample N completions per problem,
//! judge each by compiling and unit-testing it, and estimate pass@k.

pub mod adapter;
pub mod aggregate;
pub mod judge;
pub mod passk;
pub mod problem;
pub mod run;

pub use adapter::{Generation, GenerationRequest, MockModelAdapter, ModelAdapter, ProviderAdapter};
pub use aggregate::{aggregate, AggregateOptions, Axis, PassAtKReport, PassAtKRow};
pub use judge::{
    judge, judge_source, CommandRunner, CxxRunner, JudgeCache, JudgeSettings, MpiRunner, Runner,
    RunnerRegistry, Verdict,
};
pub use passk::pass_at_k;
pub use problem::{
    desk_suite_dir, desk_suite_manifest, load_suite, read_suite, EvalProblem, ExecutionModel,
    ProblemType, Suite,
};
pub use run::{evaluate, generate_completions, judge_records, CompletionRecord, EvalOptions};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("pass@k undefined for n={n}, c={c}, k={k}")]
    Domain { n: u64, c: u64, k: u64 },
    #[error("suite manifest {0}")]
    Manifest(String),
    #[error("reference solution for `{0}` does not judge Correct")]
    SelfCheckFailure(String),
    #[error("incomplete records for problem `{0}`")]
    IncompleteRecords(String),
    #[error("records reference problem `{0}` absent from the suite")]
    UnknownProblem(String),
    #[error("records mix models `{0}` and `{1}`")]
    MixedModels(String, String),
    #[error("adapter: {0}")]
    Adapter(String),
}
