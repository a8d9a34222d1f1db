//! pass@k aggregation over problems grouped by an axis.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::judge::Verdict;
use super::passk::pass_at_k;
use super::problem::{EvalProblem, ExecutionModel, Suite};
use super::run::CompletionRecord;
use super::EvalError;

pub const SERIAL_ROW: &str = "serial";
pub const PARALLEL_ROW: &str = "parallel";
pub const ALL_ROW: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    ExecutionModel,
    ProblemType,
    Overall,
    /// (problem type, execution model) pairs, valued `type/model`.
    Cell,
}

impl Axis {
    pub const ALL: [Axis; 4] = [
        Axis::ExecutionModel,
        Axis::ProblemType,
        Axis::Overall,
        Axis::Cell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::ExecutionModel => "execution_model",
            Axis::ProblemType => "problem_type",
            Axis::Overall => "overall",
            Axis::Cell => "cell",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axis `{s}`"))
    }
}

pub fn cell_label(problem: &EvalProblem) -> String {
    format!("{}/{}", problem.problem_type, problem.execution_model)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AggregateOptions {
    /// Drop `RunnerUnavailable` samples from the per-problem sample count
    /// instead of counting them as incorrect.
    pub exclude_unavailable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtKRow {
    pub axis: Axis,
    pub value: String,
    pub k: u64,
    pub pass_at_k: f64,
    pub n_problems: usize,
    pub samples_per_problem: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtKReport {
    pub model: String,
    pub rows: Vec<PassAtKRow>,
    pub verdict_counts: BTreeMap<Verdict, usize>,
}

impl PassAtKReport {
    pub fn get(&self, axis: Axis, value: &str, k: u64) -> Option<&PassAtKRow> {
        self.rows
            .iter()
            .find(|r| r.axis == axis && r.value == value && r.k == k)
    }
}

#[derive(Debug, Clone, Copy)]
struct Counts {
    n: u64,
    correct: u64,
}

/// Per-problem counts, verdict tally, and the uniform sample count.
type ProblemCounts<'a> = (
    Vec<(&'a EvalProblem, Counts)>,
    BTreeMap<Verdict, usize>,
    u64,
);

/// Per-problem (sample count, correct count), checking the journal covers the
/// suite with exactly N judged samples per problem.
fn count_problems<'a>(
    records: &[CompletionRecord],
    suite: &'a Suite,
    options: &AggregateOptions,
) -> Result<ProblemCounts<'a>, EvalError> {
    let mut by_problem: HashMap<&str, Vec<&CompletionRecord>> = HashMap::new();
    for record in records {
        if suite.problem(&record.problem_id).is_none() {
            return Err(EvalError::UnknownProblem(record.problem_id.clone()));
        }
        by_problem
            .entry(&record.problem_id)
            .or_default()
            .push(record);
    }

    let mut samples: Option<u64> = None;
    let mut verdicts = BTreeMap::new();
    let mut out = Vec::with_capacity(suite.problems.len());
    for problem in &suite.problems {
        let incomplete = || EvalError::IncompleteRecords(problem.id.clone());
        let mut recs = by_problem
            .remove(problem.id.as_str())
            .ok_or_else(incomplete)?;
        recs.sort_by_key(|r| r.sample_index);
        if recs.iter().enumerate().any(|(i, r)| r.sample_index != i) {
            return Err(incomplete());
        }
        let n = recs.len() as u64;
        if *samples.get_or_insert(n) != n {
            return Err(incomplete());
        }
        let mut counts = Counts { n, correct: 0 };
        for r in recs {
            let verdict = r.verdict.ok_or_else(incomplete)?;
            *verdicts.entry(verdict).or_insert(0) += 1;
            match verdict {
                Verdict::Correct => counts.correct += 1,
                Verdict::RunnerUnavailable if options.exclude_unavailable => counts.n -= 1,
                _ => {}
            }
        }
        out.push((problem, counts));
    }
    Ok((out, verdicts, samples.unwrap_or(0)))
}

fn group_key(axis: Axis, problem: &EvalProblem) -> Vec<String> {
    match axis {
        Axis::ExecutionModel => vec![problem.execution_model.to_string()],
        Axis::ProblemType => vec![problem.problem_type.to_string()],
        Axis::Cell => vec![cell_label(problem)],
        Axis::Overall => {
            let side = if problem.execution_model == ExecutionModel::Serial {
                SERIAL_ROW
            } else {
                PARALLEL_ROW
            };
            vec![side.to_string(), ALL_ROW.to_string()]
        }
    }
}

/// Mean of per-problem pass@k over each axis value.
///
/// Row order: axis values in suite order (serial, parallel, all for the
/// overall axis), then ascending k. A problem whose usable sample count falls
/// below k (only possible with `exclude_unavailable`) is left out of that
/// row's mean; rows with no members are omitted.
pub fn aggregate(
    records: &[CompletionRecord],
    suite: &Suite,
    axis: Axis,
    ks: &[u64],
    options: &AggregateOptions,
) -> Result<PassAtKReport, EvalError> {
    let model = match records.first() {
        Some(first) => {
            if let Some(other) = records.iter().find(|r| r.model != first.model) {
                return Err(EvalError::MixedModels(
                    first.model.clone(),
                    other.model.clone(),
                ));
            }
            first.model.clone()
        }
        None => String::new(),
    };
    let (counts, verdict_counts, samples) = count_problems(records, suite, options)?;

    let mut groups: Vec<(String, Vec<Counts>)> = Vec::new();
    for (problem, c) in &counts {
        for key in group_key(axis, problem) {
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, members)) => members.push(*c),
                None => groups.push((key, vec![*c])),
            }
        }
    }
    if axis == Axis::Overall {
        let rank = |k: &str| {
            [SERIAL_ROW, PARALLEL_ROW, ALL_ROW]
                .iter()
                .position(|r| *r == k)
        };
        groups.sort_by_key(|(k, _)| rank(k));
    }

    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut rows = Vec::new();
    for (value, members) in &groups {
        for &k in &ks {
            let mut scores = Vec::with_capacity(members.len());
            for c in members {
                if options.exclude_unavailable && c.n < k {
                    continue;
                }
                scores.push(pass_at_k(c.n, c.correct, k)?);
            }
            if scores.is_empty() {
                continue;
            }
            rows.push(PassAtKRow {
                axis,
                value: value.clone(),
                k,
                pass_at_k: scores.iter().sum::<f64>() / scores.len() as f64,
                n_problems: scores.len(),
                samples_per_problem: samples,
            });
        }
    }
    Ok(PassAtKReport {
        model,
        rows,
        verdict_counts,
    })
}
