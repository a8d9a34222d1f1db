//! Splitting raw completions into (instruction, response) pairs.

use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{parallel_tags, TagSet};
use crate::ids::content_id;
use crate::prompt::TemplateKind;

pub const PROBLEM_DELIMITER: &str = "** Problem Statement **";
pub const SOLUTION_DELIMITER: &str = "** Solution **";

static PROBLEM_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\*\*\s*problem\s+statement\s*\*\*").expect("valid regex"));
static SOLUTION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\*\*\s*solution\s*\*\*").expect("valid regex"));

/// Provider output for one generation task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub task_id: String,
    pub provider: String,
    pub kind: TemplateKind,
    pub seed_id: String,
    pub text: String,
    pub requested_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
}

/// One instruction-tuning sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructPair {
    pub id: String,
    pub instruction: String,
    pub response: String,
    pub generator: String,
    pub kind: TemplateKind,
    pub seed_id: String,
    pub parallel_tags: TagSet,
    pub created_at: DateTime<Utc>,
}

impl InstructPair {
    /// Builds a pair, deriving `id` and `parallel_tags` from the content.
    ///
    /// Returns `None` when either side is empty after trimming.
    pub fn new(
        instruction: &str,
        response: &str,
        generator: &str,
        kind: TemplateKind,
        seed_id: &str,
        created_at: DateTime<Utc>,
    ) -> Option<Self> {
        let instruction = instruction.trim();
        let response = response.trim();
        if instruction.is_empty() || response.is_empty() {
            return None;
        }
        Some(InstructPair {
            id: content_id(&["pair", generator, seed_id, instruction, response]),
            instruction: instruction.to_string(),
            response: response.to_string(),
            generator: generator.to_string(),
            kind,
            seed_id: seed_id.to_string(),
            parallel_tags: parallel_tags(response),
            created_at,
        })
    }

    /// Lays the pair out the way generators are asked to reply.
    pub fn to_reply_text(&self) -> String {
        format!(
            "{PROBLEM_DELIMITER}\n{}\n\n{SOLUTION_DELIMITER}\n{}\n",
            self.instruction, self.response
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseFailureReason {
    MissingProblemDelimiter,
    MissingSolutionDelimiter,
    EmptySection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub task_id: String,
    pub provider: String,
    pub reason: ParseFailureReason,
}

/// Splits `text` into trimmed (instruction, response) sections.
pub fn split_sections(text: &str) -> Result<(&str, &str), ParseFailureReason> {
    let problem = PROBLEM_RE
        .find(text)
        .ok_or(ParseFailureReason::MissingProblemDelimiter)?;
    let after_problem = &text[problem.end()..];
    let solution = SOLUTION_RE
        .find(after_problem)
        .ok_or(ParseFailureReason::MissingSolutionDelimiter)?;
    let instruction = after_problem[..solution.start()].trim();
    let response = after_problem[solution.end()..].trim();
    if instruction.is_empty() || response.is_empty() {
        return Err(ParseFailureReason::EmptySection);
    }
    Ok((instruction, response))
}

pub fn parse_sample(raw: &RawCompletion) -> Result<InstructPair, ParseFailure> {
    let fail = |reason| ParseFailure {
        task_id: raw.task_id.clone(),
        provider: raw.provider.clone(),
        reason,
    };
    let (instruction, response) = split_sections(&raw.text).map_err(fail)?;
    InstructPair::new(
        instruction,
        response,
        &raw.provider,
        raw.kind,
        &raw.seed_id,
        raw.requested_at,
    )
    .ok_or_else(|| fail(ParseFailureReason::EmptySection))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Harvest {
    pub pairs: Vec<InstructPair>,
    pub discards: Vec<ParseFailure>,
}

/// Parses every completion, keeping the parsable ones.
pub fn harvest<'a, I>(completions: I) -> Harvest
where
    I: IntoIterator<Item = &'a RawCompletion>,
{
    let mut out = Harvest::default();
    for raw in completions {
        match parse_sample(raw) {
            Ok(pair) => out.pairs.push(pair),
            Err(failure) => out.discards.push(failure),
        }
    }
    out
}
