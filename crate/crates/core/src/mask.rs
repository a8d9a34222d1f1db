//! Training-sample construction with optional instruction masking.
//!
//! A pair is laid out as `Instruct: {instruction} Response: {response}`.
//! With masking on, every label up to and including the ` Response: ` marker
//! is replaced by the tokenizer's sentinel so only response tokens carry loss.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gateway::InstructPair;

pub const INSTRUCT_PREFIX: &str = "Instruct: ";
pub const RESPONSE_MARKER: &str = " Response: ";
pub const DEFAULT_CONTEXT_CAP: usize = 8192;
pub const IGNORE_INDEX: i64 = -100;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaskError {
    #[error("span [{start}, {end}) out of bounds for {len} tokens")]
    SpanOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("unknown tokenizer `{0}`")]
    UnknownTokenizer(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Encoding {
    pub ids: Vec<u32>,
    /// Byte range of the input covered by each token.
    pub offsets: Vec<Range<usize>>,
}

pub trait Tokenizer: Send + Sync {
    fn name(&self) -> &str;
    fn encode(&self, text: &str) -> Encoding;
    fn decode(&self, ids: &[u32]) -> String;
    /// Label written at masked positions.
    fn sentinel(&self) -> i64 {
        IGNORE_INDEX
    }
}

/// One token per UTF-8 byte.
#[derive(Debug, Default, Clone, Copy)]
pub struct ByteTokenizer;

impl Tokenizer for ByteTokenizer {
    fn name(&self) -> &str {
        "mock"
    }

    fn encode(&self, text: &str) -> Encoding {
        Encoding {
            ids: text.bytes().map(u32::from).collect(),
            offsets: (0..text.len()).map(|i| i..i + 1).collect(),
        }
    }

    fn decode(&self, ids: &[u32]) -> String {
        let bytes: Vec<u8> = ids.iter().map(|&id| id as u8).collect();
        String::from_utf8_lossy(&bytes).into_owned()
    }
}

pub fn tokenizer_by_name(name: &str) -> Result<Box<dyn Tokenizer>, MaskError> {
    match name {
        "mock" | "byte" => Ok(Box::new(ByteTokenizer)),
        other => Err(MaskError::UnknownTokenizer(other.to_string())),
    }
}

/// Training text plus the byte span of everything before the response.
pub fn format_sample(pair: &InstructPair) -> (String, Range<usize>) {
    let text = format!(
        "{INSTRUCT_PREFIX}{}{RESPONSE_MARKER}{}",
        pair.instruction, pair.response
    );
    let end = INSTRUCT_PREFIX.len() + pair.instruction.len() + RESPONSE_MARKER.len();
    (text, 0..end)
}

/// Smallest token range whose tokens together cover `span`.
pub fn char_span_to_token_span(offsets: &[Range<usize>], span: &Range<usize>) -> Range<usize> {
    if span.is_empty() {
        let at = offsets.partition_point(|o| o.start < span.start);
        return at..at;
    }
    let start = offsets.partition_point(|o| o.end <= span.start);
    let end = offsets.partition_point(|o| o.start < span.end);
    start..end.max(start)
}

pub fn build_labels(
    tokens: &[u32],
    span: &Range<usize>,
    masked: bool,
    sentinel: i64,
) -> Result<Vec<i64>, MaskError> {
    if span.start > span.end || span.end > tokens.len() {
        return Err(MaskError::SpanOutOfBounds {
            start: span.start,
            end: span.end,
            len: tokens.len(),
        });
    }
    Ok(tokens
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if masked && span.contains(&i) {
                sentinel
            } else {
                i64::from(t)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSample {
    pub token_ids: Vec<u32>,
    pub labels: Vec<i64>,
    pub instruction_span: [usize; 2],
    pub masked: bool,
}

impl MaskedSample {
    pub fn span(&self) -> Range<usize> {
        self.instruction_span[0]..self.instruction_span[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedPair {
    pub pair_id: String,
    pub tokens: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainingFile {
    /// In input order.
    pub samples: Vec<MaskedSample>,
    pub dropped: Vec<DroppedPair>,
}

pub fn build_sample(pair: &InstructPair, tokenizer: &dyn Tokenizer, masked: bool) -> MaskedSample {
    let (text, char_span) = format_sample(pair);
    let encoding = tokenizer.encode(&text);
    let span = char_span_to_token_span(&encoding.offsets, &char_span);
    let labels = build_labels(&encoding.ids, &span, masked, tokenizer.sentinel())
        .expect("span derived from the same encoding");
    MaskedSample {
        token_ids: encoding.ids,
        labels,
        instruction_span: [span.start, span.end],
        masked,
    }
}

/// One sample per pair; pairs longer than `context_cap` tokens are dropped.
pub fn build_training_file(
    pairs: &[InstructPair],
    tokenizer: &dyn Tokenizer,
    masked: bool,
    context_cap: usize,
) -> TrainingFile {
    let built: Vec<(&InstructPair, MaskedSample)> = pairs
        .par_iter()
        .map(|pair| (pair, build_sample(pair, tokenizer, masked)))
        .collect();
    let mut out = TrainingFile::default();
    for (pair, sample) in built {
        if sample.token_ids.len() > context_cap {
            log::info!(
                "dropping pair {}: {} tokens exceeds cap {context_cap}",
                pair.id,
                sample.token_ids.len()
            );
            out.dropped.push(DroppedPair {
                pair_id: pair.id.clone(),
                tokens: sample.token_ids.len(),
            });
        } else {
            out.samples.push(sample);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use chrono::{DateTime, Utc};

    use super::*;
    use crate::prompt::TemplateKind;

    fn pair(instruction: &str, response: &str) -> InstructPair {
        InstructPair::new(
            instruction,
            response,
            "g",
            TemplateKind::Programming,
            "s",
            DateTime::<Utc>::UNIX_EPOCH,
        )
        .unwrap()
    }

    #[test]
    fn format_string_and_span() {
        let p = pair("add two numbers", "return a+b;");
        let (text, span) = format_sample(&p);
        assert_eq!(text, "Instruct: add two numbers Response: return a+b;");
        assert_eq!(span.end, text.find("return").unwrap());
        assert_eq!(&text[span.end..], p.response);
    }

    #[test]
    fn masked_labels() {
        let tokens: Vec<u32> = (10..18).collect();
        let labels = build_labels(&tokens, &(0..5), true, -100).unwrap();
        assert_eq!(labels, [-100, -100, -100, -100, -100, 15, 16, 17]);
    }

    #[test]
    fn unmasked_and_empty_span_are_identity() {
        let tokens: Vec<u32> = (10..18).collect();
        let expect: Vec<i64> = tokens.iter().map(|&t| i64::from(t)).collect();
        assert_eq!(build_labels(&tokens, &(0..5), false, -100).unwrap(), expect);
        assert_eq!(build_labels(&tokens, &(0..0), true, -100).unwrap(), expect);
    }

    #[test]
    fn span_out_of_bounds() {
        let tokens = [1, 2, 3];
        assert_eq!(
            build_labels(&tokens, &(1..4), true, -100),
            Err(MaskError::SpanOutOfBounds {
                start: 1,
                end: 4,
                len: 3
            })
        );
    }

    #[test]
    fn token_span_covers_split_boundaries() {
        // tokens "ab" "cd" "ef"
        let offsets = [0..2, 2..4, 4..6];
        assert_eq!(char_span_to_token_span(&offsets, &(0..3)), 0..2);
        assert_eq!(char_span_to_token_span(&offsets, &(0..4)), 0..2);
        assert_eq!(char_span_to_token_span(&offsets, &(3..5)), 1..3);
        assert_eq!(char_span_to_token_span(&offsets, &(0..0)), 0..0);
    }

    #[test]
    fn over_cap_pair_is_dropped() {
        let (text, _) = format_sample(&pair("q", "r"));
        let overhead = text.len() - 2;
        let response = "x".repeat(8193 - overhead - 1);
        let long = pair("q", &response);
        assert_eq!(format_sample(&long).0.len(), 8193);
        let fits = pair("q", &response[1..]);
        let out = build_training_file(
            &[long.clone(), fits],
            &ByteTokenizer,
            true,
            DEFAULT_CONTEXT_CAP,
        );
        assert_eq!(out.samples.len(), 1);
        assert_eq!(out.samples[0].token_ids.len(), 8192);
        assert_eq!(
            out.dropped,
            vec![DroppedPair {
                pair_id: long.id,
                tokens: 8193
            }]
        );
    }

    #[test]
    fn masked_and_unmasked_share_tokens() {
        let pairs: Vec<_> = (0..100)
            .map(|i| pair(&format!("task {i}"), &format!("code {i};")))
            .collect();
        let m = build_training_file(&pairs, &ByteTokenizer, true, DEFAULT_CONTEXT_CAP);
        let u = build_training_file(&pairs, &ByteTokenizer, false, DEFAULT_CONTEXT_CAP);
        assert_eq!(m.samples.len(), 100);
        for (a, b) in m.samples.iter().zip(&u.samples) {
            assert_eq!(a.token_ids, b.token_ids);
            assert_eq!(a.instruction_span, b.instruction_span);
            assert_ne!(a.labels, b.labels);
        }
    }
}
