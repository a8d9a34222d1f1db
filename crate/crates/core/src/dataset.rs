//! The instruct dataset: exact dedup, ablation slices, generator partitions,
//! and a recountable manifest.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpus::ParallelTag;
use crate::gateway::InstructPair;
use crate::ids::{content_id, seeded_rng, sha256_hex};
use crate::jsonl::{read_jsonl, to_jsonl_bytes, write_jsonl, JsonlError};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("insufficient {tag}-tagged pairs: have {have}, want {want}")]
    InsufficientTagged {
        tag: ParallelTag,
        have: usize,
        want: usize,
    },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: duplicate pair in dataset file")]
    DuplicateInFile(String),
}

/// Key under which two pairs count as the same sample.
///
/// Only leading/trailing whitespace is normalised; inner whitespace matters.
pub fn dedup_key(pair: &InstructPair) -> String {
    content_id(&["dedup", pair.instruction.trim(), pair.response.trim()])
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub total: usize,
    pub by_generator: BTreeMap<String, usize>,
    pub by_kind: BTreeMap<String, usize>,
    pub by_tag: BTreeMap<String, usize>,
    /// sha256 of the dataset's JSONL serialisation.
    pub content_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pairs: Vec<InstructPair>,
    keys: HashSet<String>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a dataset, silently dropping later duplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = InstructPair>) -> Self {
        let mut ds = Dataset::new();
        ds.append_dedup(pairs);
        ds
    }

    pub fn pairs(&self) -> &[InstructPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Appends pairs whose dedup key is new; returns the rejected duplicates.
    pub fn append_dedup(
        &mut self,
        pairs: impl IntoIterator<Item = InstructPair>,
    ) -> Vec<InstructPair> {
        let mut rejected = Vec::new();
        for pair in pairs {
            if self.keys.insert(dedup_key(&pair)) {
                self.pairs.push(pair);
            } else {
                rejected.push(pair);
            }
        }
        rejected
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        to_jsonl_bytes(&self.pairs)
    }

    /// Manifest with counts recomputed from the pairs.
    pub fn stats(&self) -> Manifest {
        let mut m = Manifest {
            total: self.pairs.len(),
            content_hash: sha256_hex(&self.to_jsonl()),
            ..Default::default()
        };
        for pair in &self.pairs {
            *m.by_generator.entry(pair.generator.clone()).or_default() += 1;
            *m.by_kind.entry(pair.kind.name().to_string()).or_default() += 1;
            for tag in &pair.parallel_tags {
                *m.by_tag.entry(tag.name().to_string()).or_default() += 1;
            }
        }
        m
    }

    /// Loads a dataset file. Duplicate keys in the file are an error.
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let pairs: Vec<InstructPair> = read_jsonl(path)?;
        let mut ds = Dataset::new();
        if let Some(dup) = ds.append_dedup(pairs).into_iter().next() {
            return Err(DatasetError::DuplicateInFile(dup.id));
        }
        Ok(ds)
    }

    /// Writes the JSONL file and its `<path>.manifest.json` sidecar.
    pub fn save(&self, path: &Path, seed: Option<u64>) -> Result<Manifest, DatasetError> {
        write_jsonl(path, &self.pairs)?;
        let mut manifest = self.stats();
        manifest.seed = seed;
        let sidecar = manifest_path(path);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&sidecar, text + "\n").map_err(|source| DatasetError::Io {
            path: sidecar,
            source,
        })?;
        Ok(manifest)
    }
}

pub fn manifest_path(dataset: &Path) -> PathBuf {
    let mut name = dataset.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub tag: ParallelTag,
    pub target_count: usize,
    pub seed: u64,
}

/// Keeps exactly `spec.target_count` pairs carrying `spec.tag`, sampled
/// uniformly without replacement; every other pair is kept in place.
pub fn slice_by_tag(dataset: &Dataset, spec: &SliceSpec) -> Result<Dataset, DatasetError> {
    let tagged: Vec<usize> = dataset
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.parallel_tags.contains(&spec.tag))
        .map(|(i, _)| i)
        .collect();
    if spec.target_count > tagged.len() {
        return Err(DatasetError::InsufficientTagged {
            tag: spec.tag,
            have: tagged.len(),
            want: spec.target_count,
        });
    }
    let mut rng = seeded_rng(spec.seed);
    let keep_tagged: HashSet<usize> = index::sample(&mut rng, tagged.len(), spec.target_count)
        .into_iter()
        .map(|j| tagged[j])
        .collect();

    let mut out = Dataset::new();
    for (i, pair) in dataset.pairs.iter().enumerate() {
        if !pair.parallel_tags.contains(&spec.tag) || keep_tagged.contains(&i) {
            out.keys.insert(dedup_key(pair));
            out.pairs.push(pair.clone());
        }
    }
    Ok(out)
}

/// Splits the dataset by generator, preserving relative order inside each part.
pub fn partition_by_generator(dataset: &Dataset) -> BTreeMap<String, Dataset> {
    let mut parts: BTreeMap<String, Dataset> = BTreeMap::new();
    for pair in &dataset.pairs {
        let part = parts.entry(pair.generator.clone()).or_default();
        part.keys.insert(dedup_key(pair));
        part.pairs.push(pair.clone());
    }
    parts
}
