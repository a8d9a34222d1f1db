//! Data-generation prompts: seed snippet + one of four template families.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::{ParallelTag, SeedSnippet};
use crate::gateway::parse::{PROBLEM_DELIMITER, SOLUTION_DELIMITER};
use crate::ids::{content_id, derive_seed, seeded_rng};

/// Template text shipped with the crate.
pub const DEFAULT_TEMPLATES: &str = include_str!("../templates/default.toml");

/// Models a translation problem may start from or target.
pub const TRANSLATION_MODELS: [ParallelTag; 5] = [
    ParallelTag::OpenMP,
    ParallelTag::Mpi,
    ParallelTag::Cuda,
    ParallelTag::Kokkos,
    ParallelTag::Hip,
];

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("template file: {0}")]
    TemplateParse(String),
    #[error("template `{kind}` {problem}")]
    InvalidTemplate { kind: TemplateKind, problem: String },
    #[error("seed corpus is empty")]
    EmptyCorpus,
    #[error("no providers given")]
    NoProviders,
    #[error("kind distribution {0}")]
    BadDistribution(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    Programming,
    Translation,
    Optimization,
    Parallelization,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 4] = [
        TemplateKind::Programming,
        TemplateKind::Translation,
        TemplateKind::Optimization,
        TemplateKind::Parallelization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::Programming => "programming",
            TemplateKind::Translation => "translation",
            TemplateKind::Optimization => "optimization",
            TemplateKind::Parallelization => "parallelization",
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown template kind `{s}`"))
    }
}

/// A versioned set of the four template texts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub version: String,
    pub templates: BTreeMap<TemplateKind, String>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("shipped templates are valid")
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let set: TemplateSet =
            toml::from_str(text).map_err(|e| PromptError::TemplateParse(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), PromptError> {
        for kind in TemplateKind::ALL {
            let invalid = |problem: &str| PromptError::InvalidTemplate {
                kind,
                problem: problem.to_string(),
            };
            let text = self
                .templates
                .get(&kind)
                .ok_or_else(|| invalid("is missing"))?;
            if !text.contains("{seed}") {
                return Err(invalid("has no {seed} placeholder"));
            }
            if !text.contains(PROBLEM_DELIMITER) || !text.contains(SOLUTION_DELIMITER) {
                return Err(invalid("does not spell out both reply delimiters"));
            }
            if kind == TemplateKind::Translation && !text.contains("{target_model}") {
                return Err(invalid("has no {target_model} placeholder"));
            }
        }
        Ok(())
    }

    pub fn get(&self, kind: TemplateKind) -> &str {
        &self.templates[&kind]
    }
}

/// Source and target models of a translation prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPair {
    pub source: ParallelTag,
    pub target: ParallelTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationPrompt {
    pub id: String,
    pub kind: TemplateKind,
    pub seed_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_model_hint: Option<ModelPair>,
    pub template_version: String,
}

/// Single-pass placeholder substitution; substituted text is never rescanned.
fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in values {
            let placeholder = format!("{{{name}}}");
            if tail.starts_with(&placeholder) {
                out.push_str(value);
                rest = &tail[placeholder.len()..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

fn choose_translation_pair(seed: &SeedSnippet, rng_seed: u64) -> ModelPair {
    let mut rng = seeded_rng(rng_seed);
    let own: Vec<ParallelTag> = TRANSLATION_MODELS
        .into_iter()
        .filter(|m| seed.parallel_tags.contains(m))
        .collect();
    let source = match own.choose(&mut rng) {
        Some(&tag) => tag,
        None => *TRANSLATION_MODELS.choose(&mut rng).expect("non-empty"),
    };
    let mut targets: Vec<ParallelTag> = TRANSLATION_MODELS
        .into_iter()
        .filter(|m| !own.contains(m) && *m != source)
        .collect();
    if targets.is_empty() {
        targets = TRANSLATION_MODELS
            .into_iter()
            .filter(|m| *m != source)
            .collect();
    }
    let target = *targets.choose(&mut rng).expect("at least four candidates");
    ModelPair { source, target }
}

fn describe_models(seed: &SeedSnippet) -> String {
    let named: Vec<&str> = seed
        .parallel_tags
        .iter()
        .filter(|t| **t != ParallelTag::None)
        .map(|t| t.name())
        .collect();
    if named.is_empty() {
        "sequential code".to_string()
    } else {
        named.join(" + ")
    }
}

/// Renders the data-generation prompt for `kind` around `seed`.
///
/// Translation prompts pick their source/target models from `rng_seed`; the
/// pair is recorded in `target_model_hint`.
pub fn render_prompt(
    templates: &TemplateSet,
    kind: TemplateKind,
    seed: &SeedSnippet,
    rng_seed: u64,
) -> GenerationPrompt {
    let (hint, source, target) = match kind {
        TemplateKind::Translation => {
            let pair = choose_translation_pair(seed, rng_seed);
            (
                Some(pair),
                pair.source.name().to_string(),
                pair.target.name().to_string(),
            )
        }
        _ => (
            None,
            describe_models(seed),
            "a suitable parallel programming model".to_string(),
        ),
    };
    let text = fill(
        templates.get(kind),
        &[
            ("seed", &seed.text),
            ("source_model", &source),
            ("target_model", &target),
        ],
    );
    let id = content_id(&[
        "prompt",
        kind.name(),
        &seed.id,
        &templates.version,
        &rng_seed.to_string(),
        &text,
    ]);
    GenerationPrompt {
        id,
        kind,
        seed_id: seed.id.clone(),
        text,
        target_model_hint: hint,
        template_version: templates.version.clone(),
    }
}

/// Weights over the four template kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KindDistribution(pub BTreeMap<TemplateKind, f64>);

impl Default for KindDistribution {
    fn default() -> Self {
        KindDistribution(TemplateKind::ALL.into_iter().map(|k| (k, 0.25)).collect())
    }
}

impl KindDistribution {
    pub fn validate(&self) -> Result<(), PromptError> {
        if self.0.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PromptError::BadDistribution(
                "has a negative or non-finite weight".into(),
            ));
        }
        let sum: f64 = self.0.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PromptError::BadDistribution(format!(
                "sums to {sum}, not 1"
            )));
        }
        Ok(())
    }

    /// Largest-remainder apportionment of `n` slots; each count is within 1 of `w * n`.
    pub fn apportion(&self, n: usize) -> BTreeMap<TemplateKind, usize> {
        let mut counts = BTreeMap::new();
        let mut remainders = Vec::new();
        for kind in TemplateKind::ALL {
            let exact = self.0.get(&kind).copied().unwrap_or(0.0) * n as f64;
            let base = exact.floor() as usize;
            counts.insert(kind, base);
            remainders.push((exact - base as f64, kind));
        }
        let assigned: usize = counts.values().sum();
        // stable sort keeps kind order among equal remainders
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (_, kind) in remainders.into_iter().take(n.saturating_sub(assigned)) {
            *counts.get_mut(&kind).expect("all kinds present") += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTask {
    pub id: String,
    pub provider: String,
    pub prompt: GenerationPrompt,
}

impl GenerationTask {
    pub fn kind(&self) -> TemplateKind {
        self.prompt.kind
    }

    pub fn seed_id(&self) -> &str {
        &self.prompt.seed_id
    }
}

/// One generation task per seed, kinds shuffled to match `distribution`,
/// providers assigned round-robin.
pub fn plan_generation(
    seeds: &[SeedSnippet],
    distribution: &KindDistribution,
    providers: &[String],
    templates: &TemplateSet,
    seed: u64,
) -> Result<Vec<GenerationTask>, PromptError> {
    if seeds.is_empty() {
        return Err(PromptError::EmptyCorpus);
    }
    if providers.is_empty() {
        return Err(PromptError::NoProviders);
    }
    distribution.validate()?;

    let mut kinds: Vec<TemplateKind> = distribution
        .apportion(seeds.len())
        .into_iter()
        .flat_map(|(kind, count)| std::iter::repeat_n(kind, count))
        .collect();
    kinds.shuffle(&mut seeded_rng(derive_seed(seed, "kinds")));

    let tasks = seeds
        .iter()
        .zip(kinds)
        .enumerate()
        .map(|(i, (snippet, kind))| {
            let prompt = render_prompt(templates, kind, snippet, derive_seed(seed, &snippet.id));
            GenerationTask {
                id: prompt.id.clone(),
                provider: providers[i % providers.len()].clone(),
                prompt,
            }
        })
        .collect();
    Ok(tasks)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashSet};

    use super::*;
    use crate::corpus::{Language, Origin};

    fn seed(text: &str) -> SeedSnippet {
        SeedSnippet::new(
            text.to_string(),
            Language::C,
            Origin {
                path: "x.c".into(),
                start_line: 1,
                end_line: 1,
            },
        )
    }

    #[test]
    fn builtin_templates_cover_all_kinds() {
        let set = TemplateSet::builtin();
        assert_eq!(set.templates.len(), 4);
        assert_eq!(set.version, "1");
    }

    #[test]
    fn template_without_delimiters_is_rejected() {
        let text = DEFAULT_TEMPLATES.replacen("** Solution **", "Solution:", 1);
        assert!(matches!(
            TemplateSet::parse(&text),
            Err(PromptError::InvalidTemplate { .. })
        ));
    }

    #[test]
    fn translation_prompt_names_target_model() {
        let set = TemplateSet::builtin();
        let s = seed("static bag_t threadbag[NUMTHREADS + 1];");
        let p = render_prompt(&set, TemplateKind::Translation, &s, 3);
        let pair = p.target_model_hint.expect("translation records models");
        assert_ne!(pair.source, pair.target);
        assert!(p.text.contains(&format!("using {}", pair.target.name())));
        assert!(p.text.contains(&s.text));
    }

    #[test]
    fn translation_target_excludes_seed_model() {
        let set = TemplateSet::builtin();
        let s = seed("#pragma omp parallel for\nfor (;;) {}");
        for rng_seed in 0..50 {
            let pair = render_prompt(&set, TemplateKind::Translation, &s, rng_seed)
                .target_model_hint
                .unwrap();
            assert_eq!(pair.source, ParallelTag::OpenMP);
            assert_ne!(pair.target, ParallelTag::OpenMP);
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let set = TemplateSet::builtin();
        let s = seed("int x = 0;");
        let a = render_prompt(&set, TemplateKind::Programming, &s, 11);
        let b = render_prompt(&set, TemplateKind::Programming, &s, 11);
        assert_eq!(a, b);
    }

    #[test]
    fn forty_distinct_prompt_ids() {
        let set = TemplateSet::builtin();
        let ids: HashSet<String> = (0..10)
            .flat_map(|i| {
                let s = seed(&format!("int v{i};"));
                TemplateKind::ALL
                    .into_iter()
                    .map(|k| render_prompt(&set, k, &s, 1).id)
                    .collect::<Vec<_>>()
            })
            .collect();
        assert_eq!(ids.len(), 40);
    }

    #[test]
    fn seed_braces_are_not_treated_as_placeholders() {
        let set = TemplateSet::builtin();
        let s = seed("printf(\"{target_model}\"); {seed}");
        let p = render_prompt(&set, TemplateKind::Translation, &s, 0);
        assert!(p.text.contains(&s.text));
    }

    #[test]
    fn uniform_plan_splits_evenly() {
        let set = TemplateSet::builtin();
        let seeds: Vec<_> = (0..100).map(|i| seed(&format!("int v{i};"))).collect();
        let providers: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
        let tasks =
            plan_generation(&seeds, &KindDistribution::default(), &providers, &set, 5).unwrap();
        assert_eq!(tasks.len(), 100);
        for kind in TemplateKind::ALL {
            assert_eq!(tasks.iter().filter(|t| t.kind() == kind).count(), 25);
        }
        for p in &providers {
            assert_eq!(tasks.iter().filter(|t| &t.provider == p).count(), 25);
        }
        let seed_ids: BTreeSet<_> = tasks.iter().map(|t| t.seed_id()).collect();
        assert_eq!(seed_ids.len(), 100);
        let again =
            plan_generation(&seeds, &KindDistribution::default(), &providers, &set, 5).unwrap();
        assert_eq!(tasks, again);
    }

    #[test]
    fn skewed_distribution_within_one() {
        let dist = KindDistribution(BTreeMap::from([
            (TemplateKind::Programming, 0.5),
            (TemplateKind::Translation, 0.3),
            (TemplateKind::Optimization, 0.1),
            (TemplateKind::Parallelization, 0.1),
        ]));
        for n in [1, 7, 13, 101] {
            let counts = dist.apportion(n);
            assert_eq!(counts.values().sum::<usize>(), n);
            for (kind, count) in counts {
                let exact = dist.0[&kind] * n as f64;
                assert!(
                    (count as f64 - exact).abs() <= 1.0,
                    "{kind} {count} {exact}"
                );
            }
        }
    }

    #[test]
    fn plan_errors() {
        let set = TemplateSet::builtin();
        let p = vec!["a".to_string()];
        assert!(matches!(
            plan_generation(&[], &KindDistribution::default(), &p, &set, 0),
            Err(PromptError::EmptyCorpus)
        ));
        let seeds = vec![seed("x;")];
        assert!(matches!(
            plan_generation(&seeds, &KindDistribution::default(), &[], &set, 0),
            Err(PromptError::NoProviders)
        ));
        let bad = KindDistribution(BTreeMap::from([(TemplateKind::Programming, 0.7)]));
        assert!(matches!(
            plan_generation(&seeds, &bad, &p, &set, 0),
            Err(PromptError::BadDistribution(_))
        ));
    }
}
