//! Seed-snippet mining.
//!
//! Walks a source tree, cuts files into short contiguous snippets, tags each
//! snippet with a language and the parallel programming models it uses, and
//! draws a quota-balanced seed corpus from the result.
//!
//! Parallel-model tags come from a fixed substring marker table, so tagging is
//! reproducible from the text alone. The same classifier decides which
//! dataset samples count as "MPI samples" when building ablation slices.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::ids::{content_id, derive_seed, seeded_rng};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: input is binary or not valid UTF-8")]
    Decode { path: String },
    #[error("invalid line window [{min}, {max}]")]
    InvalidWindow { min: usize, max: usize },
    #[error("insufficient {language} snippets: have {have}, want {want}")]
    InsufficientSnippets {
        language: Language,
        have: usize,
        want: usize,
    },
    #[error("corpus walk failed: {0}")]
    Walk(#[from] walkdir::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    C,
    #[serde(rename = "C++")]
    Cpp,
    Fortran,
    Python,
    #[serde(rename = "CUDA")]
    Cuda,
    Chapel,
    OpenCL,
    Unknown,
}

impl Language {
    pub const ALL: [Language; 8] = [
        Language::C,
        Language::Cpp,
        Language::Fortran,
        Language::Python,
        Language::Cuda,
        Language::Chapel,
        Language::OpenCL,
        Language::Unknown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Language::C => "C",
            Language::Cpp => "C++",
            Language::Fortran => "Fortran",
            Language::Python => "Python",
            Language::Cuda => "CUDA",
            Language::Chapel => "Chapel",
            Language::OpenCL => "OpenCL",
            Language::Unknown => "Unknown",
        }
    }

    /// Guess from a file extension; `None` when the extension is not a known source type.
    pub fn from_path(path: &Path) -> Option<Language> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        let lang = match ext.as_str() {
            "c" | "h" => Language::C,
            "cc" | "cpp" | "cxx" | "c++" | "hpp" | "hh" | "hxx" => Language::Cpp,
            "f" | "for" | "f77" | "f90" | "f95" | "f03" | "f08" => Language::Fortran,
            "py" => Language::Python,
            "cu" | "cuh" => Language::Cuda,
            "chpl" => Language::Chapel,
            "cl" => Language::OpenCL,
            _ => return None,
        };
        Some(lang)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown language `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParallelTag {
    #[serde(rename = "MPI")]
    Mpi,
    OpenMP,
    #[serde(rename = "CUDA")]
    Cuda,
    #[serde(rename = "HIP")]
    Hip,
    Kokkos,
    OpenCL,
    None,
}

impl ParallelTag {
    pub const ALL: [ParallelTag; 7] = [
        ParallelTag::Mpi,
        ParallelTag::OpenMP,
        ParallelTag::Cuda,
        ParallelTag::Hip,
        ParallelTag::Kokkos,
        ParallelTag::OpenCL,
        ParallelTag::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParallelTag::Mpi => "MPI",
            ParallelTag::OpenMP => "OpenMP",
            ParallelTag::Cuda => "CUDA",
            ParallelTag::Hip => "HIP",
            ParallelTag::Kokkos => "Kokkos",
            ParallelTag::OpenCL => "OpenCL",
            ParallelTag::None => "None",
        }
    }
}

impl fmt::Display for ParallelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParallelTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParallelTag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown parallel model `{s}`"))
    }
}

/// Parallel-model tags of a text. Never empty: untagged text carries `{None}`.
pub type TagSet = BTreeSet<ParallelTag>;

/// Where a snippet came from; lines are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub path: String,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSnippet {
    pub id: String,
    pub text: String,
    pub language: Language,
    pub parallel_tags: TagSet,
    pub origin: Origin,
}

impl SeedSnippet {
    pub fn new(text: String, language: Language, origin: Origin) -> Self {
        let (_, parallel_tags) = classify_snippet(&text);
        SeedSnippet {
            id: snippet_id(&text),
            text,
            language,
            parallel_tags,
            origin,
        }
    }
}

pub fn snippet_id(text: &str) -> String {
    content_id(&["seed", text])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineWindow {
    pub min_lines: usize,
    pub max_lines: usize,
}

impl Default for LineWindow {
    fn default() -> Self {
        LineWindow {
            min_lines: 1,
            max_lines: 30,
        }
    }
}

impl LineWindow {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_lines == 0 || self.max_lines < self.min_lines {
            return Err(CorpusError::InvalidWindow {
                min: self.min_lines,
                max: self.max_lines,
            });
        }
        Ok(())
    }
}

/// Target number of seed snippets per language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuotaTable(pub BTreeMap<Language, usize>);

impl Default for QuotaTable {
    /// 25k each for Python, C, Fortran and C++; 15k CUDA; 5k each for Chapel and OpenCL.
    fn default() -> Self {
        QuotaTable(BTreeMap::from([
            (Language::Python, 25_000),
            (Language::C, 25_000),
            (Language::Fortran, 25_000),
            (Language::Cpp, 25_000),
            (Language::Cuda, 15_000),
            (Language::Chapel, 5_000),
            (Language::OpenCL, 5_000),
        ]))
    }
}

impl QuotaTable {
    pub fn get(&self, language: Language) -> usize {
        self.0.get(&language).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

// ---------------------------------------------------------------------------
// classification

/// True when `text` has `prefix` starting at an identifier boundary and
/// continuing into at least one identifier character.
fn has_identifier_with_prefix(text: &str, prefix: &str) -> bool {
    let bytes = text.as_bytes();
    text.match_indices(prefix).any(|(pos, _)| {
        let before_ok = pos == 0 || !is_ident_byte(bytes[pos - 1]);
        let after = pos + prefix.len();
        let after_ok = after < bytes.len() && is_ident_byte(bytes[after]);
        before_ok && after_ok
    })
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn contains_ignore_case(text: &str, needle: &str) -> bool {
    text.to_ascii_lowercase().contains(needle)
}

/// Parallel-model tags for `text` from the substring marker table.
pub fn parallel_tags(text: &str) -> TagSet {
    let mut tags = TagSet::new();
    if text.contains("mpi.h") || has_identifier_with_prefix(text, "MPI_") {
        tags.insert(ParallelTag::Mpi);
    }
    if text.contains("#pragma omp") || text.contains("omp.h") || contains_ignore_case(text, "!$omp")
    {
        tags.insert(ParallelTag::OpenMP);
    }
    if ["__global__", "cudaMalloc", "<<<"]
        .iter()
        .any(|m| text.contains(m))
    {
        tags.insert(ParallelTag::Cuda);
    }
    if ["hip_runtime", "hipMalloc"]
        .iter()
        .any(|m| text.contains(m))
    {
        tags.insert(ParallelTag::Hip);
    }
    if text.contains("Kokkos::") {
        tags.insert(ParallelTag::Kokkos);
    }
    if ["clEnqueue", "CL/cl.h"].iter().any(|m| text.contains(m)) {
        tags.insert(ParallelTag::OpenCL);
    }
    if tags.is_empty() {
        tags.insert(ParallelTag::None);
    }
    tags
}

/// Content-only language guess. Extension-based detection should be tried first.
pub fn guess_language(text: &str) -> Language {
    let lower = text.to_ascii_lowercase();
    let any = |markers: &[&str]| markers.iter().any(|m| text.contains(m));
    let any_line_starts = |markers: &[&str]| {
        lower.lines().any(|line| {
            let line = line.trim_start();
            markers.iter().any(|m| line.starts_with(m))
        })
    };

    if any(&["__global__", "__device__", "cudaMalloc", "<<<"]) {
        Language::Cuda
    } else if any(&["__kernel", "CL/cl.h", "clEnqueue", "get_global_id("]) {
        Language::OpenCL
    } else if any_line_starts(&[
        "program ",
        "subroutine ",
        "end subroutine",
        "end program",
        "implicit none",
        "end do",
        "!$omp",
    ]) || lower.contains("integer ::")
        || lower.contains("real ::")
    {
        Language::Fortran
    } else if any(&["coforall ", "config const ", "writeln("]) {
        Language::Chapel
    } else if any_line_starts(&["def ", "import ", "from "]) && !text.contains('{') {
        Language::Python
    } else if any(&[
        "std::",
        "#include <iostream>",
        "#include <vector>",
        "template <",
        "template<",
        "namespace ",
        "nullptr",
        "Kokkos::",
        "class ",
    ]) {
        Language::Cpp
    } else if any(&["#include", "int main", "printf(", "malloc("]) || text.contains(';') {
        Language::C
    } else {
        Language::Unknown
    }
}

/// Language guess and parallel-model tags for a snippet.
pub fn classify_snippet(text: &str) -> (Language, TagSet) {
    (guess_language(text), parallel_tags(text))
}

// ---------------------------------------------------------------------------
// extraction

/// Net brace change of a line, ignoring string/char literals and `//` comments.
fn brace_delta(line: &str) -> i64 {
    let mut delta = 0;
    let mut quote: Option<char> = None;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                if c == '\\' {
                    chars.next();
                } else if c == q {
                    quote = None;
                }
            }
            None => match c {
                '"' | '\'' => quote = Some(c),
                '/' if chars.peek() == Some(&'/') => break,
                '{' => delta += 1,
                '}' => delta -= 1,
                _ => {}
            },
        }
    }
    delta
}

/// Half-open line ranges of top-level blocks separated by blank lines.
fn top_level_blocks(lines: &[&str]) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut depth: i64 = 0;
    let mut start: Option<usize> = None;
    for (i, line) in lines.iter().enumerate() {
        let separator = line.trim().is_empty() && depth <= 0;
        if separator {
            if let Some(s) = start.take() {
                blocks.push((s, i));
            }
        } else {
            start.get_or_insert(i);
            depth = (depth + brace_delta(line)).max(0);
        }
    }
    if let Some(s) = start {
        blocks.push((s, lines.len()));
    }
    blocks
}

fn fit_window(blocks: Vec<(usize, usize)>, window: LineWindow) -> Vec<(usize, usize)> {
    let mut chunks = Vec::new();
    for (start, end) in blocks {
        let mut s = start;
        while s < end {
            let e = (s + window.max_lines).min(end);
            chunks.push((s, e));
            s = e;
        }
    }

    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut pending: Option<(usize, usize)> = None;
    for chunk in chunks {
        let current = match pending.take() {
            Some((ps, _)) if chunk.1 - ps <= window.max_lines => (ps, chunk.1),
            Some(short) => {
                // could not grow the short chunk; it is dropped
                debug_assert!(short.1 - short.0 < window.min_lines);
                chunk
            }
            None => chunk,
        };
        if current.1 - current.0 >= window.min_lines {
            out.push(current);
        } else {
            pending = Some(current);
        }
    }
    if let Some((_, pe)) = pending {
        if let Some(last) = out.last_mut() {
            if pe - last.0 <= window.max_lines {
                last.1 = pe;
            }
        }
    }
    out
}

/// Cuts a source file into seed snippets.
///
/// Snippets are contiguous, non-overlapping line ranges. Top-level blank lines
/// separate blocks; blocks longer than `window.max_lines` are split, and blocks
/// shorter than `window.min_lines` are merged forward where the result still fits.
pub fn extract_snippets(
    bytes: &[u8],
    language: Language,
    window: LineWindow,
    path: &str,
) -> Result<Vec<SeedSnippet>, CorpusError> {
    window.validate()?;
    let text = decode_source(bytes).ok_or_else(|| CorpusError::Decode {
        path: path.to_string(),
    })?;
    let lines: Vec<&str> = text.lines().collect();
    let ranges = fit_window(top_level_blocks(&lines), window);

    let snippets = ranges
        .into_iter()
        .filter_map(|(start, end)| {
            let body = lines[start..end].join("\n");
            if body.trim().is_empty() {
                return None;
            }
            let lang = match language {
                Language::Unknown => guess_language(&body),
                known => known,
            };
            let origin = Origin {
                path: path.to_string(),
                start_line: start + 1,
                end_line: end,
            };
            Some(SeedSnippet::new(body, lang, origin))
        })
        .collect();
    Ok(snippets)
}

fn decode_source(bytes: &[u8]) -> Option<&str> {
    if bytes.contains(&0) {
        return None;
    }
    std::str::from_utf8(bytes).ok()
}

/// Extension first; `.h` headers with C++ content are promoted to C++.
fn detect_file_language(path: &Path, text: &[u8]) -> Option<Language> {
    let by_ext = Language::from_path(path)?;
    if by_ext == Language::C && path.extension().is_some_and(|e| e == "h") {
        if let Some(text) = decode_source(text) {
            if guess_language(text) == Language::Cpp {
                return Some(Language::Cpp);
            }
        }
    }
    Some(by_ext)
}

#[derive(Debug, Default, Clone)]
pub struct MineOutput {
    /// Unique snippets in corpus order (files by relative path, then by line).
    pub snippets: Vec<SeedSnippet>,
    pub duplicates: usize,
    /// Files that could not be decoded, by relative path.
    pub skipped: Vec<String>,
    pub files_scanned: usize,
}

/// Mines every recognised source file below `root`.
pub fn mine_directory(root: &Path, window: LineWindow) -> Result<MineOutput, CorpusError> {
    window.validate()?;
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry?;
        if entry.file_type().is_file() && Language::from_path(entry.path()).is_some() {
            files.push(entry.into_path());
        }
    }

    let per_file: Vec<Result<Option<Vec<SeedSnippet>>, CorpusError>> = files
        .par_iter()
        .map(|path| {
            let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
                path: path.clone(),
                source,
            })?;
            let rel = relative_path(root, path);
            let language = detect_file_language(path, &bytes).unwrap_or(Language::Unknown);
            match extract_snippets(&bytes, language, window, &rel) {
                Ok(snippets) => Ok(Some(snippets)),
                Err(CorpusError::Decode { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut out = MineOutput {
        files_scanned: files.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for (path, result) in files.iter().zip(per_file) {
        match result? {
            Some(snippets) => {
                for snippet in snippets {
                    if seen.insert(snippet.id.clone()) {
                        out.snippets.push(snippet);
                    } else {
                        out.duplicates += 1;
                    }
                }
            }
            None => out.skipped.push(relative_path(root, path)),
        }
    }
    Ok(out)
}

fn relative_path(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

/// Draws exactly `quota[lang]` snippets per language, uniformly without replacement.
///
/// Languages absent from the quota table are not sampled. Output is sorted by id.
pub fn sample_quota(
    snippets: &[SeedSnippet],
    quota: &QuotaTable,
    seed: u64,
) -> Result<Vec<SeedSnippet>, CorpusError> {
    let mut by_language: BTreeMap<Language, Vec<&SeedSnippet>> = BTreeMap::new();
    for snippet in snippets {
        by_language
            .entry(snippet.language)
            .or_default()
            .push(snippet);
    }

    let mut out = Vec::with_capacity(quota.total());
    for (&language, &want) in &quota.0 {
        if want == 0 {
            continue;
        }
        let mut pool = by_language.remove(&language).unwrap_or_default();
        if pool.len() < want {
            return Err(CorpusError::InsufficientSnippets {
                language,
                have: pool.len(),
                want,
            });
        }
        // input order must not influence the draw
        pool.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rng = seeded_rng(derive_seed(seed, language.name()));
        let picked = index::sample(&mut rng, pool.len(), want);
        out.extend(picked.into_iter().map(|i| pool[i].clone()));
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snippet(text: &str, language: Language) -> SeedSnippet {
        SeedSnippet::new(
            text.to_string(),
            language,
            Origin {
                path: "t".into(),
                start_line: 1,
                end_line: 1,
            },
        )
    }

    #[test]
    fn single_statement_file_is_one_snippet() {
        let src = "static bag_t threadbag[NUMTHREADS + 1];";
        let out =
            extract_snippets(src.as_bytes(), Language::C, LineWindow::default(), "a.c").unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, src);
        assert_eq!(out[0].origin.start_line, 1);
        assert_eq!(out[0].origin.end_line, 1);
    }

    #[test]
    fn empty_file_has_no_snippets() {
        let out = extract_snippets(b"", Language::C, LineWindow::default(), "a.c").unwrap();
        assert!(out.is_empty());
        let out = extract_snippets(b"\n\n  \n", Language::C, LineWindow::default(), "a.c").unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn hundred_lines_tile_without_overlap() {
        let src: String = (0..100).map(|i| format!("x[{i}] = {i};\n")).collect();
        let out =
            extract_snippets(src.as_bytes(), Language::C, LineWindow::default(), "a.c").unwrap();
        assert!(out.len() >= 4);
        // brute-force coverage count per line
        let mut covered = vec![0u32; 100];
        for s in &out {
            assert!(s.origin.end_line - s.origin.start_line < 30);
            for line in s.origin.start_line..=s.origin.end_line {
                covered[line - 1] += 1;
            }
        }
        assert!(covered.iter().all(|&c| c == 1), "{covered:?}");
    }

    #[test]
    fn blank_lines_split_only_at_top_level() {
        let src = "int a;\n\nvoid f() {\n  int x;\n\n  x = 1;\n}\n\nint b;\n";
        let out =
            extract_snippets(src.as_bytes(), Language::C, LineWindow::default(), "a.c").unwrap();
        let texts: Vec<_> = out.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(
            texts,
            ["int a;", "void f() {\n  int x;\n\n  x = 1;\n}", "int b;"]
        );
        for s in &out {
            let lines: Vec<&str> = src.lines().collect();
            assert_eq!(
                s.text,
                lines[s.origin.start_line - 1..s.origin.end_line].join("\n")
            );
        }
    }

    #[test]
    fn short_blocks_merge_forward_when_min_lines_above_one() {
        let src = "a;\n\nb;\nc;\n\nd;\ne;\nf;\n";
        let window = LineWindow {
            min_lines: 3,
            max_lines: 5,
        };
        let out = extract_snippets(src.as_bytes(), Language::C, window, "a.c").unwrap();
        let ranges: Vec<_> = out
            .iter()
            .map(|s| (s.origin.start_line, s.origin.end_line))
            .collect();
        assert_eq!(ranges, [(1, 4), (6, 8)]);
    }

    #[test]
    fn binary_input_is_a_decode_error() {
        let err = extract_snippets(
            b"\x7fELF\0\0\x01",
            Language::C,
            LineWindow::default(),
            "x.c",
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::Decode { .. }));
        let err = extract_snippets(
            &[0xff, 0xfe, b'a'],
            Language::C,
            LineWindow::default(),
            "x.c",
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::Decode { .. }));
    }

    #[test]
    fn bad_window_rejected() {
        for (min, max) in [(0, 5), (6, 5)] {
            let window = LineWindow {
                min_lines: min,
                max_lines: max,
            };
            assert!(matches!(
                extract_snippets(b"x", Language::C, window, "x.c"),
                Err(CorpusError::InvalidWindow { .. })
            ));
        }
    }

    #[test]
    fn classify_examples() {
        let (_, tags) = classify_snippet("#include <mpi.h>\nint x;");
        assert_eq!(tags, TagSet::from([ParallelTag::Mpi]));

        let (_, tags) = classify_snippet("int main() { return 0; }");
        assert_eq!(tags, TagSet::from([ParallelTag::None]));

        let (_, tags) = classify_snippet("#pragma omp parallel\n{ }\nMPI_Init(&argc, &argv);");
        assert_eq!(tags, TagSet::from([ParallelTag::OpenMP, ParallelTag::Mpi]));
    }

    #[test]
    fn mpi_prefix_must_start_an_identifier() {
        assert!(!parallel_tags("int MY_MPI_X;").contains(&ParallelTag::Mpi));
        assert!(!parallel_tags("MPI_").contains(&ParallelTag::Mpi));
        assert!(parallel_tags("(MPI_COMM_WORLD)").contains(&ParallelTag::Mpi));
    }

    #[test]
    fn marker_table_covers_other_models() {
        let cases = [
            ("__global__ void k() {}", ParallelTag::Cuda),
            ("k<<<1, 2>>>(x);", ParallelTag::Cuda),
            ("#include <hip/hip_runtime.h>", ParallelTag::Hip),
            ("Kokkos::parallel_for(n, f);", ParallelTag::Kokkos),
            ("clEnqueueNDRangeKernel(q, k);", ParallelTag::OpenCL),
            ("!$OMP PARALLEL DO", ParallelTag::OpenMP),
        ];
        for (text, tag) in cases {
            assert!(parallel_tags(text).contains(&tag), "{text}");
        }
    }

    #[test]
    fn language_guesses() {
        assert_eq!(
            guess_language("#include <iostream>\nstd::cout << 1;"),
            Language::Cpp
        );
        assert_eq!(
            guess_language("__global__ void k(float* x) {}"),
            Language::Cuda
        );
        assert_eq!(
            guess_language("program main\n  implicit none\nend program"),
            Language::Fortran
        );
        assert_eq!(
            guess_language("import numpy as np\ndef f(x):\n    return x"),
            Language::Python
        );
        assert_eq!(
            guess_language("coforall loc in Locales do writeln(loc);"),
            Language::Chapel
        );
        assert_eq!(
            guess_language("#include <stdio.h>\nint main(void);"),
            Language::C
        );
        assert_eq!(guess_language("hello there"), Language::Unknown);
        assert_eq!(Language::from_path(Path::new("x.cu")), Some(Language::Cuda));
        assert_eq!(Language::from_path(Path::new("README.md")), None);
    }

    #[test]
    fn quota_defaults_sum_to_125k() {
        let q = QuotaTable::default();
        assert_eq!(q.total(), 125_000);
        assert_eq!(q.get(Language::Cuda), 15_000);
        assert_eq!(q.get(Language::OpenCL), 5_000);
        assert_eq!(q.get(Language::Unknown), 0);
    }

    #[test]
    fn quota_equal_to_supply_returns_all() {
        let pool: Vec<_> = (0..10)
            .map(|i| snippet(&format!("int a{i};"), Language::C))
            .collect();
        let quota = QuotaTable(BTreeMap::from([(Language::C, 10)]));
        let out = sample_quota(&pool, &quota, 1).unwrap();
        let mut ids: Vec<_> = pool.iter().map(|s| s.id.clone()).collect();
        ids.sort();
        assert_eq!(out.iter().map(|s| s.id.clone()).collect::<Vec<_>>(), ids);
    }

    #[test]
    fn quota_sampling_is_reproducible() {
        let pool: Vec<_> = (0..100)
            .map(|i| snippet(&format!("int a{i};"), Language::C))
            .collect();
        let quota = QuotaTable(BTreeMap::from([(Language::C, 25)]));
        let a = sample_quota(&pool, &quota, 9).unwrap();
        let mut reversed = pool.clone();
        reversed.reverse();
        let b = sample_quota(&reversed, &quota, 9).unwrap();
        assert_eq!(a.len(), 25);
        assert_eq!(a, b);
        let c = sample_quota(&pool, &quota, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn quota_exceeding_supply_errors() {
        let pool: Vec<_> = (0..20)
            .map(|i| snippet(&format!("int a{i};"), Language::C))
            .collect();
        let quota = QuotaTable(BTreeMap::from([(Language::C, 25)]));
        match sample_quota(&pool, &quota, 1) {
            Err(CorpusError::InsufficientSnippets {
                language: Language::C,
                have: 20,
                want: 25,
            }) => {}
            other => panic!("{other:?}"),
        }
    }
}
