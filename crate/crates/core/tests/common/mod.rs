#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use paraforge::eval::adapter::MockModelFile;
use paraforge::eval::{desk_suite_manifest, read_suite};
use paraforge::fixtures::{write_synthetic_corpus, OMP_REDUCTION_WRONG};

pub const BIN: &str = env!("CARGO_BIN_EXE_paraforge");

pub fn paraforge(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("spawn paraforge")
}

pub fn paraforge_ok(args: &[&str]) -> Output {
    let out = paraforge(args);
    assert!(
        out.status.success(),
        "paraforge {args:?} exited {:?}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub const NOT_CODE: &str = "this is not code";

/// Per-problem canned mix as (correct, incorrect) out of ten; replayed twice
/// over N=20 samples, so each problem's pass@1 is `correct / 10`.
pub const CANNED_MIX: [(&str, usize); 7] = [
    ("reduce-serial", 3),
    ("reduce-omp", 7),
    ("reduce-mpi", 5),
    ("scan-serial", 10),
    ("scan-omp", 0),
    ("histogram-serial", 3),
    ("histogram-omp", 6),
];

pub fn expected_pass1() -> BTreeMap<String, f64> {
    CANNED_MIX
        .iter()
        .map(|(id, c)| (id.to_string(), *c as f64 / 10.0))
        .collect()
}

/// Canned completions for the desk suite following [`CANNED_MIX`]: correct
/// samples are the reference body, incorrect ones a wrong reduction (reduce
/// problems) or text that does not compile.
pub fn mock_model() -> MockModelFile {
    let suite = read_suite(&desk_suite_manifest()).unwrap();
    let mut completions = BTreeMap::new();
    for (id, correct) in CANNED_MIX {
        let problem = suite.problem(id).unwrap();
        let good = problem.reference.clone().unwrap();
        let bad = if id.starts_with("reduce") {
            OMP_REDUCTION_WRONG
        } else {
            NOT_CODE
        };
        let pool: Vec<String> = (0..10)
            .map(|i| {
                if i < correct {
                    good.clone()
                } else {
                    bad.to_string()
                }
            })
            .collect();
        completions.insert(id.to_string(), pool);
    }
    MockModelFile {
        model: "mock-coder".into(),
        completions,
        peak_memory_gb: None,
        fail_samples: Default::default(),
    }
}

pub const CONFIG: &str = r#"seed = 11

[paths]
corpus = "corpus"

[quotas]
C = 8
"C++" = 8
Fortran = 8
Python = 8
CUDA = 8

[[provider]]
name = "mock-a"
kind = "mock"
max_concurrent = 2

[[provider]]
name = "mock-b"
kind = "mock"
max_concurrent = 2
[provider.mock]
unparsable_every = 5

[eval]
samples = 20
k = [1]
"#;

pub struct PipelineRun {
    pub dir: PathBuf,
    pub elapsed: Duration,
    /// Primary outputs, relative to `dir`.
    pub outputs: Vec<&'static str>,
    pub sliced_mpi: usize,
}

impl PipelineRun {
    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }
}

fn count_mpi(manifest: &Path) -> usize {
    let text = std::fs::read_to_string(manifest).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["by_tag"]["MPI"].as_u64().unwrap_or(0) as usize
}

/// mine → plan → generate → slice → mask → eval → score → report, all through
/// the binary, inside `dir`.
pub fn run_pipeline(dir: &Path) -> PipelineRun {
    let start = Instant::now();
    write_synthetic_corpus(&dir.join("corpus"), 50).unwrap();
    std::fs::write(dir.join("paraforge.toml"), CONFIG).unwrap();
    std::fs::write(
        dir.join("model.json"),
        serde_json::to_string_pretty(&mock_model()).unwrap(),
    )
    .unwrap();
    let p = |rel: &str| dir.join(rel).to_string_lossy().into_owned();
    let cfg = p("paraforge.toml");
    let with_cfg = |args: &[&str]| {
        let mut full = vec!["--config", cfg.as_str(), "--log-level", "warn"];
        full.extend_from_slice(args);
        paraforge_ok(&full)
    };

    with_cfg(&["mine", "--out", &p("seeds.jsonl")]);
    with_cfg(&[
        "plan",
        "--seeds",
        &p("seeds.jsonl"),
        "--out",
        &p("tasks.jsonl"),
    ]);
    with_cfg(&[
        "generate",
        "--tasks",
        &p("tasks.jsonl"),
        "--journal",
        &p("journal"),
        "--out",
        &p("pairs.jsonl"),
    ]);
    let mpi = count_mpi(&dir.join("pairs.jsonl.manifest.json"));
    let target = mpi / 2;
    with_cfg(&[
        "slice",
        "--in",
        &p("pairs.jsonl"),
        "--tag",
        "MPI",
        "--count",
        &target.to_string(),
        "--out",
        &p("slice.jsonl"),
    ]);
    with_cfg(&[
        "mask",
        "--in",
        &p("slice.jsonl"),
        "--masked",
        "true",
        "--out",
        &p("train.jsonl"),
    ]);
    with_cfg(&[
        "eval",
        "--model",
        &p("model.json"),
        "--n",
        "20",
        "--out",
        &p("eval.jsonl"),
    ]);
    for axis in ["cell", "overall", "problem_type", "execution_model"] {
        with_cfg(&[
            "score",
            "--journal",
            &p("eval.jsonl"),
            "--axis",
            axis,
            "--k",
            "1",
            "--out",
            &p(&format!("score-{axis}.json")),
        ]);
    }
    with_cfg(&[
        "report",
        "summary",
        "--journal",
        &p("eval.jsonl"),
        "--size",
        "mock-coder=6.7",
        "--out",
        &p("summary.txt"),
    ]);
    with_cfg(&[
        "report",
        "heatmap",
        "--journal",
        &p("eval.jsonl"),
        "--out",
        &p("heatmap.csv"),
    ]);

    PipelineRun {
        dir: dir.to_path_buf(),
        elapsed: start.elapsed(),
        outputs: vec![
            "seeds.jsonl",
            "seeds.jsonl.manifest.json",
            "tasks.jsonl",
            "pairs.jsonl",
            "pairs.jsonl.manifest.json",
            "pairs.jsonl.discards.jsonl",
            "slice.jsonl",
            "slice.jsonl.manifest.json",
            "train.jsonl",
            "train.jsonl.manifest.json",
            "eval.jsonl",
            "score-cell.json",
            "score-overall.json",
            "score-problem_type.json",
            "score-execution_model.json",
            "summary.txt",
            "summary.csv",
            "heatmap.csv",
        ],
        sliced_mpi: target,
    }
}
