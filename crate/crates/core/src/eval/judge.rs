//! Compile-run-test judging of completions.
//!
//! Each judged program gets its own scratch directory and process group. The
//! first failing stage decides the verdict: build, then run (under the
//! problem's timeout), then the driver's test report on stdout.

use std::collections::HashMap;
use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::problem::EvalProblem;
use crate::ids::sha256_hex;

/// Printed by drivers when every unit test passed.
pub const PASS_SENTINEL: &str = "PARAFORGE: ALL TESTS PASSED";
/// Prefix of a driver's failed-test line.
pub const FAIL_PREFIX: &str = "PARAFORGE: TEST FAILED";

const MAX_CAPTURE: usize = 64 * 1024;
const MAX_LOG: usize = 4 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Correct,
    BuildFail,
    RuntimeFail,
    TestFail,
    Timeout,
    RunnerUnavailable,
}

#[derive(Debug, Clone, Default)]
pub struct ProcessOutcome {
    pub timed_out: bool,
    pub success: bool,
    pub stdout: String,
    pub stderr: String,
    pub spawn_error: Option<String>,
}

fn capture<R: Read + Send + 'static>(mut reader: R) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        while let Ok(n) = reader.read(&mut buf) {
            if n == 0 {
                break;
            }
            let room = MAX_CAPTURE.saturating_sub(kept.len());
            kept.extend_from_slice(&buf[..n.min(room)]);
        }
        String::from_utf8_lossy(&kept).into_owned()
    })
}

fn kill_group(child: &mut Child) {
    // the child leads its own process group; take every descendant with it
    let pgid = child.id() as libc::pid_t;
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
    }
    let _ = child.kill();
}

/// Runs `cmd` in its own process group, killing the whole group on timeout.
pub fn run_with_timeout(mut cmd: Command, timeout: Duration) -> ProcessOutcome {
    cmd.stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    let mut child = match cmd.spawn() {
        Ok(child) => child,
        Err(e) => {
            return ProcessOutcome {
                spawn_error: Some(format!("{:?}: {e}", cmd.get_program())),
                ..Default::default()
            }
        }
    };
    let stdout = capture(child.stdout.take().expect("piped"));
    let stderr = capture(child.stderr.take().expect("piped"));

    let mut outcome = ProcessOutcome::default();
    match child.wait_timeout(timeout) {
        Ok(Some(status)) => {
            outcome.success = status.success();
            // reap anything the child left running in its group
            unsafe {
                libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
            }
        }
        Ok(None) => {
            outcome.timed_out = true;
            kill_group(&mut child);
            let _ = child.wait();
        }
        Err(e) => {
            outcome.spawn_error = Some(e.to_string());
            kill_group(&mut child);
            let _ = child.wait();
        }
    }
    outcome.stdout = stdout.join().unwrap_or_default();
    outcome.stderr = stderr.join().unwrap_or_default();
    outcome
}

/// Builds and runs one program for a build recipe.
pub trait Runner: Send + Sync {
    fn available(&self) -> bool;
    fn build(&self, workdir: &Path, source: &Path, exe: &Path, timeout: Duration)
        -> ProcessOutcome;
    fn run(&self, workdir: &Path, exe: &Path, timeout: Duration) -> ProcessOutcome;
}

pub fn find_in_path(program: &str) -> Option<PathBuf> {
    if program.contains('/') {
        let p = PathBuf::from(program);
        return p.is_file().then_some(p);
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|dir| dir.join(program))
            .find(|candidate| candidate.is_file())
    })
}

/// System C++ compiler; `openmp` adds `-fopenmp`.
#[derive(Debug, Clone)]
pub struct CxxRunner {
    pub compiler: String,
    pub flags: Vec<String>,
    pub openmp: bool,
    pub threads: usize,
}

impl CxxRunner {
    pub fn new(openmp: bool) -> Self {
        CxxRunner {
            compiler: std::env::var("CXX").unwrap_or_else(|_| "g++".to_string()),
            flags: vec!["-std=c++17".into(), "-O2".into()],
            openmp,
            threads: 4,
        }
    }
}

impl Runner for CxxRunner {
    fn available(&self) -> bool {
        find_in_path(&self.compiler).is_some()
    }

    fn build(
        &self,
        workdir: &Path,
        source: &Path,
        exe: &Path,
        timeout: Duration,
    ) -> ProcessOutcome {
        let mut cmd = Command::new(&self.compiler);
        cmd.current_dir(workdir).args(&self.flags);
        if self.openmp {
            cmd.arg("-fopenmp");
        }
        cmd.arg(source).arg("-o").arg(exe);
        run_with_timeout(cmd, timeout)
    }

    fn run(&self, workdir: &Path, exe: &Path, timeout: Duration) -> ProcessOutcome {
        let mut cmd = Command::new(exe);
        cmd.current_dir(workdir)
            .env("OMP_NUM_THREADS", self.threads.to_string());
        run_with_timeout(cmd, timeout)
    }
}

/// MPI compiler wrapper plus launcher with a fixed rank count.
#[derive(Debug, Clone)]
pub struct MpiRunner {
    pub wrapper: String,
    pub launcher: String,
    pub ranks: usize,
    pub openmp: bool,
    pub threads_per_rank: usize,
    pub flags: Vec<String>,
}

impl MpiRunner {
    pub fn new(openmp: bool) -> Self {
        MpiRunner {
            wrapper: "mpicxx".into(),
            launcher: "mpirun".into(),
            ranks: 4,
            openmp,
            threads_per_rank: 2,
            flags: vec!["-std=c++17".into(), "-O2".into()],
        }
    }

    fn launcher_args(&self) -> Vec<String> {
        static OPEN_MPI: OnceLock<bool> = OnceLock::new();
        let open_mpi = *OPEN_MPI.get_or_init(|| {
            Command::new(&self.launcher)
                .arg("--version")
                .output()
                .map(|o| String::from_utf8_lossy(&o.stdout).contains("Open MPI"))
                .unwrap_or(false)
        });
        let mut args = Vec::new();
        if open_mpi {
            args.push("--oversubscribe".to_string());
            if unsafe { libc::geteuid() } == 0 {
                args.push("--allow-run-as-root".to_string());
            }
        }
        args
    }
}

impl Runner for MpiRunner {
    fn available(&self) -> bool {
        find_in_path(&self.wrapper).is_some() && find_in_path(&self.launcher).is_some()
    }

    fn build(
        &self,
        workdir: &Path,
        source: &Path,
        exe: &Path,
        timeout: Duration,
    ) -> ProcessOutcome {
        let mut cmd = Command::new(&self.wrapper);
        cmd.current_dir(workdir).args(&self.flags);
        if self.openmp {
            cmd.arg("-fopenmp");
        }
        cmd.arg(source).arg("-o").arg(exe);
        run_with_timeout(cmd, timeout)
    }

    fn run(&self, workdir: &Path, exe: &Path, timeout: Duration) -> ProcessOutcome {
        let mut cmd = Command::new(&self.launcher);
        cmd.current_dir(workdir)
            .args(self.launcher_args())
            .arg("-np")
            .arg(self.ranks.to_string())
            .arg(exe)
            .env("OMP_NUM_THREADS", self.threads_per_rank.to_string());
        run_with_timeout(cmd, timeout)
    }
}

/// Runner defined by command templates with `{src}` and `{exe}` placeholders,
/// for toolchains such as nvcc, hipcc or a Kokkos build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandRunner {
    pub build: Vec<String>,
    pub run: Vec<String>,
}

impl CommandRunner {
    fn command(template: &[String], source: &Path, exe: &Path) -> Option<Command> {
        let expand = |arg: &String| {
            arg.replace("{src}", &source.to_string_lossy())
                .replace("{exe}", &exe.to_string_lossy())
        };
        let (program, args) = template.split_first()?;
        let mut cmd = Command::new(expand(program));
        cmd.args(args.iter().map(expand));
        Some(cmd)
    }
}

impl Runner for CommandRunner {
    fn available(&self) -> bool {
        self.build
            .first()
            .is_some_and(|p| find_in_path(p).is_some())
            && !self.run.is_empty()
    }

    fn build(
        &self,
        workdir: &Path,
        source: &Path,
        exe: &Path,
        timeout: Duration,
    ) -> ProcessOutcome {
        match Self::command(&self.build, source, exe) {
            Some(mut cmd) => {
                cmd.current_dir(workdir);
                run_with_timeout(cmd, timeout)
            }
            None => ProcessOutcome {
                spawn_error: Some("empty build command".into()),
                ..Default::default()
            },
        }
    }

    fn run(&self, workdir: &Path, exe: &Path, timeout: Duration) -> ProcessOutcome {
        match Self::command(&self.run, Path::new("main.cpp"), exe) {
            Some(mut cmd) => {
                cmd.current_dir(workdir);
                run_with_timeout(cmd, timeout)
            }
            None => ProcessOutcome {
                spawn_error: Some("empty run command".into()),
                ..Default::default()
            },
        }
    }
}

/// Build recipe id → runner.
#[derive(Clone, Default)]
pub struct RunnerRegistry {
    runners: HashMap<String, Arc<dyn Runner>>,
}

impl RunnerRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `cxx-serial`, `cxx-omp`, `mpi` and `mpi-omp`. GPU and Kokkos recipes
    /// need explicit registration.
    pub fn standard() -> Self {
        let mut reg = Self::default();
        reg.register("cxx-serial", CxxRunner::new(false));
        reg.register("cxx-omp", CxxRunner::new(true));
        reg.register("mpi", MpiRunner::new(false));
        reg.register("mpi-omp", MpiRunner::new(true));
        reg
    }

    pub fn register(&mut self, recipe: &str, runner: impl Runner + 'static) {
        self.runners.insert(recipe.to_string(), Arc::new(runner));
    }

    pub fn get(&self, recipe: &str) -> Option<&Arc<dyn Runner>> {
        self.runners.get(recipe)
    }

    pub fn is_available(&self, recipe: &str) -> bool {
        self.get(recipe).is_some_and(|r| r.available())
    }
}

#[derive(Debug, Clone)]
pub struct JudgeSettings {
    pub build_timeout: Duration,
    /// Overrides every problem's own run timeout when set.
    pub run_timeout: Option<Duration>,
}

impl Default for JudgeSettings {
    fn default() -> Self {
        JudgeSettings {
            build_timeout: Duration::from_secs(60),
            run_timeout: None,
        }
    }
}

fn clip(text: &str, limit: usize) -> &str {
    if text.len() <= limit {
        return text;
    }
    let mut end = limit;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    &text[..end]
}

/// Maps a finished run to a verdict from the driver's report.
pub fn classify_run(outcome: &ProcessOutcome) -> Verdict {
    if outcome.timed_out {
        Verdict::Timeout
    } else if outcome
        .stdout
        .lines()
        .any(|l| l.trim_start().starts_with(FAIL_PREFIX))
    {
        Verdict::TestFail
    } else if outcome.success && outcome.stdout.lines().any(|l| l.trim() == PASS_SENTINEL) {
        Verdict::Correct
    } else {
        Verdict::RuntimeFail
    }
}

/// Judges a complete program text (driver with completion spliced in).
pub fn judge_source(
    problem: &EvalProblem,
    source: &str,
    registry: &RunnerRegistry,
    settings: &JudgeSettings,
) -> (Verdict, String) {
    let Some(runner) = registry
        .get(&problem.build_recipe)
        .filter(|r| r.available())
    else {
        return (
            Verdict::RunnerUnavailable,
            format!("no runner available for recipe `{}`", problem.build_recipe),
        );
    };
    let scratch = match tempfile::Builder::new()
        .prefix("paraforge-judge-")
        .tempdir()
    {
        Ok(dir) => dir,
        Err(e) => return (Verdict::RunnerUnavailable, format!("scratch dir: {e}")),
    };
    let src = scratch.path().join("main.cpp");
    let exe = scratch.path().join("main");
    if let Err(e) = std::fs::write(&src, source) {
        return (Verdict::RunnerUnavailable, format!("write source: {e}"));
    }

    // relative names keep scratch paths out of compiler diagnostics
    let build = runner.build(
        scratch.path(),
        Path::new("main.cpp"),
        Path::new("main"),
        settings.build_timeout,
    );
    if !build.success || !exe.exists() {
        let why = if build.timed_out {
            "build timed out\n"
        } else {
            ""
        };
        let detail = build.spawn_error.as_deref().unwrap_or(&build.stderr);
        return (
            Verdict::BuildFail,
            format!("{why}{}", clip(detail, MAX_LOG)),
        );
    }

    let timeout = settings
        .run_timeout
        .unwrap_or(Duration::from_secs(problem.timeout_secs));
    let run = runner.run(scratch.path(), &exe, timeout);
    let verdict = classify_run(&run);
    let logs = format!(
        "{}{}{}",
        clip(&run.stdout, MAX_LOG / 2),
        clip(&run.stderr, MAX_LOG / 2),
        run.spawn_error.as_deref().unwrap_or("")
    );
    (verdict, logs)
}

/// Memoizes verdicts of identical programs within one evaluation.
#[derive(Debug, Default)]
pub struct JudgeCache {
    entries: Mutex<HashMap<String, (Verdict, String)>>,
}

impl JudgeCache {
    fn key(problem: &EvalProblem, source: &str, settings: &JudgeSettings) -> String {
        let timeout = settings
            .run_timeout
            .map_or(problem.timeout_secs * 1000, |d| d.as_millis() as u64);
        sha256_hex(format!("{}\0{timeout}\0{source}", problem.build_recipe).as_bytes())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Judges one completion for `problem`.
pub fn judge(
    problem: &EvalProblem,
    completion: &str,
    registry: &RunnerRegistry,
    settings: &JudgeSettings,
    cache: Option<&JudgeCache>,
) -> (Verdict, String) {
    let source = problem.splice(completion);
    let Some(cache) = cache else {
        return judge_source(problem, &source, registry, settings);
    };
    let key = JudgeCache::key(problem, &source, settings);
    if let Some(hit) = cache.entries.lock().expect("cache").get(&key) {
        return hit.clone();
    }
    let result = judge_source(problem, &source, registry, settings);
    // timeouts depend on machine load; do not reuse them
    if result.0 != Verdict::Timeout {
        cache
            .entries
            .lock()
            .expect("cache")
            .insert(key, result.clone());
    }
    result
}
