//! The `paraforge` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 configuration
//! error. Logs and the final error record are JSON lines on stderr.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::clock::{Clock, FixedClock, SystemClock};
use crate::config::{ConfigError, PipelineConfig};
use crate::corpus::{mine_directory, sample_quota, Language, ParallelTag, QuotaTable, SeedSnippet};
use crate::dataset::{manifest_path, partition_by_generator, slice_by_tag, Dataset, SliceSpec};
use crate::eval::aggregate::{aggregate, AggregateOptions, Axis};
use crate::eval::{
    desk_suite_manifest, evaluate, load_suite, read_suite, CompletionRecord, EvalOptions,
    JudgeSettings, MockModelAdapter, ModelAdapter, ProviderAdapter, RunnerRegistry, Suite,
};
use crate::gateway::{
    build_provider, harvest, resolve_credentials, submit_with_providers, GatewayError,
    ProviderConfig, ProviderFile, ProviderKind, SamplingParams,
};
use crate::ids::derive_seed;
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::mask::{build_training_file, tokenizer_by_name, DEFAULT_CONTEXT_CAP};
use crate::prompt::{plan_generation, GenerationTask, TemplateSet};
use crate::report::{
    emit_heatmap, emit_summary_table, measure_perf, ModelMeta, MonotonicStopwatch,
};

#[derive(Debug, Parser)]
#[command(
    name = "paraforge",
    version,
    about = "Parallel-code instruction data synthesis and pass@k evaluation"
)]
pub struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log verbosity for the JSON-lines log on stderr.
    #[arg(long, global = true, default_value = "info")]
    pub log_level: log::LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract seed snippets from a source tree and draw the per-language quotas.
    Mine(MineArgs),
    /// Render one generation task per seed snippet.
    Plan(PlanArgs),
    /// Send tasks to providers, parse replies, and write the deduplicated dataset.
    Generate(GenerateArgs),
    /// Keep an exact number of pairs carrying a parallel-model tag.
    Slice(SliceArgs),
    /// Split a dataset into one file per generator.
    Partition(PartitionArgs),
    /// Print a dataset's manifest.
    Stats(StatsArgs),
    /// Tokenize pairs into training samples, optionally masking the instruction.
    Mask(MaskArgs),
    /// Sample and judge completions for every problem in a suite.
    Eval(EvalArgs),
    /// Aggregate a judged journal into pass@k rows.
    Score(ScoreArgs),
    /// Emit summary tables, heatmap grids, or throughput measurements.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Source tree to mine; defaults to `paths.corpus`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Quota table (TOML or JSON, language → count); overrides the configuration.
    #[arg(long)]
    pub quotas: Option<PathBuf>,
    /// Keep every mined snippet, ignoring quotas.
    #[arg(long)]
    pub all: bool,
    /// Seed snippets (JSON lines); a manifest is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Seed snippets written by `mine`.
    #[arg(long)]
    pub seeds: PathBuf,
    /// Template file; the built-in templates when omitted.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Provider file; only its provider names are used.
    #[arg(long)]
    pub providers: Option<PathBuf>,
    /// Provider names to assign round-robin.
    #[arg(long = "provider")]
    pub provider_names: Vec<String>,
    /// Generation tasks (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generation tasks written by `plan`.
    #[arg(long)]
    pub tasks: PathBuf,
    /// Provider file; defaults to the configuration's providers.
    #[arg(long)]
    pub providers: Option<PathBuf>,
    /// Journal directory; rerunning with the same directory resumes.
    #[arg(long)]
    pub journal: PathBuf,
    /// Instruct dataset (JSON lines); manifest, discards and failures go beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    /// Input dataset.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Parallel-model tag to slice on, e.g. `MPI`.
    #[arg(long)]
    pub tag: ParallelTag,
    /// Exact number of tagged pairs to keep.
    #[arg(long)]
    pub count: usize,
    /// Sliced dataset.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    /// Input dataset.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Partition key.
    #[arg(long, default_value = "generator", value_parser = ["generator"])]
    pub by: String,
    /// Directory for the partitions and their index.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset to summarize.
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Input dataset.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Tokenizer name.
    #[arg(long, default_value = "mock")]
    pub tokenizer: String,
    /// Whether instruction tokens get the ignore label.
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    pub masked: bool,
    /// Pairs longer than this many tokens are dropped.
    #[arg(long, default_value_t = DEFAULT_CONTEXT_CAP)]
    pub context_cap: usize,
    /// Training samples (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Suite manifest; defaults to `paths.suite`, then the bundled desk suite.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Mock adapter file, or the name of a configured provider.
    #[arg(long)]
    pub model: String,
    /// Provider file used when `--model` names a provider.
    #[arg(long)]
    pub providers: Option<PathBuf>,
    /// Samples per problem.
    #[arg(long)]
    pub n: Option<usize>,
    /// Judge worker threads; 0 uses all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Skip judging the suite's reference solutions first.
    #[arg(long)]
    pub skip_self_check: bool,
    /// Judged completion journal (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Judged completion journal written by `eval`.
    #[arg(long)]
    pub journal: PathBuf,
    /// Suite manifest the journal was judged against.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Grouping: execution_model, problem_type, overall, or cell.
    #[arg(long, default_value = "execution_model")]
    pub axis: Axis,
    /// Values of k; defaults to the configuration's `eval.k`.
    #[arg(long)]
    pub k: Vec<u64>,
    /// Drop RunnerUnavailable samples instead of counting them as incorrect.
    #[arg(long)]
    pub exclude_unavailable: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// One row per model: serial and parallel pass@1 in percent.
    Summary(SummaryArgs),
    /// Problem-type × execution-model pass@1 grid as CSV.
    Heatmap(HeatmapArgs),
    /// Generated tokens per second over the suite's prompts.
    Perf(PerfArgs),
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    /// Judged journals; one model each.
    #[arg(long, required = true)]
    pub journal: Vec<PathBuf>,
    /// Suite manifest the journals were judged against.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Model size in billions of parameters, as `name=6.7`.
    #[arg(long, value_parser = parse_size)]
    pub size: Vec<(String, f64)>,
    /// Aligned text goes here and CSV beside it with a `.csv` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Judged completion journal.
    #[arg(long)]
    pub journal: PathBuf,
    /// Suite manifest the journal was judged against.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Heatmap CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PerfArgs {
    /// Mock adapter file, or the name of a configured provider.
    #[arg(long)]
    pub model: String,
    /// Provider file used when `--model` names a provider.
    #[arg(long)]
    pub providers: Option<PathBuf>,
    /// Suite whose prompts are timed.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Device label recorded with the measurement.
    #[arg(long, default_value = "unspecified")]
    pub device: String,
    /// Measurement (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_size(text: &str) -> Result<(String, f64), String> {
    let (name, size) = text
        .rsplit_once('=')
        .ok_or_else(|| format!("expected name=size, got `{text}`"))?;
    let size: f64 = size.parse().map_err(|e| format!("`{size}`: {e}"))?;
    Ok((name.to_string(), size))
}

/// A bad combination of arguments that clap cannot express.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(String);

struct JsonLogger;

impl log::Log for JsonLogger {
    fn enabled(&self, metadata: &log::Metadata<'_>) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &log::Record<'_>) {
        if self.enabled(record.metadata()) {
            emit(&json!({
                "level": record.level().as_str(),
                "target": record.target(),
                "message": record.args().to_string(),
            }));
        }
    }

    fn flush(&self) {}
}

fn emit(value: &serde_json::Value) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{value}");
}

fn init_logging(level: log::LevelFilter) {
    // a second call in the same process keeps the first logger
    let _ = log::set_boxed_logger(Box::new(JsonLogger));
    log::set_max_level(level);
}

/// Parses `argv` (including the program name), runs the command, and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => {
                    emit(
                        &json!({"level": "ERROR", "error": "usage", "message": e.kind().to_string()}),
                    );
                    2
                }
            };
        }
    };
    init_logging(cli.log_level);
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let (code, kind) = classify(&e);
            emit(&json!({"level": "ERROR", "error": kind, "message": format!("{e:#}")}));
            code
        }
    }
}

fn classify(error: &anyhow::Error) -> (i32, &'static str) {
    for cause in error.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return (2, "usage");
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return (3, "config");
        }
        if let Some(
            GatewayError::Auth { .. } | GatewayError::UnknownProvider(_) | GatewayError::Config(_),
        ) = cause.downcast_ref::<GatewayError>()
        {
            return (3, "config");
        }
    }
    (1, "runtime")
}

struct Ctx {
    config: PipelineConfig,
    seed: u64,
}

impl Ctx {
    fn stage_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }

    fn suite_path(&self, flag: &Option<PathBuf>) -> PathBuf {
        flag.clone()
            .or_else(|| self.config.paths.suite.clone())
            .unwrap_or_else(desk_suite_manifest)
    }

    fn registry(&self) -> RunnerRegistry {
        let mut registry = RunnerRegistry::standard();
        for (recipe, runner) in &self.config.eval.runners {
            registry.register(recipe, runner.clone());
        }
        registry
    }

    fn judge_settings(&self) -> JudgeSettings {
        JudgeSettings {
            build_timeout: Duration::from_secs(self.config.eval.build_timeout_secs),
            run_timeout: self.config.eval.run_timeout_secs.map(Duration::from_secs),
        }
    }

    /// Providers from `file` when given, else from the configuration.
    fn providers(&self, file: &Option<PathBuf>) -> Result<Vec<ProviderConfig>> {
        let Some(path) = file else {
            return Ok(self.config.providers.clone());
        };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let parsed: ProviderFile = toml::from_str(&text).map_err(|e| ConfigError::Read {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut providers = parsed.providers;
        for p in &mut providers {
            if let Some(r) = &p.mock.responses {
                if r.is_relative() {
                    p.mock.responses = Some(base.join(r));
                }
            }
            p.validate()?;
        }
        Ok(providers)
    }

    fn model_adapter(
        &self,
        model: &str,
        providers: &Option<PathBuf>,
    ) -> Result<Box<dyn ModelAdapter>> {
        let path = Path::new(model);
        if path.is_file() {
            return Ok(Box::new(MockModelAdapter::load(path)?));
        }
        let configs = self.providers(providers)?;
        let names = BTreeSet::from([model.to_string()]);
        let credentials = resolve_credentials(&configs, &names, |v| std::env::var(v).ok())?;
        let config = configs.iter().find(|c| c.name == model).expect("resolved");
        let provider = build_provider(config, credentials[model].clone())?;
        Ok(Box::new(ProviderAdapter::new(provider)))
    }

    fn eval_params(&self) -> SamplingParams {
        SamplingParams {
            temperature: self.config.eval.temperature,
            max_tokens: self.config.eval.max_tokens,
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let ctx = Ctx {
        seed: config.seed,
        config,
    };
    emit(&json!({
        "level": "INFO",
        "event": "start",
        "command": command_name(&cli.command),
        "config_hash": ctx.config.hash(),
        "seed": ctx.seed,
    }));
    match &cli.command {
        Command::Mine(a) => mine(&ctx, a),
        Command::Plan(a) => plan(&ctx, a),
        Command::Generate(a) => generate(&ctx, a),
        Command::Slice(a) => slice(&ctx, a),
        Command::Partition(a) => partition(&ctx, a),
        Command::Stats(a) => stats(a),
        Command::Mask(a) => mask(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Score(a) => score(&ctx, a),
        Command::Report(ReportCommand::Summary(a)) => report_summary(&ctx, a),
        Command::Report(ReportCommand::Heatmap(a)) => report_heatmap(&ctx, a),
        Command::Report(ReportCommand::Perf(a)) => report_perf(&ctx, a),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Mine(_) => "mine",
        Command::Plan(_) => "plan",
        Command::Generate(_) => "generate",
        Command::Slice(_) => "slice",
        Command::Partition(_) => "partition",
        Command::Stats(_) => "stats",
        Command::Mask(_) => "mask",
        Command::Eval(_) => "eval",
        Command::Score(_) => "score",
        Command::Report(ReportCommand::Summary(_)) => "report summary",
        Command::Report(ReportCommand::Heatmap(_)) => "report heatmap",
        Command::Report(ReportCommand::Perf(_)) => "report perf",
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn read_quotas(path: &Path) -> Result<QuotaTable> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    Ok(parsed.map_err(|message| ConfigError::Read {
        path: path.to_path_buf(),
        message,
    })?)
}

#[derive(Serialize)]
struct MineManifest {
    files_scanned: usize,
    mined: usize,
    duplicates: usize,
    skipped: Vec<String>,
    written: usize,
    by_language: BTreeMap<Language, usize>,
    quotas: Option<QuotaTable>,
    seed: u64,
}

fn mine(ctx: &Ctx, args: &MineArgs) -> Result<()> {
    let corpus = args
        .corpus
        .clone()
        .or_else(|| ctx.config.paths.corpus.clone())
        .ok_or_else(|| UsageError("mine needs --corpus or paths.corpus".into()))?;
    let quotas = match (&args.quotas, args.all) {
        (_, true) => None,
        (Some(path), false) => Some(read_quotas(path)?),
        (None, false) => ctx.config.quotas.clone(),
    };
    let mined = mine_directory(&corpus, ctx.config.mine)?;
    log::info!(
        "mined {} snippets from {} files ({} duplicates, {} undecodable)",
        mined.snippets.len(),
        mined.files_scanned,
        mined.duplicates,
        mined.skipped.len()
    );
    let seed = ctx.stage_seed("mine");
    let selected = match &quotas {
        Some(q) => sample_quota(&mined.snippets, q, seed)?,
        None => mined.snippets.clone(),
    };
    write_jsonl(&args.out, &selected)?;
    let mut by_language = BTreeMap::new();
    for s in &selected {
        *by_language.entry(s.language).or_insert(0) += 1;
    }
    write_json(
        &manifest_path(&args.out),
        &MineManifest {
            files_scanned: mined.files_scanned,
            mined: mined.snippets.len(),
            duplicates: mined.duplicates,
            skipped: mined.skipped,
            written: selected.len(),
            by_language,
            quotas,
            seed: ctx.seed,
        },
    )
}

fn plan(ctx: &Ctx, args: &PlanArgs) -> Result<()> {
    let seeds: Vec<SeedSnippet> = read_jsonl(&args.seeds)?;
    let templates = match args
        .templates
        .as_ref()
        .or(ctx.config.paths.templates.as_ref())
    {
        Some(path) => TemplateSet::load(path)?,
        None => TemplateSet::builtin(),
    };
    let providers: Vec<String> = if !args.provider_names.is_empty() {
        args.provider_names.clone()
    } else if args.providers.is_some() {
        ctx.providers(&args.providers)?
            .into_iter()
            .map(|p| p.name)
            .collect()
    } else if !ctx.config.plan.providers.is_empty() {
        ctx.config.plan.providers.clone()
    } else {
        ctx.config
            .providers
            .iter()
            .map(|p| p.name.clone())
            .collect()
    };
    let tasks = plan_generation(
        &seeds,
        &ctx.config.plan.distribution,
        &providers,
        &templates,
        ctx.stage_seed("plan"),
    )?;
    write_jsonl(&args.out, &tasks)?;
    let mut by_kind = BTreeMap::new();
    let mut by_provider = BTreeMap::new();
    for t in &tasks {
        *by_kind.entry(t.kind().name()).or_insert(0usize) += 1;
        *by_provider.entry(t.provider.as_str()).or_insert(0usize) += 1;
    }
    log::info!("planned {} tasks", tasks.len());
    write_json(
        &manifest_path(&args.out),
        &json!({
            "tasks": tasks.len(),
            "by_kind": by_kind,
            "by_provider": by_provider,
            "template_version": templates.version,
            "seed": ctx.seed,
        }),
    )
}

fn generate(ctx: &Ctx, args: &GenerateArgs) -> Result<()> {
    let tasks: Vec<GenerationTask> = read_jsonl(&args.tasks)?;
    let configs = ctx.providers(&args.providers)?;
    let names: BTreeSet<String> = tasks.iter().map(|t| t.provider.clone()).collect();
    let credentials = resolve_credentials(&configs, &names, |v| std::env::var(v).ok())?;
    let mut providers = Vec::new();
    for config in configs.iter().filter(|c| names.contains(&c.name)) {
        providers.push((
            config.clone(),
            build_provider(config, credentials[&config.name].clone())?,
        ));
    }
    // mock runs stamp a fixed time so their outputs are reproducible
    let all_mock = providers.iter().all(|(c, _)| c.kind == ProviderKind::Mock);
    let clock: Box<dyn Clock> = if all_mock {
        Box::new(FixedClock::default())
    } else {
        Box::new(SystemClock)
    };
    let outcome = submit_with_providers(&tasks, &providers, &args.journal, clock.as_ref())?;
    let harvested = harvest(&outcome.completions);
    let mut dataset = Dataset::new();
    let rejected = dataset.append_dedup(harvested.pairs);
    log::info!(
        "{} completions ({} resumed), {} pairs, {} unparsable, {} duplicates, {} failed tasks",
        outcome.completions.len(),
        outcome.resumed,
        dataset.len(),
        harvested.discards.len(),
        rejected.len(),
        outcome.failures.len()
    );
    dataset.save(&args.out, Some(ctx.seed))?;
    write_jsonl(&sidecar(&args.out, ".discards.jsonl"), &harvested.discards)?;
    write_jsonl(&sidecar(&args.out, ".failures.jsonl"), &outcome.failures)?;
    Ok(())
}

fn slice(ctx: &Ctx, args: &SliceArgs) -> Result<()> {
    let dataset = Dataset::load(&args.input)?;
    let spec = SliceSpec {
        tag: args.tag,
        target_count: args.count,
        seed: ctx.stage_seed("slice"),
    };
    let sliced = slice_by_tag(&dataset, &spec)?;
    log::info!("slice keeps {} of {} pairs", sliced.len(), dataset.len());
    sliced.save(&args.out, Some(ctx.seed))?;
    Ok(())
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn partition(ctx: &Ctx, args: &PartitionArgs) -> Result<()> {
    let dataset = Dataset::load(&args.input)?;
    let parts = partition_by_generator(&dataset);
    let mut files = BTreeMap::new();
    for (generator, part) in &parts {
        let path = args.out_dir.join(format!("{}.jsonl", file_safe(generator)));
        part.save(&path, Some(ctx.seed))?;
        files.insert(generator.clone(), part.len());
    }
    log::info!("{} partitions", parts.len());
    write_json(
        &args.out_dir.join("partitions.json"),
        &json!({"by": args.by, "parts": files}),
    )
}

fn stats(args: &StatsArgs) -> Result<()> {
    let dataset = Dataset::load(&args.input)?;
    let mut manifest = dataset.stats();
    if let Ok(text) = std::fs::read_to_string(manifest_path(&args.input)) {
        if let Ok(recorded) = serde_json::from_str::<crate::dataset::Manifest>(&text) {
            manifest.seed = recorded.seed;
            if recorded.content_hash != manifest.content_hash {
                log::warn!("manifest sidecar does not match the dataset contents");
            }
        }
    }
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}

fn mask(ctx: &Ctx, args: &MaskArgs) -> Result<()> {
    let dataset = Dataset::load(&args.input)?;
    let tokenizer = tokenizer_by_name(&args.tokenizer)?;
    let file = build_training_file(
        dataset.pairs(),
        tokenizer.as_ref(),
        args.masked,
        args.context_cap,
    );
    write_jsonl(&args.out, &file.samples)?;
    log::info!(
        "{} samples, {} dropped over the context cap",
        file.samples.len(),
        file.dropped.len()
    );
    write_json(
        &manifest_path(&args.out),
        &json!({
            "samples": file.samples.len(),
            "dropped": file.dropped,
            "masked": args.masked,
            "tokenizer": tokenizer.name(),
            "context_cap": args.context_cap,
            "source_hash": dataset.stats().content_hash,
            "seed": ctx.seed,
        }),
    )
}

fn eval(ctx: &Ctx, args: &EvalArgs) -> Result<()> {
    let suite_path = ctx.suite_path(&args.suite);
    let registry = ctx.registry();
    let settings = ctx.judge_settings();
    let suite = if args.skip_self_check {
        read_suite(&suite_path)?
    } else {
        load_suite(&suite_path, Some(&registry), &settings)?
    };
    let adapter = ctx.model_adapter(&args.model, &args.providers)?;
    let samples = args.n.unwrap_or(ctx.config.eval.samples);
    if samples == 0 {
        bail!(UsageError("--n must be at least 1".into()));
    }
    let options = EvalOptions {
        samples,
        params: ctx.eval_params(),
        judge: settings,
        workers: args.workers.unwrap_or(ctx.config.eval.workers),
        cache: ctx.config.eval.cache,
    };
    let records = evaluate(adapter.as_ref(), &suite, &registry, &options);
    let mut counts = BTreeMap::new();
    for r in &records {
        *counts
            .entry(format!("{:?}", r.verdict.expect("judged")))
            .or_insert(0usize) += 1;
    }
    log::info!("judged {} samples: {counts:?}", records.len());
    write_jsonl(&args.out, &records)?;
    Ok(())
}

fn load_records(path: &Path) -> Result<Vec<CompletionRecord>> {
    Ok(read_jsonl(path)?)
}

fn load_scoring_suite(ctx: &Ctx, flag: &Option<PathBuf>) -> Result<Suite> {
    Ok(read_suite(&ctx.suite_path(flag))?)
}

fn score(ctx: &Ctx, args: &ScoreArgs) -> Result<()> {
    let records = load_records(&args.journal)?;
    let suite = load_scoring_suite(ctx, &args.suite)?;
    let ks = if args.k.is_empty() {
        ctx.config.eval.k.clone()
    } else {
        args.k.clone()
    };
    let options = AggregateOptions {
        exclude_unavailable: args.exclude_unavailable || ctx.config.eval.exclude_unavailable,
    };
    let report = aggregate(&records, &suite, args.axis, &ks, &options)?;
    match &args.out {
        Some(path) => write_json(path, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn report_summary(ctx: &Ctx, args: &SummaryArgs) -> Result<()> {
    let suite = load_scoring_suite(ctx, &args.suite)?;
    let options = AggregateOptions {
        exclude_unavailable: ctx.config.eval.exclude_unavailable,
    };
    let sizes: BTreeMap<&str, f64> = args.size.iter().map(|(n, s)| (n.as_str(), *s)).collect();
    let mut reports = Vec::new();
    for journal in &args.journal {
        let records = load_records(journal)?;
        let report = aggregate(&records, &suite, Axis::Overall, &[1], &options)
            .with_context(|| format!("scoring {}", journal.display()))?;
        let meta = ModelMeta {
            name: report.model.clone(),
            size_b: sizes.get(report.model.as_str()).copied(),
        };
        reports.push((report, meta));
    }
    let table = emit_summary_table(&reports)?;
    let csv_path = if args.out.extension().is_some_and(|e| e == "csv") {
        sidecar(&args.out, ".csv")
    } else {
        args.out.with_extension("csv")
    };
    write_text(&args.out, &table.to_text())?;
    write_text(&csv_path, &table.to_csv())
}

fn report_heatmap(ctx: &Ctx, args: &HeatmapArgs) -> Result<()> {
    let suite = load_scoring_suite(ctx, &args.suite)?;
    let records = load_records(&args.journal)?;
    let options = AggregateOptions {
        exclude_unavailable: ctx.config.eval.exclude_unavailable,
    };
    let grid = emit_heatmap(&records, &suite, &options)?;
    write_text(&args.out, &grid.to_csv())
}

fn report_perf(ctx: &Ctx, args: &PerfArgs) -> Result<()> {
    let suite = load_scoring_suite(ctx, &args.suite)?;
    let adapter = ctx.model_adapter(&args.model, &args.providers)?;
    let prompts: Vec<(&str, &str)> = suite
        .problems
        .iter()
        .map(|p| (p.id.as_str(), p.prompt.as_str()))
        .collect();
    let sample = measure_perf(
        adapter.as_ref(),
        &prompts,
        &ctx.eval_params(),
        &args.device,
        &MonotonicStopwatch::default(),
    )?;
    log::info!(
        "{:.1} tokens/s, peak memory {}",
        sample.tokens_per_second,
        sample.memory_label()
    );
    write_json(&args.out, &sample)
}
