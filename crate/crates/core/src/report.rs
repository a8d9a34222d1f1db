//! Result artifacts: per-model summary tables, problem-type × execution-model
//! heatmap grids, and throughput/memory measurements.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::eval::aggregate::{
    aggregate, AggregateOptions, Axis, PassAtKReport, PARALLEL_ROW, SERIAL_ROW,
};
use crate::eval::{
    CompletionRecord, EvalError, ExecutionModel, GenerationRequest, ModelAdapter, ProblemType,
    Suite,
};
use crate::gateway::SamplingParams;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report for `{model}` lacks the overall `{row}` pass@1 row")]
    MissingOverallRow { model: String, row: &'static str },
    #[error("adapter `{0}` does not report generated token counts")]
    AdapterUnsupported(String),
    #[error("adapter `{model}` failed: {message}")]
    Adapter { model: String, message: String },
    #[error("perf measurement for `{0}` observed no tokens or no elapsed time")]
    Degenerate(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Renders a pass rate in percent to three significant figures, dropping
/// trailing zeros: 0.547 → `54.7`, 0.5 → `50`, 1.0 → `100`.
pub fn format_percent(rate: f64) -> String {
    let pct = rate * 100.0;
    if pct == 0.0 || !pct.is_finite() {
        return format!("{}", if pct.is_finite() { 0.0 } else { pct });
    }
    let digits = pct.abs().log10().floor() as i32 + 1;
    let decimals = (3 - digits).max(0) as usize;
    let mut text = format!("{pct:.decimals$}");
    // rounding can carry into a new digit (99.95 → 100.0)
    if text.contains('.') {
        text = text.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    text
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub name: String,
    /// Parameter count in billions, when known.
    pub size_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub size_b: Option<f64>,
    pub serial: f64,
    pub parallel: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

const SUMMARY_HEADER: [&str; 4] = ["model", "size", "serial pass@1", "parallel pass@1"];

fn size_cell(size: Option<f64>) -> String {
    size.map_or_else(|| "-".to_string(), |s| format!("{s}B"))
}

impl SummaryTable {
    fn cells(&self) -> Vec<[String; 4]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.model.clone(),
                    size_cell(r.size_b),
                    format_percent(r.serial),
                    format_percent(r.parallel),
                ]
            })
            .collect()
    }

    /// Space-aligned columns; numbers right-aligned.
    pub fn to_text(&self) -> String {
        let cells = self.cells();
        let mut widths = SUMMARY_HEADER.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut line = |row: [&str; 4]| {
            let _ = writeln!(
                out,
                "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
                row[0],
                row[1],
                row[2],
                row[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
        };
        line(SUMMARY_HEADER);
        for row in &cells {
            line([&row[0], &row[1], &row[2], &row[3]]);
        }
        out.lines()
            .map(str::trim_end)
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,size_b,serial_pass@1,parallel_pass@1\n");
        for (row, cells) in self.rows.iter().zip(self.cells()) {
            let size = row.size_b.map(|s| s.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{size},{},{}",
                csv_field(&row.model),
                cells[2],
                cells[3]
            );
        }
        out
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn overall_k1(report: &PassAtKReport, row: &'static str) -> Result<f64, ReportError> {
    report
        .get(Axis::Overall, row, 1)
        .map(|r| r.pass_at_k)
        .ok_or_else(|| ReportError::MissingOverallRow {
            model: report.model.clone(),
            row,
        })
}

/// One row per model from its overall pass@1 rows, ordered by size (unknown
/// sizes last) and then name.
pub fn emit_summary_table(
    reports: &[(PassAtKReport, ModelMeta)],
) -> Result<SummaryTable, ReportError> {
    let mut rows = reports
        .iter()
        .map(|(report, meta)| {
            Ok(SummaryRow {
                model: meta.name.clone(),
                size_b: meta.size_b,
                serial: overall_k1(report, SERIAL_ROW)?,
                parallel: overall_k1(report, PARALLEL_ROW)?,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    rows.sort_by(|a, b| {
        let by_size = match (a.size_b, b.size_b) {
            (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_size.then_with(|| a.model.cmp(&b.model))
    });
    Ok(SummaryTable { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub model: String,
    pub problem_types: Vec<ProblemType>,
    pub execution_models: Vec<ExecutionModel>,
    /// `cells[t][e]`: mean pass@1 of the cell's problems; `None` for cells the
    /// suite does not populate.
    pub cells: Vec<Vec<Option<f64>>>,
    pub samples_per_problem: u64,
}

impl HeatmapGrid {
    pub fn cell(&self, t: ProblemType, e: ExecutionModel) -> Option<f64> {
        let ti = self.problem_types.iter().position(|x| *x == t)?;
        let ei = self.execution_models.iter().position(|x| *x == e)?;
        self.cells[ti][ei]
    }

    /// Mean over the populated cells of a problem-type row.
    pub fn row_mean(&self, t: ProblemType) -> Option<f64> {
        let ti = self.problem_types.iter().position(|x| *x == t)?;
        let values: Vec<f64> = self.cells[ti].iter().flatten().copied().collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    /// Problem-type rows, execution-model columns; empty cells are blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("problem_type");
        for e in &self.execution_models {
            let _ = write!(out, ",{e}");
        }
        out.push('\n');
        for (t, row) in self.problem_types.iter().zip(&self.cells) {
            out.push_str(t.name());
            for cell in row {
                out.push(',');
                if let Some(v) = cell {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Per-cell pass@1 grid with the suite's problem types and execution models
/// as dimensions.
pub fn emit_heatmap(
    records: &[CompletionRecord],
    suite: &Suite,
    options: &AggregateOptions,
) -> Result<HeatmapGrid, ReportError> {
    let report = aggregate(records, suite, Axis::Cell, &[1], options)?;
    let problem_types = suite.problem_types();
    let execution_models = suite.execution_models();
    let cells = problem_types
        .iter()
        .map(|t| {
            execution_models
                .iter()
                .map(|e| {
                    report
                        .get(Axis::Cell, &format!("{t}/{e}"), 1)
                        .map(|r| r.pass_at_k)
                })
                .collect()
        })
        .collect();
    Ok(HeatmapGrid {
        model: report.model,
        problem_types,
        execution_models,
        cells,
        samples_per_problem: report.rows.first().map_or(0, |r| r.samples_per_problem),
    })
}

/// Monotonic time source for throughput measurement.
pub trait Stopwatch {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
}

#[derive(Debug, Clone, Copy)]
pub struct MonotonicStopwatch(Instant);

impl Default for MonotonicStopwatch {
    fn default() -> Self {
        MonotonicStopwatch(Instant::now())
    }
}

impl Stopwatch for MonotonicStopwatch {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfSample {
    pub model: String,
    pub tokens_per_second: f64,
    /// Peak memory reported by the adapter's probe; absent for adapters
    /// without one.
    pub peak_memory_gb: Option<f64>,
    pub batch_size: usize,
    pub device: String,
    pub prompts: usize,
    pub generated_tokens: u64,
    pub wall_seconds: f64,
}

impl PerfSample {
    pub fn memory_label(&self) -> String {
        self.peak_memory_gb.map_or_else(
            || "unavailable".to_string(),
            |gb| format!("{gb} GB (probe peak)"),
        )
    }
}

/// Generated tokens over total wall time across `(problem id, prompt)` pairs,
/// one request at a time.
pub fn measure_perf(
    adapter: &dyn ModelAdapter,
    prompts: &[(&str, &str)],
    params: &SamplingParams,
    device: &str,
    stopwatch: &dyn Stopwatch,
) -> Result<PerfSample, ReportError> {
    let model = adapter.name().to_string();
    let mut tokens = 0u64;
    let start = stopwatch.now();
    for &(problem_id, prompt) in prompts {
        let request = GenerationRequest {
            problem_id,
            sample_index: 0,
            prompt,
            params,
        };
        let generation = adapter
            .generate(&request)
            .map_err(|message| ReportError::Adapter {
                model: model.clone(),
                message,
            })?;
        tokens += generation
            .generated_tokens
            .ok_or_else(|| ReportError::AdapterUnsupported(model.clone()))?;
    }
    let wall = stopwatch.now().saturating_sub(start).as_secs_f64();
    if tokens == 0 || wall <= 0.0 {
        return Err(ReportError::Degenerate(model));
    }
    Ok(PerfSample {
        tokens_per_second: tokens as f64 / wall,
        peak_memory_gb: adapter.peak_memory_gb(),
        batch_size: 1,
        device: device.to_string(),
        prompts: prompts.len(),
        generated_tokens: tokens,
        wall_seconds: wall,
        model,
    })
}
