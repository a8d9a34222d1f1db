//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};

use paraforge::corpus::ParallelTag;
use paraforge::dataset::{slice_by_tag, Dataset, SliceSpec};
use paraforge::eval::aggregate::{aggregate, AggregateOptions, Axis};
use paraforge::eval::judge::{judge, JudgeSettings, RunnerRegistry, Verdict};
use paraforge::eval::{
    desk_suite_manifest, pass_at_k, read_suite, CompletionRecord, ExecutionModel,
};
use paraforge::fixtures::{
    LISTING_SAMPLE, OMP_REDUCTION_COMPLETION, OMP_REDUCTION_WRONG, SERIAL_REDUCTION_HANG,
};
use paraforge::gateway::parse::{parse_sample, split_sections, InstructPair, RawCompletion};
use paraforge::mask::{
    build_training_file, ByteTokenizer, Tokenizer, DEFAULT_CONTEXT_CAP, IGNORE_INDEX,
};
use paraforge::prompt::TemplateKind;
use paraforge::report::{emit_heatmap, emit_summary_table, format_percent, ModelMeta};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn epoch() -> DateTime<Utc> {
    DateTime::<Utc>::UNIX_EPOCH
}

/// Exhaustive pass@k: the fraction of k-subsets of n samples (c correct)
/// containing at least one correct sample.
fn brute_force_pass_at_k(n: u32, c: u32, k: u32) -> f64 {
    let correct_mask = (1u32 << c) - 1;
    let (mut hit, mut total) = (0u64, 0u64);
    for subset in 0u32..(1 << n) {
        if subset.count_ones() == k {
            total += 1;
            if subset & correct_mask != 0 {
                hit += 1;
            }
        }
    }
    hit as f64 / total as f64
}

fn c1_worked_example() -> Outcome {
    let start = Instant::now();
    let value = pass_at_k(10, 3, 1).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check((value - 0.3).abs() < 1e-12, || {
        format!("pass@1(10,3) = {value}")
    })?;
    check(elapsed < Duration::from_millis(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("pass@1(n=10,c=3) = {value}"))
}

fn c2_subset_oracle() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    let mut worst = 0.0f64;
    for n in 1..=12u32 {
        for c in 0..=n {
            for k in 1..=n {
                let got = pass_at_k(n.into(), c.into(), k.into()).map_err(|e| e.to_string())?;
                let want = brute_force_pass_at_k(n, c, k);
                worst = worst.max((got - want).abs());
                check((got - want).abs() <= 1e-12, || {
                    format!("n={n} c={c} k={k}: {got} vs {want}")
                })?;
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("{cases} (n,c,k) cases, max error {worst:e}"))
}

fn c3_listing_round_trip() -> Outcome {
    let (instruction, response) = split_sections(LISTING_SAMPLE).map_err(|e| format!("{e:?}"))?;
    check(
        instruction.contains("parallelize the `aggregate_metrics` function"),
        || "instruction lacks the task sentence".into(),
    )?;
    check(response.contains("reduction(+:sum)"), || {
        "response lacks the reduction clause".into()
    })?;

    let text = "[^*\\s][^*]{0,200}[^*\\s]|[^*\\s]";
    let mut runner = TestRunner::new(ProptestConfig::with_cases(1000));
    runner
        .run(&(text, text), |(instruction, response)| {
            let pair = InstructPair::new(
                &instruction,
                &response,
                "gen",
                TemplateKind::Programming,
                "seed",
                epoch(),
            )
            .expect("non-empty sides");
            let raw = RawCompletion {
                task_id: "t".into(),
                provider: "gen".into(),
                kind: TemplateKind::Programming,
                seed_id: "seed".into(),
                text: pair.to_reply_text(),
                requested_at: epoch(),
                prompt_tokens: None,
                completion_tokens: None,
            };
            let back = parse_sample(&raw).expect("rendered reply parses");
            prop_assert_eq!(back, pair);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("listing sections recovered; 1000 render/reparse cases".into())
}

fn pair(i: usize, mpi: bool) -> InstructPair {
    let response = if mpi {
        format!("MPI_Allreduce(&x, &y, {i}, MPI_INT, MPI_SUM, MPI_COMM_WORLD);")
    } else {
        format!("for (int k = 0; k < {i}; ++k) y += x[k];")
    };
    InstructPair::new(
        &format!("task {i}"),
        &response,
        "gen",
        TemplateKind::Programming,
        "s",
        epoch(),
    )
    .expect("non-empty")
}

fn c4_slicing() -> Outcome {
    let pairs: Vec<InstructPair> = (0..20_000).map(|i| pair(i, i % 5 < 3)).collect();
    let dataset = Dataset::from_pairs(pairs);
    let non_mpi: Vec<&InstructPair> = dataset
        .pairs()
        .iter()
        .filter(|p| !p.parallel_tags.contains(&ParallelTag::Mpi))
        .collect();
    check(dataset.len() == 20_000 && non_mpi.len() == 8_000, || {
        format!(
            "fixture has {} pairs, {} non-MPI",
            dataset.len(),
            non_mpi.len()
        )
    })?;
    let non_mpi_bytes: Vec<String> = non_mpi
        .iter()
        .map(|p| serde_json::to_string(p).unwrap())
        .collect();
    for target in (0..=12_000).step_by(2_000) {
        let spec = SliceSpec {
            tag: ParallelTag::Mpi,
            target_count: target,
            seed: 7,
        };
        let sliced = slice_by_tag(&dataset, &spec).map_err(|e| e.to_string())?;
        let (mpi, rest): (Vec<&InstructPair>, Vec<&InstructPair>) = sliced
            .pairs()
            .iter()
            .partition(|p| p.parallel_tags.contains(&ParallelTag::Mpi));
        check(mpi.len() == target, || {
            format!("target {target}: kept {}", mpi.len())
        })?;
        let rest_bytes: Vec<String> = rest
            .iter()
            .map(|p| serde_json::to_string(p).unwrap())
            .collect();
        check(rest_bytes == non_mpi_bytes, || {
            format!("target {target}: non-MPI pairs changed")
        })?;
        let again = slice_by_tag(&dataset, &spec).map_err(|e| e.to_string())?;
        let ids = |d: &Dataset| d.pairs().iter().map(|p| p.id.clone()).collect::<Vec<_>>();
        check(ids(&again) == ids(&sliced), || {
            format!("target {target}: not reproducible")
        })?;
    }
    Ok("7 targets exact; non-MPI pairs byte-identical; same seed, same ids".into())
}

fn c5_masking() -> Outcome {
    let pairs: Vec<InstructPair> = (0..200)
        .map(|i| {
            InstructPair::new(
                &format!("Parallelize loop {i} with OpenMP. {}", "x".repeat(i * 7)),
                &format!("#pragma omp parallel for\nfor (int k = 0; k < {i}; ++k) a[k] = k;"),
                "gen",
                TemplateKind::Parallelization,
                "s",
                epoch(),
            )
            .unwrap()
        })
        .chain(std::iter::once(
            InstructPair::new(
                &"y".repeat(9000),
                "z",
                "gen",
                TemplateKind::Programming,
                "s",
                epoch(),
            )
            .unwrap(),
        ))
        .collect();
    let tokenizer = ByteTokenizer;
    let masked = build_training_file(&pairs, &tokenizer, true, DEFAULT_CONTEXT_CAP);
    let unmasked = build_training_file(&pairs, &tokenizer, false, DEFAULT_CONTEXT_CAP);
    check(
        masked.dropped.len() == 1 && masked.samples.len() == 200,
        || {
            format!(
                "kept {}, dropped {}",
                masked.samples.len(),
                masked.dropped.len()
            )
        },
    )?;
    for (i, (m, u)) in masked.samples.iter().zip(&unmasked.samples).enumerate() {
        let span = m.span();
        let sentinels = m.labels.iter().filter(|&&l| l == IGNORE_INDEX).count();
        check(sentinels == span.len(), || {
            format!("sample {i}: {sentinels} vs {}", span.len())
        })?;
        check(!u.labels.contains(&IGNORE_INDEX), || {
            format!("sample {i}: unmasked has sentinels")
        })?;
        let kept: Vec<u32> = m
            .labels
            .iter()
            .filter(|&&l| l != IGNORE_INDEX)
            .map(|&l| l as u32)
            .collect();
        check(tokenizer.decode(&kept) == pairs[i].response, || {
            format!("sample {i}: response mismatch")
        })?;
        check(m.token_ids.len() <= DEFAULT_CONTEXT_CAP, || {
            format!("sample {i}: over the cap")
        })?;
    }
    Ok("200 samples, sentinel counts match spans, 1 over-cap pair dropped".into())
}

fn c6_desk_judge() -> Outcome {
    let start = Instant::now();
    let suite = read_suite(&desk_suite_manifest()).map_err(|e| e.to_string())?;
    let mut serial_and_omp = 0;
    for t in suite.problem_types() {
        let has = |e| {
            suite
                .problems
                .iter()
                .any(|p| p.problem_type == t && p.execution_model == e)
        };
        if has(ExecutionModel::Serial) && has(ExecutionModel::OpenMp) {
            serial_and_omp += 1;
        }
    }
    check(serial_and_omp >= 2, || {
        format!("{serial_and_omp} types with serial and omp")
    })?;
    let registry = RunnerRegistry::standard();
    let settings = JudgeSettings::default();
    let omp = suite.problem("reduce-omp").ok_or("no reduce-omp")?;
    let serial = suite.problem("reduce-serial").ok_or("no reduce-serial")?;
    let cases = [
        (omp, OMP_REDUCTION_COMPLETION, Verdict::Correct),
        (omp, OMP_REDUCTION_WRONG, Verdict::TestFail),
        (serial, SERIAL_REDUCTION_HANG, Verdict::Timeout),
    ];
    for (problem, completion, want) in cases {
        let (got, logs) = judge(problem, completion, &registry, &settings, None);
        check(got == want, || {
            format!("{}: {got:?}, want {want:?}\n{logs}", problem.id)
        })?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(180), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "correct/wrong/hang judged as expected in {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn c7_end_to_end() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = common::run_pipeline(a.path());
    let second = common::run_pipeline(b.path());
    for run in [&first, &second] {
        check(run.elapsed < Duration::from_secs(120), || {
            format!("run took {:?}", run.elapsed)
        })?;
    }
    for rel in &first.outputs {
        let x = std::fs::read(first.path(rel)).map_err(|e| format!("{rel}: {e}"))?;
        let y = std::fs::read(second.path(rel)).map_err(|e| format!("{rel}: {e}"))?;
        check(x == y, || format!("{rel} differs between runs"))?;
    }
    let records: Vec<CompletionRecord> =
        paraforge::jsonl::read_jsonl(&first.path("eval.jsonl")).map_err(|e| e.to_string())?;
    let suite = read_suite(&desk_suite_manifest()).map_err(|e| e.to_string())?;
    let report = aggregate(
        &records,
        &suite,
        Axis::Cell,
        &[1],
        &AggregateOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    for (id, want) in common::expected_pass1() {
        let problem = suite.problem(&id).ok_or(format!("no {id}"))?;
        let label = paraforge::eval::aggregate::cell_label(problem);
        let got = report
            .get(Axis::Cell, &label, 1)
            .ok_or(format!("no row {label}"))?
            .pass_at_k;
        check((got - want).abs() < 1e-12, || {
            format!("{label}: {got} vs {want}")
        })?;
    }
    Ok(format!(
        "{} outputs identical; runs took {:.1}s and {:.1}s",
        first.outputs.len(),
        first.elapsed.as_secs_f64(),
        second.elapsed.as_secs_f64()
    ))
}

fn c8_reports() -> Outcome {
    check(
        format_percent(0.547) == "54.7" && format_percent(0.235) == "23.5",
        || format!("{} / {}", format_percent(0.547), format_percent(0.235)),
    )?;
    let suite = read_suite(&desk_suite_manifest()).map_err(|e| e.to_string())?;
    let verdicts = [
        Verdict::Correct,
        Verdict::BuildFail,
        Verdict::TestFail,
        Verdict::Timeout,
        Verdict::RuntimeFail,
    ];
    let mut records = Vec::new();
    for (pi, problem) in suite.problems.iter().enumerate() {
        for i in 0..10 {
            let verdict = if (i * 3 + pi) % 7 < pi % 4 + 1 {
                Verdict::Correct
            } else {
                verdicts[(i + pi) % 5]
            };
            records.push(CompletionRecord {
                model: "m".into(),
                problem_id: problem.id.clone(),
                sample_index: i,
                completion: String::new(),
                verdict: Some(verdict),
                adapter_error: None,
                generated_tokens: None,
                logs: String::new(),
            });
        }
    }
    let options = AggregateOptions::default();
    let grid = emit_heatmap(&records, &suite, &options).map_err(|e| e.to_string())?;
    let by_type = aggregate(&records, &suite, Axis::ProblemType, &[1], &options)
        .map_err(|e| e.to_string())?;
    for t in suite.problem_types() {
        let mean = grid.row_mean(t).ok_or(format!("empty row {t}"))?;
        let want = by_type
            .get(Axis::ProblemType, t.name(), 1)
            .ok_or(format!("no row {t}"))?
            .pass_at_k;
        check((mean - want).abs() < 1e-9, || {
            format!("{t}: row mean {mean} vs {want}")
        })?;
    }
    let overall =
        aggregate(&records, &suite, Axis::Overall, &[1], &options).map_err(|e| e.to_string())?;
    let table = emit_summary_table(&[(
        overall,
        ModelMeta {
            name: "m".into(),
            size_b: Some(7.0),
        },
    )])
    .map_err(|e| e.to_string())?;
    check(table.rows.len() == 1, || "summary row missing".into())?;
    Ok("percent rendering and heatmap row means agree".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("pass@k worked example", c1_worked_example),
        ("pass@k matches subset enumeration", c2_subset_oracle),
        ("listing parse and render round trip", c3_listing_round_trip),
        ("tag slicing", c4_slicing),
        ("instruction masking", c5_masking),
        ("desk suite judging", c6_desk_judge),
        ("end-to-end determinism", c7_end_to_end),
        ("report rendering", c8_reports),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {}: {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
