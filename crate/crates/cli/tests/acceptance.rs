//! Acceptance report: one PASS or FAIL line per criterion. Exits non-zero if
//! any criterion fails.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use densekg_testkit::checks::{self, Outcome};

const PIPELINE_BUDGET: Duration = Duration::from_secs(300);

fn end_to_end_determinism() -> Outcome {
    let start = Instant::now();
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut runs = Vec::new();
    for dir in &dirs {
        let stdout = support::run_pipeline(dir.path(), 7)?;
        runs.push((stdout, support::read_tree(dir.path())));
    }
    let elapsed = start.elapsed();
    let (out_a, files_a) = &runs[0];
    let (out_b, files_b) = &runs[1];
    if files_a.keys().ne(files_b.keys()) {
        return Err("the two runs wrote different file sets".into());
    }
    let differing: Vec<String> = files_a
        .iter()
        .filter(|(path, bytes)| files_b[*path] != **bytes)
        .map(|(path, _)| path.display().to_string())
        .collect();
    if !differing.is_empty() {
        return Err(format!("artifacts differ between runs: {}", differing.join(", ")));
    }
    if out_a != out_b {
        return Err("command reports differ between runs".into());
    }
    for required in ["graph/events.jsonl", "model.json", "thresholds.json", "predicted.jsonl", "dense/triplets.jsonl"] {
        if !files_a.contains_key(std::path::Path::new(required)) {
            return Err(format!("pipeline did not write {required}"));
        }
    }
    if elapsed > PIPELINE_BUDGET {
        return Err(format!("two runs took {elapsed:.1?}, over the {PIPELINE_BUDGET:?} budget"));
    }
    let predicted = files_a[std::path::Path::new("predicted.jsonl")].iter().filter(|&&b| b == b'\n').count();
    Ok(format!(
        "{} artifacts byte-identical across two seeded runs, {predicted} predicted links, {:.1?} per run",
        files_a.len(),
        elapsed / 2
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("normalization golden suite", checks::normalization_golden),
        ("normalization invariants", || checks::normalization_invariants(1, 1000)),
        ("dataset builder", checks::dataset_builder),
        ("scorer math", checks::scorer_math),
        ("built-in scorer learning", checks::scorer_learning),
        ("completion oracle", || checks::completion_oracle(2, 100)),
        ("path counting oracle", || checks::path_oracle(3, 100)),
        ("heuristic sampling", || checks::heuristic_sampling(4)),
        ("precision evaluator", checks::precision_evaluator),
        ("degroup round-trip", || checks::degroup_round_trip(5, 1000)),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {detail}");
            }
        }
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
