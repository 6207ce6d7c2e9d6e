use std::fs;
use std::path::{Path, PathBuf};

use sorc::container::save_stack;
use sorc::report::read_scores;
use sorc::similarity::SimilarityFunctionId as F;
use sorc::synthetic::{generate_synthetic, Regularity, SyntheticSpec};
use sorc::workflow::{run_workflow, RunOptions, SetupStatus, WorkflowConfig, WorkflowError};

fn input(dir: &Path) -> PathBuf {
    let data = generate_synthetic(&SyntheticSpec::new(Regularity::Medium, 3, 3, 0.1, 21)).unwrap();
    let path = dir.join("stack.sorc");
    save_stack(&data.stack, &path).unwrap();
    path
}

fn small_config(input: &Path, out: &Path) -> WorkflowConfig {
    let mut cfg = WorkflowConfig::new(input, out);
    cfg.functions = vec![F::Pearson, F::Cosine, F::SharedPixel, F::Histogram];
    cfg.pp = vec![true];
    cfg.ms = vec![0, 1];
    cfg
}

fn options(threads: usize) -> RunOptions {
    RunOptions {
        threads: Some(threads),
        ..RunOptions::default()
    }
}

#[test]
fn second_run_hits_the_cache_with_identical_scores() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&input(dir.path()), &dir.path().join("out"));
    let first = run_workflow(&cfg, &options(2)).unwrap();
    assert!(first.manifest.entries.iter().all(|e| !e.cache_hit));
    let second = run_workflow(&cfg, &options(2)).unwrap();
    assert!(second.manifest.entries.iter().all(|e| e.cache_hit));
    assert_eq!(first.records, second.records);

    let mut changed = cfg.clone();
    changed.params.sigma_ms = 1.5;
    let third = run_workflow(&changed, &options(2)).unwrap();
    assert!(third.manifest.entries.iter().all(|e| !e.cache_hit));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = input(dir.path());
    let mut a = small_config(&input, &dir.path().join("a"));
    a.cache = false;
    let mut b = a.clone();
    b.output = dir.path().join("b");
    run_workflow(&a, &options(1)).unwrap();
    run_workflow(&b, &options(4)).unwrap();
    for name in ["scores.csv", "scores.json", "report_hierarchical.html", "comparison.html"] {
        assert_eq!(fs::read(a.output.join(name)).unwrap(), fs::read(b.output.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn one_failing_function_leaves_other_setups_alone() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(&input(dir.path()), &dir.path().join("out"));
    cfg.cache = false;
    let clean = run_workflow(&cfg, &options(2)).unwrap();
    let faulty = run_workflow(
        &cfg,
        &RunOptions {
            threads: Some(2),
            fail_function: Some(F::Cosine),
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert_eq!(clean.records.len(), faulty.records.len());
    for (k, (c, f)) in clean.records.iter().zip(&faulty.records).enumerate() {
        let entry = &faulty.manifest.entries[k];
        if c.setup.function == F::Cosine {
            assert_eq!(entry.status, SetupStatus::Failed);
            assert!(f.degenerate);
            assert!(entry.error.is_some());
        } else {
            assert_eq!(c.scs_val.to_bits(), f.scs_val.to_bits(), "{}", c.setup);
            assert_eq!(c.chi_val.to_bits(), f.chi_val.to_bits(), "{}", c.setup);
            assert_eq!(clean.manifest.entries[k].labels, entry.labels);
        }
    }
    let worst = faulty.records.iter().map(|r| r.sorc).fold(f64::INFINITY, f64::min);
    for r in faulty.records.iter().filter(|r| r.setup.function == F::Cosine) {
        assert_eq!(r.sorc, worst);
    }
}

#[test]
fn outputs_are_written_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&input(dir.path()), &dir.path().join("out"));
    let outcome = run_workflow(&cfg, &options(1)).unwrap();
    let read = read_scores(cfg.output.join("scores.csv")).unwrap();
    assert_eq!(read, outcome.records);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.output.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entries"].as_array().unwrap().len(), outcome.records.len());
    assert_eq!(manifest["dataset"], "stack");
    for m in ["affinity_propagation", "hierarchical", "community"] {
        assert!(cfg.output.join(format!("report_{m}.html")).exists());
    }
}

#[test]
fn csv_input_matches_container_input() {
    let dir = tempfile::tempdir().unwrap();
    let container = input(dir.path());
    let stack = sorc::container::load_stack(&container).unwrap();
    let csv_path = dir.path().join("stack.csv");
    let mut text = String::from("i,j");
    for z in 0..stack.channels() {
        text.push_str(&format!(",{}", stack.mz_values()[z]));
    }
    text.push('\n');
    for &(i, j) in stack.mask().positions() {
        text.push_str(&format!("{i},{j}"));
        for z in 0..stack.channels() {
            text.push_str(&format!(",{:e}", stack.plane(z)[(i, j)]));
        }
        text.push('\n');
    }
    fs::write(&csv_path, text).unwrap();
    let mut a = small_config(&container, &dir.path().join("a"));
    a.cache = false;
    let mut b = small_config(&csv_path, &dir.path().join("b"));
    b.cache = false;
    let ra = run_workflow(&a, &options(1)).unwrap();
    let rb = run_workflow(&b, &options(1)).unwrap();
    for (x, y) in ra.records.iter().zip(&rb.records) {
        assert!((x.sorc - y.sorc).abs() < 1e-9, "{}", x.setup);
    }
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = small_config(&dir.path().join("absent.sorc"), &dir.path().join("out"));
    let err = run_workflow(&missing, &options(1)).unwrap_err();
    assert!(matches!(err, WorkflowError::Input { .. }));
    assert_eq!(err.exit_code(), 2);

    let mut empty = small_config(&input(dir.path()), &dir.path().join("out"));
    empty.functions.clear();
    assert_eq!(run_workflow(&empty, &options(1)).unwrap_err().exit_code(), 1);
}
