use std::fs;
use std::path::Path;

use textschema::corpus::write_corpus;
use textschema::pipeline::{run_pipeline, PipelineError, RunConfig, EXIT_CONVERGED, EXIT_ITERATION_LIMIT};
use textschema::synthetic::synthetic_corpus;

const ARTIFACTS: [&str; 9] = [
    "grammar.txt",
    "instance.bracket",
    "validation.json",
    "iterations.csv",
    "metrics.csv",
    "metrics_baseline.csv",
    "schema.sql",
    "schema_graph.json",
    "manifest.json",
];

fn corpus_file(dir: &Path, n: usize) -> std::path::PathBuf {
    let path = dir.join("corpus.jsonl");
    fs::write(&path, write_corpus(&synthetic_corpus(n))).unwrap();
    path
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn small_corpus_writes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // Three templates, each seen twice.
    let mut sentences = synthetic_corpus(15);
    sentences.retain(|s| ["syn-000", "syn-005", "syn-001", "syn-006", "syn-003", "syn-008"].contains(&s.id.as_str()));
    let path = dir.path().join("small.jsonl");
    fs::write(&path, write_corpus(&sentences)).unwrap();
    let r = run_pipeline(&RunConfig::default(), &path, &out).unwrap();
    assert_eq!(r.exit_code(), EXIT_CONVERGED);
    for name in ARTIFACTS {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let m = manifest(&out);
    assert_eq!(m["status"], "converged");
    assert_eq!(m["sentences"], 6);
    assert!(fs::read_to_string(out.join("schema.sql")).unwrap().contains("CREATE TABLE"));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("tau,minSup,cs,rho_1.0,rho_0.5,AMI,cc,#R,grOverlap\n0.7,2,"));
}

#[test]
fn iteration_limit_is_distinguished() {
    let dir = tempfile::tempdir().unwrap();
    let path = corpus_file(dir.path(), 5);
    let out = dir.path().join("out");
    // Nothing is frequent enough to structure.
    let cfg = RunConfig { min_support: 50, max_iterations: 2, ..RunConfig::default() };
    let r = run_pipeline(&cfg, &path, &out).unwrap();
    assert!(!r.converged);
    assert_eq!(r.exit_code(), EXIT_ITERATION_LIMIT);
    assert_eq!(r.iterations, 2);
    assert!(!out.join("schema.sql").exists());
    let csv = fs::read_to_string(out.join("iterations.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let m = manifest(&out);
    assert_eq!(m["status"], "iteration-limit");
    assert_eq!(m["iterations"], 2);
    let validation: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("validation.json")).unwrap()).unwrap();
    assert_eq!(validation["valid"], false);
}

#[test]
fn unreadable_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let err = run_pipeline(&RunConfig::default(), &dir.path().join("missing.jsonl"), &out).unwrap_err();
    assert!(matches!(err, PipelineError::Corpus(_)));
    let m = manifest(&out);
    assert_eq!(m["status"], "failed");
    assert_eq!(m["failed_stage"], "load");
}

#[test]
fn enrichment_failure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    // The span [1,3) crosses the NP/VP boundary.
    fs::write(&path, r#"{"id":"b","tree":"(λ (NP (NN a) (NN b)) (VP (VB c)))","entities":[{"start":1,"end":3,"label":"X"}]}"#).unwrap();
    let out = dir.path().join("out");
    let err = run_pipeline(&RunConfig::default(), &path, &out).unwrap_err();
    assert!(matches!(err, PipelineError::Enrich(_)));
    assert_eq!(manifest(&out)["failed_stage"], "enrich");
    let lenient = RunConfig { lenient: true, ..RunConfig::default() };
    assert!(run_pipeline(&lenient, &path, &out).is_ok());
}

#[test]
fn zero_iterations_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = corpus_file(dir.path(), 5);
    let cfg = RunConfig { max_iterations: 0, ..RunConfig::default() };
    assert!(matches!(run_pipeline(&cfg, &path, &dir.path().join("out")), Err(PipelineError::Config(_))));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn levenshtein_and_alphas() {
    let dir = tempfile::tempdir().unwrap();
    let path = corpus_file(dir.path(), 25);
    let out = dir.path().join("out");
    let cfg = RunConfig {
        similarity: textschema::similarity::SimilarityKind::Levenshtein,
        alphas: vec![0.8],
        ..RunConfig::default()
    };
    run_pipeline(&cfg, &path, &out).unwrap();
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("tau,minSup,cs,rho_0.8,AMI,cc,#R,grOverlap\n"));
}
