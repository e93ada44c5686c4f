use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use textschema::corpus::write_corpus;
use textschema::synthetic::synthetic_corpus;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_textschema")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn corpus(dir: &Path, n: usize) -> std::path::PathBuf {
    let p = dir.join("corpus.jsonl");
    fs::write(&p, write_corpus(&synthetic_corpus(n))).unwrap();
    p
}

const TWO_GROUP_GRAMMAR: &str = "λ -> Coll_1\nColl_1 -> Rel_1+\nRel_1 -> Grp_1 Grp_2\nGrp_1 -> Prop_1 Prop_2\nGrp_2 -> Prop_3\n";

#[test]
fn structure_then_metrics_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), 20);
    let out = dir.path().join("out");
    let o = bin(&["structure", s(&c), "--out", s(&out), "--tau", "0.7", "--alpha", "1.0", "--alpha", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["grammar.txt", "instance.bracket", "schema.sql", "schema_graph.json", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let m = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(m.starts_with("tau,minSup,cs,rho_1.0,rho_0.25,AMI,cc,#R,grOverlap\n"));

    let o = bin(&["metrics", s(&c), "--instance", s(&out.join("instance.bracket")), "--alpha", "1.0", "--alpha", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), m);
    let o = bin(&["metrics", s(&c), "--instance", s(&out.join("instance.bracket")), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["coverage"], 1.0);

    let o = bin(&["validate", s(&out.join("grammar.txt"))]);
    assert_eq!(o.status.code(), Some(0));
    let o = bin(&["export", s(&out.join("grammar.txt")), "--format", "sql"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(out.join("schema.sql")).unwrap());
    let o = bin(&["export", s(&out.join("grammar.txt")), "--format", "graph"]);
    assert_eq!(stdout(&o), fs::read_to_string(out.join("schema_graph.json")).unwrap());
}

#[test]
fn iteration_limit_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), 5);
    let out = dir.path().join("out");
    let o = bin(&["structure", s(&c), "--out", s(&out), "--min-support", "100", "--max-iterations", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_to_string(out.join("iterations.csv")).unwrap().lines().count(), 3);
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(bin(&["structure", "/no/such/corpus.jsonl", "--out", s(&out)]).status.code(), Some(1));
    let c = corpus(dir.path(), 5);
    assert_eq!(bin(&["structure", s(&c), "--out", s(&out), "--max-iterations", "0"]).status.code(), Some(1));
    assert_eq!(bin(&["structure", s(&c), "--out", s(&out), "--tau", "1.5"]).status.code(), Some(1));
    assert_eq!(bin(&["structure", s(&c), "--similarity", "cosine"]).status.code(), Some(1));
}

#[test]
fn validate_and_export_grammar_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.txt");
    fs::write(&good, TWO_GROUP_GRAMMAR).unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, TWO_GROUP_GRAMMAR.replace("Rel_1 -> Grp_1 Grp_2", "Rel_1 -> Grp_1 Grp_1")).unwrap();

    let o = bin(&["validate", s(&good)]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], true);
    let o = bin(&["validate", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("V5"));

    let map = dir.path().join("map.json");
    fs::write(&map, r#"{"Grp_1": "Exam", "Grp_2": "Sosy", "Rel_1": "ExamSosy"}"#).unwrap();
    let o = bin(&["export", s(&good), "--format", "sql", "--label-map", s(&map)]);
    let sql = stdout(&o);
    assert!(sql.contains("CREATE TABLE GRP_Exam"));
    assert!(sql.contains("CREATE TABLE REL_ExamSosy"));
    let o = bin(&["export", s(&good), "--format", "text"]);
    assert_eq!(stdout(&o), TWO_GROUP_GRAMMAR);
    let o = bin(&["export", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
}

#[test]
fn baseline_prints_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), 10);
    let o = bin(&["baseline", s(&c)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("λ -> "));
    assert!(text.contains("tau,minSup,cs,"));
    let out = dir.path().join("b");
    let o = bin(&["baseline", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("baseline_grammar.txt").is_file());
    assert!(out.join("metrics_baseline.csv").is_file());
}
