use std::fs;
use std::process::{Command, Output};

fn hybridqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridqe")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = hybridqe(&["gen", "--n", "300", "--nq", "5", "--dim", "4", "--out", dir.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["items.csv", "queries.csv", "items.vec"] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let items = fs::read_to_string(a.path().join("items.csv")).unwrap();
    assert_eq!(items.lines().count(), 301);
}

#[test]
fn bench_on_generated_files_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(hybridqe(&["gen", "--n", "500", "--nq", "6", "--dim", "4", "--out", d]).status.success());
    let report = dir.path().join("report.csv");
    let o = hybridqe(&[
        "bench", "--data", d, "--n", "500", "--nq", "6", "--dim", "4", "--template", "q2", "--mode", "exact",
        "--selectivity", "1,0.5", "--reps", "1", "--queries", "2", "--threshold", "0.8", "--min-recall", "1",
        "--out", report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(report).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "template,selectivity,mode,rewrites,execTimeMs,recall,distanceCalls,tuplesScanned"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("q2,1,exact,on,"));
    assert!(lines[2].starts_with("q2,0.5,exact,on,"));
}

#[test]
fn unoptimized_with_rewrites_is_a_config_error() {
    let o = hybridqe(&["bench", "--n", "100", "--mode", "unoptimized", "--rewrites", "on"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_template_is_rejected() {
    let o = hybridqe(&["oracle", "--template", "q9"]);
    assert!(!o.status.success());
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn recall_floor_miss_exits_with_three() {
    let o = hybridqe(&[
        "bench", "--n", "400", "--dim", "4", "--template", "q1", "--selectivity", "1", "--reps", "1", "--queries",
        "2", "--min-recall", "1.5",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn explain_shows_hoisted_distance() {
    let o = hybridqe(&["explain", "--template", "q1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("-- rewritten"));
    assert!(text.contains("Map [sim:"));

    let o = hybridqe(&["explain", "--template", "q1", "--rewrites", "off"]);
    assert!(!stdout(&o).contains("Map [sim:"));
}

#[test]
fn explain_physical_lists_pipelines() {
    let o = hybridqe(&["explain", "--template", "q4", "--physical", "--n", "300", "--dim", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("-- pipelines"));
}

#[test]
fn unsupported_sql_exits_with_two() {
    let o = hybridqe(&["explain", "--sql", "SELECT * FROM products"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_prints_header_and_k_rows() {
    let o = hybridqe(&["oracle", "--n", "300", "--dim", "4", "--template", "q1", "--k", "7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "id");
    assert_eq!(lines.len(), 8);
}
