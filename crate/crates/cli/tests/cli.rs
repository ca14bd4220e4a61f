use std::fs;
use std::process::{Command, Output};

fn subdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subdiff"))
        .args(args)
        .output()
        .expect("failed to launch subdiff")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL_TEMPORAL: &[&str] = &["temporal", "--alpha", "0.5", "--sigma", "0.3", "--gamma", "2", "-M", "16", "-N", "32", "-N", "64"];

#[test]
fn csv_header_and_rows() {
    let out = subdiff(&[SMALL_TEMPORAL, &["--format", "csv"]].concat());
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "axis,alpha,sigma,gamma,M,N,error,order,predicted");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "temporal");
    assert_eq!(first[4], "16");
    assert_eq!(first[5], "32");
    assert_eq!(first[7], "");
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(second[7].parse::<f64>().unwrap().is_finite());
    assert_eq!(second[8].parse::<f64>().unwrap(), 0.6);
    assert!(lines.next().is_none());
}

#[test]
fn repeated_alpha_gives_one_table_each() {
    let out = subdiff(&["spatial", "--alpha", "0.3", "--alpha", "0.6", "-N", "50", "-M", "8", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("spatial,0.6,"));
}

#[test]
fn text_table_by_default() {
    let out = subdiff(SMALL_TEMPORAL);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("e(M,N)"));
    assert!(text.contains("predicted"));
}

#[test]
fn json_report_parses() {
    let out = subdiff(&[SMALL_TEMPORAL, &["--format", "json"]].concat());
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let table = &value[0];
    assert_eq!(table["axis"], "temporal");
    assert_eq!(table["rows"].as_array().unwrap().len(), 2);
    assert!(table["rows"][0]["order"].is_null());
}

#[test]
fn assert_mode_exits_two_on_missed_tolerance() {
    // Orders on such coarse grids miss a 0.001 tolerance
    let out = subdiff(&[SMALL_TEMPORAL, &["--assert", "--tolerance", "0.001"]].concat());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("assertion failed"));
}

#[test]
fn assert_mode_passes_kernel_check() {
    let out = subdiff(&["kernels-check", "--meshes", "5", "--max-steps", "40", "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("sandwich violations        0"));
}

#[test]
fn out_file_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = subdiff(&[SMALL_TEMPORAL, &["--jobs", "2", "--out", path.to_str().unwrap()]].concat());
        assert!(out.status.success());
    }
    let first = fs::read(&a).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, fs::read(&b).unwrap());
}

#[test]
fn stability_csv() {
    let out = subdiff(&["stability", "-M", "8", "-N", "16", "-N", "32", "--format", "csv", "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("alpha,sigma,gamma,M,N,delta,perturbation,l2,averaged,dxx\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn mesh_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.txt");
    let out = subdiff(&["mesh", "-N", "8", "--gamma", "2", "--mesh", "graded", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    let nodes: Vec<f64> = text.lines().map(|l| l.trim().parse().unwrap()).collect();
    assert_eq!(nodes.len(), 9);
    assert_eq!(nodes[0], 0.0);
    assert!((nodes[4] - 0.25).abs() < 1e-15);
    assert_eq!(nodes[8], 1.0);

    let out = subdiff(&["mesh", "--input", path.to_str().unwrap(), "--gamma", "2"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["gamma"], 2.0);
}

#[test]
fn solve_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("run.txt");
    fs::write(&problem, "# small run\nalpha = 0.5\nsigma = 1.3\ngamma = 2\nM = 8\nN = 20\n").unwrap();
    let snap = dir.path().join("snap.csv");
    let out = subdiff(&[
        "solve",
        "--problem",
        problem.to_str().unwrap(),
        "--level",
        "10",
        "--level",
        "20",
        "--out",
        snap.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("e(M,N)"));
    let text = fs::read_to_string(&snap).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,t,x,u,v");
    assert_eq!(lines.count(), 18);
}

#[test]
fn bad_problem_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("bad.txt");
    fs::write(&problem, "alpha = 0.5\nsigma = 1.3\nM = 8\nN = 20\ncolour = blue\n").unwrap();
    let out = subdiff(&["solve", "--problem", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}
