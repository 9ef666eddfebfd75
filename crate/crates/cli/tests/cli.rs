use std::process::{Command, Output};

fn minmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minmax"))
        .args(args)
        .env_remove("MINMAX_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn table_rows(md: &str) -> Vec<&str> {
    md.lines().filter(|l| l.starts_with("| (")).collect()
}

fn outcome_line(csv: &str) -> String {
    csv.lines().rev().find(|l| l.starts_with("# outcome=")).unwrap().to_string()
}

#[test]
fn classify_composite_table() {
    let o = minmax(&["classify", "--fn", "composite2d", "--seeds", "100"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows = table_rows(&out);
    assert_eq!(rows.len(), 5, "{out}");
    let origin = rows.iter().find(|r| r.starts_with("| (0.0000, 0.0000)")).unwrap();
    assert!(origin.starts_with("| (0.0000, 0.0000) | NO | YES | NO |"), "{origin}");
    let corner = rows.iter().find(|r| r.starts_with("| (1.0000, 0.0000)")).unwrap();
    assert!(corner.contains("| YES | YES | YES |"), "{corner}");
}

#[test]
fn classify_xy_single_row_and_json() {
    let o = minmax(&["classify", "--fn", "xy"]);
    assert!(o.status.success());
    assert_eq!(table_rows(&stdout(&o)).len(), 1);

    let o = minmax(&["classify", "--fn", "xy", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v.as_array().unwrap()[0];
    assert_eq!(r["local_minmax"], "Yes");
    assert_eq!(r["gda_small_alpha"], "Unstable");
    assert_eq!(r["ogda_small_alpha"], "Stable");
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = minmax(&["classify", "--fn", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n":1,"m":1,"terms":[{"c":1.0,"e":[1,1]},{"c":2.0,"e":[1]}]}"#).unwrap();
    let o = minmax(&["classify", "--fn", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("term 1"));

    assert_eq!(minmax(&["trace", "--fn", "xy", "--start", "1"]).status.code(), Some(1));
    assert_eq!(minmax(&["classify", "--fn", "nosuch"]).status.code(), Some(1));
    assert_eq!(minmax(&["trace", "--fn", "xy", "--start", "1", "1", "--alpha=-1"]).status.code(), Some(1));
    assert_eq!(minmax(&["bogus"]).status.code(), Some(1));
}

#[test]
fn trace_outcomes() {
    let o = minmax(&["trace", "--fn", "xy", "--dyn", "gda", "--alpha", "0.01", "--start", "1", "1", "--stride", "1000"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "t,x1,y1"));
    assert!(outcome_line(&out).starts_with("# outcome=diverged"), "{out}");

    let o = minmax(&["trace", "--fn", "xy", "--dyn", "ogda", "--alpha", "0.1", "--start", "1", "1"]);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "t,x1,y1,px1,py1"));
    assert!(outcome_line(&out).starts_with("# outcome=converged"), "{out}");

    let o = minmax(&["trace", "--fn", "f1", "--dyn", "gda", "--alpha", "0.001", "--start", "0.1", "0.1", "--stride", "1000"]);
    assert!(outcome_line(&stdout(&o)).starts_with("# outcome=converged"));
}

#[test]
fn sweep_is_reproducible() {
    let args = ["sweep", "--fn", "composite2d", "--dyn", "ogda", "--alpha", "0.005", "--samples", "60", "--max-iters", "20000", "--seed", "5"];
    let a = minmax(&args);
    assert!(a.status.success());
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "2"]);
    let b = minmax(&threaded);
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let total: f64 = out
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("critical_point"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "{out}");
}

#[test]
fn field_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    let o = minmax(&["field", "--fn", "f1", "--box", "-1", "1", "--grid", "50", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "x,y,dx,dy");
    assert_eq!(data.len(), 2501);
}

#[test]
fn check_suite_passes_on_f2() {
    let o = minmax(&["check", "--fn", "f2", "--alpha", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
