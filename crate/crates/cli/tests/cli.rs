use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn spec(name: &str) -> String {
    root().join("specs").join(name).display().to_string()
}

fn run_with(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relsec"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("RELSEC_THREADS", t),
        None => cmd.env_remove("RELSEC_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_with(args, None)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

/// Value of `column` in each data row.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

fn h2(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

#[test]
fn info_matches_golden_and_bsc_formula() {
    let out = stdout(&run(&["info", &spec("bsc_wiretap.json")]));
    assert_eq!(out, golden("info_bsc_wiretap.csv"));
    let row = out.lines().find(|l| l.starts_with("iX1Z,")).unwrap();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - (1.0 - h2(0.2))).abs() < 1e-9);
}

#[test]
fn degenerate_relay_ties_every_leaf() {
    let out = stdout(&run(&["classify", &spec("degenerate_relay.json")]));
    assert_eq!(out, golden("classify_degenerate_relay.csv"));
    let ties = column(&out, "tie");
    assert_eq!(ties.len(), 9);
    assert!(ties.iter().all(|t| t == "true"));
}

#[test]
fn rate_matches_golden() {
    assert_eq!(stdout(&run(&["rate", &spec("side_channel_relay.json")])), golden("rate_side_channel_relay.csv"));
}

#[test]
fn oracle_agrees_with_closed_form_at_grid_resolution() {
    let rate = stdout(&run(&["rate", &spec("side_channel_relay.json")]));
    let oracle = stdout(&run(&["oracle", &spec("side_channel_relay.json"), "--grid", "0.01"]));
    let best = column(&rate, "best").iter().position(|b| b == "true").unwrap();
    let closed: f64 = column(&rate, "r1")[best].parse().unwrap();
    let searched: f64 = column(&oracle, "r1")[0].parse().unwrap();
    assert!((closed - searched).abs() <= 0.01, "{closed} vs {searched}");
}

#[test]
fn sweep_matches_golden_and_wiretap_capacity() {
    let out = stdout(&run(&["sweep", &spec("bsc_eve_sweep_template.json"), "--from", "0", "--to", "0.5", "--steps", "6"]));
    assert_eq!(out, golden("sweep_bsc_eve.csv"));
    for (x, base) in column(&out, "param").iter().zip(column(&out, "baseline")) {
        let x: f64 = x.parse().unwrap();
        let want = if x == 0.0 { 0.0 } else { (h2(x) - h2(0.1)).max(0.0) };
        assert!((base.parse::<f64>().unwrap() - want).abs() < 1e-6, "x = {x}");
    }
}

#[test]
fn sweep_param_pointer_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let template = dir.path().join("t.json");
    let text = std::fs::read_to_string(spec("bsc_wiretap.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["channel"][0][0][0][0] = serde_json::json!(["1 - x", 0.0]);
    v["channel"][0][0][0][1] = serde_json::json!([0.0, 0.0]);
    std::fs::write(&template, v.to_string()).unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep",
        template.to_str().unwrap(),
        "--param",
        "/channel/0/0/0/1/1",
        "--from",
        "0",
        "--to",
        "1",
        "--steps",
        "3",
        "--restarts",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(!csv.contains('\r'));
    assert_eq!(column(&csv, "status"), ["ok", "ok", "ok"]);
}

#[test]
fn sweep_reports_invalid_points_as_rows() {
    let out = stdout(&run(&["sweep", &spec("bsc_eve_sweep_template.json"), "--from", "0.5", "--to", "1.5", "--steps", "2"]));
    assert_eq!(column(&out, "status"), ["ok", "error"]);
}

#[test]
fn optimize_writes_a_loadable_design() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("best.json");
    let csv = stdout(&run(&["optimize", &spec("bsc_wiretap.json"), "--restarts", "2", "--out", out.to_str().unwrap()]));
    let r1: f64 = column(&csv, "r1")[0].parse().unwrap();
    assert!((r1 - (h2(0.2) - h2(0.1))).abs() < 1e-6);
    let saved = stdout(&run(&["rate", out.to_str().unwrap()]));
    let best = column(&saved, "best").iter().position(|b| b == "true").unwrap();
    assert!((column(&saved, "r1")[best].parse::<f64>().unwrap() - r1).abs() < 1e-9);
}

#[test]
fn simulate_twice_is_identical() {
    let args = ["simulate", &spec("side_channel_relay.json"), "--n", "4", "--blocks", "3", "--trials", "30", "--seed", "7"];
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    assert!(a.contains("seed,7\n"));
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let s = spec("side_channel_relay.json");
    let commands: Vec<Vec<&str>> = vec![
        vec!["rate", &s],
        vec!["oracle", &s, "--grid", "0.02"],
        vec!["optimize", &s, "--restarts", "2", "--seed", "3", "--out", out.to_str().unwrap()],
        vec!["simulate", &s, "--n", "4", "--blocks", "3", "--trials", "24", "--seed", "7", "--equivocation", "exact", "--eve-samples", "20"],
    ];
    for args in commands {
        let one = stdout(&run_with(&args, Some("1")));
        let design_one = std::fs::read_to_string(&out).ok();
        let four = stdout(&run_with(&args, Some("4")));
        assert_eq!(one, four, "{}", args[0]);
        assert_eq!(design_one, std::fs::read_to_string(&out).ok());
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let no_channel = write("a.json", r#"{"alphabets": {"x1": 1, "x2": 1, "y2": 1, "y3": 1, "z": 1}}"#);
    let short_row = write(
        "b.json",
        r#"{"alphabets": {"x1": 1, "x2": 1, "y2": 1, "y3": 2, "z": 1}, "channel": [[[[[0.5], [0.499]]]]],
           "design": {"comp_size": 1, "p_x1": [1], "p_x2": [1], "q": [[[1]]]}}"#,
    );
    let o = run(&["classify", &no_channel]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`channel`"));
    assert!(o.stdout.is_empty());
    let o = run(&["classify", &short_row]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/channel/0/0"));

    let s = spec("side_channel_relay.json");
    assert_eq!(run(&["oracle", &s, "--grid", "0.00001"]).status.code(), Some(3));
    assert_eq!(run(&["classify", "/no/such/file.json"]).status.code(), Some(3));
    assert_eq!(run(&["classify", &s, "--bogus"]).status.code(), Some(3));
    assert_eq!(run_with(&["classify", &s], Some("many")).status.code(), Some(3));
    assert_eq!(run(&["simulate", &s, "--n", "40"]).status.code(), Some(3));
    assert_eq!(run(&["info", &spec("bsc_eve_sweep_template.json")]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
