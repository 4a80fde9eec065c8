use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use echoloop::GridSpec;
use echoloop_cli::manifest::RunManifest;
use echoloop_cli::output::{read_results_csv, RESULTS_HEADER};
use tempfile::TempDir;

const TRIAL: &str = r#"
item_count = 2
select_count = 1
horizon = 10
seed = 42

[policy]
kind = "ts"

[model]
kind = "basic"
"#;

const GRID: &str = r#"
item_counts = [4]
select_counts = [1, 2]
policies = ["ts", "random"]
trials = 3
horizon = 60
seed = 5
checkpoints = [20]

[model]
kind = "basic"
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_echoloop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_smoke() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t.toml", TRIAL);
    let out = tmp.path().join("out");
    let o = run(&["simulate", s(&cfg), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "t,selection,clicks,delta,loop_amplitude,max_interest,cumulative_reward");
    assert_eq!(lines.len(), 11);
    for (i, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], (i + 1).to_string());
        let item: usize = fields[1].parse().unwrap();
        assert!(item < 2);
        assert!(fields[2] == "0" || fields[2] == "1");
    }
    assert!(out.join("snapshots.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn simulate_rejects_l_equal_m() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t.toml", &TRIAL.replace("select_count = 1", "select_count = 2"));
    let o = run(&["simulate", s(&cfg), "-o", s(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("l < M") && err.contains("select_count"), "{err}");
}

#[test]
fn simulate_rejects_missing_file() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["simulate", s(&tmp.path().join("nope.toml")), "-o", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t.toml", &TRIAL.replace("horizon = 10", "horizon = 300"));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&["simulate", s(&cfg), "-o", s(&a)]).status.success());
    assert!(run(&["simulate", s(&cfg), "-o", s(&b)]).status.success());
    for f in ["trace.csv", "snapshots.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = tmp.path().join("c");
    assert!(run(&["simulate", s(&cfg), "-o", s(&c), "--seed", "43"]).status.success());
    assert_ne!(fs::read(a.join("trace.csv")).unwrap(), fs::read(c.join("trace.csv")).unwrap());
}

#[test]
fn grid_writes_results_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let g = write(tmp.path(), "g.toml", GRID);
    let out = tmp.path().join("out");
    let o = run(&["grid", s(&g), "-o", s(&out), "-p", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let rows = read_results_csv(fs::File::open(out.join("results.csv")).unwrap()).unwrap();
    // 4 cells x 4 metrics x 2 recorded steps
    assert_eq!(rows.len(), 32);
    assert!(rows.iter().all(|r| r.trials == 3 && r.restart_bound.is_none()));
    assert!(rows.iter().any(|r| r.step == 20) && rows.iter().any(|r| r.step == 60));

    let finals = fs::read_to_string(out.join("finals.csv")).unwrap();
    assert_eq!(finals.lines().count(), 1 + 4 * 3 * 2);

    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.command, "grid");
    assert!(m.failed_cells.is_empty());
    for f in ["results.csv", "finals.csv", "manifest.json"] {
        assert!(m.files.iter().any(|x| x == f), "{f} missing from manifest");
    }
    assert!(m.finished_at_ms >= m.started_at_ms);
    let echoed: GridSpec = serde_json::from_value(m.config).unwrap();
    assert_eq!(echoed, echoloop_cli::config::parse_grid_spec(GRID).unwrap());
}

#[test]
fn empty_grid_exits_2() {
    let tmp = TempDir::new().unwrap();
    let g = write(tmp.path(), "g.toml", &GRID.replace("item_counts = [4]", "item_counts = []"));
    let o = run(&["grid", s(&g), "-o", s(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));

    // no cell satisfies l < M
    let g = write(tmp.path(), "g2.toml", &GRID.replace("select_counts = [1, 2]", "select_counts = [4, 5]"));
    let o = run(&["grid", s(&g), "-o", s(&tmp.path().join("out2"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn partially_failing_grid_exits_3_and_keeps_good_cells() {
    let tmp = TempDir::new().unwrap();
    let body = GRID.replace(
        "kind = \"basic\"",
        "kind = \"restarts\"\nrestart_probabilities = [0.1, 1.5]\nrestart_scales = [0.5]",
    );
    let g = write(tmp.path(), "g.toml", &body);
    let out = tmp.path().join("out");
    let o = run(&["grid", s(&g), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("restart_probability"));

    let rows = read_results_csv(fs::File::open(out.join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 32);
    assert!(rows.iter().all(|r| r.cell.q == Some(0.1)));
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.failed_cells.len(), 4);
}

#[test]
fn restart_grid_carries_bound_column() {
    let tmp = TempDir::new().unwrap();
    let body = r#"
item_counts = [10]
select_counts = [5]
policies = ["ts", "greedy", "optimal", "random"]
epsilons = [0.1]
trials = 2
horizon = 100
seed = 9

[model]
kind = "restarts"
restart_probabilities = [0.0, 0.01, 1.0]
restart_scales = [0.0, 0.5]
"#;
    let g = write(tmp.path(), "g.toml", body);
    let out = tmp.path().join("out");
    assert!(run(&["grid", s(&g), "-o", s(&out), "-p", "4"]).status.success());

    let text = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULTS_HEADER.join(","));
    let rows = read_results_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4 * 3 * 2 * 4);
    for r in &rows {
        let (q, sc) = (r.cell.q.unwrap(), r.cell.s.unwrap());
        let b = r.restart_bound.unwrap();
        if q == 0.0 {
            assert!(b.is_infinite());
        } else {
            let expected = 0.005 * (1.0 / ((1.0 - sc) * q) - 1.0);
            assert!((b - expected).abs() < 1e-12, "{b} vs {expected}");
        }
        assert!((r.growth_ceiling - (1.0 + 0.005 * r.step as f64)).abs() < 1e-12);
    }
    assert!(text.contains(",inf,"));
}

#[test]
fn noise_grid_has_w_column() {
    let tmp = TempDir::new().unwrap();
    let body = GRID.replace(
        "kind = \"basic\"",
        "kind = \"additive_noise\"\nnoise_widths = [0.0, 3.0]",
    );
    let g = write(tmp.path(), "g.toml", &body);
    let out = tmp.path().join("out");
    assert!(run(&["grid", s(&g), "-o", s(&out)]).status.success());
    let rows = read_results_csv(fs::File::open(out.join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r.cell.w.is_some() && r.cell.q.is_none()));
}

#[test]
fn report_one_line_per_cell() {
    let tmp = TempDir::new().unwrap();
    let g = write(tmp.path(), "g.toml", GRID);
    let out = tmp.path().join("out");
    assert!(run(&["grid", s(&g), "-o", s(&out)]).status.success());
    let o = run(&["report", s(&out.join("results.csv"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(text.lines().all(|l| l.contains("max_interest@60")));
}

fn results_with(max_interest: f64, bound: &str) -> String {
    format!(
        "{}\n10,5,optimal,,,0.5,0,max_interest,5000,{max_interest},0.01,10,{bound},26\n",
        RESULTS_HEADER.join(",")
    )
}

#[test]
fn report_strict_flags_violations() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.csv", &results_with(2.5, "0.005"));
    let o = run(&["report", s(&bad)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("VIOLATED"));
    let o = run(&["report", s(&bad), "--strict"]);
    assert_ne!(o.status.code(), Some(0));

    let ok = write(tmp.path(), "ok.csv", &results_with(0.9, "0.005"));
    let o = run(&["report", s(&ok), "--strict"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("n/a"));
}

#[test]
fn report_rejects_malformed_csv() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "x.csv", "a,b,c\n1,2,3\n");
    assert_eq!(run(&["report", s(&p)]).status.code(), Some(2));
    let p = write(
        tmp.path(),
        "y.csv",
        &format!("{}\n10,5,ts,,,,,max_interest,abc,1,1,1,,1\n", RESULTS_HEADER.join(",")),
    );
    assert_eq!(run(&["report", s(&p)]).status.code(), Some(2));
}
