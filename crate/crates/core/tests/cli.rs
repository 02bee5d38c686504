use std::path::Path;
use std::process::{Command, Output};

fn ddpmix(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddpmix")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, name: &str, seed: &str) {
    let o = ddpmix(&["simulate", "--times", "12", "--per-time", "3", "--t-max", "5", "--seed", seed, "-o", name], dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn simulate_writes_rows_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "a.csv", "4");
    simulate(dir.path(), "b.csv", "4");
    simulate(dir.path(), "c.csv", "5");
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let c = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(a.lines().next(), Some("time,value"));
    assert_eq!(a.lines().count(), 1 + 36);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn fit_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "data.csv", "1");
    let o = ddpmix(
        &[
            "fit",
            "--data",
            "data.csv",
            "-o",
            "draws.jsonl",
            "--burn-in",
            "50",
            "--iters",
            "100",
            "--thin",
            "5",
            "--seed",
            "3",
            "--chains",
            "2",
            "--telemetry",
            "tel.txt",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("chain=1 draws=20"), "{}", stdout(&o));
    let tel = std::fs::read_to_string(d.join("tel.chain0.txt")).unwrap();
    assert_eq!(tel.lines().count(), 150);
    assert!(tel.lines().next().unwrap().contains("loglik="));

    let o = ddpmix(
        &[
            "summarize",
            "--draws",
            "draws.jsonl",
            "--y-grid",
            "-2:5:30",
            "--surface-csv",
            "s.csv",
            "--mean-csv",
            "m.csv",
            "--json",
            "s.json",
            "--toy-truth",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("draws=40 chains=2 times=12 y_points=30"), "{out}");
    assert!(out.contains("diagnostic=psrf trace=theta"), "{out}");
    assert!(out.contains("coverage mean_band="), "{out}");
    let surface = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert_eq!(surface.lines().next(), Some("t,y,q025,q50,q975,mean"));
    assert_eq!(surface.lines().count(), 1 + 12 * 30);
    let mean = std::fs::read_to_string(d.join("m.csv")).unwrap();
    assert_eq!(mean.lines().next(), Some("t,mode,mean,lo,hi"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    assert!(json.get("y_grid").is_some());
}

#[test]
fn fit_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "data.csv", "2");
    for out in ["x.jsonl", "y.jsonl"] {
        let o = ddpmix(
            &[
                "fit",
                "--data",
                "data.csv",
                "-o",
                out,
                "--burn-in",
                "20",
                "--iters",
                "40",
                "--thin",
                "2",
                "--seed",
                "8",
                "--chains",
                "2",
            ],
            d,
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(d.join("x.jsonl")).unwrap(), std::fs::read(d.join("y.jsonl")).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "data.csv", "3");
    std::fs::write(d.join("run.conf"), "data = data.csv\noutput = draws.jsonl\nburn_in = 10\niters = 40\nthin = 10\n")
        .unwrap();
    let o = ddpmix(&["fit", "--config", "run.conf"], d);
    assert!(stdout(&o).contains("chain=0 draws=4"), "{}{}", stdout(&o), stderr(&o));
    let o = ddpmix(&["fit", "--config", "run.conf", "--thin", "4"], d);
    assert!(stdout(&o).contains("chain=0 draws=10"), "{}{}", stdout(&o), stderr(&o));
    std::fs::write(d.join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(ddpmix(&["fit", "--config", "bad.conf"], d).status.code(), Some(1));
}

#[test]
fn unsorted_data_is_a_data_error_naming_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "time,value\n0,1.0\n2,0.5\n1,0.3\n").unwrap();
    let o = ddpmix(&["fit", "--data", "bad.csv", "-o", "x.jsonl", "--burn-in", "1", "--iters", "2", "--thin", "1"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 4"), "{}", stderr(&o));
}

#[test]
fn summarize_missing_archive_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = ddpmix(&["summarize", "--draws", "nope.jsonl"], dir.path());
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("nope.jsonl"), "{}", stderr(&o));
}

#[test]
fn validate_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let t0 = std::time::Instant::now();
    let o = ddpmix(&["validate", "--quick"], dir.path());
    assert!(t0.elapsed().as_secs() < 60);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("summary passed=6 total=6"), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ddpmix(&["validate", "--tolerance", "abc"], dir.path()).status.code(), Some(1));
    assert_eq!(ddpmix(&["validate", "--tolerance", "-2"], dir.path()).status.code(), Some(1));
    assert_eq!(ddpmix(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(ddpmix(&["fit", "--burn-in", "1"], dir.path()).status.code(), Some(1));
    assert_eq!(ddpmix(&["--help"], dir.path()).status.code(), Some(0));
}
