use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_viral-sde");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn analyze_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "analyze",
        "--preset",
        "example2",
        "--out",
        out_dir(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("analysis.json")).unwrap())
            .unwrap();
    let r0 = json["deterministic"]["r0"].as_f64().unwrap();
    assert!((r0 - 3.53).abs() < 0.005);
    assert_eq!(json["stability"]["condition_a"]["holds"], false);
}

#[test]
fn simulate_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "simulate".to_string(),
            "--preset".into(),
            "example2".into(),
            "--paths".into(),
            "24".into(),
            "--t-end".into(),
            "5".into(),
            "--seed".into(),
            "77".into(),
            "--out".into(),
            d.display().to_string(),
        ]
    };
    for d in [a.path(), b.path()] {
        let args = args(d);
        let o = Command::new(BIN).args(&args).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("extinction probability"));
    }
    for f in ["mean.csv", "stats.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn retained_paths_are_written_and_match_euler_without_noise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        r#"
[params]
omega = 10.0
beta = 0.005
mu = 0.1
mu1 = 0.6
alpha = 0.24
p = 0.795
q = 0.28

[grid]
t0 = 0.0
t_end = 1.0
dt = 0.1

[initial]
s = 100.0
i = 100.0
b = 100.0

[ensemble]
n_paths = 1
retention = "all"
"#,
    )
    .unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("paths/path_00000.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,S,I,B"));
    let (omega, beta, mu, mu1, alpha, p, q) = (10.0, 0.005, 0.1, 0.6, 0.24, 0.795, 0.28);
    let (mut s, mut i, mut b) = (100.0f64, 100.0f64, 100.0f64);
    for (k, line) in lines.enumerate() {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&cells[1..], &[s, i, b], "row {k}");
        let inf = beta * s * b;
        let ds = omega - inf - mu * s;
        let di = inf - p * i - mu * i;
        let db = alpha * i - q * b - mu1 * b;
        s = (s + ds * 0.1).max(0.0);
        i = (i + di * 0.1).max(0.0);
        b = (b + db * 0.1).max(0.0);
    }
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[params]\nomega = 10.0\nbogus = 1\n").unwrap();
    let o = run(&["analyze", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let o = run(&["analyze", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&[
        "analyze",
        "--preset",
        "example1",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));

    let o = run(&["control", "--preset", "example1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_convergence_exits_with_three_and_keeps_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let text = viral_sde::config::preset("fig66a")
        .unwrap()
        .to_toml()
        .replace("max_iterations = 100", "max_iterations = 2");
    assert!(text.contains("max_iterations = 2"));
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, text).unwrap();
    let o = run(&[
        "control",
        "--config",
        cfg.to_str().unwrap(),
        "--paths",
        "8",
        "--t-end",
        "4",
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("scenarios.csv")).unwrap();
    assert!(csv.starts_with(
        "t,B_none,B_immuno,B_antiviral,B_combined,I_none,I_immuno,I_antiviral,I_combined"
    ));
    assert!(dir.path().join("control.json").exists());
}

#[test]
fn sweep_reports_a_transition_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = viral_sde::config::preset("example2").unwrap();
    cfg.ensemble.n_paths = 32;
    cfg.grid.t_end = 50.0;
    let mut text = cfg.to_toml();
    text.push_str(
        r#"
[sweep]
metrics = ["extinction_probability", "condition_a", "negative_definite"]

[[sweep.axes]]
name = "sigma"
min = 0.0
max = 1.6
count = 5
"#,
    );
    let path = dir.path().join("s.toml");
    fs::write(&path, text).unwrap();
    let o = run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("sigma,extinction_probability,condition_a,negative_definite")
    );
    let p: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(p.len(), 5);
    assert_eq!(p[0], 0.0);
    assert!(p[4] > p[0]);
}
