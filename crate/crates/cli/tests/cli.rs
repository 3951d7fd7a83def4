use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
p = 40
replicates = 3
structures = ["iid"]
sparsity = [0.1]
log_lambda = [-2.0, -1.5]

[baseline]
structure = "iid"
sparsity = 0.1
log_lambda = -2.0

[histogram]
structure = "iid"
sparsity = 0.1
log_lambda = -2.0

[solver]
mc_samples = 100
"#;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_replica-inference"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["p = 0", "not_a_key = 3", "level = 2.0", "p = \"many\""] {
        let config = write_config(dir.path(), text);
        let out = cli(&[
            "solve",
            "--config",
            &config,
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{text}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = cli(&["solve", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_threads_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = cli(&[
        "solve",
        "--config",
        &config,
        "--threads",
        "0",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unreachable_signal_is_a_numeric_failure() {
    // a penalty this large zeroes every coefficient, which the solver reports
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &SMALL.replace(
            "log_lambda = -2.0\n\n[histogram]",
            "log_lambda = 4.0\n\n[histogram]",
        ),
    );
    let out = cli(&[
        "solve",
        "--config",
        &config,
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn solve_prints_order_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = cli(&[
        "solve",
        "--config",
        &config,
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    for key in [
        "zeta0",
        "zeta",
        "r0",
        "q0",
        "q",
        "r",
        "tau",
        "theoretical_precision",
        "theoretical_power",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{key} = "))),
            "missing {key}"
        );
    }
    let trace = std::fs::read_to_string(dir.path().join("solve_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,zeta0,zeta,r0,q0,q,r,tau,residual"));
}

#[test]
fn all_writes_every_table_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let run = |name: &str, seed: &str, threads: &str| {
        let out_dir = dir.path().join(name);
        let out = cli(&[
            "all",
            "--config",
            &config,
            "--seed",
            seed,
            "--threads",
            threads,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out_dir
    };
    let (a, b, c) = (run("a", "5", "1"), run("b", "5", "3"), run("c", "6", "2"));
    let tables = [
        "precision.csv",
        "coverage.csv",
        "coverage_summary.csv",
        "power.csv",
        "order_parameters.csv",
        "histogram.csv",
    ];
    for name in tables {
        let bytes = std::fs::read(a.join(name)).unwrap();
        assert_eq!(
            bytes,
            std::fs::read(b.join(name)).unwrap(),
            "{name} differs across reruns"
        );
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.lines().count() > 1, "{name} has no data rows");
    }
    assert_ne!(
        std::fs::read(a.join("precision.csv")).unwrap(),
        std::fs::read(c.join("precision.csv")).unwrap()
    );
}

#[test]
fn single_tables_match_the_combined_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let all = dir.path().join("all");
    let one = dir.path().join("one");
    assert!(cli(&[
        "all",
        "--config",
        &config,
        "--out-dir",
        all.to_str().unwrap()
    ])
    .status
    .success());
    for (cmd, file) in [
        ("precision", "precision.csv"),
        ("power", "power.csv"),
        ("coverage", "coverage.csv"),
        ("histogram", "histogram.csv"),
    ] {
        assert!(
            cli(&[cmd, "--config", &config, "--out-dir", one.to_str().unwrap()])
                .status
                .success()
        );
        assert_eq!(
            std::fs::read(all.join(file)).unwrap(),
            std::fs::read(one.join(file)).unwrap(),
            "{cmd}"
        );
    }
}

#[test]
fn shipped_example_config_solves() {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/quick.toml");
    let out = cli(&[
        "solve",
        "--config",
        config,
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
