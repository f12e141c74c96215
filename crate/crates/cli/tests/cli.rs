use std::path::Path;
use std::process::{Command, Output};

fn pgpca(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgpca"))
        .args(args)
        .current_dir(dir)
        .env_remove("PGPCA_SEED")
        .output()
        .expect("spawn pgpca")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = pgpca(args, dir);
    assert!(
        out.status.success(),
        "pgpca {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &[
            "simulate",
            "--spec",
            "loop2d-gecov",
            "--seed",
            "7",
            "--samples",
            "300",
            "--out",
            "a.csv",
        ],
        p,
    );
    ok(
        &[
            "simulate",
            "--spec",
            "loop2d-gecov",
            "--seed",
            "7",
            "--samples",
            "300",
            "--out",
            "b.csv",
        ],
        p,
    );
    ok(
        &[
            "simulate",
            "--spec",
            "loop2d-gecov",
            "--seed",
            "8",
            "--samples",
            "300",
            "--out",
            "c.csv",
        ],
        p,
    );
    let a = std::fs::read(p.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(p.join("b.csv")).unwrap());
    assert_ne!(a, std::fs::read(p.join("c.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 300);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &[
            "simulate",
            "--spec",
            "loop2d-eucov",
            "--seed",
            "5",
            "--samples",
            "50",
            "--out",
            "a.csv",
        ],
        p,
    );
    let out = Command::new(env!("CARGO_BIN_EXE_pgpca"))
        .args([
            "simulate",
            "--spec",
            "loop2d-eucov",
            "--samples",
            "50",
            "--out",
            "b.csv",
        ])
        .current_dir(p)
        .env("PGPCA_SEED", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(p.join("a.csv")).unwrap(),
        std::fs::read(p.join("b.csv")).unwrap()
    );
}

#[test]
fn fit_round_trip_with_monotone_trace() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &[
            "simulate",
            "--spec",
            "loop2d-gecov",
            "--seed",
            "3",
            "--samples",
            "800",
            "--out",
            "a.csv",
            "--header",
        ],
        p,
    );
    ok(
        &[
            "fit",
            "--data",
            "a.csv",
            "--manifold",
            "ellipse",
            "--coords",
            "gecov",
            "--dim",
            "2",
            "--landmarks",
            "60",
            "--iters",
            "10",
            "--seed",
            "1",
            "--out",
            "model.json",
            "--report",
            "report.json",
        ],
        p,
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
    let trace: Vec<f64> = report["elbo_trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(trace.len() >= 2);
    for w in trace.windows(2) {
        assert!(
            w[1] >= w[0] - 1e-9 * w[0].abs(),
            "trace decreased: {trace:?}"
        );
    }
    let out = ok(&["loglik", "--model", "model.json", "--data", "a.csv"], p);
    let ll: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let last = *trace.last().unwrap();
    assert!((ll["log_likelihood"].as_f64().unwrap() - last).abs() <= 1e-9 * last.abs());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &[
            "simulate",
            "--spec",
            "torus-uniang-gecov",
            "--seed",
            "2",
            "--samples",
            "1000",
            "--out",
            "a.csv",
        ],
        p,
    );
    for (threads, out) in [("1", "m1.json"), ("3", "m3.json")] {
        ok(
            &[
                "--threads",
                threads,
                "fit",
                "--data",
                "a.csv",
                "--manifold",
                "torus",
                "--dim",
                "3",
                "--landmarks",
                "49",
                "--iters",
                "4",
                "--out",
                out,
            ],
            p,
        );
    }
    assert_eq!(
        std::fs::read(p.join("m1.json")).unwrap(),
        std::fs::read(p.join("m3.json")).unwrap()
    );
}

#[test]
fn ppca_and_manifold_fitting() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &[
            "simulate",
            "--spec",
            "loop10d-gecov",
            "--seed",
            "4",
            "--samples",
            "600",
            "--out",
            "a.csv",
        ],
        p,
    );
    ok(
        &[
            "fit-manifold",
            "--data",
            "a.csv",
            "--knots",
            "6",
            "--seed",
            "1",
            "--out",
            "loop.json",
        ],
        p,
    );
    ok(
        &[
            "ppca",
            "--data",
            "a.csv",
            "--dim",
            "3",
            "--out",
            "ppca.json",
        ],
        p,
    );
    let out = ok(
        &[
            "loglik",
            "--model",
            "ppca.json",
            "--data",
            "a.csv",
            "--per-sample",
            "ll.csv",
        ],
        p,
    );
    let ll: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(ll["samples"].as_u64(), Some(600));
    assert_eq!(
        std::fs::read_to_string(p.join("ll.csv"))
            .unwrap()
            .lines()
            .count(),
        600
    );
    ok(
        &[
            "fit",
            "--data",
            "a.csv",
            "--manifold",
            "loop.json",
            "--dim",
            "2",
            "--landmarks",
            "40",
            "--iters",
            "3",
            "--out",
            "m.json",
        ],
        p,
    );
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("cfg.json"),
        r#"{"spec": "loop2d-eucov", "seed": 11, "samples": 40}"#,
    )
    .unwrap();
    ok(&["--config", "cfg.json", "simulate", "--out", "a.csv"], p);
    ok(
        &[
            "simulate",
            "--spec",
            "loop2d-eucov",
            "--seed",
            "11",
            "--samples",
            "40",
            "--out",
            "b.csv",
        ],
        p,
    );
    assert_eq!(
        std::fs::read(p.join("a.csv")).unwrap(),
        std::fs::read(p.join("b.csv")).unwrap()
    );
    ok(
        &[
            "--config", "cfg.json", "simulate", "--seed", "12", "--out", "c.csv",
        ],
        p,
    );
    assert_ne!(
        std::fs::read(p.join("a.csv")).unwrap(),
        std::fs::read(p.join("c.csv")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(pgpca(&["fit"], p).status.code(), Some(1));
    assert_eq!(
        pgpca(&["simulate", "--spec", "nope", "--out", "a.csv"], p)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(pgpca(&["reproduce", "table9"], p).status.code(), Some(1));
    std::fs::write(p.join("bad.csv"), "1,2\n3\n").unwrap();
    let out = pgpca(
        &[
            "fit",
            "--data",
            "bad.csv",
            "--manifold",
            "ellipse",
            "--out",
            "m.json",
        ],
        p,
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        pgpca(
            &["loglik", "--model", "missing.json", "--data", "bad.csv"],
            p
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(pgpca(&["--help"], p).status.code(), Some(0));
}
