use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_conic-ma-lab");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn lab(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("CONIC_MA_LAB_THREADS", "1")
        .output()
        .unwrap()
}

fn run(sub: &str, cfg: &Path, out: &Path) -> Output {
    lab(&[
        sub,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ARTIFACTS: [&str; 6] = [
    "trace.csv",
    "energies.csv",
    "geodesics.csv",
    "convergence.json",
    "summary.json",
    "verify.json",
];

#[test]
fn trivial_verify_passes_with_versioned_artifacts() {
    let out = scratch("trivial");
    let o = run("verify", &config("trivial.conf"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ARTIFACTS {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        if name.ends_with(".csv") {
            assert!(text.starts_with("# schema: conic-ma-lab."), "{name}");
        } else {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert!(
                v["schema"].as_str().unwrap().starts_with("conic-ma-lab."),
                "{name}"
            );
        }
    }
    let verify: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert!(verify["checks"].as_array().unwrap().len() >= 12);
    assert_eq!(verify["failed"], 0);
}

#[test]
fn trivial_runs_are_bit_identical() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    assert_eq!(
        run("verify", &config("trivial.conf"), &a).status.code(),
        Some(0)
    );
    let o = Command::new(BIN)
        .args([
            "verify",
            "--config",
            config("trivial.conf").to_str().unwrap(),
        ])
        .args(["--out", b.to_str().unwrap()])
        .env("CONIC_MA_LAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for name in ARTIFACTS {
        let (x, y) = (
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
        );
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn solve_writes_trace_and_summary_only() {
    let out = scratch("solve");
    let o = run("solve", &config("trivial.conf"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("trace.csv").is_file() && out.join("summary.json").is_file());
    assert!(!out.join("verify.json").exists());
}

#[test]
fn infeasible_twist_is_a_config_error() {
    let out = scratch("infeasible");
    let o = run("verify", &config("infeasible.conf"), &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("s = 2 - mu - sum(1 - beta_i) = -0.5"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = scratch("unknown");
    let cfg = dir.join("bad.conf");
    std::fs::write(
        &cfg,
        "geometry.n = 32\ntwist.mu = 0\nsolver.detlas = 1e-1\n",
    )
    .unwrap();
    let o = run("solve", &cfg, &dir);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("solver.detlas"), "{}", stderr(&o));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = Command::new(BIN)
        .args([
            "solve",
            "--config",
            config("trivial.conf").to_str().unwrap(),
        ])
        .env("CONIC_MA_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_needs_artifacts() {
    let empty = scratch("empty");
    let o = lab(&["report", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_tables_and_diff() {
    let (a, b) = (scratch("rep-a"), scratch("rep-b"));
    assert_eq!(
        run("verify", &config("trivial.conf"), &a).status.code(),
        Some(0)
    );
    assert_eq!(
        run("energies", &config("trivial.conf"), &b).status.code(),
        Some(0)
    );

    let one = lab(&["report", a.to_str().unwrap()]);
    assert_eq!(one.status.code(), Some(0));
    let text = String::from_utf8(one.stdout).unwrap();
    assert!(text.contains("## Checks") && text.contains("## Constants"));
    assert!(text.contains("| I/J | 2 (max defect"));

    let two = lab(&["report", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(two.status.code(), Some(0));
    let text = String::from_utf8(two.stdout).unwrap();
    assert!(text.contains(" vs ") && text.contains("| constant | A | B |"));
    assert!(text.contains("| command | verify | energies |"));
}
