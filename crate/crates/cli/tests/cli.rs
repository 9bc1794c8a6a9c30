//! Command-line behaviour: outputs, headers and exit codes.

use std::process::Command;

fn nlfeti() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlfeti"))
}

#[test]
fn solve_writes_a_solution_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let status = nlfeti()
        .args(["solve", "--solver", "both", "--set", "mesh.n=16", "--set", "kernel.delta=0.125", "--out"])
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("node,x,y,u"));
    // (n + 2 δ n + 1)² nodes: 16 cells plus a 2-cell layer on each side.
    assert_eq!(text.lines().count(), 1 + 21 * 21);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "kernel.family = peridynamic\nkernel.delta = 0.3\nmesh.n = 8\n").unwrap();
    let out = dir.path().join("u.csv");
    // The file alone is invalid (δ·n = 2.4); the flag repairs it.
    let status = nlfeti()
        .args(["solve", "--config"])
        .arg(&cfg)
        .args(["--set", "kernel.delta=0.25", "--out"])
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let header = std::fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "node,x,y,u1,u2");
}

#[test]
fn invalid_configuration_exits_with_code_two() {
    let out = nlfeti().args(["solve", "--set", "mesh.n=10", "--set", "kernel.delta=0.125"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn non_convergence_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let status = nlfeti()
        .args(["solve", "--solver", "cg", "--set", "cg.maxit=2", "--set", "mesh.n=16", "--set", "kernel.delta=0.125"])
        .arg("--out")
        .arg(dir.path().join("u.csv"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn study_and_subdivision_dumps_have_stable_headers() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("study.csv");
    let status = nlfeti()
        .args(["study", "--set", "study=fixed_horizon", "--set", "kernel.delta=0.25", "--set", "study.rungs=2"])
        .args(["--set", "solver=both", "--out"])
        .arg(&csv)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("study,kernel,K,h,delta,solver,iterations,residual,l2_error,roc,seconds"));
    assert_eq!(text.lines().count(), 5);

    let dump = dir.path().join("sub.csv");
    let status = nlfeti()
        .args(["dump-subdivision", "--set", "mesh.n=8", "--set", "kernel.delta=0.25", "--out"])
        .arg(&dump)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(text.lines().next(), Some("entity,id,x,y,owner,subdomains,zeta"));
}

#[test]
fn matrix_market_export_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let status = nlfeti()
        .args(["solve", "--solver", "direct", "--set", "mesh.n=8", "--set", "kernel.delta=0.25", "--export-mm"])
        .arg(dir.path())
        .arg("--out")
        .arg(dir.path().join("u.csv"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    for f in ["A.mtx", "B.mtx", "f.mtx", "g.mtx", "mesh.txt"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}
