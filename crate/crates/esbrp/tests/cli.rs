use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn esbrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esbrp")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_writes_every_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let (sol, trace, costs, log) = (
        dir.path().join("s.toml"),
        dir.path().join("t.csv"),
        dir.path().join("c.csv"),
        dir.path().join("l.csv"),
    );
    let out = esbrp(&[
        "solve", "fixture:one-stop", "--exact", "--out", p(&sol), "--trace", p(&trace), "--costs", p(&costs), "--log", p(&log),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&trace).unwrap().starts_with("route,visit,node"));
    assert!(fs::read_to_string(&costs).unwrap().contains("total"));
    assert!(fs::read_to_string(&log).unwrap().contains("proven_optimal"));

    let checked = esbrp(&["check", "fixture:one-stop", "--solution", p(&sol)]);
    assert_eq!(code(&checked), 0);
}

#[test]
fn check_rejects_a_tampered_solution() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("s.toml");
    assert_eq!(code(&esbrp(&["solve", "fixture:fourteen-node", "--out", p(&sol)])), 0);
    let text = fs::read_to_string(&sol).unwrap();
    // Drop stop 1 from the route that serves it.
    let tampered = text.replace("visits = [0, 1, ", "visits = [0, ");
    assert_ne!(tampered, text);
    fs::write(&sol, tampered).unwrap();
    let out = esbrp(&["check", "fixture:fourteen-node", "--solution", p(&sol)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("stop coverage"));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(code(&esbrp(&["solve", "/no/such/file.toml"])), 2);
    assert_eq!(code(&esbrp(&["solve", "fixture:nothing"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "format_version = 1\nspeed = 3\n").unwrap();
    let out = esbrp(&["check", p(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn infeasible_solve_exits_with_one() {
    assert_eq!(code(&esbrp(&["solve", "fixture:full-infeasible", "--charge", "full"])), 1);
    assert_eq!(code(&esbrp(&["solve", "fixture:full-infeasible", "--charge", "partial"])), 0);
}

#[test]
fn battery_sweep_bottoms_out_at_75() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = esbrp(&["sweep-battery", "fixture:fourteen-node", "--out", p(&csv)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("lowest total at 75 kWh"));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 6);
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.toml"), dir.path().join("b.toml"));
    for f in [&a, &b] {
        assert_eq!(code(&esbrp(&["gen", "--stops", "5", "--seed", "11", "--out", p(f)])), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(code(&esbrp(&["check", p(&a)])), 0);
}

#[test]
fn emit_lp_and_preprocess_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let (lp, stats, pre) = (dir.path().join("m.lp"), dir.path().join("s.csv"), dir.path().join("p.csv"));
    assert_eq!(code(&esbrp(&["emit-lp", "fixture:one-stop", "--out", p(&lp), "--stats", p(&stats)])), 0);
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.contains("Minimize") && text.trim_end().ends_with("End"));
    assert!(fs::read_to_string(&stats).unwrap().starts_with("section,key,value"));
    assert_eq!(code(&esbrp(&["preprocess", "fixture:fourteen-node", "--out", p(&pre)])), 0);
    assert!(fs::read_to_string(&pre).unwrap().starts_with("type,rule,removed_count"));
}
