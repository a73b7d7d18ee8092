use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use rg_core::{parse_strict, GameDescription};
use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect()
}

fn rg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rg")).args(args).env_remove("RG_BUDGET").output().unwrap()
}

fn rg_with_input(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rg"))
        .args(args)
        .env_remove("RG_BUDGET")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn path(name: &str) -> String {
    corpus(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn parse_file(p: &std::path::Path) -> GameDescription {
    parse_strict(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn check_exit_codes() {
    assert_eq!(rg(&["check", &path("minimal.rg"), "--proper"]).status.code(), Some(0));
    assert_eq!(rg(&["check", "missing.rg"]).status.code(), Some(2));

    let o = rg(&["--json", "check", &path("neg/keeper_two_moves.rg"), "--proper"]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let results = report["proper"]["results"].as_array().unwrap();
    let failed: Vec<&str> =
        results.iter().filter(|r| r["verdict"] == "fail").map(|r| r["condition"].as_str().unwrap()).collect();
    assert_eq!(failed, ["4"]);
}

#[test]
fn check_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rg");
    std::fs::write(&bad, "type Player = {x}; begin, end: player = nobody;").unwrap();
    let o = rg(&["--json", "check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["ok"], false);
    assert!(!report["diagnostics"].as_array().unwrap().is_empty());
}

#[test]
fn optimize_without_passes_reparses_identically() {
    for name in ["minimal.rg", "tictactoe.rg", "coinflip.rg", "hiddencoin.rg", "turing_n4.rg", "neg/cycle.rg"] {
        let o = rg(&["optimize", &path(name), "--passes", "none"]);
        assert!(o.status.success(), "{name}");
        assert_eq!(parse_strict(&stdout(&o)).unwrap(), parse_file(&corpus(name)), "{name}");
    }
}

#[test]
fn optimize_writes_output_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ttt.rg");
    let snaps = dir.path().join("snaps");
    let o = rg(&[
        "optimize",
        &path("tictactoe.rg"),
        "--out",
        out.to_str().unwrap(),
        "--emit-snapshots",
        snaps.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let stats: Vec<Value> =
        String::from_utf8(o.stderr).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    for key in ["pass", "nodes_before", "nodes_after", "edges_before", "edges_after", "state_size_bits"] {
        assert!(stats.iter().all(|s| s.get(key).is_some()), "{key}");
    }
    let applied = stats.iter().filter(|s| s["changed"] == true).count();

    let mut files: Vec<PathBuf> = std::fs::read_dir(&snaps).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), applied);
    assert!(files[0].file_name().unwrap().to_str().unwrap().starts_with("01_"));
    for f in &files {
        parse_file(f);
    }

    let expanded = &stats[0];
    let after = parse_file(&out);
    assert!(after.nodes().len() as u64 <= expanded["nodes_before"].as_u64().unwrap());
    assert!((after.edges.len() as u64) < expanded["edges_before"].as_u64().unwrap());

    let perft = rg(&["perft", out.to_str().unwrap(), "5"]);
    assert_eq!(stdout(&perft).trim(), "9 72 504 3024 15120");
}

#[test]
fn optimize_rejects_unknown_passes() {
    let o = rg(&["optimize", &path("minimal.rg"), "--passes", "NoSuchPass"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn perft_tictactoe() {
    let o = rg(&["perft", &path("tictactoe.rg"), "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "9 72 504 3024 15120");
}

#[test]
fn budget_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_rg"))
        .args(["perft", &path("tictactoe.rg"), "2"])
        .env("RG_BUDGET", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn dot_minimal() {
    let o = rg(&["dot", &path("minimal.rg")]);
    assert!(o.status.success());
    let text = stdout(&o);
    let nodes = text.lines().filter(|l| l.contains("shape=doublecircle")).count();
    let edges: Vec<&str> = text.lines().filter(|l| l.contains("->")).collect();
    assert_eq!(nodes, 2);
    assert_eq!(edges.len(), 1);
    assert!(edges[0].contains("label=\"player = keeper\""));
}

#[test]
fn bench_is_deterministic() {
    let args = ["bench", &path("tictactoe.rg"), "--playouts", "1000", "--seed", "1"];
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    let a = strip(rg(&args));
    let b = strip(rg(&args));
    assert_eq!(a, b);
    assert_eq!(a["playouts"], 1000);

    let mut exact: Vec<&str> = args.to_vec();
    exact.push("--no-timing");
    assert_eq!(stdout(&rg(&exact)), stdout(&rg(&exact)));
}

#[test]
fn bench_table_and_compare() {
    let o = rg(&["bench", &path("coinflip.rg"), "--playouts", "200", "--format", "table"]);
    assert!(stdout(&o).contains("playouts        200"));
    let o = rg(&["bench", &path("coinflip.rg"), "--playouts", "200", "--compare"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["raw"]["histogram"], v["optimized"]["histogram"]);
}

#[test]
fn play_two_humans_reaches_the_end() {
    let o = rg_with_input(&["play", &path("tictactoe.rg")], &"1\n".repeat(9));
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("game over"));
    assert!(text.matches("> ").count() <= 9);
}

#[test]
fn play_random_replay_is_deterministic() {
    let args = ["play", &path("tictactoe.rg"), "--seat", "x=random", "--seat", "o=random", "--seed", "7"];
    let a = rg_with_input(&args, "");
    let b = rg_with_input(&args, "");
    assert!(a.status.success());
    assert!(stdout(&a).contains("game over"));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn play_hides_the_placement_from_the_guesser() {
    for seed in 0..20 {
        let seed = seed.to_string();
        let o = rg_with_input(&["play", &path("hiddencoin.rg"), "--seat", "hider=random", "--seed", &seed], "1\n");
        let text = stdout(&o);
        let seen: Vec<&str> = text.lines().filter(|l| l.starts_with("[guesser] hider:")).collect();
        assert_eq!(seen, ["[guesser] hider: hidden"]);
    }
}

#[test]
fn play_reprompts_and_survives_eof() {
    let o = rg_with_input(&["play", &path("tictactoe.rg")], "zero\n42\n1\n");
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("enter a number from 1 to 9").count(), 2);
    assert!(text.contains("input closed"));
    assert!(!text.contains("game over"));
}

#[test]
fn play_rejects_unknown_seats() {
    let o = rg_with_input(&["play", &path("tictactoe.rg"), "--seat", "z=random"], "");
    assert_eq!(o.status.code(), Some(1));
}
