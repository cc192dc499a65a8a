use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenforge")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Short episodes keep every command quick.
fn short_config(dir: &Path) -> PathBuf {
    let path = dir.join("short.cfg");
    std::fs::write(&path, "# quick runs\nmax_decisions = 8\nstates = 120\nmemory = 100\n").unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn logs_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".log"))
        .collect();
    names.sort();
    names
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&scenforge(&[])), 2);
    assert_eq!(code(&scenforge(&["train", "--reward", "speed"])), 2);
    assert_eq!(code(&scenforge(&["baseline", "--route", "R9"])), 2);
    assert_eq!(code(&scenforge(&["eval", "--runs", "3"])), 2);
    assert_eq!(code(&scenforge(&["baseline", "--parallel", "0"])), 2);
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    let out = scenforge(&["baseline", "--config", s(&missing), "--out", s(dir.path())]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "max_decision = 8\n").unwrap();
    assert_eq!(code(&scenforge(&["baseline", "--config", s(&bad)])), 1);

    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a checkpoint").unwrap();
    assert_eq!(code(&scenforge(&["eval", "--checkpoint", s(&junk), "--out", s(dir.path())])), 1);
}

#[test]
fn training_repeats_bit_for_bit_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let train = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = scenforge(&[
            "train", "--config", s(&cfg), "--route", "R1", "--weather", "RD", "--reward", "ttc", "--seed", "7",
            "--out", s(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("observed_states\t120\n"));
        out_dir
    };
    let (a, b) = (train("a"), train("b"));
    for file in ["checkpoint.bin", "training.log", "manifest.txt"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let log = std::fs::read_to_string(a.join("training.log")).unwrap();
    assert!(log.contains("# memory_capacity=100\n") && log.contains("# route=R1\n"));

    let checkpoint = a.join("checkpoint.bin");
    let eval = |name: &str, parallel: &str| {
        let out_dir = dir.path().join(name);
        let out = scenforge(&[
            "eval", "--config", s(&cfg), "--checkpoint", s(&checkpoint), "--runs", "3", "--seed", "40",
            "--parallel", parallel, "--out", s(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (out_dir, stdout(&out))
    };
    let (serial, printed) = eval("eval1", "1");
    let (parallel, _) = eval("eval2", "2");
    assert_eq!(logs_in(&serial), ["run-40.log", "run-41.log", "run-42.log"]);
    assert_eq!(
        std::fs::read_to_string(serial.join("manifest.txt")).unwrap(),
        std::fs::read_to_string(parallel.join("manifest.txt")).unwrap()
    );
    for key in ["#Collision", "CollisionTime", "TTC", "DTO", "Jerk", "Div_API", "Div_Scenario", "UCS", "UNS"] {
        assert!(printed.contains(&format!("{key}\t")), "{key}");
    }
    let summary = std::fs::read_to_string(serial.join("summary.tsv")).unwrap();
    for row in summary.lines().skip(1) {
        let collision: usize = row.split('\t').nth(2).unwrap().parse().unwrap();
        assert!(collision <= 1);
    }
}

#[test]
fn baselines_repeat_and_greedy_records_trials() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let run = |strategy: &str, name: &str| {
        let out_dir = dir.path().join(name);
        let out = scenforge(&[
            "baseline", "--strategy", strategy, "--reward", "dto", "--config", s(&cfg), "--runs", "2", "--out",
            s(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let (a, b) = (run("rs", "rs1"), run("rs", "rs2"));
    assert_eq!(
        std::fs::read_to_string(a.join("manifest.txt")).unwrap(),
        std::fs::read_to_string(b.join("manifest.txt")).unwrap()
    );
    let gs = run("gs", "gs");
    let log = std::fs::read_to_string(gs.join("run-0.log")).unwrap();
    assert!(log.contains("meta|strategy=gs|"));
    let summary = std::fs::read_to_string(gs.join("summary.tsv")).unwrap();
    let trials: usize = summary.lines().nth(1).unwrap().split('\t').next_back().unwrap().parse().unwrap();
    assert!(trials > 0);

    let same = scenforge(&["analyze", s(&a), s(&b)]);
    assert_eq!(code(&same), 0);
    let table = stdout(&same);
    assert_eq!(table.lines().count(), 10);
    for row in table.lines().skip(1) {
        let cells: Vec<&str> = row.split('\t').collect();
        assert!(cells[1] == "0.5000" || cells[1] == "-", "{row}");
    }
}

#[test]
fn replay_reports_divergence_as_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out_dir = dir.path().join("rs");
    let out = scenforge(&["baseline", "--config", s(&cfg), "--runs", "1", "--seed", "5", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0);
    let log = out_dir.join("run-5.log");
    let ok = scenforge(&["replay", s(&log)]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("divergences\t0\n"));

    let text = std::fs::read_to_string(&log).unwrap();
    let tampered = text.replacen("|seed=5|", "|seed=6|", 1);
    assert_ne!(tampered, text);
    std::fs::write(&log, tampered).unwrap();
    assert_eq!(code(&scenforge(&["replay", s(&log)])), 1);

    std::fs::write(&log, text.replacen("schema=1", "schema=2", 1)).unwrap();
    assert_eq!(code(&scenforge(&["analyze", s(&log), s(&log)])), 1);
}
