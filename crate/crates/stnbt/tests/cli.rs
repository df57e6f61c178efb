use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stnbt::formats::{stn_from_json, stn_to_json};
use stnbt_core::stn::{LinkKind, Stn};
use tempfile::TempDir;

fn stnbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stnbt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes the matchcellar files to `dir` and returns their paths.
fn matchcellar_files(dir: &Path) -> [String; 3] {
    assert_eq!(code(&stnbt(&["fixtures", "matchcellar", "--out", p(dir)])), 0);
    ["domain.pddl", "problem.pddl", "plan.txt"].map(|f| dir.join(f).to_str().unwrap().to_string())
}

#[test]
fn compile_writes_four_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = stnbt(&["compile", "--fixture", "matchcellar", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["bt.dot", "bt.xml", "stn.dot", "stn.json"]);
}

#[test]
fn compile_from_files_matches_fixture() {
    let tmp = TempDir::new().unwrap();
    let [d, pr, pl] = matchcellar_files(tmp.path());
    let a = stnbt(&[
        "compile",
        "--domain",
        &d,
        "--problem",
        &pr,
        "--plan",
        &pl,
        "--emit",
        "bt.xml",
    ]);
    let b = stnbt(&["compile", "--fixture", "matchcellar", "--emit", "bt.xml"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compile_without_out_prints_outline() {
    let o = stnbt(&["compile", "--fixture", "matchcellar"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("PARALLEL"), "{}", stdout(&o));
}

#[test]
fn missing_file_exits_2() {
    let o = stnbt(&[
        "compile",
        "--domain",
        "/no/d.pddl",
        "--problem",
        "/no/p.pddl",
        "--plan",
        "/no/plan.txt",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/no/d.pddl"));
}

#[test]
fn inconsistent_stn_in_exits_2() {
    let tmp = TempDir::new().unwrap();
    let o = stnbt(&["compile", "--fixture", "matchcellar", "--emit", "stn.json"]);
    let mut g = stn_from_json(&stdout(&o)).unwrap();
    // an action that must end no later than it starts
    let (s, e) = (Stn::start_node(0), Stn::end_node(0));
    g.add_link(e, s, Some(0), None, LinkKind::Causal);
    let path = tmp.path().join("bad.json");
    fs::write(&path, stn_to_json(&g)).unwrap();
    let o = stnbt(&["compile", "--stn-in", p(&path)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("negative cycle"), "{}", stderr(&o));
}

#[test]
fn consistent_stn_in_round_trips() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("stn.json");
    fs::write(
        &path,
        stdout(&stnbt(&["compile", "--fixture", "assembly", "--emit", "stn.json"])),
    )
    .unwrap();
    let a = stnbt(&["compile", "--stn-in", p(&path), "--emit", "bt.xml"]);
    let b = stnbt(&["compile", "--fixture", "assembly", "--emit", "bt.xml"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validate_verdicts() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&stnbt(&["validate", "--fixture", "matchcellar"])), 0);

    let [d, pr, pl] = matchcellar_files(tmp.path());
    let broken: String = fs::read_to_string(&pl)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("(light_match match2)"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&pl, broken).unwrap();
    let o = stnbt(&["validate", "--domain", &d, "--problem", &pr, "--plan", &pl]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("INVALID: "), "{}", stdout(&o));
    let j = stnbt(&["validate", "--domain", &d, "--problem", &pr, "--plan", &pl, "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["valid"], false);
}

#[test]
fn empty_plan_and_goal_is_valid() {
    let tmp = TempDir::new().unwrap();
    let [d, pr, pl] = matchcellar_files(tmp.path());
    let problem = fs::read_to_string(&pr).unwrap();
    let goal_at = problem.find("(:goal").unwrap();
    fs::write(&pr, format!("{}(:goal (and)))\n", &problem[..goal_at])).unwrap();
    fs::write(&pl, "").unwrap();
    let o = stnbt(&["validate", "--domain", &d, "--problem", &pr, "--plan", &pl]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let o = stnbt(&["execute", "--domain", &d, "--problem", &pr, "--plan", &pl]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn execute_reports_and_emits() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = stnbt(&[
        "execute",
        "--fixture",
        "matchcellar",
        "--out",
        p(&out),
        "--emit",
        "trace.jsonl",
        "--emit",
        "gantt.svg",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("status: SUCCESS"));
    assert!(stdout(&o).contains("makespan: 10.002"));
    assert!(fs::read_to_string(out.join("gantt.svg")).unwrap().starts_with("<svg"));
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert_eq!(trace.matches("\"event\":\"dispatch\"").count(), 4);
}

#[test]
fn execute_failure_exits_1() {
    let tmp = TempDir::new().unwrap();
    let dur = tmp.path().join("d.json");
    fs::write(&dur, r#"{"(mend_fuse fuse1 match1)": {"kind": "fail"}}"#).unwrap();
    let o = stnbt(&["execute", "--fixture", "matchcellar", "--durations", p(&dur), "--json"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "FAILURE");
}

#[test]
fn invalid_plan_needs_force() {
    let tmp = TempDir::new().unwrap();
    let [d, pr, pl] = matchcellar_files(tmp.path());
    let text = fs::read_to_string(&pl)
        .unwrap()
        .replace("(light_match match2)", "(light_match match1)");
    fs::write(&pl, text).unwrap();
    let args = ["execute", "--domain", &d, "--problem", &pr, "--plan", &pl];
    assert_eq!(code(&stnbt(&args)), 1);
    let mut forced = args.to_vec();
    forced.push("--force");
    let o = stnbt(&forced);
    assert_ne!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn wall_clock_execution() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("g");
    let gen = [
        "generate",
        "--seed",
        "3",
        "--min-duration-ms",
        "20",
        "--max-duration-ms",
        "40",
        "--out",
        p(&dir),
    ];
    assert_eq!(code(&stnbt(&gen)), 0);
    let f = |n: &str| dir.join(n).to_str().unwrap().to_string();
    let (d, pr, pl) = (f("domain.pddl"), f("problem.pddl"), f("plan.txt"));
    let base = [
        "execute",
        "--domain",
        &d,
        "--problem",
        &pr,
        "--plan",
        &pl,
        "--flexible",
        "--json",
    ];
    let virt = stnbt(&base);
    let mut wall_args = base.to_vec();
    wall_args.extend(["--clock", "wall", "--tick-ms", "2"]);
    let wall = stnbt(&wall_args);
    assert_eq!(code(&virt), 0, "{}", stdout(&virt));
    assert_eq!(code(&wall), 0, "{}", stdout(&wall));
    let ms = |o: &Output| {
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["makespan_ms"]
            .as_i64()
            .unwrap()
    };
    assert!(ms(&wall) >= ms(&virt));
}

#[test]
fn generate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = stnbt(&["generate", "--seed", "1", "--count", "3", "--mutate", "--out", p(dir)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for sub in ["0000", "0001", "0002", "0000/mutant"] {
        for f in ["domain.pddl", "problem.pddl", "plan.txt"] {
            let x = fs::read(a.join(sub).join(f)).unwrap();
            assert_eq!(x, fs::read(b.join(sub).join(f)).unwrap(), "{sub}/{f}");
        }
    }
    let v = |sub: &str| {
        let f = |n: &str| a.join(sub).join(n).to_str().unwrap().to_string();
        code(&stnbt(&[
            "validate",
            "--domain",
            &f("domain.pddl"),
            "--problem",
            &f("problem.pddl"),
            "--plan",
            &f("plan.txt"),
        ]))
    };
    assert_eq!(v("0000"), 0);
    assert_eq!(v("0001"), 0);
}

#[test]
fn generate_zero_length_is_empty_plan() {
    let tmp = TempDir::new().unwrap();
    let o = stnbt(&["generate", "--length", "0", "--out", p(tmp.path())]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(tmp.path().join("plan.txt")).unwrap(), "");
}

#[test]
fn bench_table() {
    let o = stnbt(&["bench", "--fixture", "matchcellar", "--runs", "4"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let mut lines = s.lines();
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["Mean", "Stdev", "Median", "Max", "Min"]);
    let row: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(row, ["10.002", "0.000", "10.002", "10.002", "10.002"]);
}

#[test]
fn bench_single_run_is_degenerate() {
    let tmp = TempDir::new().unwrap();
    let dur = tmp.path().join("d.json");
    fs::write(&dur, r#"{"move": {"kind": "uniform", "lo": 18000, "hi": 22000}}"#).unwrap();
    let o = stnbt(&[
        "bench",
        "--fixture",
        "assembly",
        "--flexible",
        "--durations",
        p(&dur),
        "--runs",
        "1",
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let s = &v["stats"];
    assert_eq!(s["stdev"], 0.0);
    assert_eq!(s["mean"], s["min"]);
    assert_eq!(s["max"], s["median"]);
    assert_eq!(v["sequential_baseline"], 180.0);
}

#[test]
fn fixtures_listing() {
    let o = stnbt(&["fixtures"]);
    assert_eq!(stdout(&o), "matchcellar\nassembly\n");
    assert_eq!(code(&stnbt(&["fixtures", "nope"])), 2);
}

#[test]
fn compile_is_byte_stable() {
    let a = stnbt(&[
        "compile",
        "--fixture",
        "assembly",
        "--flexible",
        "--emit",
        "stn.dot",
        "--emit",
        "bt.dot",
    ]);
    let b = stnbt(&[
        "compile",
        "--fixture",
        "assembly",
        "--flexible",
        "--emit",
        "stn.dot",
        "--emit",
        "bt.dot",
    ]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}
