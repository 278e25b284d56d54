use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stratswitch::cert::PolytopeCert;
use stratswitch::fixtures;
use stratswitch::model::write_game;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stratswitch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Workspace {
        let ws = Workspace { dir: tempfile::tempdir().unwrap() };
        let (g, s) = fixtures::star();
        ws.write("star.json", &write_game(&g, &s));
        ws.write("basis.txt", "1,0,0\n0,1,0\n0,0,1\n");
        ws.write("cands.txt", "1,0,0\n0,1,0\n0,0,1\n1/3,1/3,1/3\n");
        ws.write("shift.json", r#"{"mode":"scripted","events":[[0,"1,0,0"],[15,"0,0,1"]]}"#);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }

    fn certify(&self, cands: &str, out: &str, extra: &[&str]) -> Output {
        let game = self.p("star.json");
        let mut args = vec!["certify", "--game", game.as_str(), "--candidates"];
        let c = self.p(cands);
        let o = self.p(out);
        args.extend([c.as_str(), "--out", o.as_str()]);
        args.extend(extra);
        run(&args)
    }
}

#[test]
fn validate_reports_findings() {
    let ws = Workspace::new();
    let o = run(&["validate", "--game", &ws.p("star.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ok: 7 states"));
    let mut value: serde_json::Value = serde_json::from_str(&ws.read("star.json")).unwrap();
    let list = value["transitions"].as_array_mut().unwrap();
    list.retain(|t| t[0] != "a1");
    ws.write("broken.json", &serde_json::to_string(&value).unwrap());
    let o = run(&["validate", "--game", &ws.p("broken.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("INCOMPLETE_TRANSITION"), "{}", stdout(&o));
}

#[test]
fn synth_prints_strategy_and_flags_unrealizable() {
    let ws = Workspace::new();
    let o = run(&["synth", "--game", &ws.p("star.json"), "--p", "1,0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["basis_costs"], serde_json::json!(["1", "4", "9"]));
    let (mut g, s) = fixtures::star_with_pit();
    g.initial = g.state_index("pit").unwrap();
    ws.write("pit.json", &write_game(&g, &s));
    let o = run(&["synth", "--game", &ws.p("pit.json"), "--p", "1,0,0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["synth", "--game", &ws.p("star.json"), "--p", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn certify_report_and_gaps() {
    let ws = Workspace::new();
    let o = ws.certify("basis.txt", "c0.json", &[]);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout(&o);
    assert!(report.contains("epsilon_min: 0\n"), "{report}");
    assert_eq!(report.matches("nonempty true").count(), 3);

    let o = ws.certify("basis.txt", "c2.json", &["--epsilon", "2", "--grid", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let cert = PolytopeCert::from_json(&ws.read("c2.json")).unwrap();
    assert_eq!(cert.gaps, cert.coverage_gaps(4));
    assert!(stdout(&o).contains(&format!("gaps at grid 4: {}\n", cert.gaps.len())));

    let o = ws.certify("missing.txt", "c.json", &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn certify_expansion_reports_progress() {
    let ws = Workspace::new();
    let o = ws.certify("basis.txt", "ce.json", &["--epsilon", "1", "--grid", "4", "--expand", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("expansion: rounds "), "{text}");
    let cert = PolytopeCert::from_json(&ws.read("ce.json")).unwrap();
    assert!(cert.len() >= 3);
}

#[test]
fn bounds_lines() {
    let ws = Workspace::new();
    ws.certify("basis.txt", "c0.json", &[]);
    ws.certify("basis.txt", "c2.json", &["--epsilon", "2"]);
    let first = |o: Output| stdout(&o).lines().next().unwrap_or_default().to_string();
    assert_eq!(
        first(run(&["bounds", "--cert", &ws.p("c2.json"), "--p", "0.6,0.3,0.1"])),
        "strategy 1, lower 7/10, upper 27/10"
    );
    assert_eq!(first(run(&["bounds", "--cert", &ws.p("c0.json"), "--p", "1,0,0"])), "strategy 1, lower 1, upper 1");
    assert_eq!(
        first(run(&["bounds", "--cert", &ws.p("c0.json"), "--p", "0.5,0.5,0"])),
        "no polytope — dominating strategy 1, cost 5/2"
    );
    let o = run(&["bounds", "--cert", &ws.p("c0.json"), "--p", "0.5,x,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn partition_rows_on_grid() {
    let ws = Workspace::new();
    ws.certify("basis.txt", "c0.json", &[]);
    let o = run(&["export-partition", "--cert", &ws.p("c0.json"), "--grid", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.contains(&"1,0,0,1,true,1"));
    assert!(rows.contains(&"0,1,0,2,true,2"));
    assert!(rows.contains(&"0,0,1,3,true,3"));
}

fn simulate(ws: &Workspace, out: &Path, horizon: &str, stream: &str) -> Output {
    run(&[
        "simulate",
        "--game",
        &ws.p("star.json"),
        "--cert",
        &ws.p("c4.json"),
        "--stream",
        stream,
        "--adversary",
        "uniform:3",
        "--horizon",
        horizon,
        "--run",
        "switching,uninformed,oracle",
        "--out-dir",
        &out.to_string_lossy(),
    ])
}

#[test]
fn simulate_writes_traces_and_metrics() {
    let ws = Workspace::new();
    ws.certify("cands.txt", "c4.json", &[]);
    let out = ws.path("run");
    let o = simulate(&ws, &out, "120", &ws.p("shift.json"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let rows: Vec<Vec<&str>> = metrics.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let total = |name: &str| -> stratswitch::rational::Rational {
        rows.iter().find(|r| r[0] == name).unwrap()[4].parse().unwrap()
    };
    assert!(total("oracle") <= total("switching"));
    assert!(out.join("metrics.json").exists());
    let trace = std::fs::read_to_string(out.join("trace_switching.csv")).unwrap();
    assert_eq!(trace.lines().count(), 121);

    let empty = ws.path("empty");
    let o = simulate(&ws, &empty, "0", &ws.p("shift.json"));
    assert_eq!(o.status.code(), Some(0));
    let trace = std::fs::read_to_string(empty.join("trace_oracle.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1);

    let o = simulate(&ws, &ws.path("x"), "10", &ws.p("nope.json"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_rejects_bad_flags() {
    let ws = Workspace::new();
    ws.certify("cands.txt", "c4.json", &[]);
    let o = run(&[
        "simulate",
        "--game",
        &ws.p("star.json"),
        "--cert",
        &ws.p("c4.json"),
        "--stream",
        &ws.p("shift.json"),
        "--horizon",
        "-3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "simulate",
        "--game",
        &ws.p("star.json"),
        "--cert",
        &ws.p("c4.json"),
        "--stream",
        &ws.p("shift.json"),
        "--horizon",
        "5",
        "--adversary",
        "chaos",
    ]);
    assert_eq!(o.status.code(), Some(2));
    // a cert built for another game is rejected
    ws.certify("basis.txt", "c0.json", &[]);
    let (g, s) = fixtures::fork();
    ws.write("fork.json", &write_game(&g, &s));
    let o = run(&[
        "simulate",
        "--game",
        &ws.p("fork.json"),
        "--cert",
        &ws.p("c0.json"),
        "--stream",
        &ws.p("shift.json"),
        "--horizon",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn candidate_file_may_carry_epsilon() {
    let ws = Workspace::new();
    ws.write("cands.json", r#"{"epsilon":"2","candidates":[["1","0","0"],["0","1","0"],["0","0","1"]]}"#);
    let o = ws.certify("cands.json", "cj.json", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(PolytopeCert::from_json(&ws.read("cj.json")).unwrap().epsilon, "2".parse().unwrap());
    let o = ws.certify("cands.json", "cj1.json", &["--epsilon", "1/2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(PolytopeCert::from_json(&ws.read("cj1.json")).unwrap().epsilon, "1/2".parse().unwrap());
    ws.write("bad.json", r#"{"candidates":[["1","0","0"]],"eps":"1"}"#);
    assert_eq!(ws.certify("bad.json", "x.json", &[]).status.code(), Some(2));
}
