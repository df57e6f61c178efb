//! Artifacts for the matchcellar fixture compared byte for byte with the
//! checked-in copies under `tests/golden/`. Regenerate them with
//! `stnbt compile --fixture matchcellar --out tests/golden/matchcellar`
//! (and `execute ... --emit trace.jsonl --emit gantt.svg`) after an
//! intentional change.

use stnbt::formats::{bt_xml, stn_to_json, svg, trace_jsonl};
use stnbt::pipeline::{compile, load_fixture};
use stnbt_core::bt;
use stnbt_core::executor::{run_virtual, ExecConfig, SimulatedPerformer};
use stnbt_core::stn::{self, StnOptions};

fn check(name: &str, got: &str, want: &str) {
    if got != want {
        let line = got
            .lines()
            .zip(want.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
        panic!("{name} differs from the golden copy at {line}");
    }
}

#[test]
fn pinned_artifacts() {
    let inst = load_fixture("matchcellar").unwrap();
    let c = compile(&inst, StnOptions::default(), false).unwrap();
    check(
        "stn.dot",
        &stn::to_dot(&c.stn),
        include_str!("golden/matchcellar/stn.dot"),
    );
    check(
        "stn.json",
        &stn_to_json(&c.stn),
        include_str!("golden/matchcellar/stn.json"),
    );
    check(
        "bt.xml",
        &bt_xml::to_xml(&c.bt),
        include_str!("golden/matchcellar/bt.xml"),
    );
    check("bt.dot", &bt::to_dot(&c.bt), include_str!("golden/matchcellar/bt.dot"));

    let r = run_virtual(
        &c.bt,
        &inst.problem,
        SimulatedPerformer::planned(),
        ExecConfig::default(),
    );
    check(
        "trace.jsonl",
        &trace_jsonl(&r.trace),
        include_str!("golden/matchcellar/trace.jsonl"),
    );
    check(
        "gantt.svg",
        &svg::gantt_svg(&r.actions),
        include_str!("golden/matchcellar/gantt.svg"),
    );
}

#[test]
fn flexible_artifacts() {
    let inst = load_fixture("matchcellar").unwrap();
    let c = compile(&inst, StnOptions { flexible: true }, false).unwrap();
    check(
        "stn.dot",
        &stn::to_dot(&c.stn),
        include_str!("golden/matchcellar-flexible/stn.dot"),
    );
    check(
        "stn.json",
        &stn_to_json(&c.stn),
        include_str!("golden/matchcellar-flexible/stn.json"),
    );
    check(
        "bt.xml",
        &bt_xml::to_xml(&c.bt),
        include_str!("golden/matchcellar-flexible/bt.xml"),
    );
    check(
        "bt.dot",
        &bt::to_dot(&c.bt),
        include_str!("golden/matchcellar-flexible/bt.dot"),
    );
}

#[test]
fn flexible_differs_only_in_anchor_bounds() {
    let pinned = include_str!("golden/matchcellar/stn.dot");
    let flex = include_str!("golden/matchcellar-flexible/stn.dot");
    let diff: Vec<(&str, &str)> = pinned.lines().zip(flex.lines()).filter(|(a, b)| a != b).collect();
    assert_eq!(diff.len(), 4, "one root link per action");
    for (a, b) in diff {
        assert!(a.starts_with("  n0 -> ") && b.starts_with("  n0 -> "));
        assert!(b.contains(",inf]"), "{b}");
    }
}
