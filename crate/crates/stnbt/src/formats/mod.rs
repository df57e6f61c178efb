//! Artifact formats. Every writer is deterministic: the same input always
//! yields the same bytes.

pub mod bt_xml;
pub mod svg;

use std::fmt::Write;

use serde::Serialize;
use stnbt_core::causal::{analyze, CausalResult};
use stnbt_core::executor::TraceRecord;
use stnbt_core::pddl::{Problem, TemporalPlan};
use stnbt_core::simple_plan::{induced_simple_plan, state_sequence};
use stnbt_core::stn::Stn;
use stnbt_core::time::SecsDisplay;

/// `TIME: (NAME ARGS...)  [DURATION]`, three decimals, one step per line.
pub fn render_plan(plan: &TemporalPlan) -> String {
    let mut s = String::new();
    for st in &plan.steps {
        let _ = writeln!(
            s,
            "{}: {}  [{}]",
            SecsDisplay(st.start),
            st.action.signature,
            SecsDisplay(st.duration)
        );
    }
    s
}

pub fn stn_to_json(g: &Stn) -> String {
    let mut s = serde_json::to_string_pretty(g).expect("STN serialises");
    s.push('\n');
    s
}

pub fn stn_from_json(text: &str) -> Result<Stn, serde_json::Error> {
    serde_json::from_str(text)
}

/// One JSON object per line: `{"clock_ms":..,"node":..,"event":..}` plus
/// `action` on dispatch and completion events.
pub fn trace_jsonl(trace: &[TraceRecord]) -> String {
    let mut s = String::new();
    for r in trace {
        s.push_str(&serde_json::to_string(r).expect("trace record serialises"));
        s.push('\n');
    }
    s
}

pub fn parse_trace_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Serialize)]
struct CausalEntry {
    step: String,
    supporters: Vec<String>,
    threats: Vec<String>,
}

/// Supporters and threats of every simple-plan step, with steps named by
/// their display form.
pub fn causal_json(problem: &Problem, plan: &TemporalPlan) -> String {
    let sp = induced_simple_plan(plan, problem);
    let xs = state_sequence(problem, &sp);
    let name = |i: usize| sp.steps[i].to_string();
    let entries: Vec<CausalEntry> = analyze(&sp, &xs)
        .into_iter()
        .map(|r: CausalResult| CausalEntry {
            step: name(r.step),
            supporters: r.supporters.iter().map(|&i| name(i)).collect(),
            threats: r.threats.iter().map(|&i| name(i)).collect(),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&entries).expect("causal entries serialise");
    s.push('\n');
    s
}
