//! Simple temporal network built from a plan and its causal analysis.
//!
//! Node ids are fixed: 0 is the root (initial state), action `i` of the plan
//! owns START `2i+1` and END `2i+2`, and the goal node comes last. A link
//! `p -> c` with bounds `[lo, hi]` states `lo <= t_c - t_p <= hi`; `None`
//! stands for an infinite bound.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causal;
use crate::pddl::{ConditionSet, EffectSet, LiteralSet, Problem, TemporalPlan};
use crate::simple_plan::{induced_simple_plan, state_sequence, validate_plan, SimplePlan, StepKind, ValidationReport};
use crate::time::{Millis, SecsDisplay};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    Init,
    Start,
    End,
    Goal,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Init => "INIT",
            NodeKind::Start => "START",
            NodeKind::End => "END",
            NodeKind::Goal => "GOAL",
        }
    }
}

/// Why a link exists. Anchor and duration links encode the plan's timing
/// and are never pruned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Anchor,
    Duration,
    Causal,
    Sink,
}

impl LinkKind {
    pub fn is_temporal(self) -> bool {
        matches!(self, LinkKind::Anchor | LinkKind::Duration)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StnLink {
    pub peer: usize,
    /// `None` is minus infinity.
    pub lower: Option<i64>,
    /// `None` is plus infinity.
    pub upper: Option<i64>,
    pub kind: LinkKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StnNode {
    pub id: usize,
    pub kind: NodeKind,
    /// Planned time of this snap (START at t, END at t + d).
    pub t: Millis,
    /// Planned start of the owning action; together with the signature it
    /// identifies the plan step.
    pub start: Millis,
    pub signature: String,
    pub d: Millis,
    pub conds: ConditionSet,
    /// Over-all condition of the owning action (END nodes only).
    pub overall: ConditionSet,
    pub effs: EffectSet,
    pub inputs: Vec<StnLink>,
    pub outputs: Vec<StnLink>,
}

impl StnNode {
    pub fn label(&self) -> String {
        match self.kind {
            NodeKind::Init | NodeKind::Goal => String::from(self.kind.as_str()),
            _ => format!("{}{}@{}", self.kind.as_str(), self.signature, SecsDisplay(self.t)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stn {
    pub nodes: Vec<StnNode>,
    pub root: usize,
    pub goal: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StnError {
    #[error("plan is not valid: {} needs {} at {} ms", .0.failures[0].step, .0.failures[0].literal, .0.failures[0].time_ms)]
    InvalidPlan(ValidationReport),
    #[error("inconsistent STN: negative cycle through node {node} ({label})")]
    Inconsistent { node: usize, label: String },
    #[error("malformed STN: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StnOptions {
    /// Relax root->START links from `[t, t]` to `[t, inf)`.
    pub flexible: bool,
}

impl Stn {
    pub fn start_node(plan_index: usize) -> usize {
        2 * plan_index + 1
    }

    pub fn end_node(plan_index: usize) -> usize {
        2 * plan_index + 2
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn link(&self, parent: usize, child: usize) -> Option<&StnLink> {
        self.nodes[parent].outputs.iter().find(|l| l.peer == child)
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, &StnLink)> + '_ {
        self.nodes.iter().flat_map(|n| n.outputs.iter().map(move |l| (n.id, l)))
    }

    /// The partner END of a START node and vice versa.
    pub fn partner(&self, id: usize) -> Option<usize> {
        let n = &self.nodes[id];
        match n.kind {
            NodeKind::Start => n.outputs.iter().find(|l| l.kind == LinkKind::Duration).map(|l| l.peer),
            NodeKind::End => n.inputs.iter().find(|l| l.kind == LinkKind::Duration).map(|l| l.peer),
            _ => None,
        }
    }

    /// Adds or replaces the link `parent -> child`.
    pub fn add_link(&mut self, parent: usize, child: usize, lower: Option<i64>, upper: Option<i64>, kind: LinkKind) {
        debug_assert_ne!(parent, child);
        let out = StnLink {
            peer: child,
            lower,
            upper,
            kind,
        };
        let inp = StnLink {
            peer: parent,
            lower,
            upper,
            kind,
        };
        upsert(&mut self.nodes[parent].outputs, out);
        upsert(&mut self.nodes[child].inputs, inp);
    }

    pub fn remove_link(&mut self, parent: usize, child: usize) {
        self.nodes[parent].outputs.retain(|l| l.peer != child);
        self.nodes[child].inputs.retain(|l| l.peer != parent);
    }

    /// Depth-first reachability `from -> ... -> to`, optionally ignoring one
    /// edge.
    pub fn reachable(&self, from: usize, to: usize, skip: Option<(usize, usize)>) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if core::mem::replace(&mut seen[n], true) {
                continue;
            }
            for l in &self.nodes[n].outputs {
                if skip != Some((n, l.peer)) && !seen[l.peer] {
                    stack.push(l.peer);
                }
            }
        }
        false
    }

    /// Checks that link lists are mirrored, ids match positions and there are
    /// no self-loops; used on networks read from outside.
    pub fn check_structure(&self) -> Result<(), StnError> {
        let bad = |m: String| Err(StnError::Malformed(m));
        if self.root >= self.nodes.len() || self.goal >= self.nodes.len() {
            return bad(String::from("root or goal id out of range"));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return bad(format!("node at position {i} has id {}", n.id));
            }
            for l in &n.outputs {
                if l.peer >= self.nodes.len() || l.peer == i {
                    return bad(format!("node {i} has an invalid output to {}", l.peer));
                }
                if !self.nodes[l.peer]
                    .inputs
                    .iter()
                    .any(|m| m.peer == i && m.lower == l.lower && m.upper == l.upper)
                {
                    return bad(format!("link {i}->{} is missing from the child's inputs", l.peer));
                }
                if let (Some(lo), Some(hi)) = (l.lower, l.upper) {
                    if lo > hi {
                        return bad(format!("link {i}->{} has lower > upper", l.peer));
                    }
                }
            }
            if n.inputs.len() != n.inputs.iter().map(|l| l.peer).collect::<BTreeSet<_>>().len() {
                return bad(format!("node {i} has duplicate input links"));
            }
            for l in &n.inputs {
                if l.peer >= self.nodes.len() || !self.nodes[l.peer].outputs.iter().any(|m| m.peer == i) {
                    return bad(format!("link {}->{i} is missing from the parent's outputs", l.peer));
                }
            }
        }
        Ok(())
    }
}

fn upsert(list: &mut Vec<StnLink>, link: StnLink) {
    match list.binary_search_by_key(&link.peer, |l| l.peer) {
        Ok(i) => list[i] = link,
        Err(i) => list.insert(i, link),
    }
}

/// Nodes, root anchors and duration links, before any causal analysis.
pub fn init_graph(problem: &Problem, plan: &TemporalPlan, opts: StnOptions) -> Stn {
    let n = plan.steps.len();
    let blank = |id: usize, kind: NodeKind| StnNode {
        id,
        kind,
        t: Millis::ZERO,
        start: Millis::ZERO,
        signature: String::new(),
        d: Millis::ZERO,
        conds: LiteralSet::new(),
        overall: LiteralSet::new(),
        effs: LiteralSet::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    let mut nodes = Vec::with_capacity(2 * n + 2);
    let mut root = blank(0, NodeKind::Init);
    root.effs =
        LiteralSet::try_from_literals(problem.init.iter().cloned().map(crate::pddl::Literal::pos)).unwrap_or_default();
    nodes.push(root);
    for ta in &plan.steps {
        let a = &ta.action;
        let mut s = blank(nodes.len(), NodeKind::Start);
        s.t = ta.start;
        s.start = ta.start;
        s.signature = a.signature.clone();
        s.d = ta.duration;
        s.conds = a.cond_start.clone();
        s.effs = a.eff_start.clone();
        nodes.push(s);
        let mut e = blank(nodes.len(), NodeKind::End);
        e.t = ta.end();
        e.start = ta.start;
        e.signature = a.signature.clone();
        e.d = ta.duration;
        e.conds = a.cond_end.clone();
        e.overall = a.cond_overall.clone();
        e.effs = a.eff_end.clone();
        nodes.push(e);
    }
    let mut goal = blank(nodes.len(), NodeKind::Goal);
    goal.conds = problem.goal.clone();
    goal.t = nodes.iter().map(|n| n.t).max().unwrap_or(Millis::ZERO);
    let goal_id = goal.id;
    nodes.push(goal);

    let mut g = Stn {
        nodes,
        root: 0,
        goal: goal_id,
    };
    for (i, ta) in plan.steps.iter().enumerate() {
        let (s, e) = (Stn::start_node(i), Stn::end_node(i));
        let upper = if opts.flexible { None } else { Some(ta.start.0) };
        g.add_link(0, s, Some(ta.start.0), upper, LinkKind::Anchor);
        g.add_link(s, e, Some(ta.duration.0), Some(ta.duration.0), LinkKind::Duration);
    }
    g
}

/// Removes every non-temporal link `a -> n` whose source already reaches `h`
/// without it: once `h -> n` exists that link is implied.
pub fn prune_links(g: &mut Stn, n: usize, h: usize) {
    let candidates: Vec<usize> = g.nodes[n]
        .inputs
        .iter()
        .filter(|l| !l.kind.is_temporal() && l.peer != h)
        .map(|l| l.peer)
        .collect();
    for a in candidates {
        if g.reachable(a, h, Some((a, n))) {
            g.remove_link(a, n);
        }
    }
}

pub fn check_paths(g: &Stn, n: usize, h: usize) -> bool {
    g.reachable(h, n, None)
}

/// STN node a simple-plan step maps to when it is the child (`as_child`)
/// or the parent of a causal link.
fn get_node(sp: &SimplePlan, g: &Stn, step: usize, as_child: bool) -> usize {
    let s = &sp.steps[step];
    match (s.kind, s.plan_index) {
        (StepKind::Init, _) => g.root,
        (StepKind::Goal, _) => g.goal,
        (StepKind::Start, Some(i)) => Stn::start_node(i),
        (StepKind::End, Some(i)) => Stn::end_node(i),
        (StepKind::Overall, Some(i)) if as_child => Stn::start_node(i),
        (StepKind::Overall, Some(i)) => Stn::end_node(i),
        _ => unreachable!("action step without owner"),
    }
}

fn connect(g: &mut Stn, n: usize, h: usize) {
    if n == h {
        return;
    }
    prune_links(g, n, h);
    if !check_paths(g, n, h) {
        g.add_link(h, n, Some(0), None, LinkKind::Causal);
    }
}

/// Builds the network after checking the plan with the validity oracle.
pub fn build_stn(problem: &Problem, plan: &TemporalPlan, opts: StnOptions) -> Result<Stn, StnError> {
    let report = validate_plan(problem, plan);
    if !report.valid {
        return Err(StnError::InvalidPlan(report));
    }
    Ok(build_stn_unchecked(problem, plan, opts))
}

/// Builds the network without checking validity first.
pub fn build_stn_unchecked(problem: &Problem, plan: &TemporalPlan, opts: StnOptions) -> Stn {
    let mut g = init_graph(problem, plan, opts);
    let sp = induced_simple_plan(plan, problem);
    let xs = state_sequence(problem, &sp);
    for r in causal::analyze(&sp, &xs) {
        let n = get_node(&sp, &g, r.step, true);
        for k in r.parents() {
            let h = get_node(&sp, &g, k, false);
            connect(&mut g, n, h);
        }
    }
    let goal = g.goal;
    for i in 0..g.nodes.len() {
        if g.nodes[i].kind == NodeKind::End && g.nodes[i].outputs.is_empty() {
            g.add_link(i, goal, Some(0), None, LinkKind::Sink);
        }
    }
    if g.nodes[goal].inputs.is_empty() {
        g.add_link(g.root, goal, Some(0), None, LinkKind::Sink);
    }
    g
}

/// All-pairs shortest paths over the distance graph; `None` is +infinity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub n: usize,
    pub d: Vec<Option<i64>>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<i64> {
        self.d[i * self.n + j]
    }

    /// Implied `(lower, upper)` on `t_j - t_i`.
    pub fn bounds(&self, i: usize, j: usize) -> (Option<i64>, Option<i64>) {
        (self.get(j, i).map(|v| -v), self.get(i, j))
    }
}

pub fn propagate(g: &Stn) -> Result<DistanceMatrix, StnError> {
    let n = g.nodes.len();
    let mut d: Vec<Option<i64>> = vec![None; n * n];
    for i in 0..n {
        d[i * n + i] = Some(0);
    }
    let tighten = |d: &mut Vec<Option<i64>>, i: usize, j: usize, w: i64| {
        let cell = &mut d[i * n + j];
        if cell.is_none_or(|c| w < c) {
            *cell = Some(w);
        }
    };
    for (p, l) in g.links() {
        if let Some(hi) = l.upper {
            tighten(&mut d, p, l.peer, hi);
        }
        if let Some(lo) = l.lower {
            tighten(&mut d, l.peer, p, -lo);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i * n + k] else { continue };
            for j in 0..n {
                if let Some(kj) = d[k * n + j] {
                    let via = ik + kj;
                    if d[i * n + j].is_none_or(|c| via < c) {
                        d[i * n + j] = Some(via);
                    }
                }
            }
        }
    }
    for i in 0..n {
        if d[i * n + i].is_some_and(|v| v < 0) {
            return Err(StnError::Inconsistent {
                node: i,
                label: g.nodes[i].label(),
            });
        }
    }
    Ok(DistanceMatrix { n, d })
}

/// First link violated by assigning `times[id]` to every node.
pub fn violated_link(g: &Stn, times: &[i64]) -> Option<(usize, usize)> {
    g.links().find_map(|(p, l)| {
        let diff = times[l.peer] - times[p];
        let ok = l.lower.is_none_or(|lo| lo <= diff) && l.upper.is_none_or(|hi| diff <= hi);
        (!ok).then_some((p, l.peer))
    })
}

/// Planned schedule: every snap at its plan time, root at 0, goal at the
/// last happening.
pub fn planned_times(g: &Stn) -> Vec<i64> {
    g.nodes
        .iter()
        .map(|n| if n.kind == NodeKind::Init { 0 } else { n.t.0 })
        .collect()
}

fn bound_str(v: Option<i64>, neg_inf: bool) -> String {
    match v {
        Some(ms) => format!("{}", SecsDisplay(Millis(ms))),
        None if neg_inf => String::from("-inf"),
        None => String::from("inf"),
    }
}

/// Graphviz rendering; nodes in id order, edges in (parent, child) order.
pub fn to_dot(g: &Stn) -> String {
    let mut s = String::from("digraph stn {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n");
    for n in &g.nodes {
        let _ = writeln!(s, "  n{} [label=\"{}\"];", n.id, escape(&n.label()));
    }
    for (p, l) in g.links() {
        let style = match l.kind {
            LinkKind::Anchor => ", style=dotted",
            LinkKind::Duration => ", style=bold",
            LinkKind::Sink => ", style=dashed",
            LinkKind::Causal => "",
        };
        let _ = writeln!(
            s,
            "  n{} -> n{} [label=\"[{},{}]\"{}];",
            p,
            l.peer,
            bound_str(l.lower, true),
            bound_str(l.upper, false),
            style
        );
    }
    s.push_str("}\n");
    s
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
