//! Behavior tree compiled from a temporal network.
//!
//! The tree is a depth-first unfolding of the network from its root. Each
//! snap node becomes an action unit (a short SEQUENCE of checks, effect
//! applications and the performer call); network links that are not tree
//! edges survive as WAIT_ACTION or CHECK_ACTION leaves.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::pddl::LiteralSet;
use crate::stn::{escape, propagate, DistanceMatrix, LinkKind, NodeKind, Stn, StnError};
use crate::time::{Millis, SecsDisplay};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BtKind {
    Sequence,
    Parallel,
    WaitAction,
    CheckAction,
    WaitTime,
    CheckTime,
    CheckAtStart,
    CheckOverall,
    CheckAtEnd,
    ApplyAtStart,
    ApplyAtEnd,
    ExecuteAction,
    SuccessLeaf,
}

impl BtKind {
    pub const ALL: [BtKind; 13] = [
        BtKind::Sequence,
        BtKind::Parallel,
        BtKind::WaitAction,
        BtKind::CheckAction,
        BtKind::WaitTime,
        BtKind::CheckTime,
        BtKind::CheckAtStart,
        BtKind::CheckOverall,
        BtKind::CheckAtEnd,
        BtKind::ApplyAtStart,
        BtKind::ApplyAtEnd,
        BtKind::ExecuteAction,
        BtKind::SuccessLeaf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BtKind::Sequence => "SEQUENCE",
            BtKind::Parallel => "PARALLEL",
            BtKind::WaitAction => "WAIT_ACTION",
            BtKind::CheckAction => "CHECK_ACTION",
            BtKind::WaitTime => "WAIT_TIME",
            BtKind::CheckTime => "CHECK_TIME",
            BtKind::CheckAtStart => "CHECK_AT_START",
            BtKind::CheckOverall => "CHECK_OVERALL",
            BtKind::CheckAtEnd => "CHECK_AT_END",
            BtKind::ApplyAtStart => "APPLY_AT_START",
            BtKind::ApplyAtEnd => "APPLY_AT_END",
            BtKind::ExecuteAction => "EXECUTE_ACTION",
            BtKind::SuccessLeaf => "SUCCESS_LEAF",
        }
    }

    pub fn parse(s: &str) -> Option<BtKind> {
        BtKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_composite(self) -> bool {
        matches!(self, BtKind::Sequence | BtKind::Parallel)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Snap {
    Start,
    End,
    Goal,
}

impl Snap {
    pub fn as_str(self) -> &'static str {
        match self {
            Snap::Start => "start",
            Snap::End => "end",
            Snap::Goal => "goal",
        }
    }

    pub fn parse(s: &str) -> Option<Snap> {
        [Snap::Start, Snap::End, Snap::Goal]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

/// One snap of one plan step, plus the network node it came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SnapRef {
    pub node: usize,
    pub signature: String,
    pub start: Millis,
    pub snap: Snap,
}

impl fmt::Display for SnapRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.snap {
            Snap::Goal => f.write_str("GOAL"),
            Snap::Start => write!(f, "START{}@{}", self.signature, SecsDisplay(self.start)),
            Snap::End => write!(f, "END{}@{}", self.signature, SecsDisplay(self.start)),
        }
    }
}

/// Which half of a split EXECUTE_ACTION a leaf is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecPhase {
    Dispatch,
    Join,
}

impl ExecPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecPhase::Dispatch => "dispatch",
            ExecPhase::Join => "join",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BtNode {
    pub id: usize,
    pub kind: BtKind,
    pub children: Vec<usize>,
    /// The snap this node refers to: its owner for unit members, its target
    /// for WAIT_ACTION and CHECK_ACTION.
    pub snap: Option<SnapRef>,
    pub time: Option<Millis>,
    pub literals: Option<LiteralSet>,
    /// Planned duration, carried by EXECUTE_ACTION leaves.
    pub duration: Option<Millis>,
    pub phase: Option<ExecPhase>,
}

impl BtNode {
    fn new(kind: BtKind) -> Self {
        BtNode {
            id: 0,
            kind,
            children: Vec::new(),
            snap: None,
            time: None,
            literals: None,
            duration: None,
            phase: None,
        }
    }

    /// True for the leaf whose success marks `snap` as finished: the
    /// dispatch of a START, the effect application of an END or the goal.
    pub fn completes_snap(&self) -> bool {
        match (&self.snap, self.kind) {
            (Some(s), BtKind::ExecuteAction) => s.snap == Snap::Start && self.phase == Some(ExecPhase::Dispatch),
            (Some(s), BtKind::ApplyAtEnd) => s.snap != Snap::Start,
            _ => false,
        }
    }

    pub fn label(&self) -> String {
        let mut s = String::from(self.kind.as_str());
        if let Some(p) = self.phase {
            let _ = write!(s, "[{}]", p.as_str());
        }
        if let Some(t) = self.time {
            let _ = write!(s, " {}", SecsDisplay(t));
        }
        if let Some(r) = &self.snap {
            let _ = write!(s, " {r}");
        }
        if let Some(l) = &self.literals {
            if !l.is_empty() {
                let _ = write!(s, " {{{l}}}");
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorTree {
    pub root: usize,
    /// Indexed by id, in pre-order.
    pub nodes: Vec<BtNode>,
    /// Network snap node -> the BT leaf that completes it.
    pub action_index: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeError {
    DanglingChild { parent: usize, child: usize },
    SharedChild(usize),
    Unreachable(usize),
    EmptyParallel(usize),
    LeafWithChildren(usize),
    MissingSite(SnapRef),
    DuplicateSite(usize),
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::DanglingChild { parent, child } => write!(f, "node {parent} lists missing child {child}"),
            TreeError::SharedChild(n) => write!(f, "node {n} has more than one parent"),
            TreeError::Unreachable(n) => write!(f, "node {n} is not reachable from the root"),
            TreeError::EmptyParallel(n) => write!(f, "PARALLEL node {n} has fewer than two children"),
            TreeError::LeafWithChildren(n) => write!(f, "leaf node {n} has children"),
            TreeError::MissingSite(s) => write!(f, "no completion site for {s}"),
            TreeError::DuplicateSite(n) => write!(f, "network node {n} completed at more than one site"),
        }
    }
}

impl BehaviorTree {
    pub fn node(&self, id: usize) -> &BtNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parent of every node, `None` for the root.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.nodes.len()];
        for n in &self.nodes {
            for &c in &n.children {
                p[c] = Some(n.id);
            }
        }
        p
    }

    /// Rebuilds `action_index` from the nodes.
    pub fn reindex(&mut self) {
        self.action_index = self
            .nodes
            .iter()
            .filter(|n| n.completes_snap())
            .map(|n| (n.snap.as_ref().map_or(0, |s| s.node), n.id))
            .collect();
    }

    /// Structural checks: a single-parent tree, PARALLEL fan-out of at least
    /// two, and a completion site for every snap that a WAIT_ACTION or
    /// CHECK_ACTION refers to.
    pub fn check(&self) -> Result<(), TreeError> {
        let mut parent_count = vec![0usize; self.nodes.len()];
        for n in &self.nodes {
            if !n.kind.is_composite() && !n.children.is_empty() {
                return Err(TreeError::LeafWithChildren(n.id));
            }
            if n.kind == BtKind::Parallel && n.children.len() < 2 {
                return Err(TreeError::EmptyParallel(n.id));
            }
            for &c in &n.children {
                if c >= self.nodes.len() {
                    return Err(TreeError::DanglingChild { parent: n.id, child: c });
                }
                parent_count[c] += 1;
            }
        }
        for (i, &c) in parent_count.iter().enumerate() {
            if c > 1 || (i == self.root && c > 0) {
                return Err(TreeError::SharedChild(i));
            }
            if i != self.root && c == 0 {
                return Err(TreeError::Unreachable(i));
            }
        }
        let mut sites = BTreeSet::new();
        for n in self.nodes.iter().filter(|n| n.completes_snap()) {
            let s = n.snap.as_ref().map_or(0, |s| s.node);
            if !sites.insert(s) {
                return Err(TreeError::DuplicateSite(s));
            }
        }
        for n in &self.nodes {
            if matches!(n.kind, BtKind::WaitAction | BtKind::CheckAction) {
                if let Some(s) = &n.snap {
                    if !sites.contains(&s.node) {
                        return Err(TreeError::MissingSite(s.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

struct Builder<'a> {
    g: &'a Stn,
    dm: &'a DistanceMatrix,
    arena: Vec<BtNode>,
    used: Vec<bool>,
    tree_parent: Vec<Option<usize>>,
    /// Arena ids of SEQUENCEs that join a unit to its successors; only
    /// these are flattened into an enclosing flow.
    flow_seqs: BTreeSet<usize>,
}

impl<'a> Builder<'a> {
    fn push(&mut self, n: BtNode) -> usize {
        self.arena.push(n);
        self.arena.len() - 1
    }

    fn snap_ref(&self, id: usize) -> SnapRef {
        let n = &self.g.nodes[id];
        SnapRef {
            node: id,
            signature: n.signature.clone(),
            start: n.start,
            snap: match n.kind {
                NodeKind::Start => Snap::Start,
                NodeKind::End => Snap::End,
                _ => Snap::Goal,
            },
        }
    }

    fn leaf(&mut self, kind: BtKind, owner: usize) -> BtNode {
        let mut n = BtNode::new(kind);
        n.snap = Some(self.snap_ref(owner));
        n
    }

    fn with_lits(&mut self, kind: BtKind, owner: usize, lits: &LiteralSet) -> usize {
        let mut n = self.leaf(kind, owner);
        n.literals = Some(lits.clone());
        self.push(n)
    }

    fn seq(&mut self, children: Vec<usize>) -> usize {
        let mut n = BtNode::new(BtKind::Sequence);
        n.children = children;
        self.push(n)
    }

    /// Network parents whose constraint is not carried by the tree edge.
    fn extra_parents(&self, id: usize) -> Vec<usize> {
        self.g.nodes[id]
            .inputs
            .iter()
            .map(|l| l.peer)
            .filter(|&p| p != self.g.root && Some(p) != self.tree_parent[id])
            .collect()
    }

    fn constraint_leaves(&mut self, id: usize, kind: BtKind) -> Vec<usize> {
        self.extra_parents(id)
            .into_iter()
            .map(|p| {
                let n = self.leaf(kind, p);
                self.push(n)
            })
            .collect()
    }

    fn start_unit(&mut self, id: usize) -> usize {
        let stn = self.g;
        let node = &stn.nodes[id];
        let mut kids = Vec::new();
        let mut wt = self.leaf(BtKind::WaitTime, id);
        wt.time = Some(Millis(-self.dm.get(id, stn.root).unwrap_or(0)));
        kids.push(self.push(wt));
        kids.extend(self.constraint_leaves(id, BtKind::WaitAction));
        kids.push(self.with_lits(BtKind::CheckAtStart, id, &node.conds));
        kids.push(self.with_lits(BtKind::ApplyAtStart, id, &node.effs));
        let mut ex = self.leaf(BtKind::ExecuteAction, id);
        ex.phase = Some(ExecPhase::Dispatch);
        ex.duration = Some(node.d);
        kids.push(self.push(ex));
        self.seq(kids)
    }

    fn end_unit(&mut self, id: usize) -> usize {
        let stn = self.g;
        let node = &stn.nodes[id];
        let mut kids = Vec::new();
        let mut ex = self.leaf(BtKind::ExecuteAction, id);
        ex.phase = Some(ExecPhase::Join);
        ex.duration = Some(node.d);
        kids.push(self.push(ex));
        kids.extend(self.constraint_leaves(id, BtKind::CheckAction));
        if let Some(hi) = self.dm.get(stn.root, id) {
            let mut ct = self.leaf(BtKind::CheckTime, id);
            ct.time = Some(Millis(hi));
            kids.push(self.push(ct));
        }
        if !node.overall.is_empty() {
            kids.push(self.with_lits(BtKind::CheckOverall, id, &node.overall));
        }
        kids.push(self.with_lits(BtKind::CheckAtEnd, id, &node.conds));
        kids.push(self.with_lits(BtKind::ApplyAtEnd, id, &node.effs));
        self.seq(kids)
    }

    fn goal_unit(&mut self, id: usize) -> usize {
        let mut kids = self.constraint_leaves(id, BtKind::WaitAction);
        let conds = self.g.nodes[id].conds.clone();
        kids.push(self.with_lits(BtKind::CheckAtEnd, id, &conds));
        kids.push(self.with_lits(BtKind::ApplyAtEnd, id, &LiteralSet::new()));
        self.seq(kids)
    }

    /// Network children in visiting order. A START visits its END first;
    /// the root skips anchor links into STARTs that have another parent,
    /// since those are reached through that parent.
    fn successors(&self, id: usize) -> Vec<usize> {
        let stn = self.g;
        let node = &stn.nodes[id];
        let mut out: Vec<usize> = node.outputs.iter().map(|l| l.peer).collect();
        match node.kind {
            NodeKind::Start => {
                if let Some(e) = stn.partner(id) {
                    out.retain(|&c| c != e);
                    out.insert(0, e);
                }
            }
            NodeKind::Init => out.retain(|&c| {
                stn.nodes[c]
                    .inputs
                    .iter()
                    .all(|l| l.peer == id || l.kind == LinkKind::Anchor)
            }),
            _ => {}
        }
        out
    }

    /// GetFlow: the subtree for `id` reached from `from`.
    fn flow(&mut self, id: usize, from: Option<usize>) -> Option<usize> {
        if self.used[id] {
            let n = self.leaf(BtKind::WaitAction, id);
            return Some(self.push(n));
        }
        self.used[id] = true;
        self.tree_parent[id] = from;
        let unit = match self.g.nodes[id].kind {
            NodeKind::Init => None,
            NodeKind::Start => Some(self.start_unit(id)),
            NodeKind::End => Some(self.end_unit(id)),
            NodeKind::Goal => Some(self.goal_unit(id)),
        };
        let mut flows = Vec::new();
        for c in self.successors(id) {
            flows.extend(self.flow(c, Some(id)));
        }
        let child = match flows.len() {
            0 => None,
            1 => Some(flows[0]),
            _ => {
                let mut p = BtNode::new(BtKind::Parallel);
                p.children = flows;
                Some(self.push(p))
            }
        };
        match (unit, child) {
            (None, c) => c,
            (Some(u), None) => Some(u),
            (Some(u), Some(c)) => {
                let mut kids = vec![u];
                if self.flow_seqs.contains(&c) {
                    kids.append(&mut self.arena[c].children);
                } else {
                    kids.push(c);
                }
                let s = self.seq(kids);
                self.flow_seqs.insert(s);
                Some(s)
            }
        }
    }
}

/// Compiles a consistent network into a behavior tree.
pub fn build_bt(g: &Stn, dm: &DistanceMatrix) -> BehaviorTree {
    let mut b = Builder {
        g,
        dm,
        arena: Vec::new(),
        used: vec![false; g.nodes.len()],
        tree_parent: vec![None; g.nodes.len()],
        flow_seqs: BTreeSet::new(),
    };
    let root = b
        .flow(g.root, None)
        .unwrap_or_else(|| b.push(BtNode::new(BtKind::SuccessLeaf)));
    renumber(b.arena, root)
}

/// Propagates and then compiles, passing inconsistency through.
pub fn compile(g: &Stn) -> Result<(BehaviorTree, DistanceMatrix), StnError> {
    let dm = propagate(g)?;
    Ok((build_bt(g, &dm), dm))
}

/// Drops unreferenced arena entries and numbers the rest in pre-order.
fn renumber(arena: Vec<BtNode>, root: usize) -> BehaviorTree {
    let mut order = Vec::new();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        order.push(n);
        stack.extend(arena[n].children.iter().rev());
    }
    let mut new_id = vec![usize::MAX; arena.len()];
    for (i, &old) in order.iter().enumerate() {
        new_id[old] = i;
    }
    let nodes = order
        .iter()
        .enumerate()
        .map(|(i, &old)| {
            let mut n = arena[old].clone();
            n.id = i;
            n.children = n.children.iter().map(|&c| new_id[c]).collect();
            n
        })
        .collect();
    let mut t = BehaviorTree {
        root: 0,
        nodes,
        action_index: BTreeMap::new(),
    };
    t.reindex();
    t
}

/// Graphviz rendering in pre-order.
pub fn to_dot(t: &BehaviorTree) -> String {
    let mut s = String::from("digraph bt {\n  node [fontname=\"monospace\"];\n");
    for n in &t.nodes {
        let shape = match n.kind {
            BtKind::Sequence => "cds",
            BtKind::Parallel => "parallelogram",
            BtKind::ExecuteAction => "box",
            _ => "ellipse",
        };
        let _ = writeln!(s, "  b{} [shape={}, label=\"{}\"];", n.id, shape, escape(&n.label()));
    }
    for n in &t.nodes {
        for c in &n.children {
            let _ = writeln!(s, "  b{} -> b{};", n.id, c);
        }
    }
    s.push_str("}\n");
    s
}

/// Compact indented outline, one node per line.
pub fn outline(t: &BehaviorTree) -> String {
    fn go(t: &BehaviorTree, id: usize, depth: usize, out: &mut String) {
        let _ = writeln!(out, "{:width$}{}", "", t.nodes[id].label(), width = depth * 2);
        for &c in &t.nodes[id].children {
            go(t, c, depth + 1, out);
        }
    }
    let mut s = String::new();
    go(t, t.root, 0, &mut s);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stn::{build_stn, StnOptions};
    use crate::testutil::{assembly, matchcellar};
    use alloc::format;

    fn mc_tree() -> (Stn, BehaviorTree) {
        let (_, p, plan) = matchcellar();
        let g = build_stn(&p, &plan, StnOptions::default()).unwrap();
        let (t, _) = compile(&g).unwrap();
        (g, t)
    }

    fn find<'a>(t: &'a BehaviorTree, kind: BtKind, label: &str) -> Vec<&'a BtNode> {
        t.nodes
            .iter()
            .filter(|n| n.kind == kind && n.label().contains(label))
            .collect()
    }

    #[test]
    fn matchcellar_is_well_formed() {
        let (g, t) = mc_tree();
        t.check().unwrap();
        // every snap of every action plus the goal has exactly one site
        assert_eq!(t.action_index.len(), g.len() - 1);
        let execs = t.nodes.iter().filter(|n| n.kind == BtKind::ExecuteAction).count();
        assert_eq!(execs, 8);
    }

    #[test]
    fn light_match_branches_under_root_parallel() {
        let (_, t) = mc_tree();
        let root = t.node(t.root);
        assert_eq!(root.kind, BtKind::Parallel);
        let firsts: Vec<String> = root
            .children
            .iter()
            .map(|&c| {
                let unit = t.node(t.node(c).children[0]);
                t.node(*unit.children.last().unwrap()).label()
            })
            .collect();
        assert_eq!(firsts.len(), 2);
        assert!(firsts[0].contains("START(light_match match1)"));
        assert!(firsts[1].contains("START(light_match match2)"));
    }

    #[test]
    fn light_match_start_unit_has_no_waits() {
        let (_, t) = mc_tree();
        let root = t.node(t.root);
        let unit = t.node(t.node(root.children[0]).children[0]);
        let kinds: Vec<BtKind> = unit.children.iter().map(|&c| t.node(c).kind).collect();
        assert_eq!(
            kinds,
            [
                BtKind::WaitTime,
                BtKind::CheckAtStart,
                BtKind::ApplyAtStart,
                BtKind::ExecuteAction
            ]
        );
        assert_eq!(t.node(unit.children[0]).time, Some(Millis(0)));
    }

    #[test]
    fn end_of_light_match_checks_mend_finished() {
        let (_, t) = mc_tree();
        assert_eq!(find(&t, BtKind::CheckAction, "END(mend_fuse fuse1 match1)").len(), 1);
        // END(light_match match2) is first reached from END(mend_fuse fuse2
        // match2), so its duration link is the one left as a check
        assert_eq!(find(&t, BtKind::CheckAction, "START(light_match match2)").len(), 1);
        // the second mend hangs off the end of the first; its other parent
        // becomes a wait inside its start unit
        assert_eq!(find(&t, BtKind::WaitAction, "START(light_match match2)").len(), 1);
    }

    #[test]
    fn end_unit_layout() {
        let (_, t) = mc_tree();
        let join = find(&t, BtKind::ExecuteAction, "[join] END(mend_fuse fuse1 match1)")[0];
        let parents = t.parents();
        let unit = t.node(parents[join.id].unwrap());
        let kinds: Vec<BtKind> = unit.children.iter().map(|&c| t.node(c).kind).collect();
        assert_eq!(
            kinds,
            [
                BtKind::ExecuteAction,
                BtKind::CheckTime,
                BtKind::CheckOverall,
                BtKind::CheckAtEnd,
                BtKind::ApplyAtEnd
            ]
        );
        assert_eq!(t.node(unit.children[1]).time, Some(Millis(5001)));
        // light_match has no over-all condition
        let join = find(&t, BtKind::ExecuteAction, "[join] END(light_match match1)")[0];
        let unit = t.node(parents[join.id].unwrap());
        assert!(unit.children.iter().all(|&c| t.node(c).kind != BtKind::CheckOverall));
    }

    #[test]
    fn start_unit_precedes_its_end_unit() {
        let (_, t) = mc_tree();
        let pos = |label: &str| t.nodes.iter().position(|n| n.label().contains(label)).unwrap();
        for sig in [
            "(light_match match1)",
            "(mend_fuse fuse1 match1)",
            "(mend_fuse fuse2 match2)",
        ] {
            assert!(pos(&format!("[dispatch] START{sig}")) < pos(&format!("[join] END{sig}")));
        }
    }

    #[test]
    fn single_action_is_a_sequence() {
        let (_, mut p, mut plan) = matchcellar();
        plan.steps.truncate(1);
        p.goal = LiteralSet::new();
        let g = build_stn(&p, &plan, StnOptions::default()).unwrap();
        let (t, _) = compile(&g).unwrap();
        t.check().unwrap();
        let root = t.node(t.root);
        assert_eq!(root.kind, BtKind::Sequence);
        let heads: Vec<BtKind> = root
            .children
            .iter()
            .map(|&c| t.node(t.node(c).children[0]).kind)
            .collect();
        // start unit, end unit, goal unit
        assert_eq!(heads, [BtKind::WaitTime, BtKind::ExecuteAction, BtKind::CheckAtEnd]);
    }

    #[test]
    fn empty_plan_is_success_leaf() {
        let (_, mut p, mut plan) = matchcellar();
        plan.steps.clear();
        p.goal = LiteralSet::new();
        let g = build_stn(&p, &plan, StnOptions::default()).unwrap();
        let (t, _) = compile(&g).unwrap();
        // root -> goal only: the goal unit is the whole tree
        assert_eq!(t.node(t.root).kind, BtKind::Sequence);
        assert!(t.nodes.iter().all(|n| n.kind != BtKind::ExecuteAction));
        let mut lone = g.nodes[0].clone();
        lone.outputs.clear();
        let bare = build_bt(
            &Stn {
                nodes: vec![lone],
                root: 0,
                goal: 0,
            },
            &DistanceMatrix { n: 1, d: vec![Some(0)] },
        );
        assert_eq!(bare.nodes.len(), 1);
        assert_eq!(bare.node(0).kind, BtKind::SuccessLeaf);
    }

    #[test]
    fn assembly_tree_checks_and_is_deterministic() {
        let (_, p, plan) = assembly();
        for flexible in [false, true] {
            let g = build_stn(&p, &plan, StnOptions { flexible }).unwrap();
            let (a, _) = compile(&g).unwrap();
            let (b, _) = compile(&g).unwrap();
            a.check().unwrap();
            assert_eq!(to_dot(&a), to_dot(&b));
            assert_eq!(a.action_index.len(), g.len() - 1);
        }
    }

    #[test]
    fn flexible_drops_finite_upper_bounds() {
        let (_, p, plan) = matchcellar();
        let g = build_stn(&p, &plan, StnOptions { flexible: true }).unwrap();
        let (t, _) = compile(&g).unwrap();
        assert!(t.nodes.iter().all(|n| n.kind != BtKind::CheckTime));
    }
}
