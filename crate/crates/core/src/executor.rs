//! Tick-based execution of a compiled behavior tree.
//!
//! Composite nodes keep memory: a SEQUENCE resumes at its first unfinished
//! child and a PARALLEL only re-ticks children that are still running. All
//! mutable execution state lives in [`Executor`]; the tree itself is never
//! modified.
//!
//! Time is driven from outside through [`Executor::set_clock`]. The
//! virtual-clock driver [`run_virtual`] settles the tree at each instant and
//! then jumps to the next release time (a WAIT_TIME deadline or a performer
//! completion), so simulations are fast and reproducible.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bt::{BehaviorTree, BtKind, BtNode, ExecPhase, Snap};
use crate::pddl::{Fluent, LiteralSet, Problem};
use crate::simple_plan::WorldState;
use crate::time::{Millis, SecsDisplay};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TickStatus {
    Success,
    Failure,
    Running,
}

impl TickStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TickStatus::Success => "SUCCESS",
            TickStatus::Failure => "FAILURE",
            TickStatus::Running => "RUNNING",
        }
    }

    pub fn is_terminal(self) -> bool {
        self != TickStatus::Running
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PollStatus {
    Running,
    Done,
    Failed,
}

pub type Token = usize;

/// Something that carries out actions. Completion is reported through
/// `poll`; once `Done` or `Failed` is returned the answer never changes.
pub trait ActionPerformer {
    fn start(&mut self, signature: &str, planned: Millis, clock: Millis) -> Token;
    fn poll(&mut self, token: Token, clock: Millis) -> PollStatus;
    /// Earliest completion strictly after `clock`, if one is known. The
    /// virtual clock jumps there.
    fn next_event_after(&self, clock: Millis) -> Option<Millis>;
}

impl<P: ActionPerformer + ?Sized> ActionPerformer for &mut P {
    fn start(&mut self, signature: &str, planned: Millis, clock: Millis) -> Token {
        (**self).start(signature, planned, clock)
    }
    fn poll(&mut self, token: Token, clock: Millis) -> PollStatus {
        (**self).poll(token, clock)
    }
    fn next_event_after(&self, clock: Millis) -> Option<Millis> {
        (**self).next_event_after(clock)
    }
}

/// Duration model for one action or action name, in milliseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DurationDist {
    /// The duration written in the plan.
    Planned,
    Fixed {
        ms: i64,
    },
    /// Inclusive integer range.
    Uniform {
        lo: i64,
        hi: i64,
    },
    /// Normal, truncated at zero.
    Normal {
        mean: i64,
        stdev: i64,
    },
    /// Runs for the planned duration, then reports failure.
    Fail,
}

#[derive(Clone, Debug)]
struct Job {
    end: Millis,
    failed: bool,
}

/// Performer whose actions finish after a sampled duration. Given the same
/// seed and the same sequence of `start` calls it behaves identically.
#[derive(Clone, Debug)]
pub struct SimulatedPerformer {
    rng: ChaCha8Rng,
    config: BTreeMap<String, DurationDist>,
    jobs: Vec<Job>,
}

impl SimulatedPerformer {
    /// `config` is keyed by full signature (`(move r1 a b)`) or by action
    /// name (`move`); the signature wins. Unlisted actions use the planned
    /// duration.
    pub fn new(config: BTreeMap<String, DurationDist>, seed: u64) -> Self {
        SimulatedPerformer {
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
            jobs: Vec::new(),
        }
    }

    pub fn planned() -> Self {
        Self::new(BTreeMap::new(), 0)
    }

    fn dist_for(&self, signature: &str) -> DurationDist {
        let name = signature
            .trim_start_matches('(')
            .split(|c: char| c.is_whitespace() || c == ')')
            .next()
            .unwrap_or_default();
        self.config
            .get(signature)
            .or_else(|| self.config.get(name))
            .cloned()
            .unwrap_or(DurationDist::Planned)
    }

    fn sample(&mut self, dist: &DurationDist, planned: Millis) -> (Millis, bool) {
        match *dist {
            DurationDist::Planned => (planned, false),
            DurationDist::Fail => (planned, true),
            DurationDist::Fixed { ms } => (Millis(ms.max(0)), false),
            DurationDist::Uniform { lo, hi } => {
                let (lo, hi) = (lo.min(hi).max(0), hi.max(lo).max(0));
                (Millis(self.rng.gen_range(lo..=hi)), false)
            }
            DurationDist::Normal { mean, stdev } => {
                let ms = match Normal::new(mean as f64, stdev.max(0) as f64) {
                    Ok(n) => {
                        // resample a few times before clamping the tail
                        let mut v = n.sample(&mut self.rng);
                        for _ in 0..8 {
                            if v >= 0.0 {
                                break;
                            }
                            v = n.sample(&mut self.rng);
                        }
                        Millis::from_secs_f64(v.max(0.0) / 1000.0)
                    }
                    Err(_) => Millis(mean.max(0)),
                };
                (ms, false)
            }
        }
    }
}

impl ActionPerformer for SimulatedPerformer {
    fn start(&mut self, signature: &str, planned: Millis, clock: Millis) -> Token {
        let dist = self.dist_for(signature);
        let (d, failed) = self.sample(&dist, planned);
        self.jobs.push(Job { end: clock + d, failed });
        self.jobs.len() - 1
    }

    fn poll(&mut self, token: Token, clock: Millis) -> PollStatus {
        match self.jobs.get(token) {
            Some(j) if clock >= j.end => {
                if j.failed {
                    PollStatus::Failed
                } else {
                    PollStatus::Done
                }
            }
            Some(_) => PollStatus::Running,
            None => PollStatus::Failed,
        }
    }

    fn next_event_after(&self, clock: Millis) -> Option<Millis> {
        self.jobs.iter().map(|j| j.end).filter(|&e| e > clock).min()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub clock_ms: i64,
    pub node: usize,
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
}

/// When each plan step actually started and ended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub signature: String,
    pub planned_start: Millis,
    pub planned_duration: Millis,
    pub start: Millis,
    pub end: Option<Millis>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: TickStatus,
    pub makespan: Millis,
    pub clock: Millis,
    pub trace: Vec<TraceRecord>,
    pub actions: Vec<ActionRecord>,
    pub final_state: WorldState,
    /// Why the run failed, when it did.
    pub diagnostic: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecConfig {
    /// Check over-all conditions at every settled instant between dispatch
    /// and end, not only in the end unit.
    pub monitor_overall: bool,
    /// Upper bound on settled instants before the run is abandoned.
    pub max_instants: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            monitor_overall: false,
            max_instants: 1_000_000,
        }
    }
}

type StepKey = (String, Millis);

pub struct Executor<'t, P: ActionPerformer> {
    tree: &'t BehaviorTree,
    performer: P,
    cfg: ExecConfig,
    state: BTreeSet<Fluent>,
    clock: Millis,
    status: Vec<Option<TickStatus>>,
    finished: BTreeMap<usize, Millis>,
    tokens: BTreeMap<StepKey, Token>,
    overall: BTreeMap<StepKey, (usize, LiteralSet)>,
    actions: Vec<ActionRecord>,
    action_pos: BTreeMap<StepKey, usize>,
    trace: Vec<TraceRecord>,
    changed: bool,
    strict: bool,
    next_deadline: Option<Millis>,
    outcome: Option<TickStatus>,
    diagnostic: Option<String>,
}

fn holds(state: &BTreeSet<Fluent>, lits: &LiteralSet) -> Result<(), String> {
    for l in lits {
        if state.contains(&l.fluent) != l.positive {
            return Err(format!("{l}"));
        }
    }
    Ok(())
}

impl<'t, P: ActionPerformer> Executor<'t, P> {
    pub fn new(tree: &'t BehaviorTree, problem: &Problem, performer: P, cfg: ExecConfig) -> Self {
        let overall = tree
            .nodes
            .iter()
            .filter(|n| n.kind == BtKind::CheckOverall)
            .filter_map(|n| {
                let s = n.snap.as_ref()?;
                Some((
                    (s.signature.clone(), s.start),
                    (s.node, n.literals.clone().unwrap_or_default()),
                ))
            })
            .collect();
        Executor {
            tree,
            performer,
            cfg,
            state: problem.init.clone(),
            clock: Millis::ZERO,
            status: vec![None; tree.nodes.len()],
            finished: BTreeMap::new(),
            tokens: BTreeMap::new(),
            overall,
            actions: Vec::new(),
            action_pos: BTreeMap::new(),
            trace: Vec::new(),
            changed: false,
            strict: false,
            next_deadline: None,
            outcome: None,
            diagnostic: None,
        }
    }

    pub fn clock(&self) -> Millis {
        self.clock
    }

    pub fn state(&self) -> &BTreeSet<Fluent> {
        &self.state
    }

    pub fn performer(&self) -> &P {
        &self.performer
    }

    /// Clock only moves forward; earlier values are ignored.
    pub fn set_clock(&mut self, clock: Millis) {
        self.clock = self.clock.max(clock);
    }

    pub fn outcome(&self) -> Option<TickStatus> {
        self.outcome
    }

    /// Earliest instant after the current clock at which something can
    /// change, as seen by the last settle.
    pub fn next_release(&self) -> Option<Millis> {
        let perf = self.performer.next_event_after(self.clock);
        match (self.next_deadline, perf) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Ticks the tree until nothing changes at the current clock. Leaves
    /// that depend on another snap finishing "at the same instant" get the
    /// whole instant to resolve: only once the tree is quiet does an
    /// unresolved CHECK_ACTION fail.
    pub fn settle(&mut self) -> Option<TickStatus> {
        if self.outcome.is_some() {
            return self.outcome;
        }
        loop {
            self.strict = false;
            loop {
                if let Some(s) = self.pass() {
                    return Some(s);
                }
                if !self.changed {
                    break;
                }
            }
            self.strict = true;
            let r = self.pass();
            self.strict = false;
            if r.is_some() {
                return r;
            }
            if !self.changed {
                break;
            }
        }
        if self.cfg.monitor_overall {
            if let Some(msg) = self.monitor() {
                self.fail(self.tree.root, msg);
                return self.outcome;
            }
        }
        None
    }

    fn pass(&mut self) -> Option<TickStatus> {
        self.changed = false;
        self.next_deadline = None;
        let s = self.tick(self.tree.root);
        if s.is_terminal() {
            self.outcome = Some(s);
            return Some(s);
        }
        None
    }

    fn monitor(&self) -> Option<String> {
        for (key, (end_node, lits)) in &self.overall {
            if self.tokens.contains_key(key) && !self.finished.contains_key(end_node) {
                if let Err(l) = holds(&self.state, lits) {
                    return Some(format!(
                        "over-all condition {l} of {}@{} violated at {}",
                        key.0,
                        SecsDisplay(key.1),
                        SecsDisplay(self.clock)
                    ));
                }
            }
        }
        None
    }

    fn fail(&mut self, node: usize, msg: String) {
        if self.diagnostic.is_none() {
            self.diagnostic = Some(msg);
        }
        self.outcome = Some(TickStatus::Failure);
        self.record(node, "FAILURE", None);
    }

    fn record(&mut self, node: usize, event: &str, action: Option<String>) {
        self.trace.push(TraceRecord {
            clock_ms: self.clock.0,
            node,
            event: String::from(event),
            action,
        });
    }

    fn set_status(&mut self, id: usize, s: TickStatus) {
        if self.status[id] != Some(s) {
            self.status[id] = Some(s);
            self.changed = true;
            self.record(id, s.as_str(), None);
        }
    }

    /// Ticks one node. Nodes that already returned SUCCESS or FAILURE keep
    /// that result.
    pub fn tick(&mut self, id: usize) -> TickStatus {
        if let Some(s) = self.status[id] {
            if s.is_terminal() {
                return s;
            }
        }
        let tree = self.tree;
        let node = &tree.nodes[id];
        let s = match node.kind {
            BtKind::Sequence => {
                let mut r = TickStatus::Success;
                for &c in &node.children {
                    match self.tick(c) {
                        TickStatus::Success => {}
                        other => {
                            r = other;
                            break;
                        }
                    }
                }
                r
            }
            BtKind::Parallel => {
                let mut r = TickStatus::Success;
                for &c in &node.children {
                    match self.tick(c) {
                        TickStatus::Failure => {
                            r = TickStatus::Failure;
                            break;
                        }
                        TickStatus::Running => r = TickStatus::Running,
                        TickStatus::Success => {}
                    }
                }
                r
            }
            _ => self.tick_leaf(node),
        };
        self.set_status(id, s);
        s
    }

    fn target(node: &BtNode) -> usize {
        node.snap.as_ref().map_or(usize::MAX, |s| s.node)
    }

    fn key(node: &BtNode) -> StepKey {
        node.snap
            .as_ref()
            .map_or_else(|| (String::new(), Millis::ZERO), |s| (s.signature.clone(), s.start))
    }

    fn check(&mut self, node: &BtNode) -> TickStatus {
        let lits = node.literals.clone().unwrap_or_default();
        match holds(&self.state, &lits) {
            Ok(()) => TickStatus::Success,
            Err(l) => {
                let who = node.snap.as_ref().map(|s| format!("{s}")).unwrap_or_default();
                self.diagnostic.get_or_insert_with(|| {
                    format!(
                        "{} {who}: {l} does not hold at {}",
                        node.kind.as_str(),
                        SecsDisplay(self.clock)
                    )
                });
                TickStatus::Failure
            }
        }
    }

    fn tick_leaf(&mut self, node: &BtNode) -> TickStatus {
        match node.kind {
            BtKind::SuccessLeaf => TickStatus::Success,
            BtKind::WaitAction => {
                if self.finished.contains_key(&Self::target(node)) {
                    TickStatus::Success
                } else {
                    TickStatus::Running
                }
            }
            BtKind::CheckAction => {
                if self.finished.contains_key(&Self::target(node)) {
                    TickStatus::Success
                } else if self.strict {
                    let who = node.snap.as_ref().map(|s| format!("{s}")).unwrap_or_default();
                    self.diagnostic.get_or_insert_with(|| {
                        format!("CHECK_ACTION: {who} has not finished at {}", SecsDisplay(self.clock))
                    });
                    TickStatus::Failure
                } else {
                    TickStatus::Running
                }
            }
            BtKind::WaitTime => {
                let t = node.time.unwrap_or(Millis::ZERO);
                if self.clock >= t {
                    TickStatus::Success
                } else {
                    self.next_deadline = Some(self.next_deadline.map_or(t, |d| d.min(t)));
                    TickStatus::Running
                }
            }
            BtKind::CheckTime => {
                let t = node.time.unwrap_or(Millis::ZERO);
                if self.clock > t {
                    let who = node.snap.as_ref().map(|s| format!("{s}")).unwrap_or_default();
                    self.diagnostic.get_or_insert_with(|| {
                        format!(
                            "CHECK_TIME {who}: clock {} is past {}",
                            SecsDisplay(self.clock),
                            SecsDisplay(t)
                        )
                    });
                    TickStatus::Failure
                } else {
                    TickStatus::Success
                }
            }
            BtKind::CheckAtStart | BtKind::CheckOverall | BtKind::CheckAtEnd => self.check(node),
            BtKind::ApplyAtStart | BtKind::ApplyAtEnd => {
                for l in node.literals.iter().flatten() {
                    if l.positive {
                        self.state.insert(l.fluent.clone());
                    } else {
                        self.state.remove(&l.fluent);
                    }
                }
                if node.completes_snap() {
                    self.finished.insert(Self::target(node), self.clock);
                    if node.snap.as_ref().is_some_and(|s| s.snap == Snap::End) {
                        if let Some(&i) = self.action_pos.get(&Self::key(node)) {
                            self.actions[i].end = Some(self.clock);
                        }
                    }
                }
                TickStatus::Success
            }
            BtKind::ExecuteAction => match node.phase {
                Some(ExecPhase::Dispatch) => self.dispatch(node),
                _ => self.join(node),
            },
            BtKind::Sequence | BtKind::Parallel => unreachable!("composites are ticked in tick()"),
        }
    }

    fn dispatch(&mut self, node: &BtNode) -> TickStatus {
        let key = Self::key(node);
        let planned = node.duration.unwrap_or(Millis::ZERO);
        let token = self.performer.start(&key.0, planned, self.clock);
        self.tokens.insert(key.clone(), token);
        self.finished.insert(Self::target(node), self.clock);
        self.action_pos.insert(key.clone(), self.actions.len());
        self.actions.push(ActionRecord {
            signature: key.0.clone(),
            planned_start: key.1,
            planned_duration: planned,
            start: self.clock,
            end: None,
        });
        self.record(node.id, "dispatch", Some(key.0));
        TickStatus::Success
    }

    fn join(&mut self, node: &BtNode) -> TickStatus {
        let key = Self::key(node);
        let Some(&token) = self.tokens.get(&key) else {
            return TickStatus::Running;
        };
        match self.performer.poll(token, self.clock) {
            PollStatus::Running => TickStatus::Running,
            PollStatus::Done => {
                self.record(node.id, "complete", Some(key.0));
                TickStatus::Success
            }
            PollStatus::Failed => {
                self.diagnostic.get_or_insert_with(|| {
                    format!("performer reported failure of {} at {}", key.0, SecsDisplay(self.clock))
                });
                self.record(node.id, "performer_failed", Some(key.0));
                TickStatus::Failure
            }
        }
    }

    /// Ends the run; a run without an outcome is reported as a failure.
    pub fn finish(mut self, diagnostic: Option<String>) -> ExecutionResult {
        if self.outcome.is_none() {
            let msg = diagnostic.unwrap_or_else(|| String::from("run stopped before the tree finished"));
            self.fail(self.tree.root, msg);
        }
        let first = self.actions.iter().map(|a| a.start).min();
        let last = self.actions.iter().filter_map(|a| a.end).max();
        let makespan = match (first, last) {
            (Some(a), Some(b)) => b - a,
            _ => Millis::ZERO,
        };
        ExecutionResult {
            status: self.outcome.unwrap_or(TickStatus::Failure),
            makespan,
            clock: self.clock,
            trace: self.trace,
            actions: self.actions,
            final_state: WorldState(self.state),
            diagnostic: if self.outcome == Some(TickStatus::Success) {
                None
            } else {
                self.diagnostic
            },
        }
    }
}

/// Runs to completion on a virtual clock that starts at 0 and jumps from
/// one release time to the next.
pub fn run_virtual<P: ActionPerformer>(
    tree: &BehaviorTree,
    problem: &Problem,
    performer: P,
    cfg: ExecConfig,
) -> ExecutionResult {
    let mut ex = Executor::new(tree, problem, performer, cfg);
    for _ in 0..cfg.max_instants {
        if ex.settle().is_some() {
            return ex.finish(None);
        }
        match ex.next_release() {
            Some(t) => ex.set_clock(t),
            None => {
                let msg = format!(
                    "deadlock at {}: every leaf is waiting and nothing is scheduled",
                    SecsDisplay(ex.clock())
                );
                return ex.finish(Some(msg));
            }
        }
    }
    let msg = format!("gave up after {} instants", cfg.max_instants);
    ex.finish(Some(msg))
}

/// One text line per action: a bar from start to end, scaled so the whole
/// run fits in `width` columns.
pub fn gantt_text(actions: &[ActionRecord], width: usize) -> String {
    let width = width.max(10);
    let mut s = String::new();
    let name_w = actions.iter().map(|a| a.signature.len()).max().unwrap_or(6).max(6);
    let _ = writeln!(s, "{:<name_w$}  {:>9}  {:>9}  timeline", "action", "start", "end");
    let horizon = actions
        .iter()
        .map(|a| a.end.unwrap_or(a.start).0)
        .max()
        .unwrap_or(0)
        .max(1);
    let col = |t: Millis| ((t.0.max(0) as i128 * width as i128) / horizon as i128) as usize;
    for a in actions {
        let end = a.end.unwrap_or(a.start);
        let (c0, c1) = (col(a.start), col(end).max(col(a.start) + 1));
        let bar: String = (0..width.max(c1))
            .map(|i| if i >= c0 && i < c1 { '#' } else { '.' })
            .collect();
        let end_txt = a
            .end
            .map_or_else(|| String::from("-"), |e| format!("{}", SecsDisplay(e)));
        let _ = writeln!(
            s,
            "{:<name_w$}  {:>9}  {:>9}  {bar}",
            a.signature,
            format!("{}", SecsDisplay(a.start)),
            end_txt
        );
    }
    s
}
