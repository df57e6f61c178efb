//! Happening time points, the induced simple plan, state sequences and the
//! plan validity oracle.
//!
//! Every durative action contributes a START step at `t`, an END step at
//! `t + d`, and one OVERALL step at the midpoint of every pair of consecutive
//! happenings it spans (only when its over-all condition is nonempty). An
//! INIT step at -1 ms carries the initial state and a GOAL step after the
//! last happening carries the goal condition.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::pddl::{ConditionSet, EffectSet, Fluent, Literal, LiteralSet, Problem, StepId, TemporalPlan};
use crate::time::{Millis, SecsDisplay};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepKind {
    Init,
    Start,
    Overall,
    End,
    Goal,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Init => "INIT",
            StepKind::Start => "START",
            StepKind::Overall => "OVERALL",
            StepKind::End => "END",
            StepKind::Goal => "GOAL",
        }
    }

    pub fn is_snap(self) -> bool {
        matches!(self, StepKind::Start | StepKind::End)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimpleStep {
    /// Position on the timeline; OVERALL midpoints are rounded half-up.
    pub t: Millis,
    /// Twice the exact time in ms, so half-millisecond midpoints stay exact.
    pub key2: i64,
    pub kind: StepKind,
    /// Index of the owning action in the temporal plan.
    pub plan_index: Option<usize>,
    pub owner: Option<StepId>,
    pub conds: ConditionSet,
    pub effs: EffectSet,
}

impl SimpleStep {
    pub fn is_overall(&self) -> bool {
        matches!(self.kind, StepKind::Overall | StepKind::Goal)
    }
}

impl fmt::Display for SimpleStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.owner {
            Some(id) => write!(f, "{} {}@{}", self.kind.as_str(), id.signature, SecsDisplay(id.start)),
            None => f.write_str(self.kind.as_str()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplePlan {
    /// INIT first, GOAL last, everything else sorted by time then
    /// START < OVERALL < END then plan order.
    pub steps: Vec<SimpleStep>,
    pub happenings: Vec<Millis>,
}

impl SimplePlan {
    pub const INIT: usize = 0;

    pub fn goal_index(&self) -> usize {
        self.steps.len() - 1
    }

    /// START and END steps whose time equals happening `h`.
    pub fn at_happening(&self, h: usize) -> impl Iterator<Item = usize> + '_ {
        let key = 2 * self.happenings[h].0;
        self.steps
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.kind.is_snap() && s.key2 == key)
            .map(|(i, _)| i)
    }

    /// Index of the happening a step is evaluated against: its own time for
    /// START and END steps, the last happening strictly before it for OVERALL
    /// and GOAL steps. INIT has no anchor.
    pub fn anchor(&self, step: usize) -> Option<usize> {
        let s = &self.steps[step];
        match s.kind {
            StepKind::Init => None,
            StepKind::Start | StepKind::End => self.happenings.binary_search(&s.t).ok(),
            StepKind::Overall | StepKind::Goal => {
                let n = self.happenings.partition_point(|h| 2 * h.0 < s.key2);
                n.checked_sub(1)
            }
        }
    }

    /// Index of the START or END step of plan action `i`.
    pub fn snap_of(&self, plan_index: usize, kind: StepKind) -> Option<usize> {
        self.steps
            .iter()
            .position(|s| s.plan_index == Some(plan_index) && s.kind == kind)
    }
}

/// Closed-world state: a fluent is true iff it is in the set.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorldState(pub BTreeSet<Fluent>);

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn holds(&self, lit: &Literal) -> bool {
        self.0.contains(&lit.fluent) == lit.positive
    }

    pub fn apply_in_place(&mut self, effs: &EffectSet) {
        for l in effs {
            if l.positive {
                self.0.insert(l.fluent.clone());
            } else {
                self.0.remove(&l.fluent);
            }
        }
    }
}

impl From<BTreeSet<Fluent>> for WorldState {
    fn from(s: BTreeSet<Fluent>) -> Self {
        WorldState(s)
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, fl) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{fl}")?;
        }
        f.write_str("}")
    }
}

pub fn apply_effects(state: &WorldState, effs: &EffectSet) -> WorldState {
    let mut out = state.clone();
    out.apply_in_place(effs);
    out
}

pub fn check_conditions(conds: &ConditionSet, state: &WorldState) -> bool {
    conds.iter().all(|l| state.holds(l))
}

/// First literal of `conds` that does not hold, if any.
pub fn first_unmet<'a>(conds: &'a ConditionSet, state: &WorldState) -> Option<&'a Literal> {
    conds.iter().find(|l| !state.holds(l))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSequence {
    pub initial: WorldState,
    /// `states[i]` is the state after every snap step at `happenings[i]`.
    pub states: Vec<WorldState>,
}

impl StateSequence {
    /// The state in force just before happening `h` (the initial state for
    /// the first happening).
    pub fn before(&self, h: usize) -> &WorldState {
        match h.checked_sub(1) {
            Some(p) => &self.states[p],
            None => &self.initial,
        }
    }

    pub fn final_state(&self) -> &WorldState {
        self.states.last().unwrap_or(&self.initial)
    }
}

pub fn happenings(plan: &TemporalPlan) -> Vec<Millis> {
    let set: BTreeSet<Millis> = plan.steps.iter().flat_map(|s| [s.start, s.end()]).collect();
    set.into_iter().collect()
}

pub fn induced_simple_plan(plan: &TemporalPlan, problem: &Problem) -> SimplePlan {
    let hs = happenings(plan);
    let mut body = Vec::new();
    for (i, ta) in plan.steps.iter().enumerate() {
        let owner = Some(ta.id());
        let a = &ta.action;
        body.push((
            i,
            SimpleStep {
                t: ta.start,
                key2: 2 * ta.start.0,
                kind: StepKind::Start,
                plan_index: Some(i),
                owner: owner.clone(),
                conds: a.cond_start.clone(),
                effs: a.eff_start.clone(),
            },
        ));
        if !a.cond_overall.is_empty() {
            let inside: Vec<Millis> = hs
                .iter()
                .copied()
                .filter(|h| *h >= ta.start && *h <= ta.end())
                .collect();
            for w in inside.windows(2) {
                let key2 = w[0].0 + w[1].0;
                body.push((
                    i,
                    SimpleStep {
                        // half-up rounding of key2 / 2
                        t: Millis(key2.div_euclid(2) + key2.rem_euclid(2)),
                        key2,
                        kind: StepKind::Overall,
                        plan_index: Some(i),
                        owner: owner.clone(),
                        conds: a.cond_overall.clone(),
                        effs: LiteralSet::new(),
                    },
                ));
            }
        }
        body.push((
            i,
            SimpleStep {
                t: ta.end(),
                key2: 2 * ta.end().0,
                kind: StepKind::End,
                plan_index: Some(i),
                owner,
                conds: a.cond_end.clone(),
                effs: a.eff_end.clone(),
            },
        ));
    }
    body.sort_by(|(ia, a), (ib, b)| (a.key2, a.kind, ia).cmp(&(b.key2, b.kind, ib)));

    let init_effs = LiteralSet::try_from_literals(problem.init.iter().cloned().map(Literal::pos)).unwrap_or_default();
    let mut steps = Vec::with_capacity(body.len() + 2);
    steps.push(SimpleStep {
        t: Millis(-1),
        key2: -2,
        kind: StepKind::Init,
        plan_index: None,
        owner: None,
        conds: LiteralSet::new(),
        effs: init_effs,
    });
    steps.extend(body.into_iter().map(|(_, s)| s));
    let last = hs.last().copied().unwrap_or(Millis::ZERO);
    steps.push(SimpleStep {
        t: last + Millis(1),
        key2: 2 * last.0 + 1,
        kind: StepKind::Goal,
        plan_index: None,
        owner: None,
        conds: problem.goal.clone(),
        effs: LiteralSet::new(),
    });
    SimplePlan { steps, happenings: hs }
}

pub fn initial_state(problem: &Problem) -> WorldState {
    WorldState(problem.init.clone())
}

pub fn state_sequence(problem: &Problem, sp: &SimplePlan) -> StateSequence {
    let initial = initial_state(problem);
    let mut cur = initial.clone();
    let mut states = Vec::with_capacity(sp.happenings.len());
    for h in 0..sp.happenings.len() {
        for i in sp.at_happening(h) {
            cur.apply_in_place(&sp.steps[i].effs);
        }
        states.push(cur.clone());
    }
    StateSequence { initial, states }
}

/// Searches subsets of `others` (by size, then lexicographically by
/// position) for the first whose effects, applied to `base` in order, make
/// `conds` true. Returns the subset, or `None` if no subset works.
pub fn first_satisfying_subset(conds: &ConditionSet, base: &WorldState, others: &[&EffectSet]) -> Option<Vec<usize>> {
    let m = others.len();
    for size in 0..=m {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let mut x = base.clone();
            for &j in &combo {
                x.apply_in_place(others[j]);
            }
            if check_conditions(conds, &x) {
                return Some(combo);
            }
            // advance to the next combination in lexicographic order
            let mut i = size;
            let advanced = loop {
                if i == 0 {
                    break false;
                }
                i -= 1;
                if combo[i] < m - size + i {
                    combo[i] += 1;
                    for j in i + 1..size {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break true;
                }
            };
            if !advanced {
                break;
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub time_ms: i64,
    pub step: String,
    pub literal: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub failures: Vec<Failure>,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<&Failure> {
        self.failures.first()
    }
}

/// Independent validity check by forward simulation. Snap steps sharing a
/// happening may rely on each other's effects (any subset of the others,
/// applied to the preceding state). OVERALL steps are checked against the
/// state at their midpoint and the goal against the final state.
pub fn validate_plan(problem: &Problem, plan: &TemporalPlan) -> ValidationReport {
    let sp = induced_simple_plan(plan, problem);
    let mut failures = Vec::new();
    let mut cur = initial_state(problem);
    let mut at_happening: Vec<WorldState> = Vec::with_capacity(sp.happenings.len());
    for h in 0..sp.happenings.len() {
        let here: Vec<usize> = sp.at_happening(h).collect();
        for &i in &here {
            let step = &sp.steps[i];
            let others: Vec<&EffectSet> = here.iter().filter(|&&j| j != i).map(|&j| &sp.steps[j].effs).collect();
            if first_satisfying_subset(&step.conds, &cur, &others).is_none() {
                let lit = first_unmet(&step.conds, &cur)
                    .map(|l| format!("{l}"))
                    .unwrap_or_else(|| String::from("(conflicting simultaneous effects)"));
                failures.push(Failure {
                    time_ms: step.t.0,
                    step: format!("{step}"),
                    literal: lit,
                });
            }
        }
        for &i in &here {
            cur.apply_in_place(&sp.steps[i].effs);
        }
        at_happening.push(cur.clone());
    }
    for (i, step) in sp.steps.iter().enumerate() {
        if step.kind != StepKind::Overall {
            continue;
        }
        let Some(h) = sp.anchor(i) else { continue };
        if let Some(l) = first_unmet(&step.conds, &at_happening[h]) {
            failures.push(Failure {
                time_ms: step.t.0,
                step: format!("{step}"),
                literal: format!("{l}"),
            });
        }
    }
    if let Some(l) = first_unmet(&problem.goal, &cur) {
        failures.push(Failure {
            time_ms: sp.steps[sp.goal_index()].t.0,
            step: String::from("GOAL"),
            literal: format!("{l}"),
        });
    }
    failures.sort_by_key(|f| f.time_ms);
    ValidationReport {
        valid: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::matchcellar;
    use alloc::vec;

    fn fl(s: &str) -> Fluent {
        Fluent::parse(s).unwrap()
    }

    #[test]
    fn matchcellar_happenings() {
        let (_, p, plan) = matchcellar();
        let hs: Vec<i64> = happenings(&plan).iter().map(|m| m.0).collect();
        assert_eq!(hs, [0, 1, 2002, 5001, 5002, 8000, 10002]);
        let _ = p;
    }

    #[test]
    fn happenings_trivial() {
        let (_, _, mut plan) = matchcellar();
        plan.steps.truncate(1);
        plan.steps[0].duration = Millis(5000);
        let hs: Vec<i64> = happenings(&plan).iter().map(|m| m.0).collect();
        assert_eq!(hs, [0, 5000]);
        plan.steps.clear();
        assert!(happenings(&plan).is_empty());
    }

    #[test]
    fn matchcellar_simple_plan() {
        let (_, p, plan) = matchcellar();
        let sp = induced_simple_plan(&plan, &p);
        let summary: Vec<(i64, StepKind, Option<usize>)> =
            sp.steps.iter().map(|s| (s.t.0, s.kind, s.plan_index)).collect();
        assert_eq!(
            summary,
            vec![
                (-1, StepKind::Init, None),
                (0, StepKind::Start, Some(0)),
                (1, StepKind::Start, Some(1)),
                (1002, StepKind::Overall, Some(1)),
                (2002, StepKind::Start, Some(2)),
                (3502, StepKind::Overall, Some(1)),
                (5001, StepKind::End, Some(1)),
                (5002, StepKind::Start, Some(3)),
                (6501, StepKind::Overall, Some(3)),
                (8000, StepKind::End, Some(0)),
                (9001, StepKind::Overall, Some(3)),
                (10002, StepKind::End, Some(2)),
                (10002, StepKind::End, Some(3)),
                (10003, StepKind::Goal, None),
            ]
        );
        // the exact midpoint of 1 and 2002 is 1001.5
        assert_eq!(sp.steps[3].key2, 2003);
        assert_eq!(sp.anchor(3), Some(1));
        assert_eq!(sp.anchor(5), Some(2));
        assert_eq!(sp.anchor(sp.goal_index()), Some(6));
    }

    #[test]
    fn overall_steps_sit_strictly_between_happenings() {
        let (_, p, plan) = matchcellar();
        let sp = induced_simple_plan(&plan, &p);
        for (i, s) in sp.steps.iter().enumerate() {
            if s.kind == StepKind::Overall {
                let h = sp.anchor(i).unwrap();
                assert!(2 * sp.happenings[h].0 < s.key2);
                assert!(s.key2 < 2 * sp.happenings[h + 1].0);
            }
        }
    }

    #[test]
    fn duplicate_signatures_have_distinct_owners() {
        let (_, p, mut plan) = matchcellar();
        let mut again = plan.steps[0].clone();
        again.start = Millis(20_000);
        plan.steps = vec![plan.steps[0].clone(), again];
        let sp = induced_simple_plan(&plan, &p);
        let owners: BTreeSet<_> = sp.steps.iter().filter_map(|s| s.owner.clone()).collect();
        assert_eq!(owners.len(), 2);
        assert_eq!(sp.steps.len(), 6);
    }

    #[test]
    fn apply_and_check() {
        let empty = WorldState::new();
        let hf = Literal::pos(fl("(handfree)"));
        let lm = Literal::pos(fl("(light match1)"));
        let set = |ls: Vec<Literal>| LiteralSet::try_from_literals(ls).unwrap();
        let s1 = apply_effects(&empty, &set(vec![hf.clone()]));
        assert!(s1.0.contains(&fl("(handfree)")));
        let s2 = apply_effects(&s1, &set(vec![hf.negated(), lm.clone()]));
        assert_eq!(s2.0.iter().collect::<Vec<_>>(), vec![&fl("(light match1)")]);
        assert_eq!(apply_effects(&s2, &LiteralSet::new()), s2);

        assert!(check_conditions(&LiteralSet::new(), &s2));
        assert!(!check_conditions(&set(vec![lm]), &empty));
        assert!(!check_conditions(&set(vec![hf.negated()]), &s1));
    }

    #[test]
    fn matchcellar_states() {
        let (_, p, plan) = matchcellar();
        let sp = induced_simple_plan(&plan, &p);
        let xs = state_sequence(&p, &sp);
        assert_eq!(xs.states.len(), 7);
        assert!(xs.states[0].0.contains(&fl("(light match1)")));
        let last = xs.final_state();
        assert!(last.0.contains(&fl("(mended fuse1)")));
        assert!(last.0.contains(&fl("(mended fuse2)")));
    }

    #[test]
    fn empty_plan_states() {
        let (_, p, mut plan) = matchcellar();
        plan.steps.clear();
        let sp = induced_simple_plan(&plan, &p);
        let xs = state_sequence(&p, &sp);
        assert!(xs.states.is_empty());
        assert_eq!(xs.initial, initial_state(&p));
        assert_eq!(sp.steps.len(), 2);
        assert_eq!(sp.anchor(1), None);
    }

    #[test]
    fn validation() {
        let (_, p, plan) = matchcellar();
        assert!(validate_plan(&p, &plan).valid);

        let mut broken = plan.clone();
        broken.steps.remove(2);
        let rep = validate_plan(&p, &broken);
        assert!(!rep.valid);
        let first = rep.first_failure().unwrap();
        assert!(first.step.starts_with("OVERALL (mend_fuse fuse2 match2)"), "{first:?}");
        assert_eq!(first.literal, "(light match2)");

        let mut empty = p.clone();
        empty.goal = LiteralSet::new();
        let mut none = plan.clone();
        none.steps.clear();
        assert!(validate_plan(&empty, &none).valid);
    }

    #[test]
    fn subset_enumeration_order() {
        let set = |ls: &[&str]| LiteralSet::try_from_literals(ls.iter().map(|s| Literal::parse(s).unwrap())).unwrap();
        let base = WorldState::new();
        let a = set(&["(p)"]);
        let b = set(&["(q)"]);
        let c = set(&["(p)", "(q)"]);
        assert_eq!(first_satisfying_subset(&set(&[]), &base, &[&a, &b]), Some(vec![]));
        assert_eq!(
            first_satisfying_subset(&set(&["(q)"]), &base, &[&a, &b, &c]),
            Some(vec![1])
        );
        assert_eq!(
            first_satisfying_subset(&set(&["(p)", "(q)"]), &base, &[&a, &b]),
            Some(vec![0, 1])
        );
        assert_eq!(first_satisfying_subset(&set(&["(r)"]), &base, &[&a, &b]), None);
    }
}
