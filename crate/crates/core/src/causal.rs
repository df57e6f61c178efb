//! Satisfying and threat relations between steps of the induced simple plan.
//!
//! Both searches walk backward over happenings starting from the step's
//! anchor. Results are indices into [`SimplePlan::steps`]; index 0 is the
//! INIT pseudo-step standing in for the initial state.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::pddl::{EffectSet, Fluent};
use crate::simple_plan::{
    apply_effects, check_conditions, first_satisfying_subset, SimplePlan, StateSequence, WorldState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CausalLinkKind {
    Satisfy,
    Threat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalResult {
    pub step: usize,
    pub supporters: BTreeSet<usize>,
    pub threats: BTreeSet<usize>,
}

impl CausalResult {
    /// Supporters and threats together: every potential parent of `step`.
    pub fn parents(&self) -> BTreeSet<usize> {
        self.supporters.union(&self.threats).copied().collect()
    }
}

/// Symmetric difference of the true fluents of two states.
pub fn state_diff(x: &WorldState, y: &WorldState) -> BTreeSet<Fluent> {
    x.0.symmetric_difference(&y.0).cloned().collect()
}

/// The first state reachable from `x1` by applying the effects of a subset
/// of the other snap steps at happening `h` that satisfies step `a`'s
/// conditions; `x1` itself when none does.
pub fn intermediate_state(a: usize, sp: &SimplePlan, h: usize, x1: &WorldState) -> WorldState {
    let others: Vec<usize> = sp.at_happening(h).filter(|&k| k != a).collect();
    let effs: Vec<&EffectSet> = others.iter().map(|&k| &sp.steps[k].effs).collect();
    match first_satisfying_subset(&sp.steps[a].conds, x1, &effs) {
        Some(subset) => {
            let mut x = x1.clone();
            for j in subset {
                x.apply_in_place(effs[j]);
            }
            x
        }
        None => x1.clone(),
    }
}

pub fn get_satisfy(a: usize, sp: &SimplePlan, xs: &StateSequence) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let conds = &sp.steps[a].conds;
    if let Some(anchor) = sp.anchor(a) {
        for h in (0..=anchor).rev() {
            let x1 = xs.before(h);
            for r in conds {
                if x1.holds(r) {
                    continue;
                }
                for k in sp.at_happening(h) {
                    if k != a && apply_effects(x1, &sp.steps[k].effs).holds(r) {
                        out.insert(k);
                    }
                }
            }
        }
    }
    if conds.iter().any(|r| xs.initial.holds(r)) {
        out.insert(SimplePlan::INIT);
    }
    out
}

pub fn get_threat(a: usize, sp: &SimplePlan, xs: &StateSequence) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let Some(anchor) = sp.anchor(a) else {
        return out;
    };
    let step_a = &sp.steps[a];
    for h in (0..=anchor).rev() {
        let x1 = xs.before(h);
        let x1a = intermediate_state(a, sp, h, x1);
        if !check_conditions(&step_a.conds, &x1a) {
            continue;
        }
        for k in window(sp, h) {
            let step_k = &sp.steps[k];
            // A step never threatens its own action, and an OVERALL step
            // lying after `a` in the window is not something `a` can be
            // ordered after.
            let same_action = step_a.plan_index.is_some() && step_a.plan_index == step_k.plan_index;
            if k == a || same_action || step_k.key2 > step_a.key2 {
                continue;
            }
            let x1k = intermediate_state(k, sp, h, x1);
            // mirror of the guard on `a`: a condition that cannot hold here
            // anyway is not something `a` threatens
            if !check_conditions(&step_k.conds, &x1k) {
                continue;
            }
            let x_hat = apply_effects(&x1k, &step_a.effs);
            let x_bar = apply_effects(&x1a, &step_k.effs);
            // (i) a breaks k, (ii) k breaks a, (iii) no moving targets
            let breaks = (!step_a.is_overall() && !check_conditions(&step_k.conds, &x_hat))
                || (!step_k.is_overall() && !check_conditions(&step_a.conds, &x_bar));
            let threat = if breaks {
                true
            } else if !step_a.is_overall() && !step_k.is_overall() {
                let moved_by_a = state_diff(&x1k, &x_hat);
                let moved_by_k = state_diff(&x1a, &x_bar);
                !moved_by_a.is_disjoint(&moved_by_k)
            } else {
                false
            };
            if threat {
                out.insert(k);
            }
        }
    }
    out
}

/// Steps in `[happenings[h], happenings[h + 1])`: the snap steps at `h`
/// plus the OVERALL steps between `h` and the next happening.
fn window(sp: &SimplePlan, h: usize) -> impl Iterator<Item = usize> + '_ {
    let lo = 2 * sp.happenings[h].0;
    let hi = sp.happenings.get(h + 1).map(|t| 2 * t.0);
    sp.steps.iter().enumerate().filter_map(move |(i, s)| {
        let inside = s.key2 >= lo && hi.is_none_or(|hi| s.key2 < hi);
        let eligible = s.kind.is_snap() || s.kind == crate::simple_plan::StepKind::Overall;
        (inside && eligible).then_some(i)
    })
}

/// Runs both searches for every step except INIT. The GOAL step only gets
/// supporters.
pub fn analyze(sp: &SimplePlan, xs: &StateSequence) -> Vec<CausalResult> {
    let goal = sp.goal_index();
    (1..sp.steps.len())
        .map(|i| CausalResult {
            step: i,
            supporters: get_satisfy(i, sp, xs),
            threats: if i == goal {
                BTreeSet::new()
            } else {
                get_threat(i, sp, xs)
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::Literal;
    use crate::simple_plan::{induced_simple_plan, state_sequence, StepKind};
    use crate::testutil::matchcellar;
    use alloc::string::String;
    use alloc::vec;

    fn label(sp: &SimplePlan, i: usize) -> String {
        alloc::format!("{}", sp.steps[i])
    }

    fn labels(sp: &SimplePlan, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&i| label(sp, i)).collect()
    }

    fn setup() -> (SimplePlan, StateSequence) {
        let (_, p, plan) = matchcellar();
        let sp = induced_simple_plan(&plan, &p);
        let xs = state_sequence(&p, &sp);
        (sp, xs)
    }

    fn find(sp: &SimplePlan, kind: StepKind, plan_index: usize) -> usize {
        sp.steps
            .iter()
            .position(|s| s.kind == kind && s.plan_index == Some(plan_index))
            .unwrap()
    }

    #[test]
    fn satisfy_matchcellar() {
        let (sp, xs) = setup();
        let mend1 = find(&sp, StepKind::Start, 1);
        let light1 = find(&sp, StepKind::Start, 0);
        // (handfree) holds initially
        assert_eq!(get_satisfy(mend1, &sp, &xs), BTreeSet::from([SimplePlan::INIT]));
        // (light match1) is an over-all condition, so the match supports the
        // OVERALL steps of the mend
        let overall1 = find(&sp, StepKind::Overall, 1);
        assert_eq!(get_satisfy(overall1, &sp, &xs), BTreeSet::from([light1]));

        assert_eq!(get_satisfy(light1, &sp, &xs), BTreeSet::from([SimplePlan::INIT]));

        let mend2 = find(&sp, StepKind::Start, 3);
        let end_mend1 = find(&sp, StepKind::End, 1);
        let light2 = find(&sp, StepKind::Start, 2);
        assert_eq!(
            get_satisfy(mend2, &sp, &xs),
            BTreeSet::from([SimplePlan::INIT, end_mend1])
        );
        let overall2 = find(&sp, StepKind::Overall, 3);
        assert_eq!(get_satisfy(overall2, &sp, &xs), BTreeSet::from([light2]));
    }

    #[test]
    fn satisfy_empty_conditions() {
        let (sp, xs) = setup();
        let end_light1 = find(&sp, StepKind::End, 0);
        assert!(get_satisfy(end_light1, &sp, &xs).is_empty());
    }

    #[test]
    fn threats_matchcellar() {
        let (sp, xs) = setup();
        let end_light1 = find(&sp, StepKind::End, 0);
        // removing (light match1) threatens mend_fuse fuse1's over-all check
        assert_eq!(
            labels(&sp, &get_threat(end_light1, &sp, &xs)),
            vec![
                String::from("OVERALL (mend_fuse fuse1 match1)@0.001"),
                String::from("OVERALL (mend_fuse fuse1 match1)@0.001"),
            ]
        );
        let mend2 = find(&sp, StepKind::Start, 3);
        let mend1 = find(&sp, StepKind::Start, 1);
        // both grab (handfree)
        assert!(get_threat(mend2, &sp, &xs).contains(&mend1));
    }

    #[test]
    fn never_self() {
        let (sp, xs) = setup();
        for r in analyze(&sp, &xs) {
            assert!(!r.supporters.contains(&r.step));
            assert!(!r.threats.contains(&r.step));
        }
    }

    #[test]
    fn supporters_precede_anchor() {
        let (sp, xs) = setup();
        for r in analyze(&sp, &xs) {
            let anchor = sp.anchor(r.step).map(|h| sp.happenings[h]);
            for s in &r.supporters {
                if *s != SimplePlan::INIT {
                    assert!(sp.steps[*s].t <= anchor.unwrap());
                }
            }
        }
    }

    #[test]
    fn disjoint_fluents_never_threaten() {
        let (sp, xs) = setup();
        let light1 = find(&sp, StepKind::Start, 0);
        let light2 = find(&sp, StepKind::Start, 2);
        assert!(!get_threat(light2, &sp, &xs).contains(&light1));
    }

    const PQ_DOMAIN: &str = "(define (domain pq) (:requirements :durative-actions)
      (:predicates (p) (q))
      (:durative-action make_p :parameters () :duration (= ?duration 1)
        :effect (and (at start (p))))
      (:durative-action make_q :parameters () :duration (= ?duration 1)
        :effect (and (at start (q))))
      (:durative-action use_pq :parameters () :duration (= ?duration 1)
        :condition (and (at start (p)) (at start (q)))))";

    fn pq(plan_text: &str) -> (SimplePlan, StateSequence) {
        use crate::pddl::{parse_domain, parse_plan, parse_problem};
        let d = parse_domain(PQ_DOMAIN).unwrap();
        let p = parse_problem("(define (problem x) (:domain pq) (:init) (:goal (and)))", &d).unwrap();
        let plan = parse_plan(plan_text, &d, &p).unwrap();
        let sp = induced_simple_plan(&plan, &p);
        let xs = state_sequence(&p, &sp);
        (sp, xs)
    }

    #[test]
    fn intermediate_states() {
        let (sp, xs) = pq("0: (make_p) [1]\n0: (make_q) [1]\n0: (use_pq) [1]");
        let use_pq = find(&sp, StepKind::Start, 2);
        let x1 = xs.before(0).clone();
        let x = intermediate_state(use_pq, &sp, 0, &x1);
        assert!(x.holds(&Literal::parse("(p)").unwrap()));
        assert!(x.holds(&Literal::parse("(q)").unwrap()));
        // nothing needed: the empty subset wins
        let make_p = find(&sp, StepKind::Start, 0);
        assert_eq!(intermediate_state(make_p, &sp, 0, &x1), x1);

        // without (make_q) the conditions are unreachable and X1 comes back
        let (sp, xs) = pq("0: (make_p) [1]\n0: (use_pq) [1]");
        let use_pq = find(&sp, StepKind::Start, 1);
        let x1 = xs.before(0).clone();
        assert_eq!(intermediate_state(use_pq, &sp, 0, &x1), x1);
    }

    #[test]
    fn same_happening_support() {
        let (sp, xs) = pq("0: (make_p) [1]\n0: (make_q) [1]\n0: (use_pq) [1]");
        let use_pq = find(&sp, StepKind::Start, 2);
        let expected = BTreeSet::from([find(&sp, StepKind::Start, 0), find(&sp, StepKind::Start, 1)]);
        assert_eq!(get_satisfy(use_pq, &sp, &xs), expected);
    }

    #[test]
    fn diff() {
        let p = Fluent::parse("(p)").unwrap();
        let q = Fluent::parse("(q)").unwrap();
        let s = |fs: &[&Fluent]| WorldState(fs.iter().map(|f| (*f).clone()).collect());
        assert!(state_diff(&s(&[&p]), &s(&[&p])).is_empty());
        assert_eq!(state_diff(&s(&[&p]), &s(&[])), BTreeSet::from([p.clone()]));
        assert_eq!(state_diff(&s(&[&p]), &s(&[&q])), BTreeSet::from([p, q]));
    }
}
