//! Random planning instances that are valid by construction.
//!
//! Instances use zero-arity fluents `f0..fN` and parameterless actions
//! `a0..aM` with fixed durations. The generator first fixes effects and a
//! schedule with pairwise distinct happenings, simulates the plan, and only
//! then picks conditions from literals that hold wherever they are checked.
//! The goal is drawn from the final state.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pddl::{
    parse_domain, parse_plan, parse_problem, Domain, Fluent, Literal, LiteralSet, PddlError, Problem, TemporalPlan,
};
use crate::time::{Millis, SecsDisplay};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub actions: usize,
    pub fluents: usize,
    pub length: usize,
    pub min_duration: Millis,
    pub max_duration: Millis,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            actions: 4,
            fluents: 5,
            length: 4,
            min_duration: Millis(1000),
            max_duration: Millis(5000),
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenAction {
    pub duration: Millis,
    pub cond_start: LiteralSet,
    pub cond_overall: LiteralSet,
    pub cond_end: LiteralSet,
    pub eff_start: LiteralSet,
    pub eff_end: LiteralSet,
}

/// A generated instance in model form; render it to PDDL with the
/// `*_text` methods.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenInstance {
    pub name: String,
    pub fluents: usize,
    pub actions: Vec<GenAction>,
    pub init: BTreeSet<usize>,
    pub goal: LiteralSet,
    /// (action index, start)
    pub steps: Vec<(usize, Millis)>,
}

fn fluent(i: usize) -> Fluent {
    Fluent::new(format!("f{i}"), Vec::new())
}

fn lit(i: usize, positive: bool) -> Literal {
    if positive {
        Literal::pos(fluent(i))
    } else {
        Literal::neg(fluent(i))
    }
}

fn fluent_index(l: &Literal) -> usize {
    l.fluent.name[1..].parse().unwrap_or(0)
}

fn random_effects(rng: &mut ChaCha8Rng, fluents: usize) -> LiteralSet {
    let mut s = LiteralSet::new();
    let n = rng.gen_range(0..=2.min(fluents));
    let mut idx: Vec<usize> = (0..fluents).collect();
    idx.shuffle(rng);
    for &i in idx.iter().take(n) {
        let _ = s.insert(lit(i, rng.gen_bool(0.5)));
    }
    s
}

/// Random subset of `candidates`, each kept with probability one half and
/// at most `cap` in total. A contradictory draw (possible only for unused
/// actions, whose pool is every literal) yields the empty set.
fn pick(rng: &mut ChaCha8Rng, candidates: &[Literal], cap: usize) -> LiteralSet {
    let mut c = candidates.to_vec();
    c.shuffle(rng);
    let chosen = c.into_iter().filter(|_| rng.gen_bool(0.5)).take(cap);
    LiteralSet::try_from_literals(chosen).unwrap_or_default()
}

fn state_literals(state: &BTreeSet<usize>, fluents: usize) -> Vec<Literal> {
    (0..fluents).map(|i| lit(i, state.contains(&i))).collect()
}

fn apply(state: &mut BTreeSet<usize>, effs: &LiteralSet) {
    for l in effs {
        let i = fluent_index(l);
        if l.positive {
            state.insert(i);
        } else {
            state.remove(&i);
        }
    }
}

pub fn generate(cfg: &GenConfig) -> GenInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nf = cfg.fluents.max(1);
    let na = cfg.actions.max(1);
    let lo = cfg.min_duration.0.max(1);
    let hi = cfg.max_duration.0.max(lo);
    let mut actions: Vec<GenAction> = (0..na)
        .map(|_| GenAction {
            duration: Millis(rng.gen_range(lo..=hi)),
            cond_start: LiteralSet::new(),
            cond_overall: LiteralSet::new(),
            cond_end: LiteralSet::new(),
            eff_start: random_effects(&mut rng, nf),
            eff_end: random_effects(&mut rng, nf),
        })
        .collect();
    let init: BTreeSet<usize> = (0..nf).filter(|_| rng.gen_bool(0.5)).collect();

    // schedule with pairwise distinct happenings
    let horizon = (cfg.length as i64 * hi / 2).max(1);
    let mut steps: Vec<(usize, Millis)> = Vec::new();
    let mut taken: BTreeSet<i64> = BTreeSet::new();
    while steps.len() < cfg.length {
        let a = rng.gen_range(0..na);
        let t = rng.gen_range(0..horizon);
        let e = t + actions[a].duration.0;
        if taken.contains(&t) || taken.contains(&e) {
            continue;
        }
        taken.insert(t);
        taken.insert(e);
        steps.push((a, Millis(t)));
    }
    steps.sort_by_key(|&(a, t)| (t, a));

    // simulate effects only; states[j] is the state after happening j
    let happenings: Vec<i64> = taken.iter().copied().collect();
    let mut states = Vec::with_capacity(happenings.len());
    let mut x = init.clone();
    for &h in &happenings {
        for &(a, t) in &steps {
            if t.0 == h {
                apply(&mut x, &actions[a].eff_start);
            }
            if t.0 + actions[a].duration.0 == h {
                apply(&mut x, &actions[a].eff_end);
            }
        }
        states.push(x.clone());
    }
    let before = |h: i64| -> BTreeSet<usize> {
        match happenings.iter().position(|&x| x == h) {
            Some(0) | None => init.clone(),
            Some(j) => states[j - 1].clone(),
        }
    };

    // conditions: literals true at every occurrence
    for (ai, act) in actions.iter_mut().enumerate() {
        let occ: Vec<i64> = steps.iter().filter(|s| s.0 == ai).map(|s| s.1 .0).collect();
        let d = act.duration.0;
        let mut start_ok: Option<BTreeSet<Literal>> = None;
        let mut over_ok: Option<BTreeSet<Literal>> = None;
        let mut end_ok: Option<BTreeSet<Literal>> = None;
        let meet = |acc: &mut Option<BTreeSet<Literal>>, lits: Vec<Literal>| {
            let set: BTreeSet<Literal> = lits.into_iter().collect();
            *acc = Some(match acc.take() {
                None => set,
                Some(a) => a.intersection(&set).cloned().collect(),
            });
        };
        for &t in &occ {
            meet(&mut start_ok, state_literals(&before(t), nf));
            meet(&mut end_ok, state_literals(&before(t + d), nf));
            for (j, &h) in happenings.iter().enumerate() {
                if h >= t && h < t + d {
                    meet(&mut over_ok, state_literals(&states[j], nf));
                }
            }
        }
        let all: Vec<Literal> = (0..nf).flat_map(|i| [lit(i, true), lit(i, false)]).collect();
        let pool = |acc: Option<BTreeSet<Literal>>| acc.map_or_else(|| all.clone(), |s| s.into_iter().collect());
        act.cond_start = pick(&mut rng, &pool(start_ok), 2);
        act.cond_overall = pick(&mut rng, &pool(over_ok), 1);
        act.cond_end = pick(&mut rng, &pool(end_ok), 2);
    }
    let final_state = states.last().cloned().unwrap_or_else(|| init.clone());
    let goal = pick(&mut rng, &state_literals(&final_state, nf), 3);

    GenInstance {
        name: format!("gen-{}", cfg.seed),
        fluents: nf,
        actions,
        init,
        goal,
        steps,
    }
}

fn and_block(out: &mut String, parts: &[(&str, &LiteralSet)]) {
    out.push_str("(and");
    for (tag, set) in parts {
        for l in set.iter() {
            let _ = write!(out, " ({tag} {l})");
        }
    }
    out.push(')');
}

impl GenInstance {
    pub fn domain_text(&self) -> String {
        let mut s = String::from(
            "(define (domain gen)\n  (:requirements :durative-actions :negative-preconditions)\n  (:predicates",
        );
        for i in 0..self.fluents {
            let _ = write!(s, " (f{i})");
        }
        s.push_str(")\n");
        for (i, a) in self.actions.iter().enumerate() {
            let _ = write!(
                s,
                "  (:durative-action a{i}\n    :parameters ()\n    :duration (= ?duration {})\n    :condition ",
                SecsDisplay(a.duration)
            );
            and_block(
                &mut s,
                &[
                    ("at start", &a.cond_start),
                    ("over all", &a.cond_overall),
                    ("at end", &a.cond_end),
                ],
            );
            s.push_str("\n    :effect ");
            and_block(&mut s, &[("at start", &a.eff_start), ("at end", &a.eff_end)]);
            s.push_str(")\n");
        }
        s.push_str(")\n");
        s
    }

    pub fn problem_text(&self) -> String {
        let mut s = format!("(define (problem {})\n  (:domain gen)\n  (:init", self.name);
        for i in &self.init {
            let _ = write!(s, " (f{i})");
        }
        s.push_str(")\n  (:goal (and");
        for l in self.goal.iter() {
            let _ = write!(s, " {l}");
        }
        s.push_str(")))\n");
        s
    }

    pub fn plan_text(&self) -> String {
        let mut s = String::new();
        for &(a, t) in &self.steps {
            let _ = writeln!(
                s,
                "{}: (a{a})  [{}]",
                SecsDisplay(t),
                SecsDisplay(self.actions[a].duration)
            );
        }
        s
    }

    /// Renders and re-parses the instance.
    pub fn load(&self) -> Result<(Domain, Problem, TemporalPlan), PddlError> {
        let d = parse_domain(&self.domain_text())?;
        let p = parse_problem(&self.problem_text(), &d)?;
        let plan = parse_plan(&self.plan_text(), &d, &p)?;
        Ok((d, p, plan))
    }

    /// A copy with exactly one literal changed: removed from, added to or
    /// negated in one condition, effect or goal set. Sets stay
    /// contradiction-free.
    pub fn mutate(&self, seed: u64) -> GenInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let mut m = self.clone();
            let slot = rng.gen_range(0..self.actions.len() * 5 + 1);
            let set: &mut LiteralSet = if slot == self.actions.len() * 5 {
                &mut m.goal
            } else {
                let a = &mut m.actions[slot / 5];
                match slot % 5 {
                    0 => &mut a.cond_start,
                    1 => &mut a.cond_overall,
                    2 => &mut a.cond_end,
                    3 => &mut a.eff_start,
                    _ => &mut a.eff_end,
                }
            };
            let existing: Vec<Literal> = set.iter().cloned().collect();
            let changed = match rng.gen_range(0..3) {
                0 if !existing.is_empty() => {
                    let l = existing.choose(&mut rng).cloned().unwrap_or_else(|| lit(0, true));
                    set.remove(&l)
                }
                1 if !existing.is_empty() => {
                    let l = existing.choose(&mut rng).cloned().unwrap_or_else(|| lit(0, true));
                    set.remove(&l);
                    set.insert(l.negated()).is_ok()
                }
                _ => {
                    let l = lit(rng.gen_range(0..self.fluents), rng.gen_bool(0.5));
                    !set.contains(&l) && set.insert(l).is_ok()
                }
            };
            if changed && m != *self {
                return m;
            }
        }
    }
}
