//! End-to-end checks through the public API only: parse, validate, build
//! the network, compile the tree and run it.

use std::collections::BTreeMap;

use stnbt_core::bt::compile;
use stnbt_core::executor::{
    run_virtual, ActionPerformer, ExecConfig, PollStatus, SimulatedPerformer, TickStatus, Token,
};
use stnbt_core::fixtures::{ASSEMBLY, MATCHCELLAR};
use stnbt_core::generate::{generate, GenConfig};
use stnbt_core::simple_plan::validate_plan;
use stnbt_core::stn::{build_stn, StnOptions};
use stnbt_core::Millis;

#[test]
fn generator_output_always_validates() {
    for seed in 0..500 {
        let cfg = GenConfig {
            actions: 1 + (seed % 6) as usize,
            fluents: 1 + (seed % 7) as usize,
            length: (seed % 8) as usize,
            seed,
            ..GenConfig::default()
        };
        let (_, p, plan) = generate(&cfg).load().unwrap();
        let rep = validate_plan(&p, &plan);
        assert!(rep.valid, "seed {seed}: {:?}", rep.first_failure());
    }
}

#[test]
fn generator_is_reproducible_and_zero_length_is_empty() {
    let cfg = GenConfig::default();
    assert_eq!(generate(&cfg), generate(&cfg));
    let empty = generate(&GenConfig { length: 0, ..cfg });
    assert!(empty.steps.is_empty());
    assert_eq!(empty.plan_text(), "");
}

#[test]
fn fixtures_run_to_success_in_both_modes() {
    for fx in [MATCHCELLAR, ASSEMBLY] {
        let (_, p, plan) = fx.load().unwrap();
        for flexible in [false, true] {
            let g = build_stn(&p, &plan, StnOptions { flexible }).unwrap();
            let (tree, _) = compile(&g).unwrap();
            let r = run_virtual(&tree, &p, SimulatedPerformer::planned(), ExecConfig::default());
            assert_eq!(r.status, TickStatus::Success, "{} {:?}", fx.name, r.diagnostic);
            assert_eq!(r.actions.len(), plan.steps.len());
        }
    }
}

/// A performer outside the crate: every action takes exactly its planned
/// duration, and every start is logged.
#[derive(Default)]
struct Logging {
    started: Vec<(String, Millis)>,
    ends: Vec<Millis>,
}

impl ActionPerformer for Logging {
    fn start(&mut self, signature: &str, planned: Millis, clock: Millis) -> Token {
        self.started.push((signature.to_string(), clock));
        self.ends.push(clock + planned);
        self.ends.len() - 1
    }

    fn poll(&mut self, token: Token, clock: Millis) -> PollStatus {
        if clock >= self.ends[token] {
            PollStatus::Done
        } else {
            PollStatus::Running
        }
    }

    fn next_event_after(&self, clock: Millis) -> Option<Millis> {
        self.ends.iter().copied().filter(|&e| e > clock).min()
    }
}

#[test]
fn custom_performer_sees_planned_dispatch_times() {
    let (_, p, plan) = ASSEMBLY.load().unwrap();
    let g = build_stn(&p, &plan, StnOptions::default()).unwrap();
    let (tree, _) = compile(&g).unwrap();
    let mut perf = Logging::default();
    let r = run_virtual(&tree, &p, &mut perf, ExecConfig::default());
    assert_eq!(r.status, TickStatus::Success);
    let planned: BTreeMap<Millis, &str> = plan
        .steps
        .iter()
        .map(|s| (s.start, s.action.signature.as_str()))
        .collect();
    assert_eq!(perf.started.len(), planned.len());
    for (sig, at) in &perf.started {
        assert_eq!(planned.get(at), Some(&sig.as_str()), "{sig} dispatched at {at}");
    }
}

#[test]
fn performer_failure_fails_the_run() {
    let (_, p, plan) = MATCHCELLAR.load().unwrap();
    let g = build_stn(&p, &plan, StnOptions::default()).unwrap();
    let (tree, _) = compile(&g).unwrap();
    let mut cfg = BTreeMap::new();
    cfg.insert("light_match".to_string(), stnbt_core::executor::DurationDist::Fail);
    let r = run_virtual(&tree, &p, SimulatedPerformer::new(cfg, 0), ExecConfig::default());
    assert_eq!(r.status, TickStatus::Failure);
    assert!(r.trace.iter().any(|t| t.event == "performer_failed"));
}
