//! Batches of seeded simulated runs and their makespan statistics.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use stnbt_core::bt::BehaviorTree;
use stnbt_core::executor::{
    run_virtual, ActionRecord, DurationDist, ExecConfig, ExecutionResult, SimulatedPerformer, TickStatus,
};
use stnbt_core::pddl::{Problem, TemporalPlan};

/// Makespan summary in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub stdev: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
}

impl Stats {
    /// Sample standard deviation (n - 1); zero for a single sample.
    pub fn of(xs: &[f64]) -> Option<Stats> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        };
        Some(Stats {
            mean,
            stdev: var.sqrt(),
            median,
            max: sorted[sorted.len() - 1],
            min: sorted[0],
        })
    }
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>10} {:>10} {:>10} {:>10} {:>10}",
            "Mean", "Stdev", "Median", "Max", "Min"
        )?;
        writeln!(
            f,
            "{:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            self.mean, self.stdev, self.median, self.max, self.min
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub runs: usize,
    pub failures: usize,
    /// Over successful runs only; `None` when every run failed.
    pub stats: Option<Stats>,
    /// Sum of expected action durations, i.e. the makespan of executing the
    /// plan one action at a time.
    pub sequential_baseline: f64,
    #[serde(skip)]
    pub results: Vec<ExecutionResult>,
}

/// Expected duration of one step in milliseconds.
pub fn expected_ms(dist: &DurationDist, planned: i64) -> f64 {
    match *dist {
        DurationDist::Planned | DurationDist::Fail => planned as f64,
        DurationDist::Fixed { ms } => ms as f64,
        DurationDist::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
        DurationDist::Normal { mean, .. } => mean as f64,
    }
}

/// Looks a step up the same way the simulated performer does: signature
/// first, then action name, else planned.
fn dist_for<'a>(config: &'a BTreeMap<String, DurationDist>, signature: &str) -> &'a DurationDist {
    let name = signature.trim_start_matches('(').split([' ', ')']).next().unwrap_or("");
    config
        .get(signature)
        .or_else(|| config.get(name))
        .unwrap_or(&DurationDist::Planned)
}

pub fn sequential_baseline(plan: &TemporalPlan, config: &BTreeMap<String, DurationDist>) -> f64 {
    plan.steps
        .iter()
        .map(|s| expected_ms(dist_for(config, &s.action.signature), s.duration.0))
        .sum::<f64>()
        / 1000.0
}

/// Runs `n` simulations with seeds `seed, seed + 1, ...`.
pub fn bench(
    tree: &BehaviorTree,
    problem: &Problem,
    plan: &TemporalPlan,
    config: &BTreeMap<String, DurationDist>,
    exec: ExecConfig,
    n: usize,
    seed: u64,
) -> BenchReport {
    let results: Vec<ExecutionResult> = (0..n as u64)
        .map(|i| run_virtual(tree, problem, SimulatedPerformer::new(config.clone(), seed + i), exec))
        .collect();
    let ok: Vec<f64> = results
        .iter()
        .filter(|r| r.status == TickStatus::Success)
        .map(|r| r.makespan.as_secs_f64())
        .collect();
    BenchReport {
        runs: n,
        failures: n - ok.len(),
        stats: Stats::of(&ok),
        sequential_baseline: sequential_baseline(plan, config),
        results,
    }
}

fn overlaps(a: &ActionRecord, b: &ActionRecord) -> bool {
    match (a.end, b.end) {
        (Some(ae), Some(be)) => a.start < be && b.start < ae,
        _ => false,
    }
}

fn name_of(sig: &str) -> &str {
    sig.trim_start_matches('(').split([' ', ')']).next().unwrap_or("")
}

/// True when every action named in `who` ran at least partly alongside some
/// action named `with`. Vacuously true when there is no such action.
pub fn all_overlap(actions: &[ActionRecord], who: &[&str], with: &str) -> bool {
    actions
        .iter()
        .filter(|a| who.contains(&name_of(&a.signature)))
        .all(|a| actions.iter().any(|b| name_of(&b.signature) == with && overlaps(a, b)))
}
