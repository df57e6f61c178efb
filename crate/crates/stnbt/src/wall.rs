//! Wall-clock execution: the tree is settled at a fixed cadence against real
//! elapsed time. Useful with performers that talk to something real; with
//! the simulated performer it reproduces the virtual-clock result, only
//! slower.

use std::thread;
use std::time::{Duration, Instant};

use stnbt_core::bt::BehaviorTree;
use stnbt_core::executor::{ActionPerformer, ExecConfig, ExecutionResult, Executor};
use stnbt_core::pddl::Problem;
use stnbt_core::time::{Millis, SecsDisplay};

#[derive(Clone, Copy, Debug)]
pub struct WallConfig {
    pub tick: Duration,
    /// Give up after this much real time.
    pub timeout: Duration,
}

impl Default for WallConfig {
    fn default() -> Self {
        WallConfig {
            tick: Duration::from_millis(100),
            timeout: Duration::from_secs(3600),
        }
    }
}

pub fn run_wall<P: ActionPerformer>(
    tree: &BehaviorTree,
    problem: &Problem,
    performer: P,
    cfg: ExecConfig,
    wall: WallConfig,
) -> ExecutionResult {
    let mut ex = Executor::new(tree, problem, performer, cfg);
    let t0 = Instant::now();
    loop {
        let elapsed = t0.elapsed();
        ex.set_clock(Millis(elapsed.as_millis() as i64));
        if ex.settle().is_some() {
            return ex.finish(None);
        }
        if elapsed >= wall.timeout {
            let msg = format!("wall-clock timeout at {}", SecsDisplay(ex.clock()));
            return ex.finish(Some(msg));
        }
        thread::sleep(wall.tick);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::compile;
    use stnbt_core::executor::{SimulatedPerformer, TickStatus};
    use stnbt_core::fixtures::MATCHCELLAR;
    use stnbt_core::stn::StnOptions;

    #[test]
    fn short_plan_in_real_time() {
        // matchcellar shrunk a hundredfold so the test takes ~0.1 s
        let (domain, problem, mut plan) = MATCHCELLAR.load().unwrap();
        for s in &mut plan.steps {
            s.start = Millis(s.start.0 / 100);
            s.duration = Millis(s.duration.0 / 100);
        }
        let inst = crate::pipeline::Instance { domain, problem, plan };
        let c = compile(&inst, StnOptions { flexible: true }, true).unwrap();
        let wall = WallConfig {
            tick: Duration::from_millis(5),
            timeout: Duration::from_secs(10),
        };
        let r = run_wall(
            &c.bt,
            &inst.problem,
            SimulatedPerformer::planned(),
            ExecConfig::default(),
            wall,
        );
        assert_eq!(r.status, TickStatus::Success, "{:?}", r.diagnostic);
        assert!(r.makespan.0 >= 100);
    }
}
