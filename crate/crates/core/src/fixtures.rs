//! The two instances used throughout the tests and CLI demos, embedded so
//! they are available without touching the filesystem.

use crate::pddl::{parse_domain, parse_plan, parse_problem, Domain, PddlError, Problem, TemporalPlan};

pub struct Fixture {
    pub name: &'static str,
    pub domain: &'static str,
    pub problem: &'static str,
    pub plan: &'static str,
}

pub const MATCHCELLAR: Fixture = Fixture {
    name: "matchcellar",
    domain: include_str!("../fixtures/matchcellar/domain.pddl"),
    problem: include_str!("../fixtures/matchcellar/problem.pddl"),
    plan: include_str!("../fixtures/matchcellar/plan.txt"),
};

pub const ASSEMBLY: Fixture = Fixture {
    name: "assembly",
    domain: include_str!("../fixtures/assembly/domain.pddl"),
    problem: include_str!("../fixtures/assembly/problem.pddl"),
    plan: include_str!("../fixtures/assembly/plan.txt"),
};

pub const ALL: [Fixture; 2] = [MATCHCELLAR, ASSEMBLY];

impl Fixture {
    pub fn load(&self) -> Result<(Domain, Problem, TemporalPlan), PddlError> {
        let d = parse_domain(self.domain)?;
        let p = parse_problem(self.problem, &d)?;
        let plan = parse_plan(self.plan, &d, &p)?;
        Ok((d, p, plan))
    }
}
