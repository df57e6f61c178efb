use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use stnbt_core::bt::{build_bt, BehaviorTree};
use stnbt_core::executor::DurationDist;
use stnbt_core::fixtures;
use stnbt_core::pddl::{parse_domain, parse_plan, parse_problem, Domain, PddlError, Problem, TemporalPlan};
use stnbt_core::stn::{build_stn, build_stn_unchecked, propagate, DistanceMatrix, Stn, StnError, StnOptions};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: Box<PddlError> },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("unknown fixture `{0}` (known: matchcellar, assembly)")]
    UnknownFixture(String),
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub domain: Domain,
    pub problem: Problem,
    pub plan: TemporalPlan,
}

pub fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parsed<T>(path: &Path, r: Result<T, PddlError>) -> Result<T, LoadError> {
    r.map_err(|source| LoadError::Parse {
        path: path.to_path_buf(),
        source: Box::new(source),
    })
}

/// Reads all three files before parsing any of them, so a missing file is
/// reported even when an earlier one would not parse.
pub fn load_instance(domain: &Path, problem: &Path, plan: &Path) -> Result<Instance, LoadError> {
    let (dt, pt, lt) = (read(domain)?, read(problem)?, read(plan)?);
    let d = parsed(domain, parse_domain(&dt))?;
    let p = parsed(problem, parse_problem(&pt, &d))?;
    let l = parsed(plan, parse_plan(&lt, &d, &p))?;
    Ok(Instance {
        domain: d,
        problem: p,
        plan: l,
    })
}

pub fn load_fixture(name: &str) -> Result<Instance, LoadError> {
    let f = fixtures::ALL
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| LoadError::UnknownFixture(name.to_string()))?;
    let path = PathBuf::from(format!("<fixture {name}>"));
    let (domain, problem, plan) = parsed(&path, f.load())?;
    Ok(Instance { domain, problem, plan })
}

/// Everything the compiler produces for one instance.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub stn: Stn,
    pub dm: DistanceMatrix,
    pub bt: BehaviorTree,
}

/// Builds the network (after the validity check unless `force`), propagates
/// and compiles the tree.
pub fn compile(inst: &Instance, opts: StnOptions, force: bool) -> Result<Compiled, StnError> {
    let stn = if force {
        build_stn_unchecked(&inst.problem, &inst.plan, opts)
    } else {
        build_stn(&inst.problem, &inst.plan, opts)?
    };
    compile_stn(stn)
}

pub fn compile_stn(stn: Stn) -> Result<Compiled, StnError> {
    stn.check_structure()?;
    let dm = propagate(&stn)?;
    let bt = build_bt(&stn, &dm);
    Ok(Compiled { stn, dm, bt })
}

/// Reads a JSON map from signature or action name to a duration model, e.g.
/// `{"move": {"kind": "uniform", "lo": 18000, "hi": 22000}}`.
pub fn load_durations(path: &Path) -> Result<BTreeMap<String, DurationDist>, LoadError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| LoadError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
