use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stnbt::bench::{all_overlap, bench};
use stnbt::formats::{bt_xml, causal_json, stn_from_json, stn_to_json, svg, trace_jsonl};
use stnbt::pipeline::{
    compile, compile_stn, load_durations, load_fixture, load_instance, read, Compiled, Instance, LoadError,
};
use stnbt::wall::{run_wall, WallConfig};
use stnbt_core::bt;
use stnbt_core::executor::{
    gantt_text, run_virtual, DurationDist, ExecConfig, ExecutionResult, SimulatedPerformer, TickStatus,
};
use stnbt_core::fixtures;
use stnbt_core::generate::{generate, GenConfig};
use stnbt_core::simple_plan::validate_plan;
use stnbt_core::stn::{self, StnError, StnOptions};
use stnbt_core::time::{Millis, SecsDisplay};

const OK: u8 = 0;
const FAILED: u8 = 1;
const ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "stnbt",
    version,
    about = "Compile temporal plans into behavior trees and run them"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the STN and behavior tree and write the requested artifacts.
    Compile(CompileArgs),
    /// Check the plan against the problem by forward simulation.
    Validate(ValidateArgs),
    /// Compile, then execute against a simulated performer.
    Execute(ExecuteArgs),
    /// Write random valid instances.
    Generate(GenerateArgs),
    /// Run seeded simulations and summarise makespans.
    Bench(BenchArgs),
    /// List the built-in instances or write one to disk.
    Fixtures(FixturesArgs),
}

#[derive(Args, Clone)]
struct Inputs {
    #[arg(long, requires_all = ["problem", "plan"], conflicts_with = "fixture")]
    domain: Option<PathBuf>,
    #[arg(long, requires_all = ["domain", "plan"])]
    problem: Option<PathBuf>,
    #[arg(long, requires_all = ["domain", "problem"])]
    plan: Option<PathBuf>,
    /// Use a built-in instance instead of files.
    #[arg(long)]
    fixture: Option<String>,
}

impl Inputs {
    fn load(&self) -> Result<Instance, LoadError> {
        match (&self.fixture, &self.domain, &self.problem, &self.plan) {
            (Some(name), ..) => load_fixture(name),
            (None, Some(d), Some(p), Some(l)) => load_instance(d, p, l),
            _ => Err(LoadError::Format {
                path: PathBuf::from("<arguments>"),
                message: "give --domain, --problem and --plan, or --fixture".into(),
            }),
        }
    }
}

#[derive(Args, Clone, Copy)]
struct Mode {
    /// Let actions start later than planned (root links become [t, inf)).
    #[arg(long)]
    flexible: bool,
    /// Compile even if the plan does not validate.
    #[arg(long)]
    force: bool,
}

impl Mode {
    fn opts(self) -> StnOptions {
        StnOptions {
            flexible: self.flexible,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Artifact {
    #[value(name = "stn.dot")]
    StnDot,
    #[value(name = "stn.json")]
    StnJson,
    #[value(name = "bt.xml")]
    BtXml,
    #[value(name = "bt.dot")]
    BtDot,
    #[value(name = "causal.json")]
    CausalJson,
    #[value(name = "trace.jsonl")]
    TraceJsonl,
    #[value(name = "gantt.svg")]
    GanttSvg,
}

impl Artifact {
    fn file_name(self) -> &'static str {
        match self {
            Artifact::StnDot => "stn.dot",
            Artifact::StnJson => "stn.json",
            Artifact::BtXml => "bt.xml",
            Artifact::BtDot => "bt.dot",
            Artifact::CausalJson => "causal.json",
            Artifact::TraceJsonl => "trace.jsonl",
            Artifact::GanttSvg => "gantt.svg",
        }
    }
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    mode: Mode,
    /// Skip the plan and compile a network read from JSON.
    #[arg(long, conflicts_with_all = ["domain", "fixture"])]
    stn_in: Option<PathBuf>,
    /// Artifacts to write; defaults to stn.dot, stn.json, bt.xml and bt.dot.
    #[arg(long, value_enum)]
    emit: Vec<Artifact>,
    /// Output directory. Without it the tree outline goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Clock {
    Virtual,
    Wall,
}

#[derive(Args)]
struct RunArgs {
    /// Check over-all conditions at every instant, not just at the end.
    #[arg(long)]
    monitor_overall: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON map from signature or action name to a duration model.
    #[arg(long)]
    durations: Option<PathBuf>,
}

impl RunArgs {
    fn exec(&self) -> ExecConfig {
        ExecConfig {
            monitor_overall: self.monitor_overall,
            ..ExecConfig::default()
        }
    }

    fn durations(&self) -> Result<BTreeMap<String, DurationDist>, LoadError> {
        match &self.durations {
            Some(p) => load_durations(p),
            None => Ok(BTreeMap::new()),
        }
    }
}

#[derive(Args)]
struct ExecuteArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    mode: Mode,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value = "virtual")]
    clock: Clock,
    /// Wall-clock settle cadence.
    #[arg(long, default_value_t = 100)]
    tick_ms: u64,
    #[arg(long, value_enum)]
    emit: Vec<Artifact>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the result as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 4)]
    actions: usize,
    #[arg(long, default_value_t = 5)]
    fluents: usize,
    #[arg(long, default_value_t = 4)]
    length: usize,
    #[arg(long, default_value_t = 1000)]
    min_duration_ms: i64,
    #[arg(long, default_value_t = 5000)]
    max_duration_ms: i64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of instances; seeds run upward from --seed.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Also write a one-literal mutant of each instance.
    #[arg(long)]
    mutate: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    mode: Mode,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FixturesArgs {
    /// Fixture to write; lists the fixtures when omitted.
    name: Option<String>,
    #[arg(long, requires = "name")]
    out: Option<PathBuf>,
}

/// Error carrying its exit status.
struct Fail(u8, String);

impl From<LoadError> for Fail {
    fn from(e: LoadError) -> Self {
        Fail(ERROR, e.to_string())
    }
}

impl From<StnError> for Fail {
    fn from(e: StnError) -> Self {
        let code = if matches!(e, StnError::InvalidPlan(_)) {
            FAILED
        } else {
            ERROR
        };
        Fail(code, e.to_string())
    }
}

fn io(path: &Path, e: std::io::Error) -> Fail {
    Fail(ERROR, format!("cannot write {}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| io(path, e))
}

fn render(a: Artifact, c: &Compiled, inst: Option<&Instance>, run: Option<&ExecutionResult>) -> Option<String> {
    Some(match a {
        Artifact::StnDot => stn::to_dot(&c.stn),
        Artifact::StnJson => stn_to_json(&c.stn),
        Artifact::BtXml => bt_xml::to_xml(&c.bt),
        Artifact::BtDot => bt::to_dot(&c.bt),
        Artifact::CausalJson => {
            let i = inst?;
            causal_json(&i.problem, &i.plan)
        }
        Artifact::TraceJsonl => trace_jsonl(&run?.trace),
        Artifact::GanttSvg => svg::gantt_svg(&run?.actions),
    })
}

fn emit_all(
    emit: &[Artifact],
    out: &Path,
    c: &Compiled,
    inst: Option<&Instance>,
    run: Option<&ExecutionResult>,
) -> Result<(), Fail> {
    for &a in emit {
        let text = render(a, c, inst, run)
            .ok_or_else(|| Fail(ERROR, format!("{} is not available from this command", a.file_name())))?;
        write_file(&out.join(a.file_name()), &text)?;
    }
    Ok(())
}

fn cmd_compile(a: CompileArgs) -> Result<u8, Fail> {
    let (compiled, inst) = match &a.stn_in {
        Some(p) => {
            let g = stn_from_json(&read(p)?).map_err(|e| Fail(ERROR, format!("{}: {e}", p.display())))?;
            (compile_stn(g)?, None)
        }
        None => {
            let inst = a.inputs.load()?;
            (compile(&inst, a.mode.opts(), a.mode.force)?, Some(inst))
        }
    };
    match &a.out {
        Some(out) => {
            let emit = if a.emit.is_empty() {
                vec![Artifact::StnDot, Artifact::StnJson, Artifact::BtXml, Artifact::BtDot]
            } else {
                a.emit.clone()
            };
            emit_all(&emit, out, &compiled, inst.as_ref(), None)?;
        }
        None if a.emit.is_empty() => print!("{}", bt::outline(&compiled.bt)),
        None => {
            for &e in &a.emit {
                let text = render(e, &compiled, inst.as_ref(), None)
                    .ok_or_else(|| Fail(ERROR, format!("{} is not available from compile", e.file_name())))?;
                print!("{text}");
            }
        }
    }
    Ok(OK)
}

fn cmd_validate(a: ValidateArgs) -> Result<u8, Fail> {
    let inst = a.inputs.load()?;
    let rep = validate_plan(&inst.problem, &inst.plan);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rep).expect("report serialises"));
    } else if let Some(f) = rep.first_failure() {
        println!(
            "INVALID: {} needs {} at {}",
            f.step,
            f.literal,
            SecsDisplay(Millis(f.time_ms))
        );
    } else {
        println!("VALID");
    }
    Ok(if rep.valid { OK } else { FAILED })
}

fn print_result(r: &ExecutionResult, json: bool) {
    if json {
        let v = serde_json::json!({
            "status": r.status.as_str(),
            "makespan_ms": r.makespan.0,
            "clock_ms": r.clock.0,
            "diagnostic": r.diagnostic,
            "actions": r.actions,
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("result serialises"));
        return;
    }
    println!("status: {}", r.status.as_str());
    println!("makespan: {}", SecsDisplay(r.makespan));
    if let Some(d) = &r.diagnostic {
        println!("diagnostic: {d}");
    }
    print!("{}", gantt_text(&r.actions, 60));
}

fn cmd_execute(a: ExecuteArgs) -> Result<u8, Fail> {
    let inst = a.inputs.load()?;
    let durations = a.run.durations()?;
    let c = compile(&inst, a.mode.opts(), a.mode.force)?;
    let performer = SimulatedPerformer::new(durations, a.run.seed);
    let r = match a.clock {
        Clock::Virtual => run_virtual(&c.bt, &inst.problem, performer, a.run.exec()),
        Clock::Wall => {
            let wall = WallConfig {
                tick: Duration::from_millis(a.tick_ms.max(1)),
                ..WallConfig::default()
            };
            run_wall(&c.bt, &inst.problem, performer, a.run.exec(), wall)
        }
    };
    print_result(&r, a.json);
    if let Some(out) = &a.out {
        let emit = if a.emit.is_empty() {
            vec![Artifact::TraceJsonl]
        } else {
            a.emit.clone()
        };
        emit_all(&emit, out, &c, Some(&inst), Some(&r))?;
    } else if !a.emit.is_empty() {
        return Err(Fail(ERROR, "--emit needs --out".into()));
    }
    Ok(if r.status == TickStatus::Success { OK } else { FAILED })
}

fn cmd_generate(a: GenerateArgs) -> Result<u8, Fail> {
    if a.min_duration_ms < 1 || a.max_duration_ms < a.min_duration_ms {
        return Err(Fail(ERROR, "need 1 <= --min-duration-ms <= --max-duration-ms".into()));
    }
    if a.actions == 0 || a.fluents == 0 {
        return Err(Fail(ERROR, "--actions and --fluents must be positive".into()));
    }
    for k in 0..a.count {
        let cfg = GenConfig {
            actions: a.actions,
            fluents: a.fluents,
            length: a.length,
            min_duration: Millis(a.min_duration_ms),
            max_duration: Millis(a.max_duration_ms),
            seed: a.seed + k as u64,
        };
        let g = generate(&cfg);
        let dir = if a.count == 1 {
            a.out.clone()
        } else {
            a.out.join(format!("{:04}", k))
        };
        let mut variants = vec![(dir.clone(), g.clone())];
        if a.mutate {
            variants.push((dir.join("mutant"), g.mutate(cfg.seed)));
        }
        for (d, inst) in variants {
            write_file(&d.join("domain.pddl"), &inst.domain_text())?;
            write_file(&d.join("problem.pddl"), &inst.problem_text())?;
            write_file(&d.join("plan.txt"), &inst.plan_text())?;
        }
    }
    Ok(OK)
}

fn cmd_bench(a: BenchArgs) -> Result<u8, Fail> {
    let inst = a.inputs.load()?;
    let durations = a.run.durations()?;
    let c = compile(&inst, a.mode.opts(), a.mode.force)?;
    let rep = bench(
        &c.bt,
        &inst.problem,
        &inst.plan,
        &durations,
        a.run.exec(),
        a.runs,
        a.run.seed,
    );
    let overlapping = rep
        .results
        .iter()
        .filter(|r| all_overlap(&r.actions, &["prepick", "prerelease"], "move"))
        .count();
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rep).expect("report serialises"));
    } else {
        match &rep.stats {
            Some(s) => print!("{s}"),
            None => println!("no successful run"),
        }
        println!("runs: {}  failures: {}", rep.runs, rep.failures);
        println!("sequential baseline: {:.3}", rep.sequential_baseline);
        if inst.plan.steps.iter().any(|s| s.action.signature.starts_with("(move ")) {
            println!(
                "runs with prepick/prerelease overlapping a move: {overlapping}/{}",
                rep.runs
            );
        }
    }
    Ok(if rep.failures == 0 { OK } else { FAILED })
}

fn cmd_fixtures(a: FixturesArgs) -> Result<u8, Fail> {
    let Some(name) = a.name else {
        for f in fixtures::ALL {
            println!("{}", f.name);
        }
        return Ok(OK);
    };
    let f = fixtures::ALL
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Fail::from(LoadError::UnknownFixture(name.clone())))?;
    match a.out {
        Some(out) => {
            write_file(&out.join("domain.pddl"), f.domain)?;
            write_file(&out.join("problem.pddl"), f.problem)?;
            write_file(&out.join("plan.txt"), f.plan)?;
        }
        None => print!("{}", f.plan),
    }
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Compile(a) => cmd_compile(a),
        Cmd::Validate(a) => cmd_validate(a),
        Cmd::Execute(a) => cmd_execute(a),
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Fixtures(a) => cmd_fixtures(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("stnbt: {msg}");
            ExitCode::from(code)
        }
    }
}
