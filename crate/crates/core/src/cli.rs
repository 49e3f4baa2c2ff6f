//! Command-line driver: `synth`, `analyze`, `fdg`, `check`, `solve`.
//!
//! Machine output (JSON, or o/s/v lines for `solve`) goes to stdout, progress
//! to stderr. Exit codes: 0 ok, 1 parse error, 2 budget exhausted under
//! `--strict`, 3 solver timeout at lock bound 1, 4 other errors, 5 check failed.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{analyze, AnalysisConfig, AnalysisResults, Scope};
use crate::codegen::{emit, emit_pseudo_java, instrument, parse_explicit, place_signals, scan_locks, Instrumented};
use crate::fdg::{construct, Fdg, PartitionMode};
use crate::frontend::{expr_to_string, load, MonitorAst, ParseError};
use crate::maxsat::{solve, synthesize, Problem, Status, SynthError, SynthOptions, Synthesis, Wcnf, Weights};
use crate::simulator::{Harness, Mode, Workload, DEFAULT_STATE_BUDGET};

pub const SEED_ENV: &str = "MONWEAVER_SEED";

#[derive(Debug, Parser)]
#[command(name = "monweaver", version, about = "Synthesize fine-grained explicit monitors from implicit ones")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile an implicit monitor to an explicit one plus a protocol report.
    Synth {
        input: PathBuf,
        /// Directory for `<name>.emon` and `<name>.protocol.json` (default: next to the input).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Races, commutativity and safe interleavings as JSON.
    Analyze {
        input: PathBuf,
        /// Analyze after signal placement.
        #[arg(long)]
        signals: bool,
    },
    /// Fragment dependency graph as JSON.
    Fdg {
        input: PathBuf,
        /// Include a DOT rendering.
        #[arg(long)]
        dump: bool,
        /// Build the graph after signal placement.
        #[arg(long)]
        signals: bool,
    },
    /// Check an explicit monitor against its implicit source on a workload.
    Check {
        input: PathBuf,
        explicit: PathBuf,
        /// Workload JSON: threads of method calls, optional init and mode.
        #[arg(long)]
        work: PathBuf,
        /// Sample this many random schedules instead of the workload's mode.
        #[arg(long)]
        random: Option<usize>,
    },
    /// Solve a WCNF instance with the embedded solver.
    Solve { instance: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Emit {
    #[default]
    Emon,
    PseudoJava,
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    /// Partitioning heuristic: paper, stmt or ccr.
    #[arg(long, global = true, default_value = "paper")]
    pub partition: PartitionMode,
    /// Fix the lock bound instead of the conflict-graph estimate.
    #[arg(long, global = true)]
    pub max_locks: Option<usize>,
    /// Per-instance solver budget in seconds.
    #[arg(long, global = true, default_value_t = 30.0)]
    pub solver_timeout: f64,
    /// Soft weights `w_par,w_lock,w_atom`.
    #[arg(long, global = true, default_value = "8,4,2")]
    pub weights: Weights,
    /// Cap on analysis contexts and on explored simulator states.
    #[arg(long, global = true)]
    pub state_budget: Option<usize>,
    /// Write each MaxSAT instance here (`{i}` becomes the lock bound).
    #[arg(long, global = true)]
    pub wcnf_out: Option<PathBuf>,
    /// External WCNF solver command; the instance path is appended.
    #[arg(long, global = true)]
    pub solver_cmd: Option<String>,
    /// Seed for solver and random exploration (falls back to MONWEAVER_SEED).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "emon")]
    pub emit: Emit,
    /// Fail (exit 2) when a budget runs out instead of continuing conservatively.
    #[arg(long, global = true)]
    pub strict: bool,
    /// State scope for commutativity checks.
    #[arg(long, global = true, default_value = "reachable", hide = true)]
    pub scope: Scope,
}

impl Default for Opts {
    fn default() -> Self {
        Opts {
            partition: PartitionMode::Paper,
            max_locks: None,
            solver_timeout: 30.0,
            weights: Weights::default(),
            state_budget: None,
            wcnf_out: None,
            solver_cmd: None,
            seed: None,
            emit: Emit::Emon,
            strict: false,
            scope: Scope::Reachable,
        }
    }
}

impl Opts {
    pub fn seed(&self) -> u64 {
        self.seed.or_else(|| std::env::var(SEED_ENV).ok()?.parse().ok()).unwrap_or(0)
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig { budget: self.state_budget.unwrap_or(crate::analysis::DEFAULT_BUDGET), scope: self.scope }
    }

    pub fn synth_options(&self) -> SynthOptions {
        SynthOptions {
            max_locks: self.max_locks,
            weights: self.weights,
            timeout: Duration::from_secs_f64(self.solver_timeout.max(0.001)),
            seed: self.seed(),
            wcnf_out: self.wcnf_out.clone(),
            solver_cmd: self.solver_cmd.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{col}: {err}")]
    Parse { path: String, line: usize, col: usize, err: String },
    #[error("{0}")]
    BadInput(String),
    #[error("analysis budget exhausted (--strict)")]
    Budget,
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Other(String),
    #[error("check failed")]
    CheckFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::BadInput(_) => 1,
            CliError::Budget => 2,
            CliError::Synth(SynthError::Timeout) => 3,
            CliError::CheckFailed => 5,
            _ => 4,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn parse_err(path: &Path, e: &ParseError) -> CliError {
    let (line, col) = e.position();
    CliError::Parse { path: path.display().to_string(), line, col, err: e.to_string() }
}

pub fn load_monitor(path: &Path) -> Result<MonitorAst, CliError> {
    load(&read(path)?).map_err(|e| parse_err(path, &e))
}

fn log(msg: impl AsRef<str>) {
    eprintln!("[monweaver] {}", msg.as_ref());
}

/// Everything `synth` produces.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub signaled: MonitorAst,
    pub fdg: Fdg,
    pub analysis: AnalysisResults,
    pub problem: Problem,
    pub synthesis: Synthesis,
    pub explicit: Instrumented,
    pub text: String,
}

impl SynthOutput {
    pub fn protocol_json(&self) -> Value {
        let proto = &self.synthesis.protocol;
        let lname = |j: &usize| format!("l{}", j + 1);
        let fragments: Vec<Value> = self
            .fdg
            .fragments
            .iter()
            .map(|f| {
                json!({
                    "id": f.name(),
                    "method": self.fdg.method_names[f.method],
                    "kind": f.kind,
                    "statements": self.fdg.text(f.id),
                    "locks": proto.held[f.id].iter().map(lname).collect::<Vec<_>>(),
                })
            })
            .collect();
        let condvars: Vec<Value> = self
            .explicit
            .monitor
            .condvars
            .iter()
            .map(|cv| json!({ "name": cv.name, "predicate": expr_to_string(&cv.pred), "lock": lname(&cv.lock) }))
            .collect();
        let (free, disjoint) = proto.parallel_pairs(&self.problem);
        json!({
            "monitor": self.signaled.name,
            "locks": (0..proto.locks).map(|j| lname(&j)).collect::<Vec<_>>(),
            "atomics": proto.atomics,
            "fragments": fragments,
            "condvars": condvars,
            "objective": self.synthesis.objective_json(),
            "bound": self.synthesis.bound,
            "upper_bound": self.synthesis.upper_bound,
            "iterations": self.synthesis.iterations,
            "parallelism": { "race_free_pairs": free, "disjoint_lock_pairs": disjoint },
            "analysis": {
                "base_states": self.analysis.states,
                "budget_exhausted": self.analysis.budget_exhausted(),
            },
        })
    }
}

/// Signals, fragments, analysis, lock-bound loop and instrumentation.
pub fn synth(ast: &MonitorAst, opts: &Opts) -> Result<SynthOutput, CliError> {
    let t = Instant::now();
    let signaled = place_signals(ast);
    let fdg = construct(&signaled, opts.partition).map_err(|e| CliError::Other(e.to_string()))?;
    log(format!("{} fragments, {} edges", fdg.len(), fdg.edges.len()));
    let analysis = analyze(&signaled, &fdg, &opts.analysis());
    if analysis.budget_exhausted() {
        if opts.strict {
            return Err(CliError::Budget);
        }
        log("analysis budget exhausted; using conservative answers");
    }
    let problem = Problem::from_analysis(&signaled, &fdg, &analysis);
    log(format!("analysis done in {:.2?}: {} races, {} unsafe interleavings", t.elapsed(), problem.races.len(), problem.unsafe_interleavings.len()));
    let synthesis = synthesize(&problem, &opts.synth_options())?;
    for it in &synthesis.iterations {
        log(format!("bound {}: cost {} ({:?})", it.bound, it.cost, it.status));
    }
    let explicit = instrument(&signaled, &fdg, &synthesis.protocol).map_err(|e| CliError::Other(e.to_string()))?;
    let text = emit(&explicit.monitor);
    log(format!("{} lock(s), atomics {:?}, total {:.2?}", synthesis.protocol.locks, synthesis.protocol.atomics, t.elapsed()));
    Ok(SynthOutput { signaled, fdg, analysis, problem, synthesis, explicit, text })
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "monitor".into())
}

fn out(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn print_json(v: &Value) {
    out(&serde_json::to_string_pretty(v).expect("json"));
}

fn cmd_synth(input: &Path, out_dir: Option<&Path>, opts: &Opts) -> Result<(), CliError> {
    let ast = load_monitor(input)?;
    let out = synth(&ast, opts)?;
    if let Err(v) = scan_locks(&out.explicit.monitor) {
        return Err(CliError::Other(format!("emitted code breaks lock order: {v}")));
    }
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Other(format!("{}: {e}", dir.display())))?;
    }
    let name = stem(input);
    let emon = dir.join(format!("{name}.emon"));
    write(&emon, &out.text)?;
    if opts.emit == Emit::PseudoJava {
        write(&dir.join(format!("{name}.java")), &emit_pseudo_java(&out.explicit.monitor))?;
    }
    let proto = out.protocol_json();
    write(&dir.join(format!("{name}.protocol.json")), &serde_json::to_string_pretty(&proto).expect("json"))?;
    log(format!("wrote {}", emon.display()));
    print_json(&proto);
    Ok(())
}

fn front(input: &Path, signals: bool, opts: &Opts) -> Result<(MonitorAst, Fdg), CliError> {
    let ast = load_monitor(input)?;
    let ast = if signals { place_signals(&ast) } else { ast };
    let fdg = construct(&ast, opts.partition).map_err(|e| CliError::Other(e.to_string()))?;
    Ok((ast, fdg))
}

fn cmd_analyze(input: &Path, signals: bool, opts: &Opts) -> Result<(), CliError> {
    let (ast, fdg) = front(input, signals, opts)?;
    let res = analyze(&ast, &fdg, &opts.analysis());
    if res.budget_exhausted() && opts.strict {
        return Err(CliError::Budget);
    }
    let mut j = res.to_json(&fdg);
    j["fragments"] = fdg.to_json()["vertices"].clone();
    j["budget_exhausted"] = json!(res.budget_exhausted());
    print_json(&j);
    Ok(())
}

fn cmd_fdg(input: &Path, dump: bool, signals: bool, opts: &Opts) -> Result<(), CliError> {
    let (_, fdg) = front(input, signals, opts)?;
    let mut j = fdg.to_json();
    if dump {
        j["dot"] = json!(fdg.to_dot());
    }
    print_json(&j);
    Ok(())
}

fn cmd_check(input: &Path, explicit: &Path, work: &Path, random: Option<usize>, opts: &Opts) -> Result<(), CliError> {
    let ast = load_monitor(input)?;
    let em = parse_explicit(&read(explicit)?).map_err(|e| parse_err(explicit, &e))?;
    let mut w = Workload::parse(&read(work)?).map_err(|e| CliError::BadInput(format!("{}: {e}", work.display())))?;
    if let Some(runs) = random {
        w.mode = Mode::Random { runs, seed: None };
    }
    if let Mode::Random { runs, seed: None } = w.mode {
        w.mode = Mode::Random { runs, seed: Some(opts.seed()) };
    }
    let h = Harness::new(&ast, &em, &w).map_err(|e| CliError::BadInput(e.to_string()))?;
    let t = Instant::now();
    let report = h.check(opts.state_budget.unwrap_or(DEFAULT_STATE_BUDGET));
    log(format!("{} explicit states in {:.2?}", report.verdicts.states, t.elapsed()));
    let mut j = serde_json::to_value(&report).expect("json");
    j["lock_order"] = match scan_locks(&em) {
        Ok(_) => json!({ "pass": true }),
        Err(v) => json!({ "pass": false, "violation": v.to_string() }),
    };
    print_json(&j);
    if report.truncated && opts.strict {
        return Err(CliError::Budget);
    }
    if !report.pass {
        return Err(CliError::CheckFailed);
    }
    Ok(())
}

fn cmd_solve(path: &Path, opts: &Opts) -> Result<(), CliError> {
    let w = Wcnf::parse(&read(path)?).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    let deadline = Instant::now() + Duration::from_secs_f64(opts.solver_timeout.max(0.001));
    let res = solve(&w, Some(deadline), opts.seed());
    log(format!("{} conflicts", res.conflicts));
    if res.has_model() {
        out(&format!("o {}", res.cost));
    }
    out(&format!(
        "s {}",
        match res.status {
            Status::Optimal => "OPTIMUM FOUND",
            Status::Unsat => "UNSATISFIABLE",
            Status::Timeout if res.has_model() => "SATISFIABLE",
            Status::Timeout => "UNKNOWN",
        }
    ));
    if res.has_model() {
        let lits: Vec<String> = res.model.iter().enumerate().map(|(i, b)| if *b { format!("{}", i + 1) } else { format!("-{}", i + 1) }).collect();
        out(&format!("v {}", lits.join(" ")));
    } else if res.status == Status::Timeout {
        return Err(CliError::Synth(SynthError::Timeout));
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let o = &cli.opts;
    match &cli.cmd {
        Command::Synth { input, out_dir } => cmd_synth(input, out_dir.as_deref(), o),
        Command::Analyze { input, signals } => cmd_analyze(input, *signals, o),
        Command::Fdg { input, dump, signals } => cmd_fdg(input, *dump, *signals, o),
        Command::Check { input, explicit, work, random } => cmd_check(input, explicit, work, *random, o),
        Command::Solve { instance } => cmd_solve(instance, o),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::CheckFailed) {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}
