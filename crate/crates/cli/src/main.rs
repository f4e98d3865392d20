//! The `datamon` command line: parse, classify and transform formulas,
//! synthesize and run monitors, translate to and from register automata,
//! evaluate the brute-force oracle, and generate random inputs.
//!
//! Every subcommand prints one JSON report on standard output and keeps
//! diagnostics on standard error. Exit codes: 0 success, 1 domain error,
//! 2 usage error.

use std::io::BufRead;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};

use datamon::gen;
use datamon::io;
use datamon::report::{emit, emit_line, ReportBuilder};

use datamon_core::ast::{DataEnv, Formula};
use datamon_core::budget::{Budget, DEFAULT_BUDGET};
use datamon_core::fragments::{self, Fragment};
use datamon_core::guard::{guard_pipeline, GuardedSession, SessionVerdict};
use datamon_core::monitor::{self, render_monitor, synthesize, MonitorSession, Verdict};
use datamon_core::norm::{dualize, normalize};
use datamon_core::oracle::{find_finite_annotation, lasso_eval};
use datamon_core::ra::{
    monitor_to_ra, nra_liveness, ra_member_budgeted, ra_to_monitor, OptimalMonitor,
};
use datamon_core::render::render_formula;

#[derive(Parser)]
#[command(name = "datamon", version, about = "runtime monitors for data-word properties")]
struct Cli {
    /// Include wall-clock timing in reports (off keeps output deterministic)
    #[arg(long, global = true)]
    timing: bool,

    /// Work budget for oracle evaluations and annotation searches
    /// (overrides the DATAMON_BUDGET environment variable)
    #[arg(long, global = true)]
    budget: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FormulaArg {
    /// Formula file (`-` for standard input)
    #[arg(long)]
    formula: String,

    /// Initial data environment, e.g. `sep1=$,sep2=#`
    #[arg(long)]
    env: Option<String>,
}

#[derive(Args)]
struct TraceArgs {
    /// Inline trace, comma separated (wins over --trace-file)
    #[arg(long)]
    trace: Option<String>,

    /// Trace file: one token per line, or a JSON array of strings
    #[arg(long)]
    trace_file: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and echo it back
    Parse { file: String },
    /// Syntactic fragment membership with witness paths
    Classify { file: String },
    /// Structural De Morgan dual
    Dualize { file: String },
    /// The guarding transformation into the guarded fragment
    Gd { file: String },
    /// Monitor synthesis for the least-fixpoint fragment
    Synthesize { file: String },
    /// Monitor execution
    #[command(subcommand)]
    Monitor(MonitorCmd),
    /// Register automata
    #[command(subcommand)]
    Ra(RaCmd),
    /// Brute-force semantics
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Random input generation
    #[command(subcommand)]
    Gen(GenCmd),
}

#[derive(clap::ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Sat,
    Viol,
}

#[derive(Subcommand)]
enum MonitorCmd {
    /// Run a monitor over a finite trace
    Run {
        #[command(flatten)]
        formula: FormulaArg,
        #[command(flatten)]
        trace: TraceArgs,
        /// Monitor satisfactions (cHMLd) or violations (sHMLd)
        #[arg(long, value_enum, default_value = "sat")]
        mode: Mode,
    },
    /// Read one token per line from standard input; print a verdict line
    /// the moment one fires, then exit
    Stream {
        #[command(flatten)]
        formula: FormulaArg,
        #[arg(long, value_enum, default_value = "sat")]
        mode: Mode,
    },
    /// Good-prefix session over the guarded form of a max-free formula
    Guarded {
        #[command(flatten)]
        formula: FormulaArg,
        #[command(flatten)]
        trace: TraceArgs,
        /// Stream tokens from standard input instead of --trace
        #[arg(long)]
        stream: bool,
    },
    /// Two-sided optimal monitor for the disjunctive fragment
    Optimal {
        #[command(flatten)]
        formula: FormulaArg,
        #[command(flatten)]
        trace: TraceArgs,
    },
}

#[derive(Subcommand)]
enum RaCmd {
    /// Translate a monitor (or a formula, synthesized first) to an automaton
    FromMonitor {
        /// Monitor file in concrete monitor syntax
        #[arg(long, conflicts_with = "formula")]
        monitor: Option<String>,
        /// Formula file; the monitor is synthesized first
        #[arg(long)]
        formula: Option<String>,
        /// Output file for the automaton JSON (default: standard output)
        #[arg(short, long)]
        output: Option<String>,
    },
    /// Rebuild a monitor from an irrevocable automaton
    ToMonitor {
        #[arg(long)]
        automaton: String,
    },
    /// Word membership
    Member {
        #[arg(long)]
        automaton: String,
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Liveness of every (location, register-type) pair
    Liveness {
        #[arg(long)]
        automaton: String,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Evaluate a formula on a lasso trace
    Eval {
        #[command(flatten)]
        formula: FormulaArg,
        /// Lasso written `prefix-tokens ; loop-tokens`
        #[arg(long)]
        lasso: String,
    },
    /// Search for a finite annotation and emit it as JSON
    Annotate {
        #[command(flatten)]
        formula: FormulaArg,
        #[arg(long)]
        lasso: String,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// A random well-formed formula of the requested fragment
    Formula {
        #[arg(long)]
        seed: u64,
        /// One of: HMLd, cHMLd, sHMLd, disjHMLd, conjHMLd, minHMLd, recHMLd
        #[arg(long, default_value = "cHMLd")]
        fragment: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        vars: usize,
    },
    /// A random trace (or lasso) over a fresh alphabet v0..v{k-1}
    Trace {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        length: usize,
        #[arg(long, default_value_t = 3)]
        alphabet: usize,
        /// Emit `prefix ; loop` instead of a finite trace
        #[arg(long)]
        lasso: bool,
        #[arg(long, default_value_t = 2)]
        loop_length: usize,
    },
}

fn parse_fragment(name: &str) -> Result<Fragment> {
    let lowered = name.to_lowercase();
    Fragment::ALL
        .into_iter()
        .find(|f| f.name().to_lowercase() == lowered)
        .ok_or_else(|| {
            anyhow!(
                "unknown fragment `{name}` (expected one of {})",
                Fragment::ALL.map(|f| f.name()).join(", ")
            )
        })
}

fn budget_limit(cli_flag: Option<u64>) -> u64 {
    cli_flag
        .or_else(|| {
            std::env::var("DATAMON_BUDGET")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(DEFAULT_BUDGET)
}

fn env_of(arg: &Option<String>) -> Result<DataEnv> {
    match arg {
        Some(text) => io::parse_env(text),
        None => Ok(DataEnv::new()),
    }
}

fn verdict_json(v: Verdict) -> serde_json::Value {
    match v {
        Verdict::Accepted(i) => serde_json::json!({"verdict": "accepted", "index": i}),
        Verdict::Rejected(i) => serde_json::json!({"verdict": "rejected", "index": i}),
        Verdict::NoVerdict => serde_json::json!({"verdict": "none"}),
    }
}

fn witness_json(path: &Option<datamon_core::ast::Path>) -> serde_json::Value {
    match path {
        None => serde_json::Value::Null,
        Some(p) => serde_json::json!(datamon_core::ast::path_string(p)),
    }
}

fn run_command(cli: Cli) -> Result<()> {
    let timing = cli.timing;
    let limit = budget_limit(cli.budget);
    match cli.command {
        Command::Parse { file } => {
            let text = io::read_input(&file)?;
            let f = datamon_core::parse::parse_formula(&text).map_err(|e| anyhow!("{file}:{e}"))?;
            // guardedness problems are surfaced as warnings at parse time
            let warnings: Vec<String> = match normalize(&f) {
                Ok(n) => n
                    .modal_unguarded
                    .iter()
                    .map(|x| format!("recursion variable `{x}` is not modally guarded"))
                    .collect(),
                Err(_) => Vec::new(), // free recursion variables are fine at parse time
            };
            let mut rb = ReportBuilder::new("parse", timing);
            rb.input("formula", &text);
            emit(&rb.finish(serde_json::json!({
                "formula": render_formula(&f),
                "warnings": warnings,
            })));
        }
        Command::Classify { file } => {
            let text = io::read_input(&file)?;
            let f = datamon_core::parse::parse_formula(&text).map_err(|e| anyhow!("{file}:{e}"))?;
            let normalized = normalize(&f).map_err(|e| anyhow!("{e}"))?;
            let report = fragments::classify(&normalized.formula);
            let mut fragments_json = serde_json::Map::new();
            for (frag, status) in report.iter() {
                fragments_json.insert(
                    frag.name().to_string(),
                    serde_json::json!({
                        "member": status.member,
                        "witness": witness_json(&status.witness),
                    }),
                );
            }
            let guarded = fragments::check_guarded_root(&normalized.formula);
            let mut rb = ReportBuilder::new("classify", timing);
            rb.input("formula", &text);
            emit(&rb.finish(serde_json::json!({
                "fragments": fragments_json,
                "guarded_fragment": {
                    "member": guarded.accepted,
                    "witness": guarded.rejection.map(|r| r.to_string()),
                },
            })));
        }
        Command::Dualize { file } => {
            let text = io::read_input(&file)?;
            let f = datamon_core::parse::parse_formula(&text).map_err(|e| anyhow!("{file}:{e}"))?;
            let mut rb = ReportBuilder::new("dualize", timing);
            rb.input("formula", &text);
            emit(&rb.finish(serde_json::json!({
                "formula": render_formula(&dualize(&f)),
            })));
        }
        Command::Gd { file } => {
            let text = io::read_input(&file)?;
            let f = datamon_core::parse::parse_formula(&text).map_err(|e| anyhow!("{file}:{e}"))?;
            let normalized = normalize(&f).map_err(|e| anyhow!("{e}"))?;
            let guarded = fragments::gd(&normalized.formula).map_err(|e| anyhow!("{e}"))?;
            let check = fragments::check_guarded_root(&guarded);
            let mut rb = ReportBuilder::new("gd", timing);
            rb.input("formula", &text);
            emit(&rb.finish(serde_json::json!({
                "formula": render_formula(&guarded),
                "guarded": check.accepted,
            })));
        }
        Command::Synthesize { file } => {
            let text = io::read_input(&file)?;
            let f = datamon_core::parse::parse_formula(&text).map_err(|e| anyhow!("{file}:{e}"))?;
            let m = synthesize(&f).map_err(|e| anyhow!("{e}"))?;
            let mut rb = ReportBuilder::new("synthesize", timing);
            rb.input("formula", &text);
            emit(&rb.finish(serde_json::json!({
                "monitor": render_monitor(&m),
            })));
        }
        Command::Monitor(cmd) => run_monitor(cmd, timing, limit)?,
        Command::Ra(cmd) => run_ra(cmd, timing, limit)?,
        Command::Oracle(cmd) => run_oracle(cmd, timing, limit)?,
        Command::Gen(cmd) => run_gen(cmd, timing)?,
    }
    Ok(())
}

fn load_formula_arg(arg: &FormulaArg) -> Result<(Formula, DataEnv, String)> {
    let text = io::read_input(&arg.formula)?;
    let f = datamon_core::parse::parse_formula(&text)
        .map_err(|e| anyhow!("{}:{e}", arg.formula))?;
    Ok((f, env_of(&arg.env)?, text))
}

fn run_monitor(cmd: MonitorCmd, timing: bool, limit: u64) -> Result<()> {
    match cmd {
        MonitorCmd::Run {
            formula,
            trace,
            mode,
        } => {
            let (f, env, text) = load_formula_arg(&formula)?;
            let w = io::resolve_trace(&trace.trace, &trace.trace_file)?;
            let outcome = match mode {
                Mode::Sat => {
                    let m = synthesize(&f).map_err(|e| anyhow!("{e}"))?;
                    monitor::run_with_env(&m, &env, &w).map_err(|e| anyhow!("{e}"))?
                }
                Mode::Viol => monitor::run_violation(&f, &env, &w).map_err(|e| anyhow!("{e}"))?,
            };
            let mut rb = ReportBuilder::new("monitor run", timing);
            rb.input("formula", &text);
            rb.input("trace", &datamon_core::render::render_trace(&w));
            rb.configs_peak(outcome.peak_leaves);
            emit(&rb.finish(verdict_json(outcome.verdict)));
        }
        MonitorCmd::Stream { formula, mode } => {
            let (f, env, _text) = load_formula_arg(&formula)?;
            let mut session = match mode {
                Mode::Sat => {
                    let m = synthesize(&f).map_err(|e| anyhow!("{e}"))?;
                    MonitorSession::new(&m, &env).map_err(|e| anyhow!("{e}"))?
                }
                Mode::Viol => MonitorSession::for_violation(&f, &env).map_err(|e| anyhow!("{e}"))?,
            };
            if session.verdict() != Verdict::NoVerdict {
                emit_line(&verdict_json(session.verdict()));
                return Ok(());
            }
            let stdin = std::io::stdin();
            for line in stdin.lock().lines() {
                let line = line?;
                let token = line.trim();
                if token.is_empty() {
                    continue;
                }
                let v = session
                    .feed(&datamon_core::ast::DataValue::new(token))
                    .map_err(|e| anyhow!("{e}"))?;
                if v != Verdict::NoVerdict {
                    emit_line(&verdict_json(v));
                    return Ok(());
                }
            }
            emit_line(&serde_json::json!({
                "verdict": "none",
                "events": session.events(),
            }));
        }
        MonitorCmd::Guarded {
            formula,
            trace,
            stream,
        } => {
            let (f, env, text) = load_formula_arg(&formula)?;
            let mut session: GuardedSession =
                guard_pipeline(&f, env).map_err(|e| anyhow!("{e}"))?.with_budget(limit);
            session.check_now().map_err(|e| anyhow!("{e}"))?;
            let report_verdict = |s: &GuardedSession| match s.verdict() {
                SessionVerdict::Good { at } => {
                    serde_json::json!({"verdict": "good", "index": at})
                }
                SessionVerdict::Pending => serde_json::json!({"verdict": "pending"}),
            };
            if stream {
                if session.verdict().is_good() {
                    emit_line(&report_verdict(&session));
                    return Ok(());
                }
                let stdin = std::io::stdin();
                for line in stdin.lock().lines() {
                    let line = line?;
                    let token = line.trim();
                    if token.is_empty() {
                        continue;
                    }
                    session
                        .feed(datamon_core::ast::DataValue::new(token))
                        .map_err(|e| anyhow!("{e}"))?;
                    if session.stalled() {
                        emit_line(&serde_json::json!({
                            "status": "stalled",
                            "events": session.prefix().len(),
                        }));
                    }
                    if session.verdict().is_good() {
                        emit_line(&report_verdict(&session));
                        return Ok(());
                    }
                }
                emit_line(&report_verdict(&session));
            } else {
                let w = io::resolve_trace(&trace.trace, &trace.trace_file)?;
                let mut stalled = false;
                for d in &w {
                    session.feed(d.clone()).map_err(|e| anyhow!("{e}"))?;
                    stalled |= session.stalled();
                    if session.verdict().is_good() {
                        break;
                    }
                }
                let mut rb = ReportBuilder::new("monitor guarded", timing);
                rb.input("formula", &text);
                rb.input("trace", &datamon_core::render::render_trace(&w));
                rb.budget_used(session.budget_used_last());
                let mut result = report_verdict(&session);
                if stalled {
                    result["stalled"] = serde_json::json!(true);
                }
                result["monitored"] = serde_json::json!(render_formula(session.formula()));
                emit(&rb.finish(result));
            }
        }
        MonitorCmd::Optimal { formula, trace } => {
            let (f, env, text) = load_formula_arg(&formula)?;
            let w = io::resolve_trace(&trace.trace, &trace.trace_file)?;
            let mut om = OptimalMonitor::new(&f, &env).map_err(|e| anyhow!("{e}"))?;
            for d in &w {
                if om.verdict() != Verdict::NoVerdict {
                    break;
                }
                om.feed(d).map_err(|e| anyhow!("{e}"))?;
            }
            let mut rb = ReportBuilder::new("monitor optimal", timing);
            rb.input("formula", &text);
            rb.input("trace", &datamon_core::render::render_trace(&w));
            emit(&rb.finish(verdict_json(om.verdict())));
        }
    }
    Ok(())
}

fn run_ra(cmd: RaCmd, timing: bool, limit: u64) -> Result<()> {
    match cmd {
        RaCmd::FromMonitor {
            monitor,
            formula,
            output,
        } => {
            let (m, source) = match (&monitor, &formula) {
                (Some(path), None) => {
                    let text = io::read_input(path)?;
                    (
                        datamon_core::parse::parse_monitor(&text)
                            .map_err(|e| anyhow!("{path}:{e}"))?,
                        text,
                    )
                }
                (None, Some(path)) => {
                    let text = io::read_input(path)?;
                    let f = datamon_core::parse::parse_formula(&text)
                        .map_err(|e| anyhow!("{path}:{e}"))?;
                    (synthesize(&f).map_err(|e| anyhow!("{e}"))?, text)
                }
                _ => bail!("pass exactly one of --monitor or --formula"),
            };
            let ra = monitor_to_ra(&m).map_err(|e| anyhow!("{e}"))?;
            let json = io::ra_to_json(&ra)?;
            if let Some(path) = output {
                std::fs::write(&path, &json)?;
                let mut rb = ReportBuilder::new("ra from-monitor", timing);
                rb.input("monitor", &source);
                emit(&rb.finish(serde_json::json!({
                    "written": path,
                    "locations": ra.locations.len(),
                    "registers": ra.registers.len(),
                })));
            } else {
                println!("{json}");
            }
        }
        RaCmd::ToMonitor { automaton } => {
            let text = io::read_input(&automaton)?;
            let ra = io::ra_from_json(&text)?;
            let m = ra_to_monitor(&ra).map_err(|e| anyhow!("{e}"))?;
            let mut rb = ReportBuilder::new("ra to-monitor", timing);
            rb.input("automaton", &text);
            emit(&rb.finish(serde_json::json!({
                "monitor": render_monitor(&m),
            })));
        }
        RaCmd::Member { automaton, trace } => {
            let text = io::read_input(&automaton)?;
            let ra = io::ra_from_json(&text)?;
            let w = io::resolve_trace(&trace.trace, &trace.trace_file)?;
            let mut budget = Budget::new(limit);
            let member = ra_member_budgeted(&ra, &w, &mut budget).map_err(|e| anyhow!("{e}"))?;
            let mut rb = ReportBuilder::new("ra member", timing);
            rb.input("automaton", &text);
            rb.input("trace", &datamon_core::render::render_trace(&w));
            rb.budget_used(budget.used());
            emit(&rb.finish(serde_json::json!({"member": member})));
        }
        RaCmd::Liveness { automaton } => {
            let text = io::read_input(&automaton)?;
            let ra = io::ra_from_json(&text)?;
            let table = nra_liveness(&ra).map_err(|e| anyhow!("{e}"))?;
            let rows: Vec<serde_json::Value> = table
                .iter()
                .map(|((loc, partition), live)| {
                    serde_json::json!({
                        "location": ra.locations[*loc].name,
                        "type": partition,
                        "live": live,
                    })
                })
                .collect();
            let mut rb = ReportBuilder::new("ra liveness", timing);
            rb.input("automaton", &text);
            emit(&rb.finish(serde_json::json!({"live": rows})));
        }
    }
    Ok(())
}

fn run_oracle(cmd: OracleCmd, timing: bool, limit: u64) -> Result<()> {
    match cmd {
        OracleCmd::Eval { formula, lasso } => {
            let (f, env, text) = load_formula_arg(&formula)?;
            let t = io::parse_lasso(&lasso)?;
            let mut budget = Budget::new(limit);
            let result = lasso_eval(&f, &env, &t, &mut budget).map_err(|e| anyhow!("{e}"))?;
            let mut rb = ReportBuilder::new("oracle eval", timing);
            rb.input("formula", &text);
            rb.input("lasso", &lasso);
            rb.budget_used(budget.used());
            emit(&rb.finish(serde_json::json!({"result": result})));
        }
        OracleCmd::Annotate { formula, lasso } => {
            let (f, env, text) = load_formula_arg(&formula)?;
            let t = io::parse_lasso(&lasso)?;
            let mut budget = Budget::new(limit);
            let found =
                find_finite_annotation(&f, &env, &t, &mut budget).map_err(|e| anyhow!("{e}"))?;
            let table = datamon_core::oracle::SubTable::build(&f).map_err(|e| anyhow!("{e}"))?;
            let result = match found {
                None => serde_json::json!({"found": false}),
                Some(ann) => {
                    let nodes: Vec<serde_json::Value> = ann
                        .nodes
                        .iter()
                        .map(|n| {
                            let env_obj: serde_json::Map<String, serde_json::Value> = n
                                .env
                                .iter()
                                .map(|(k, v)| {
                                    (k.as_str().to_string(), serde_json::json!(v.as_str()))
                                })
                                .collect();
                            serde_json::json!({
                                "term": render_formula(table.formula(n.term)),
                                "env": env_obj,
                                "position": n.pos,
                            })
                        })
                        .collect();
                    serde_json::json!({
                        "found": true,
                        "nodes": nodes,
                        "edges": ann.edges,
                    })
                }
            };
            let mut rb = ReportBuilder::new("oracle annotate", timing);
            rb.input("formula", &text);
            rb.input("lasso", &lasso);
            rb.budget_used(budget.used());
            emit(&rb.finish(result));
        }
    }
    Ok(())
}

fn run_gen(cmd: GenCmd, timing: bool) -> Result<()> {
    match cmd {
        GenCmd::Formula {
            seed,
            fragment,
            depth,
            vars,
        } => {
            let frag = parse_fragment(&fragment)?;
            let f = gen::gen_formula(seed, frag, depth, vars);
            let rb = ReportBuilder::new("gen formula", timing);
            emit(&rb.finish(serde_json::json!({
                "formula": render_formula(&f),
                "fragment": frag.name(),
                "seed": seed,
            })));
        }
        GenCmd::Trace {
            seed,
            length,
            alphabet,
            lasso,
            loop_length,
        } => {
            if alphabet == 0 {
                bail!("alphabet size must be at least 1");
            }
            let rb = ReportBuilder::new("gen trace", timing);
            if lasso {
                if loop_length == 0 {
                    bail!("a lasso loop must be nonempty");
                }
                let t = gen::gen_lasso(seed, length, loop_length, alphabet);
                emit(&rb.finish(serde_json::json!({
                    "lasso": t.to_string(),
                    "seed": seed,
                })));
            } else {
                let w = gen::gen_trace(seed, length, alphabet);
                let tokens: Vec<&str> = w.iter().map(|v| v.as_str()).collect();
                emit(&rb.finish(serde_json::json!({
                    "trace": tokens,
                    "seed": seed,
                })));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
