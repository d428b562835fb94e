use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asyncver::analysis::{
    check_boundedness, check_config_reachability, check_fair_starvation, check_fair_termination, check_safety,
    check_termination, AnalysisError, Budgets, Verdict,
};
use asyncver::compile::{stitch, stitch_cancel, stitch_starvation, CompiledNet};
use asyncver::encoders::{encode_pn, encode_pn_cover, encode_pn_fairterm, EncodedProgram};
use asyncver::model::{parse_program, print_program, AsyncProgram, ConfigGraph, Semantics};
use asyncver::petri::{karp_miller_with, parse_net, print_net, to_boolean, BoolMode, KmLimits, PetriNet};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Verification of finite-data asynchronous programs through Petri nets.
///
/// Exit codes: 0 the property holds, 1 it is violated, 2 unknown,
/// 3 input error or refused query.
#[derive(Parser, Debug)]
#[command(name = "asyncver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct BudgetArgs {
    /// Largest number of configurations, coverability nodes or basis elements explored.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    /// Largest number of dispatches along an explored run.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    /// Largest number of posts enumerated per dispatch.
    #[arg(long, default_value_t = 16)]
    post_budget: u64,
}

impl BudgetArgs {
    fn budgets(&self) -> Budgets {
        Budgets { max_states: self.max_states as usize, max_depth: self.max_depth as usize, post_budget: self.post_budget }
    }
}

#[derive(Args, Debug, Clone)]
struct CheckArgs {
    /// Program file (.ap).
    input: PathBuf,
    #[command(flatten)]
    budgets: BudgetArgs,
    #[arg(long, value_enum, default_value_t = Format::Record)]
    format: Format,
    /// Skip replaying witnesses in the simulator before printing them.
    #[arg(long)]
    no_audit: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    /// `key: value` lines.
    Record,
    /// The verdict label only.
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Emit {
    /// Textual net format.
    Net,
    /// Graphviz of the net.
    Dot,
    /// Graphviz of the Karp-Miller coverability graph.
    CoverDot,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Is a configuration with the given global state reachable?
    CheckSafety {
        #[command(flatten)]
        args: CheckArgs,
        #[arg(long)]
        state: String,
    },
    /// Is the task buffer bounded?
    CheckBound(CheckArgs),
    /// Does every run terminate?
    CheckTerm(CheckArgs),
    /// Does every fair run terminate?
    CheckFairTerm(CheckArgs),
    /// Can a pending instance of the handler starve on a fair run?
    CheckStarvation {
        #[command(flatten)]
        args: CheckArgs,
        #[arg(long)]
        handler: String,
    },
    /// Is the configuration reachable? Written like `(d, {h:2, g})`.
    CheckReach {
        #[command(flatten)]
        args: CheckArgs,
        #[arg(long)]
        config: String,
    },
    /// Compile a program into its Petri net.
    Compile {
        /// Program file (.ap).
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Emit::Net)]
        emit: Emit,
        /// Build the starvation net for this handler.
        #[arg(long)]
        starve: Option<String>,
        /// Add the dispatch monitor place p_w.
        #[arg(long)]
        monitor: bool,
        /// Node budget for --emit cover-dot.
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
    },
    /// Encode a Boolean net (.pn) as an asynchronous program.
    EncodePn {
        input: PathBuf,
        /// Marking to cover, like `p:1 q`; adds a final transition consuming it.
        #[arg(long)]
        target: Option<String>,
        /// Convert the net to a Boolean one first.
        #[arg(long)]
        booleanize: bool,
    },
    /// Encode a Boolean net as a program that fairly terminates iff the place is never empty.
    EncodePnFairterm {
        input: PathBuf,
        #[arg(long)]
        place: String,
    },
    /// Enumerate reachable configurations breadth-first.
    Simulate {
        /// Program file (.ap).
        input: PathBuf,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
}

/// Outcome of a command: text for stdout and an exit code.
struct Output {
    text: String,
    code: u8,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_program(path: &Path) -> Result<AsyncProgram, String> {
    parse_program(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_net(path: &Path) -> Result<PetriNet, String> {
    parse_net(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn refused(e: AnalysisError) -> String {
    e.to_string()
}

fn report(p: &AsyncProgram, v: Verdict, args: &CheckArgs) -> Result<Output, String> {
    if !args.no_audit && !v.audit(p) {
        return Err(format!("internal error: the {} witness failed to replay", v.label()));
    }
    let text = match args.format {
        Format::Record => v.record(p),
        Format::Text => format!("{}\n", v.label()),
    };
    Ok(Output { text, code: v.exit_code() as u8 })
}

fn check(args: &CheckArgs, f: impl FnOnce(&AsyncProgram, &Budgets) -> Result<Verdict, AnalysisError>) -> Result<Output, String> {
    let p = load_program(&args.input)?;
    let v = f(&p, &args.budgets.budgets()).map_err(refused)?;
    report(&p, v, args)
}

fn compiled(p: &AsyncProgram, starve: Option<&str>) -> Result<CompiledNet, String> {
    match starve {
        Some(a) => {
            let h = p.handler_by_name(a).ok_or_else(|| format!("unknown handler `{a}`"))?;
            stitch_starvation(p, h).map_err(|e| e.to_string())
        }
        None if p.has_cancels() => Ok(stitch_cancel(p)),
        None => stitch(p).map_err(|e| e.to_string()),
    }
}

fn encoded_text(enc: &EncodedProgram, header: &[String]) -> String {
    let mut out: String = header.iter().map(|l| format!("# {l}\n")).collect();
    out.push_str(&print_program(&enc.program));
    out
}

fn run(cmd: Command) -> Result<Output, String> {
    match cmd {
        Command::CheckSafety { args, state } => check(&args, |p, b| check_safety(p, &state, b)),
        Command::CheckBound(args) => check(&args, check_boundedness),
        Command::CheckTerm(args) => check(&args, check_termination),
        Command::CheckFairTerm(args) => check(&args, check_fair_termination),
        Command::CheckStarvation { args, handler } => check(&args, |p, b| check_fair_starvation(p, &handler, b)),
        Command::CheckReach { args, config } => {
            let p = load_program(&args.input)?;
            let c = p.parse_config(&config).map_err(|e| e.to_string())?;
            let v = check_config_reachability(&p, &c, &args.budgets.budgets()).map_err(refused)?;
            report(&p, v, &args)
        }
        Command::Compile { input, emit, starve, monitor, max_states } => {
            let p = load_program(&input)?;
            let mut cn = compiled(&p, starve.as_deref())?;
            if monitor {
                cn.add_monitor();
            }
            let text = match emit {
                Emit::Net => print_net(&cn.net),
                Emit::Dot => cn.to_dot(),
                Emit::CoverDot => {
                    let km = karp_miller_with(&cn.net, KmLimits { max_nodes: max_states }, |_| false)
                        .map_err(|e| format!("{e}; coverability graphs need a net without resets"))?;
                    km.to_dot(&cn.net)
                }
            };
            Ok(Output { text, code: 0 })
        }
        Command::EncodePn { input, target, booleanize } => {
            let mut n = load_net(&input)?;
            let mut target = target.map(|t| n.parse_marking(&t)).transpose().map_err(|e| e.to_string())?;
            if booleanize {
                let mode = if target.is_some() { BoolMode::Cover } else { BoolMode::Bound };
                let b = to_boolean(&n, mode, target.as_ref()).map_err(|e| e.to_string())?;
                n = b.net;
                target = b.target;
            }
            let text = match target {
                Some(t) => {
                    let (enc, d) = encode_pn_cover(&n, &t).map_err(|e| e.to_string())?;
                    let line = format!("the target is coverable iff state {} is reachable", enc.program.state_name(d));
                    encoded_text(&enc, &[line])
                }
                None => encoded_text(&encode_pn(&n).map_err(|e| e.to_string())?, &[]),
            };
            Ok(Output { text, code: 0 })
        }
        Command::EncodePnFairterm { input, place } => {
            let n = load_net(&input)?;
            let enc = encode_pn_fairterm(&n, &place).map_err(|e| e.to_string())?;
            let line = format!("fair infinite run iff some reachable marking has no token in {place}");
            Ok(Output { text: encoded_text(&enc, &[line]), code: 0 })
        }
        Command::Simulate { input, budgets } => {
            let p = load_program(&input)?;
            let b = budgets.budgets();
            let sem = Semantics::new(&p, b.post_budget);
            let g = ConfigGraph::explore(&sem, b.max_states, b.max_depth);
            let mut text = String::new();
            for (v, c) in g.nodes.iter().enumerate() {
                text.push_str(&format!("{} {}\n", g.depth[v], p.fmt_config(c)));
            }
            text.push_str(&format!("configurations: {}\nexhausted: {}\nbudgets_hit: {}\n", g.nodes.len(), g.exhausted(), g.hit.describe()));
            Ok(Output { text, code: 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            let _ = stdout.write_all(out.text.as_bytes());
            ExitCode::from(out.code)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
