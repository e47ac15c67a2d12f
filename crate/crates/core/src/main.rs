use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dvrp_engine::cases::Variant;
use dvrp_engine::engine::{Engine, EngineError};
use dvrp_engine::policy::external::{ACTION_FILE, EXCHANGE_DIR_VAR, STATE_FILE};
use dvrp_engine::policy::protocol::{decode_state, parse_action_script, Message, MessageType};
use dvrp_engine::policy::{FileExchangePolicy, GreedyPolicy, Policy, RejectAll, ScriptedPolicy, SubprocessPolicy};
use dvrp_engine::replay::replay;
use dvrp_engine::scenario::{load_scenario, scenario_to_json, Scenario};
use dvrp_engine::metrics;

#[derive(Parser)]
#[command(name = "dvrp", version, about = "Discrete-event simulation of dynamic vehicle routing problems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario and write its trace.
    Run(RunArgs),
    /// Check a scenario file and print a summary.
    Validate { scenario: PathBuf },
    /// Verify a trace against its scenario.
    Replay {
        scenario: PathBuf,
        trace: PathBuf,
        #[arg(long)]
        lenient: bool,
    },
    /// Serve the built-in greedy policy over stdin/stdout.
    ServePolicy {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Answer one file-exchange request with the built-in greedy policy.
    FilePolicy {
        #[arg(long)]
        scenario: PathBuf,
        /// Exchange directory; defaults to the DVRP_EXCHANGE_DIR variable.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Print the scenario document of a case study.
    Case { variant: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Greedy,
    RejectAll,
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long, value_enum, conflicts_with_all = ["policy_cmd", "policy_script"])]
    policy_builtin: Option<Builtin>,
    /// JSON list of actions, one per decision point.
    #[arg(long, conflicts_with = "policy_cmd")]
    policy_script: Option<PathBuf>,
    /// External policy command run through `sh -c`.
    #[arg(long)]
    policy_cmd: Option<String>,
    /// Use the file-exchange binding with this directory instead of pipes.
    #[arg(long, requires = "policy_cmd")]
    policy_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    policy_timeout_ms: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Trace output file; standard output if absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    #[arg(long)]
    lenient: bool,
}

enum Failure {
    Engine(EngineError),
    Other(i32, String),
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::Engine(e)
    }
}

fn fail(code: i32, e: impl std::fmt::Display) -> Failure {
    Failure::Other(code, e.to_string())
}

fn load(path: &PathBuf) -> Result<Scenario, Failure> {
    load_scenario(path).map_err(|e| fail(3, e))
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| fail(1, format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| fail(1, e)),
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut scenario = load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.config.seed = seed;
    }
    let timeout = Duration::from_millis(args.policy_timeout_ms);
    let mut policy: Box<dyn Policy> = match (&args.policy_cmd, &args.policy_dir, &args.policy_script) {
        (Some(cmd), Some(dir), _) => Box::new(FileExchangePolicy::new(cmd, dir, timeout).map_err(|e| fail(2, e))?),
        (Some(cmd), None, _) => Box::new(SubprocessPolicy::spawn(cmd, timeout).map_err(|e| fail(2, e))?),
        (None, _, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| fail(3, format!("{}: {e}", path.display())))?;
            Box::new(ScriptedPolicy::new(parse_action_script(&text, &scenario).map_err(|e| fail(3, e))?))
        }
        _ => match args.policy_builtin.unwrap_or(Builtin::Greedy) {
            Builtin::Greedy => Box::new(GreedyPolicy),
            Builtin::RejectAll => Box::new(RejectAll),
        },
    };
    let mut engine = Engine::new(&scenario, policy.as_mut());
    if args.strict || args.lenient {
        engine = engine.strict(args.strict);
    }
    let result = engine.run()?;
    write_out(args.trace.as_ref(), &result.history.to_trace())?;
    if let Some(path) = &args.metrics {
        let m = metrics::compute(&scenario, &result.history);
        let mut text = serde_json::to_string_pretty(&m).expect("metrics serialize");
        text.push('\n');
        write_out(Some(path), &text)?;
    }
    Ok(())
}

fn validate(path: &PathBuf) -> Result<(), Failure> {
    let s = load(path)?;
    println!(
        "{}: ok ({} locations, {} vehicles, {} orders)",
        path.display(),
        s.locations.len(),
        s.vehicles.len(),
        s.orders.len()
    );
    Ok(())
}

fn serve_policy(path: &PathBuf) -> Result<(), Failure> {
    let scenario = load(path)?;
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| fail(2, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let msg = Message::parse(&line).map_err(|e| fail(2, e))?;
        if msg.kind == MessageType::End {
            return Ok(());
        }
        let state = decode_state(msg.expect(MessageType::State).map_err(|e| fail(2, e))?).map_err(|e| fail(2, e))?;
        let action = GreedyPolicy.decide(&state, &scenario).map_err(|e| fail(2, e))?;
        writeln!(out, "{}", Message::action(&action).to_line())
            .and_then(|_| out.flush())
            .map_err(|e| fail(2, e))?;
    }
    Ok(())
}

fn file_policy(path: &PathBuf, dir: Option<PathBuf>) -> Result<(), Failure> {
    let scenario = load(path)?;
    let dir = dir
        .or_else(|| std::env::var_os(EXCHANGE_DIR_VAR).map(PathBuf::from))
        .ok_or_else(|| fail(2, format!("no exchange directory: pass --dir or set {EXCHANGE_DIR_VAR}")))?;
    let text = std::fs::read_to_string(dir.join(STATE_FILE)).map_err(|e| fail(2, e))?;
    let data = Message::parse(&text)
        .and_then(|m| m.expect(MessageType::State))
        .map_err(|e| fail(2, e))?;
    let state = decode_state(data).map_err(|e| fail(2, e))?;
    let action = GreedyPolicy.decide(&state, &scenario).map_err(|e| fail(2, e))?;
    let mut line = Message::action(&action).to_line();
    line.push('\n');
    std::fs::write(dir.join(ACTION_FILE), line).map_err(|e| fail(2, e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run(args) => run(args),
        Cmd::Validate { scenario } => validate(&scenario),
        Cmd::Replay {
            scenario,
            trace,
            lenient,
        } => load(&scenario).and_then(|s| {
            let text = std::fs::read_to_string(&trace).map_err(|e| fail(3, format!("{}: {e}", trace.display())))?;
            let report = replay(&s, &text, !lenient).map_err(|e| fail(1, e))?;
            println!("trace ok: {} events, {} decisions", report.events, report.decisions);
            Ok(())
        }),
        Cmd::ServePolicy { scenario } => serve_policy(&scenario),
        Cmd::FilePolicy { scenario, dir } => file_policy(&scenario, dir),
        Cmd::Case { variant } => match Variant::from_name(&variant) {
            Some(v) => write_out(None, &scenario_to_json(&v.build_default())),
            None => Err(fail(3, format!("unknown case study `{variant}` (icaps, sddp, rmd)"))),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Other(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
