use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use pact_cli::console::Console;
use pact_cli::{load_scenario, run, ModeArg, PlannerKind, RunSpec};
use pact_core::runtime::{LatencyModel, PlanningCadence};

#[derive(Parser)]
#[command(name = "pact", version, about = "Run multi-agent scenarios and talk to running episodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of a scenario and report metrics.
    Run(RunArgs),
    /// Attach to a served episode: print team chat, send typed lines.
    Console {
        #[arg(long, default_value = pact_control::DEFAULT_ADDR)]
        addr: String,
        #[arg(long, default_value = "human")]
        sender: String,
        #[arg(long, default_value = "A")]
        team: String,
        /// Poll interval in milliseconds.
        #[arg(long, default_value_t = 500)]
        poll_ms: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// parallel, serialized or both
    #[arg(long, default_value = "parallel")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `scripted` or `external:<host:port>`
    #[arg(long, default_value = "scripted")]
    planner: PlannerKind,
    /// `constant:<t>`, `uniform:<a>,<b>` or `trace:<path>`
    #[arg(long, default_value = "constant:2", value_parser = parse_latency)]
    latency: LatencyModel,
    /// Directory for trials.jsonl, summary.json and event logs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Serve the control API on this address and pace ticks in real time.
    #[arg(long, num_args = 0..=1, default_missing_value = pact_control::DEFAULT_ADDR)]
    serve: Option<String>,
    /// Milliseconds per tick when serving.
    #[arg(long, default_value_t = 100)]
    tick_ms: u64,
    #[arg(long)]
    chat_window: Option<usize>,
    /// `continuous`, `continuous:<min_gap>` or `on-dispatch`
    #[arg(long, default_value = "continuous", value_parser = parse_cadence)]
    cadence: PlanningCadence,
    /// Disable recursive decomposition of acquisition goals.
    #[arg(long)]
    no_rtdm: bool,
    /// Drop shared chat history and team digests from planner prompts.
    #[arg(long)]
    no_central_memory: bool,
    /// Seconds to wait for an external planner.
    #[arg(long, default_value_t = 30)]
    planner_timeout: u64,
    #[arg(long, default_value = "")]
    system_prompt: String,
}

fn parse_latency(s: &str) -> Result<LatencyModel, String> {
    LatencyModel::from_spec(s).map_err(|e| e.to_string())
}

fn parse_cadence(s: &str) -> Result<PlanningCadence, String> {
    match s.split_once(':') {
        None if s == "continuous" => Ok(PlanningCadence::Continuous { min_gap: 0 }),
        None if s == "on-dispatch" => Ok(PlanningCadence::OnDispatch),
        Some(("continuous", gap)) => {
            gap.parse().map(|min_gap| PlanningCadence::Continuous { min_gap }).map_err(|_| format!("bad gap `{gap}`"))
        }
        _ => Err(format!("unknown cadence `{s}`")),
    }
}

fn run_command(args: RunArgs) -> Result<()> {
    let config = load_scenario(&args.scenario)?;
    let mut spec = RunSpec::new(config);
    spec.mode = args.mode;
    spec.trials = args.trials;
    spec.seed = args.seed;
    spec.planner = args.planner;
    spec.latency = args.latency;
    spec.out = args.out;
    spec.serve = args.serve;
    spec.tick_duration = Duration::from_millis(args.tick_ms);
    spec.planner_timeout = Duration::from_secs(args.planner_timeout);
    spec.options.cadence = args.cadence;
    spec.options.system_prompt = args.system_prompt;
    spec.options.skills.rtdm = !args.no_rtdm;
    if let Some(w) = args.chat_window {
        spec.options.chat_window = w;
    }
    if args.no_central_memory {
        spec.options.chat_window = 0;
        spec.options.team_digest = false;
    }
    let summary = run(&spec)?;
    print!("{}", summary.table());
    if let Some(dir) = &spec.out {
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Console { addr, sender, team, poll_ms } => {
            let console = Console::new(addr, sender, team);
            console.state().context("control API not reachable").and_then(|s| {
                println!("connected at tick {}; type to chat, /pause, /resume, /quit", s["tick"]);
                console.run(io::stdin().lock(), io::stdout(), Duration::from_millis(poll_ms))
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
