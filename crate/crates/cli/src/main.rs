use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use coalguard_cli::commands::{self, AnalyzeOptions, RunOptions};
use coalguard_cli::{load_scenario, LoadOptions};
use coalguard_core::Policy;

#[derive(Parser)]
#[command(name = "coalguard", version, about = "Block hidden-coalition attacks in propositional-control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a scenario file.
    Validate {
        file: PathBuf,
        #[arg(long)]
        allow_insecure_start: bool,
    },
    /// Run a scenario; exits with status 1 if any tick ends insecure.
    Run {
        file: PathBuf,
        #[arg(long)]
        ticks: Option<u64>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON-lines trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        allow_insecure_start: bool,
    },
    /// State-graph, Horn and coalition analyses (all three by default).
    Analyze {
        file: PathBuf,
        #[arg(long)]
        state_graph: bool,
        #[arg(long)]
        horn: bool,
        #[arg(long)]
        audit: bool,
        /// Write the state graph as an edge list (`bits bits agent` per line).
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long)]
        allow_insecure_start: bool,
    },
    /// Time greedy blocking on adversarial instances.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "25,50,100,200")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    None,
    Greedy,
    Nondeterministic,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::None => Policy::None,
            PolicyArg::Greedy => Policy::Greedy,
            PolicyArg::Nondeterministic => Policy::Nondeterministic,
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Validate { file, allow_insecure_start } => {
            let sc = load_scenario(&file, LoadOptions { allow_insecure_start })?;
            println!(
                "ok: {} agents, {} variables, {} formulas, {} queued requests",
                sc.model.agents().len(),
                sc.model.variables().len(),
                sc.model.formulas().len(),
                sc.queue.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { file, ticks, policy, seed, trace, allow_insecure_start } => {
            let sc = load_scenario(&file, LoadOptions { allow_insecure_start })?;
            let opts = RunOptions { ticks, policy: policy.map(Into::into), seed, ..Default::default() };
            let (_, run) = commands::run_scenario(&sc, &opts);
            if let Some(path) = trace {
                std::fs::write(&path, commands::trace_jsonl(&run))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{}", commands::summarize(&run));
            Ok(if run.all_secure() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Analyze { file, state_graph, horn, audit, edges, allow_insecure_start } => {
            let sc = load_scenario(&file, LoadOptions { allow_insecure_start })?;
            let state_graph = state_graph || edges.is_some();
            let (report, edge_list) = commands::analyze(&sc, AnalyzeOptions { state_graph, horn, audit })?;
            print!("{report}");
            if let (Some(path), Some(list)) = (edges, edge_list) {
                std::fs::write(&path, list).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { sizes, seed, repeats } => {
            print!("{}", commands::format_bench(&commands::bench(&sizes, seed, repeats)));
            Ok(ExitCode::SUCCESS)
        }
    }
}
