//! Command-line front end: validate scenario files, print route tables, and
//! run tracking simulations to a trace file plus optional metrics.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cotrack_core::{
    build_adjacency, compute_metrics, compute_next_hops, parse_scenario, run, write_trace, NodeId,
    Scenario,
};

#[derive(Parser)]
#[command(name = "cotrack", version, about = "Cell-of-origin tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and emit the delivery trace.
    Simulate {
        /// Scenario file to run.
        #[arg(long)]
        scenario: PathBuf,
        /// Simulated seconds to run for.
        #[arg(long)]
        until: f64,
        /// Recorded in the trace header; the engine itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print aggregate metrics after the run.
        #[arg(long)]
        metrics: bool,
    },
    /// Print the reader route table: reader, next hop, hop count.
    Route {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Check a scenario file; exit 0 when well-formed.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

/// Exit codes: 0 success, 1 validation/usage error, 2 internal error.
enum Failure {
    Invalid(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Internal(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Internal(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{err}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
fn print_out(text: &str) -> Result<(), Failure> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(Failure::Internal(format!("cannot write to stdout: {e}"))),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate {
            scenario,
            until,
            seed,
            trace,
            metrics,
        } => {
            if !(until.is_finite() && until > 0.0) {
                return Err(Failure::Invalid("--until must be a positive number".into()));
            }
            let loaded = load_scenario(&scenario)?;
            let result = run(&loaded, until, seed)
                .map_err(|e| Failure::Internal(format!("simulation failed: {e}")))?;
            let text = write_trace(&result);
            match trace {
                Some(path) => std::fs::write(&path, text).map_err(|e| {
                    Failure::Internal(format!("cannot write {}: {e}", path.display()))
                })?,
                None => print_out(&text)?,
            }
            if metrics {
                print_out(&format!("{}\n", compute_metrics(&result, &loaded)))?;
            }
            Ok(())
        }
        Command::Route { scenario } => {
            let loaded = load_scenario(&scenario)?;
            let graph = build_adjacency(&loaded.placements(), &loaded.ranges);
            let gateways: BTreeSet<NodeId> = loaded.gateways.keys().cloned().collect();
            let routes = compute_next_hops(&graph, &gateways);
            let mut out = String::new();
            for (reader, next_hop) in &routes.next_hop {
                out.push_str(&format!(
                    "{reader} {next_hop} {}\n",
                    routes.hop_count[reader]
                ));
            }
            print_out(&out)
        }
        Command::Validate { scenario } => load_scenario(&scenario).map(|_| ()),
    }
}
