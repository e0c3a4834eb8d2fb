use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dtsnoma::config::ScenarioFile;
use dtsnoma::engine::run_campaign;
use dtsnoma::output::emit_results;
use dtsnoma::strategies::StrategyKind;

/// Overrides the rayon worker count.
const WORKERS_ENV: &str = "DTSNOMA_WORKERS";

#[derive(Parser)]
#[command(name = "dtsnoma", version, about = "LoRa direct-to-satellite uplink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign and write CSV results.
    Simulate(SimulateArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// aloha, ftp, ctp or all.
    #[arg(long)]
    strategy: Option<String>,
    /// Comma-separated device counts, ascending.
    #[arg(long, value_delimiter = ',')]
    devices: Option<Vec<usize>>,
    #[arg(long)]
    replications: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn parse_strategies(s: &str) -> Result<Vec<StrategyKind>, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(StrategyKind::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse()).collect()
}

fn configure_workers() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{WORKERS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    configure_workers()?;
    let mut file = ScenarioFile::load(&args.config).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if let Some(r) = args.replications {
        file.replications = r;
    }
    if let Some(d) = args.devices {
        file.sweep_devices = d;
    }
    if let Some(s) = args.strategy {
        file.strategies = parse_strategies(&s).map_err(Failure::Config)?;
    }
    let scenario = file.to_scenario().map_err(|e| Failure::Config(e.to_string()))?;

    let points =
        run_campaign(&scenario, &file.strategies, &file.sweep_devices).map_err(|e| Failure::Runtime(e.to_string()))?;
    let written = emit_results(&points, &file, &args.out).map_err(|e| Failure::Runtime(e.to_string()))?;

    for p in &points {
        eprintln!(
            "{:>5} U={:<4} goodput {:>8.1} ± {:<6.1} bytes/lap",
            p.strategy, p.num_devices, p.goodput.mean, p.goodput.ci95
        );
    }
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(2)
        }
    }
}
