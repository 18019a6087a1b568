use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsav_nls::commands::{cmd_compare_cost, cmd_converge_space, cmd_converge_time, cmd_run, CommandReport};
use fsav_nls::config::parse_config;

#[derive(Parser)]
#[command(name = "fsav-nls", version, about = "SAV Fourier pseudo-spectral solver for the fractional NLS equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file (key=value lines).
    #[arg(long)]
    config: PathBuf,
    /// Exit with code 4 when a threshold check fails.
    #[arg(long)]
    check: bool,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for ladder runs.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Single run with conservation log and snapshots.
    Run(Common),
    /// Temporal convergence ladder.
    ConvergeTime(Common),
    /// Spatial convergence ladder.
    ConvergeSpace(Common),
    /// Wall-clock comparison against the Crank–Nicolson scheme.
    CompareCost(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (common, run): (Common, fn(&_) -> _) = match cli.command {
        Command::Run(c) => (c, cmd_run),
        Command::ConvergeTime(c) => (c, cmd_converge_time),
        Command::ConvergeSpace(c) => (c, cmd_converge_space),
        Command::CompareCost(c) => (c, cmd_compare_cost),
    };

    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(out) = common.out {
        cfg.output_dir = out;
    }
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let report: CommandReport = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if common.check && !report.all_checks_passed() {
        return ExitCode::from(4);
    }
    ExitCode::SUCCESS
}
