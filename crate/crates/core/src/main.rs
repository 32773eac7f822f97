use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cme_core::cli::{resolve, run, Command, Overrides};
use cme_core::config::parse_epsilons;

/// Coupled-mode wavepacket workbench for the periodic NLS.
#[derive(Parser, Debug)]
#[command(name = "cme-wavepack", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// INI run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter bundle: sec611, sec612 or sec62.
    #[arg(long)]
    setup: Option<String>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated epsilon values.
    #[arg(long)]
    epsilon: Option<String>,
    /// Worker threads for the parallel stages.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let config_text = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let epsilons = match args.epsilon.as_deref().map(parse_epsilons).transpose() {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: --epsilon: {e}");
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides {
        config_text,
        setup: args.setup,
        out: args.out,
        epsilons,
    };
    let cfg = match resolve(&overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(args.command, &cfg) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                eprintln!("acceptance window missed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
