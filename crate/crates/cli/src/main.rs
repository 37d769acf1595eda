//! `localfit`: run a configured segmentation or experiment suite.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical
//! divergence (outputs are still written).

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Parser, Debug)]
#[command(name = "localfit", version, about = "Level-set segmentation with local fitting energies")]
struct Args {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the fully defaulted configuration and exit without running.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let resolved = match config::load(&args.config).and_then(|raw| config::resolve(&raw, args.out.as_deref())) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if args.print_config {
        print!("{}", resolved.effective_toml());
        return ExitCode::SUCCESS;
    }
    match runner::execute(&resolved) {
        Ok(()) => ExitCode::SUCCESS,
        Err(runner::Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(runner::Failure::Diverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
