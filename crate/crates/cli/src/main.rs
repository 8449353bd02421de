use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use varorder_cli::{run, Mode, RunOptions};

/// Stochastic orders and population growth under environmental noise.
#[derive(Debug, Parser)]
#[command(name = "varorder", version)]
struct Args {
    /// What to run.
    #[arg(value_enum)]
    mode: Mode,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run models with affine entries, which lie outside the log-convex class.
    #[arg(long)]
    allow_linear: bool,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = run(&RunOptions {
        mode: args.mode,
        config: args.config,
        out_dir: args.out_dir,
        allow_linear: args.allow_linear,
        threads: args.threads,
    });
    match &outcome.error {
        None => {
            if let Some(dir) = &outcome.out_dir {
                println!("wrote {}", dir.display());
            }
        }
        Some(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(outcome.exit_code as u8)
}
