use clap::Parser;
use std::path::PathBuf;

use dilute_wigner::cli::{run, Overrides};

/// Config-driven experiments on the dilute Wigner ensemble.
#[derive(Parser)]
#[command(name = "dilute-wigner", version, about)]
struct Args {
    /// JSON experiment config.
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count (falls back to DILUTE_WIGNER_THREADS, then the config).
    #[arg(long)]
    threads: Option<usize>,
    /// Evaluate the experiment's tolerance checks; exit 2 if any fail.
    #[arg(long)]
    check: bool,
    /// Override the config's output path.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        threads: args.threads,
        check: args.check,
        output: args.output,
    };
    std::process::exit(run(&args.config, &overrides));
}
