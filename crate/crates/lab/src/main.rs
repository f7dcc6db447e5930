use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use maxfilter_lab::{run, Command};

#[derive(Parser)]
#[command(name = "maxfilter-lab", version, about = "Experiments on max filter banks for finite groups")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Exact and relaxed upper bounds, sharp and pigeonhole lower bounds, sampled ratios.
    Bounds(RunArgs),
    /// Certified distortion of Gaussian template banks against the theoretical bound.
    Distortion(RunArgs),
    /// Collision search at n = 2d and n = chi (d - 1) + 1 templates.
    Injectivity(RunArgs),
    /// Reflection-group test and positive definiteness search for the kernel.
    Kernel(RunArgs),
    /// FFT versus brute-force max filtering for circular shifts.
    Maxfilter(RunArgs),
    /// Sampled lower bound on the Voronoi characteristic.
    Chi(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; every random stream is derived from it.
    #[arg(long)]
    seed: u64,
    /// Output directory, overriding the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Bounds(a) => (Command::Bounds, a),
        Sub::Distortion(a) => (Command::Distortion, a),
        Sub::Injectivity(a) => (Command::Injectivity, a),
        Sub::Kernel(a) => (Command::Kernel, a),
        Sub::Maxfilter(a) => (Command::Maxfilter, a),
        Sub::Chi(a) => (Command::Chi, a),
    };
    std::process::exit(run(command, &args.config, args.seed, args.out));
}
