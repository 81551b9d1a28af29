mod bench_cmd;
mod cluster_cmd;
mod io;
mod synth_cmd;

use clap::{Parser, Subcommand};

/// Robust kernel clustering: denoise a Gaussian kernel matrix, cluster by
/// spectral rounding, flag outliers by degree.
#[derive(Parser)]
#[command(name = "robustkc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV of numeric rows; writes per-row labels as JSON.
    Cluster(cluster_cmd::ClusterArgs),
    /// Generate a synthetic dataset (data.csv + truth.csv).
    Synth(synth_cmd::SynthArgs),
    /// Run a benchmark suite; writes results.csv + summary.json.
    Bench(bench_cmd::BenchArgs),
}

/// Exit codes: 0 success, 2 input error, 3 pipeline error.
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

fn main() {
    if let Ok(threads) = std::env::var("ROBUSTKC_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Cluster(args) => cluster_cmd::run(args),
        Command::Synth(args) => synth_cmd::run(args),
        Command::Bench(args) => bench_cmd::run(args),
    };
    std::process::exit(code);
}
