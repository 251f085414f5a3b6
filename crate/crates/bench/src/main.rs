use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpmst::graph::WeightDist;
use dpmst_bench::{cmd_bench, cmd_gen, cmd_run, threads_from_env, Algo, BenchConfig, Budget};

/// Private minimum spanning tree experiments.
#[derive(Debug, Parser)]
#[command(name = "dpmst", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct BudgetArgs {
    /// Total zCDP budget.
    #[arg(long)]
    rho: Option<f64>,
    /// Total pure-DP budget.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        match (self.rho, self.epsilon) {
            (Some(r), _) => Budget::Rho(r),
            (None, Some(e)) => Budget::Epsilon(e),
            (None, None) => unreachable!("clap requires one of the two"),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a complete graph with random weights as a CSV edge list.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "uniform01")]
        dist: WeightDist,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one algorithm on a graph file and append a CSV record.
    Run {
        /// fast-pamst, pamst, post-gauss, post-laplace or exact.
        #[arg(long)]
        algo: Algo,
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Per-edge sensitivity of the weights.
        #[arg(long, default_value_t = 1e-5)]
        sensitivity: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep algorithms and sizes on fresh graphs and write medians.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        algos: Vec<Algo>,
        #[arg(long = "n-list", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, default_value_t = 1e-5)]
        sensitivity: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write every individual run here.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen { n, seed, dist, out } => cmd_gen(n, seed, dist, &out),
        Command::Run {
            algo,
            graph,
            budget,
            sensitivity,
            seed,
            out,
        } => cmd_run(algo, &graph, budget.budget(), sensitivity, seed, &out).map(|_| ()),
        Command::Bench {
            algos,
            n_list,
            reps,
            budget,
            sensitivity,
            seed,
            out,
            raw,
        } => threads_from_env().and_then(|threads| {
            let cfg = BenchConfig {
                algos,
                n_list,
                reps,
                budget: budget.budget(),
                sensitivity,
                seed,
                threads,
            };
            cmd_bench(&cfg, &out, raw.as_deref()).map(|_| ())
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dpmst: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
