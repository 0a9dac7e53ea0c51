use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sparse_codesign::cli::{read_run_spec, run, ProblemSource, RunSpec, DEFAULT_SIDE};
use sparse_codesign::prox::SparsityMode;
use sparse_codesign::SolverConfig;

#[derive(Parser)]
#[command(name = "codesign", version, about = "Sparse output-feedback gain and sensor co-design")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a config file.
    Run { config: PathBuf },
    /// Solve a built-in benchmark with default settings.
    Bench {
        benchmark: Benchmark,
        /// Masses or subsystems.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Row or column budget on C.
        #[arg(long)]
        r: usize,
        /// Entry budget on K.
        #[arg(long)]
        s: usize,
        #[arg(long, default_value = "row")]
        mode: SparsityMode,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol_step: Option<f64>,
        #[arg(long)]
        tol_phi: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SIDE)]
        side: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Benchmark {
    MassSpring,
    Distributed,
}

fn spec_from_args(command: Command) -> sparse_codesign::Result<RunSpec> {
    match command {
        Command::Run { config } => read_run_spec(&config),
        Command::Bench { benchmark, n, r, s, mode, gamma, max_iter, tol_step, tol_phi, seed, side, out } => {
            let mut config = SolverConfig::new(s, r, mode);
            config.seed = seed;
            if let Some(g) = gamma {
                config.gamma = g;
            }
            if let Some(m) = max_iter {
                config.max_iter = m;
            }
            if let Some(t) = tol_step {
                config.tol_step = t;
            }
            if let Some(t) = tol_phi {
                config.tol_phi = t;
            }
            config.validate()?;
            let source = match benchmark {
                Benchmark::MassSpring => ProblemSource::MassSpring { masses: n },
                Benchmark::Distributed => ProblemSource::Distributed { count: n, side, seed },
            };
            Ok(RunSpec { source, config, output_dir: out })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let outcome = spec_from_args(args.command).and_then(|spec| run(&spec));
    match outcome {
        Ok(outcome) => {
            let r = &outcome.result;
            let last = r.final_record();
            println!(
                "{} after {} iterations: phi = {:.6e}, J = {:.6e}, penalty residual = {:.3e}",
                r.status,
                r.iterations(),
                last.phi,
                last.j_value,
                last.penalty_residual
            );
            if let Some(f) = &r.failure {
                eprintln!("error: {f}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
