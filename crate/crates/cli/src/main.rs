use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use srcd::experiment::{race, run_experiment, scaling_report, Algorithm, Dataset};
use srcd::mtx::save_matrix_market;
use srcd::{synthesize, NmfConfig, ProductUpdate, RegConfig, SyntheticSpec, Tolerances};

#[derive(Parser)]
#[command(name = "srcd", version, about = "KL-divergence NMF for sparse matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factorize one dataset and write log, factors and summary.
    Run {
        #[command(flatten)]
        opts: Common,
        #[arg(long, value_enum, default_value = "srcd")]
        algorithm: AlgorithmArg,
    },
    /// Race srcd against mu from the same start under a solve-time budget.
    Race {
        #[command(flatten)]
        opts: Common,
        /// Seconds of solve time per algorithm.
        #[arg(long, default_value_t = 30.0)]
        budget: f64,
    },
    /// Time a fixed number of srcd iterations over ranks and thread counts.
    Scaling {
        #[command(flatten)]
        opts: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40])]
        ranks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4])]
        thread_counts: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        iters: usize,
    },
    /// Write a synthetic matrix as MatrixMarket.
    Synth {
        /// n,m,r,sparsity,model
        #[arg(long)]
        synthetic: SyntheticSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Srcd,
    Mu,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxUpdate {
    Dense,
    Support,
}

#[derive(Args)]
struct Common {
    /// MatrixMarket coordinate file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// n,m,r,sparsity,model with model count or tfidf; seeded by --seed.
    #[arg(long)]
    synthetic: Option<SyntheticSpec>,
    #[arg(long, default_value_t = 10)]
    rank: usize,
    #[arg(long, default_value_t = 0.0)]
    alpha1: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha2: f64,
    #[arg(long, default_value_t = 0.0)]
    beta1: f64,
    #[arg(long, default_value_t = 0.0)]
    beta2: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Relative objective decrease that counts as converged; 0 disables.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = srcd::subproblem::DEFAULT_EPS_X)]
    eps_x: f64,
    #[arg(long, default_value_t = srcd::subproblem::DEFAULT_EPS_GRAD)]
    eps_grad: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which entries of the maintained product are updated per step.
    #[arg(long, value_enum, default_value = "dense")]
    ax_update: AxUpdate,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn dataset(&self) -> Dataset {
        match (&self.input, &self.synthetic) {
            (Some(path), _) => Dataset::File(path.clone()),
            (None, Some(spec)) => Dataset::Synthetic(SyntheticSpec {
                seed: self.seed,
                ..spec.clone()
            }),
            (None, None) => unreachable!("clap requires one of --input / --synthetic"),
        }
    }

    fn config(&self) -> NmfConfig {
        NmfConfig {
            rank: self.rank,
            reg: RegConfig {
                alpha1: self.alpha1,
                alpha2: self.alpha2,
                beta1: self.beta1,
                beta2: self.beta2,
            },
            max_outer_iters: self.max_iters,
            rel_obj_tol: self.tol,
            seed: self.seed,
            n_workers: self.threads,
            tolerances: Tolerances {
                eps_x: self.eps_x,
                eps_grad: self.eps_grad,
                ..Tolerances::default()
            },
            product_update: match self.ax_update {
                AxUpdate::Dense => ProductUpdate::Dense,
                AxUpdate::Support => ProductUpdate::Support,
            },
            time_budget: None,
        }
    }
}

fn execute(command: Command) -> srcd::Result<()> {
    match command {
        Command::Run { opts, algorithm } => {
            let algorithm = match algorithm {
                AlgorithmArg::Srcd => Algorithm::Srcd,
                AlgorithmArg::Mu => Algorithm::Mu,
            };
            let s = run_experiment(&opts.dataset(), algorithm, &opts.config(), &opts.out)?;
            println!(
                "{}: {} iterations, kl {:.6e} -> {:.6e}, sparsity W {:.3} F {:.3}, {:.3}s",
                s.algorithm,
                s.iterations,
                s.initial_kl_objective,
                s.final_kl_objective,
                s.sparsity_w,
                s.sparsity_f,
                s.solve_seconds
            );
        }
        Command::Race { opts, budget } => {
            let o = race(&opts.dataset(), &opts.config(), budget, &opts.out)?;
            for e in [&o.srcd, &o.mu] {
                println!(
                    "{}: {} iterations, kl {:.6e}",
                    e.algorithm, e.iterations, e.final_kl_objective
                );
            }
            println!("relative margin (mu - srcd) / mu: {:+.4}", o.relative_margin());
        }
        Command::Scaling {
            opts,
            ranks,
            thread_counts,
            iters,
        } => {
            let Dataset::Synthetic(spec) = opts.dataset() else {
                return Err(srcd::NmfError::InvalidConfig(
                    "scaling runs on --synthetic data".into(),
                ));
            };
            for row in scaling_report(&spec, &opts.config(), &ranks, &thread_counts, iters, &opts.out)? {
                println!("r={} threads={} {:.3}s", row.r, row.n_threads, row.wall_seconds);
            }
        }
        Command::Synth {
            synthetic,
            seed,
            out,
        } => {
            let v = synthesize(&SyntheticSpec { seed, ..synthetic })?;
            save_matrix_market(&out, &v)?;
            println!("{} x {} with {} nonzeros", v.n_rows(), v.n_cols(), v.nnz());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
