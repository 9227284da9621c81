use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use prune24::harness::bench::{run_method, Method};
use prune24::harness::path::linspace;
use prune24::harness::{
    gen_synthetic, read_matrix, reg_path_sweep, run_benchmark, toy_problem, write_bench_csv,
    write_matrix, BenchConfig, SyntheticSpec,
};
use prune24::linalg::layer_loss;
use prune24::pruner::{LambdaSchedule, PruneConfig};
use prune24::{Hessian, Matrix};

#[derive(Parser)]
#[command(name = "prune24", version, about = "2:4 structured-sparsity pruning of linear layers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prune a weight matrix against a layer Hessian.
    Prune {
        #[arg(long)]
        method: String,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        hessian: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mask_out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        gd_steps: usize,
        #[arg(long, default_value_t = 0.01)]
        lambda0: f64,
        #[arg(long, default_value_t = 1.01)]
        beta: f64,
        /// Scale λ₀ by the mean |W*| using this base value.
        #[arg(long, value_name = "LAMBDA0_TILDE")]
        adaptive_lambda: Option<f64>,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
        /// Accepted for scripting symmetry; every method is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Regularization path of a single cell.
    ProxPath {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        z: Vec<f64>,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic instance with correlated Hessian.
    Synth {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_weights: PathBuf,
        #[arg(long)]
        out_hessian: PathBuf,
    },
    /// Compare all pruners on synthetic instances.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.9,0.7,0.5,0.3")]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 128)]
        d: usize,
        /// Number of seeds; runs seeds 0..n.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value = "all")]
        methods: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a pruner on the two-cell toy problem.
    Toy {
        #[arg(long, default_value = "prox")]
        method: String,
    },
    /// Layer loss of pruned weights against reference weights.
    EvalLoss {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        ref_weights: PathBuf,
        #[arg(long)]
        hessian: PathBuf,
    },
}

fn load_hessian(path: &PathBuf) -> Result<Hessian> {
    let m = read_matrix(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Hessian::new(m)?)
}

fn load(path: &PathBuf) -> Result<Matrix> {
    read_matrix(path).with_context(|| format!("reading {}", path.display()))
}

fn fmt_row(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prune {
            method,
            weights,
            hessian,
            out,
            mask_out,
            gd_steps,
            lambda0,
            beta,
            adaptive_lambda,
            max_iter,
            seed: _,
        } => {
            let method: Method = method.parse()?;
            let w_star = load(&weights)?;
            let h = load_hessian(&hessian)?;
            let schedule = match adaptive_lambda {
                Some(t) => LambdaSchedule::adaptive(t, beta)?,
                None => LambdaSchedule::new(lambda0, beta)?,
            };
            let cfg = BenchConfig {
                schedule,
                prune: PruneConfig { max_iter, gd_steps, ..PruneConfig::default() },
                ..BenchConfig::default()
            };
            let res = run_method(method, &w_star, &h, &cfg)?;
            write_matrix(&out, &res.w)?;
            write_matrix(&mask_out, &res.mask.to_matrix())?;
            let loss = layer_loss(&res.w, &w_star, &h)?;
            print!("method={method} loss={loss} iterations={}", res.iterations);
            if let Some(rep) = &res.report {
                print!(" terminated_by={:?} final_lambda={}", rep.terminated_by, rep.final_lambda);
            }
            println!();
        }
        Command::ProxPath { z, lambda_min, lambda_max, points, out } => {
            let z: [f64; 4] = z.try_into().map_err(|_| anyhow::anyhow!("--z needs 4 values"))?;
            if !(lambda_max > lambda_min) {
                bail!("--lambda-max must exceed --lambda-min");
            }
            let path = reg_path_sweep(&z, &linspace(lambda_min, lambda_max, points))?;
            fs::write(&out, path.to_csv())?;
            match path.lambda2_star {
                Some(l) => println!("lambda2_star={l}"),
                None => println!("lambda2_star=inf"),
            }
        }
        Command::Synth { d, alpha, seed, out_weights, out_hessian } => {
            let (w, h) = gen_synthetic(&SyntheticSpec::new(d, alpha, seed)?)?;
            write_matrix(&out_weights, &w)?;
            write_matrix(&out_hessian, h.matrix())?;
        }
        Command::Bench { alphas, d, seeds, methods, out } => {
            let methods = Method::parse_list(&methods)?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let rows = run_benchmark(&alphas, d, &seeds, &methods, &BenchConfig::default())?;
            fs::write(&out, write_bench_csv(&rows))?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Toy { method } => {
            let method: Method = method.parse()?;
            let (w_star, h) = toy_problem();
            let res = run_method(method, &w_star, &h, &BenchConfig::default())?;
            let mask: Vec<f64> = res.mask.to_matrix().into_vec();
            println!("weights: {}", fmt_row(res.w.as_slice()));
            println!("mask: {}", fmt_row(&mask));
            println!("loss: {}", layer_loss(&res.w, &w_star, &h)?);
        }
        Command::EvalLoss { weights, ref_weights, hessian } => {
            let w = load(&weights)?;
            let w_star = load(&ref_weights)?;
            let h = load_hessian(&hessian)?;
            println!("{}", layer_loss(&w, &w_star, &h)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
