//! `metahier` command line: hierarchy analysis, metastable queries, oracle
//! validation and the planar two-disk demo.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad input (schema violation,
//! unknown label, lambda on a breakpoint), 3 a cost row with no finite entry,
//! 4 a failed check, 5 precision loss in the oracle.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod analyze;
pub mod demo2d;
pub mod error;
pub mod manifest;
pub mod regimes;
pub mod validate;

pub use error::{code, CliError};

#[derive(Debug, Parser)]
#[command(name = "metahier", version, about = "Hierarchies of chains for small-noise metastability")]
pub struct Cli {
    /// Worker threads for Monte Carlo (0 = one per core).
    #[arg(long, global = true, env = "METAHIER_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the hierarchy of a cost matrix: JSON dump on stdout, summary on stderr.
    Analyze {
        #[arg(long)]
        input: PathBuf,
    },
    /// Metastable set at time scale exp(lambda/eps) from one starting label.
    Metastable {
        #[arg(long)]
        input: PathBuf,
        /// Label name or 1-based index.
        #[arg(long)]
        from: String,
        #[arg(long)]
        lambda: f64,
    },
    /// Regime table (lambda_lo, lambda_hi, labels, certainty) as CSV.
    Regimes {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        from: String,
    },
    /// Compare the hierarchy's predictions with finite-eps oracle numbers.
    Validate {
        /// Matrix the oracle chain is built from.
        #[arg(long)]
        input: PathBuf,
        /// Matrix the predictions come from (default: --input).
        #[arg(long)]
        predict_from: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.075,0.1")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the per-eps fit points here.
        #[arg(long)]
        fits_csv: Option<PathBuf>,
    },
    /// Branching experiment on the two-disk planar system.
    Demo2d(Demo2dCli),
}

#[derive(Debug, clap::Args)]
pub struct Demo2dCli {
    #[arg(long, value_enum, default_value = "default")]
    pub preset: demo2d::Preset,
    /// JSON file with any of a, c_beta, c_a, r_max.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub c_beta: Option<f64>,
    #[arg(long)]
    pub c_a: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub delta: f64,
    /// 0 runs a single noiseless path and checks that H is monotone.
    #[arg(long, default_value_t = 0.3)]
    pub kappa: f64,
    /// Time step (default delta/20, also the largest allowed).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    #[arg(long, default_value_t = 20_000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Radius of the target balls.
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    /// Starting point as x,y.
    #[arg(long, value_parser = parse_point, default_value = "0,1.5", allow_hyphen_values = true)]
    pub start: [f64; 2],
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub targets: Vec<usize>,
    /// Exit 4 unless the empirical weights match the theory.
    #[arg(long)]
    pub check: bool,
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    /// Check within this many standard errors (symmetric preset: 3).
    #[arg(long)]
    pub sigmas: Option<f64>,
    /// (delta, kappa) pairs as delta:kappa, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pub sensitivity: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 2000)]
    pub sensitivity_replicas: usize,
    #[arg(long, default_value_t = 6)]
    pub level_points: usize,
    /// Cells of the averaged-edge discretisation behind the finite-kappa prediction.
    #[arg(long, default_value_t = 400)]
    pub graph_cells: usize,
    /// One row per replica: outcome, hitting time, steps, final state.
    #[arg(long)]
    pub trajectories_csv: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([p(x)?, p(y)?])
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected delta:kappa, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

impl From<Demo2dCli> for demo2d::Demo2dArgs {
    fn from(c: Demo2dCli) -> Self {
        Self {
            preset: c.preset,
            config: c.config,
            system: demo2d::SystemOverrides { a: c.a, c_beta: c.c_beta, c_a: c.c_a, r_max: c.r_max },
            delta: c.delta,
            kappa: c.kappa,
            dt: c.dt,
            t_max: c.t_max,
            replicas: c.replicas,
            seed: c.seed,
            rho: c.rho,
            start: c.start,
            targets: c.targets,
            check: c.check,
            tolerance: c.tolerance,
            sigmas: c.sigmas,
            sensitivity: c.sensitivity,
            sensitivity_replicas: c.sensitivity_replicas,
            level_points: c.level_points,
            graph_cells: c.graph_cells,
            trajectories_csv: c.trajectories_csv,
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, log: &mut dyn Write) -> Result<u8, CliError> {
    match command {
        Command::Analyze { input } => analyze::run(&input, out, log),
        Command::Metastable { input, from, lambda } => regimes::metastable(&input, &from, lambda, out),
        Command::Regimes { input, from } => regimes::regimes(&input, &from, out, log),
        Command::Validate { input, predict_from, eps, replicas, seed, fits_csv } => {
            let args = validate::ValidateArgs { input, predict_from, eps, replicas, seed, fits_csv };
            validate::run(&args, out, log)
        }
        Command::Demo2d(c) => demo2d::run(&c.into(), out, log),
    }
}

/// Runs one command inside a pool of `cli.threads` workers. Output is
/// buffered and written once the command finishes. Errors are reported on
/// `log` and mapped to their exit code.
pub fn run(cli: Cli, out: &mut dyn Write, log: &mut dyn Write) -> u8 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(log, "error: {}", CliError::from(e));
            return code::FAILURE;
        }
    };
    let command = cli.command;
    let (result, stdout, stderr) = pool.install(|| {
        let (mut o, mut l) = (Vec::new(), Vec::new());
        let r = dispatch(command, &mut o, &mut l);
        (r, o, l)
    });
    let written = out.write_all(&stdout).and_then(|_| log.write_all(&stderr));
    match (result, written) {
        (Ok(c), Ok(())) => c,
        (Ok(_), Err(e)) => {
            let _ = writeln!(log, "error: {}", CliError::from(e));
            code::FAILURE
        }
        (Err(e), _) => {
            let _ = writeln!(log, "error: {e}");
            e.code()
        }
    }
}
