//! `ppot`: runs the library's experiments from flags or a TOML config and
//! writes canonical JSON reports.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{hash_of, Config};
use crate::report::{Failure, RunReport, EXIT_ASSERTION, EXIT_INPUT, EXIT_OK};

#[derive(Parser, Debug)]
#[command(name = "ppot", version, about = "p-energy, capacity and Harnack experiments on epsilon-net graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// TOML configuration; flags given on the command line take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Where to write the JSON report (standard output when absent).
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// Record the wall time in the report.
    #[arg(long)]
    #[serde(skip)]
    pub timing: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GraphArg {
    /// Graph cache written by `build-graph`. Without it the graph is built
    /// from the config's [space] and [net] sections.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CenterArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub center_x: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub center_y: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Interior,
    Any,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Constant,
    Affine,
    Bumps,
    Expfield,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Sample a space, extract an epsilon-net and write the graph cache.
    BuildGraph {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override of the volume exponent.
        #[arg(long)]
        d_h: Option<f64>,
        /// Walk exponent of the graph's time scaling.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Dirichlet or Poisson problem on an intrinsic ball.
    Solve {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Constant source term.
        #[arg(long, default_value_t = 0.0)]
        f: f64,
        #[arg(long, value_enum, default_value_t = DataKind::Constant)]
        boundary: DataKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the solution vector to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Capacity of B(x, r) against the complement of B(x, A r).
    Capacity {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        r: f64,
        #[arg(long = "A", default_value_t = 2.0)]
        a: f64,
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Discrete p-modulus of the same condenser.
    Modulus {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        r: f64,
        #[arg(long = "A", default_value_t = 2.0)]
        a: f64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Poisson solution against its Wolff potential.
    Wolff {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        f: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Cutoff function between B(x, R) and B(x, 2R) and its Sobolev fit.
    Cutoff {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        p: Option<f64>,
        /// Exponent of the time scaling used for lambda and the mass term
        /// (defaults to the graph's).
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 50)]
        probes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized elliptic Harnack ratios.
    Harnack {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        r: f64,
        #[arg(long = "A-H", default_value_t = 4.0)]
        a_h: f64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Policy::Interior)]
        policy: Policy,
        #[command(flatten)]
        common: Common,
    },
    /// Lower estimate of the Poincare constant on B(x, r).
    Poincare {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        r: f64,
        #[arg(long = "A-PI", default_value_t = 2.0)]
        a_pi: f64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 20)]
        probes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Exact eigenvalue bound (p = 2 only).
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Capacities over several radii and the fitted exponent.
    ScalingSweep {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long = "A", default_value_t = 2.0)]
        a: f64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, value_enum, default_value_t = Policy::Interior)]
        policy: Policy,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Linear local connectivity of the annulus around a vertex.
    Llc {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        r: f64,
        #[arg(long = "A", default_value_t = 3.0)]
        a: f64,
        /// Assert the outcome.
        #[arg(long)]
        expect: Option<bool>,
        #[command(flatten)]
        common: Common,
    },
    /// Cable system summary and the interpolation energy identity.
    Cable {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the acceptance suite.
    VerifyAll {
        /// Restrict to these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        #[command(flatten)]
        common: Common,
    },
}

/// Output of a command before it is wrapped in a report.
pub struct Outcome {
    pub result: serde_json::Value,
    pub assertions: std::collections::BTreeMap<String, bool>,
    pub outputs: Vec<String>,
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::BuildGraph { common, .. }
        | Command::Solve { common, .. }
        | Command::Capacity { common, .. }
        | Command::Modulus { common, .. }
        | Command::Wolff { common, .. }
        | Command::Cutoff { common, .. }
        | Command::Harnack { common, .. }
        | Command::Poincare { common, .. }
        | Command::ScalingSweep { common, .. }
        | Command::Llc { common, .. }
        | Command::Cable { common, .. }
        | Command::VerifyAll { common, .. } => common,
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let common = common_of(&cli.command).clone();
    let config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Ok(workers) = std::env::var("PPOT_WORKERS") {
        let n: usize = workers.parse().map_err(|_| Failure::input(format!("PPOT_WORKERS must be a count, got {workers}")))?;
        // a second initialization only fails when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    let (name, params, outcome) = commands::dispatch(&cli.command, &config)?;
    let hash = hash_of(&serde_json::json!({ "command": name, "config": config, "params": params }));
    let report = RunReport {
        command: name.to_string(),
        config_hash: hash,
        wall_time: common.timing.then(|| start.elapsed().as_secs_f64()),
        outputs: outcome.outputs,
        assertions: outcome.assertions,
        result: outcome.result,
    };
    let text = report::to_json(&report)?;
    match &common.report {
        Some(path) => report::write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_ASSERTION })
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("ppot: {}", f.message);
            f.code
        }
    };
    std::process::exit(code);
}
