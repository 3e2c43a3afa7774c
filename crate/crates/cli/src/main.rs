use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nse_mdp::error::Error;
use nse_mdp::experiment::{self, ExperimentConfig};

/// Simulation and verification toolkit for 2-D Navier–Stokes driven by Poisson noise.
#[derive(Parser)]
#[command(name = "nse-mdp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `ensemble.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Trilinear identities, inequalities, Stokes identity and energy-balance order.
    VerifyCore(Common),
    /// One sample path of the stochastic system.
    Simulate(Common),
    /// Skeleton equation for the configured control.
    Skeleton(Common),
    /// Rate function of a terminal state.
    Rate {
        #[command(flatten)]
        common: Common,
        /// Snapshot whose terminal state is the target.
        #[arg(long)]
        target: PathBuf,
        /// Also approximate the minimal rate outside the ball of this radius.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Convergence of the controlled process to the limit equation.
    Thm35(Common),
    /// Continuity of the skeleton map under weak convergence of controls.
    Prop33(Common),
    /// Convergence of the moderate process to the skeleton solution.
    Prop36(Common),
    /// Tail exponents against the minimal rate.
    MdpTail(Common),
    /// Indexes the CSVs and manifests of a results directory.
    ReportData {
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.ensemble.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out))
}

fn experiment(name: &str, common: &Common) -> Result<bool, Failure> {
    let (cfg, out) = load(common)?;
    let rec = experiment::run_and_persist(name, &cfg, &out)?;
    for r in &rec.rows {
        let eps = r.eps.map(|e| format!(" eps={e:e}")).unwrap_or_default();
        println!("{:<34}{eps:<14} {:>14.6e}  {}", r.metric_name, r.estimate, r.verdict.as_str());
    }
    println!(
        "{}: {} ({:.1}s) -> {}",
        rec.experiment,
        if rec.passed { "pass" } else { "fail" },
        rec.wall_clock_seconds,
        out.display()
    );
    Ok(rec.passed)
}

fn tool(common: &Common, f: impl FnOnce(&ExperimentConfig, &Path) -> nse_mdp::error::Result<()>) -> Result<bool, Failure> {
    let (cfg, out) = load(common)?;
    f(&cfg, &out)?;
    println!("wrote {}", out.display());
    Ok(true)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    experiment::configure_threads()?;
    match &cli.command {
        Command::VerifyCore(c) => experiment("verify_core", c),
        Command::Thm35(c) => experiment("thm35", c),
        Command::Prop33(c) => experiment("prop33", c),
        Command::Prop36(c) => experiment("prop36", c),
        Command::MdpTail(c) => experiment("mdp_tail", c),
        Command::Simulate(c) => tool(c, experiment::run_simulate),
        Command::Skeleton(c) => tool(c, experiment::run_skeleton),
        Command::Rate { common, target, radius } => {
            if !target.exists() {
                return Err(Failure::Usage(format!("target snapshot {} not found", target.display())));
            }
            tool(common, |cfg, out| experiment::run_rate(cfg, target, *radius, out))
        }
        Command::ReportData { out } => {
            let index = experiment::report_data(out)?;
            for e in &index.experiments {
                println!("{:<14} {} hash {}", e.experiment, if e.passed { "pass" } else { "fail" }, if e.hash_consistent { "ok" } else { "MISMATCH" });
            }
            Ok(index.consistent())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
