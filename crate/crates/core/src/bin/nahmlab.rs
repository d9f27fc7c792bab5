use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nahmlab::pipeline::{
    cmd_report, cmd_solve, cmd_transform, cmd_validate, cmd_weights, exit_code, Outcome, PipelineConfig, RunOptions,
    EXIT_OK,
};
use nahmlab::Result;

#[derive(Parser)]
#[command(name = "nahmlab", version, about = "Nahm transform pipeline for T³-invariant instantons on ℝ×T³")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of cube halvings in the Bogomolny convergence study.
    #[arg(long)]
    refine: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the config and the two model solutions; list the singular points.
    Validate(Common),
    /// Solve the Nahm flow between the two ends.
    Solve(Common),
    /// Sample the transform over a grid of T̂³ and run the Bogomolny checks.
    Transform {
        #[command(flatten)]
        common: Common,
        /// Curve file from `solve` (default `<out>/curve.json`).
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Extract Dirac weights at the singular points.
    Weights {
        #[command(flatten)]
        common: Common,
        /// Only this point, as comma-separated dual-lattice coefficients.
        #[arg(long, value_parser = parse_point)]
        point: Option<[f64; 3]>,
    },
    /// Collect all stage outputs into report.json.
    Report(Common),
}

fn parse_point(s: &str) -> std::result::Result<[f64; 3], String> {
    let v = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect::<std::result::Result<Vec<_>, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected three comma-separated numbers, got {}", v.len()))
}

fn run(cli: Cli) -> Result<Outcome> {
    let (common, curve, point) = match &cli.command {
        Command::Validate(c) | Command::Solve(c) | Command::Report(c) => (c, None, None),
        Command::Transform { common, curve } => (common, curve.clone(), None),
        Command::Weights { common, point } => (common, None, *point),
    };
    let opts = RunOptions {
        out: common.out.clone(),
        threads: common.threads,
        seed: common.seed,
        refine: common.refine,
        curve,
        point,
    };
    let mut cfg = PipelineConfig::load(&common.config)?;
    opts.apply(&mut cfg);
    if let Some(n) = cfg.threads {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    if let Command::Validate(_) = cli.command {
        return cmd_validate(cfg).map(|(_, o)| o);
    }
    let v = cfg.validate()?;
    match cli.command {
        Command::Validate(_) => unreachable!(),
        Command::Solve(_) => cmd_solve(&v).map(|(_, o)| o),
        Command::Transform { .. } => cmd_transform(&v, opts.curve.as_deref()).map(|(_, o)| o),
        Command::Weights { .. } => cmd_weights(&v, opts.point).map(|(_, o)| o),
        Command::Report(_) => cmd_report(&v).map(|(_, o)| o),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(o) => {
            eprintln!("{}: {}", o.stage, o.status);
            for m in &o.messages {
                eprintln!("  {m}");
            }
            if o.exit_code == EXIT_OK {
                for f in &o.files {
                    println!("{f}");
                }
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
