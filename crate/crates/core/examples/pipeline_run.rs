//! Drive all pipeline stages from a JSON config, as the command-line tool does.
//!
//! `cargo run --release --example pipeline_run -- [CONFIG] [OUT]`

use std::path::PathBuf;

use nahmlab::pipeline::{cmd_report, cmd_solve, cmd_transform, cmd_validate, cmd_weights, PipelineConfig};

fn main() -> nahmlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/flat_rank2.json")
    });
    let mut cfg = PipelineConfig::load(&config)?;
    cfg.output_dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("nahmlab-example"));
    std::fs::create_dir_all(&cfg.output_dir)?;
    println!("writing to {}", cfg.output_dir.display());

    let (report, o) = cmd_validate(cfg.clone())?;
    println!("validate → {} ({} singular points)", o.exit_code, report.singular_points.len());
    let v = cfg.validate()?;
    let (solve, o) = cmd_solve(&v)?;
    println!("solve → {} (found: {}, charge {:?})", o.exit_code, solve.found, solve.charge);
    if solve.found {
        let (t, o) = cmd_transform(&v, None)?;
        println!("transform → {} (max rank {}, dim Ker 𝒟⁺ total {})", o.exit_code, t.max_rank, t.plus_dim_total);
        for c in &t.model_end_bogomolny {
            println!("  Bogomolny order at {:?}: {:?}", c.point, c.order);
        }
    }
    let (w, o) = cmd_weights(&v, None)?;
    for p in &w.points {
        println!("weights at {:?}: k = {:?}, {}", p.xi, p.report.fitted, p.status);
    }
    println!("weights → {}", o.exit_code);
    let (_, o) = cmd_report(&v)?;
    println!("report → {}: {:?}", o.exit_code, o.files);
    Ok(())
}
