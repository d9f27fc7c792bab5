//! Solve for a Nahm curve between two model ends. Flat ends give a constant curve of zero
//! energy; ends with a nonzero su(2) part admit no L²-finite invariant solution.

use nahmlab::flow::{asymptotic_fit, curvature_energy, solve_heteroclinic, HeteroclinicOutcome, HeteroclinicParams};
use nahmlab::model::fixtures::model_from_blocks;
use nahmlab::torus::Lattice3;
use nalgebra::Vector3;

fn main() -> nahmlab::Result<()> {
    let l = Lattice3::cubic();
    let params = HeteroclinicParams { grid_n: 401, ..HeteroclinicParams::default() };

    let flat = model_from_blocks(&[(Vector3::new(0.1, 0.2, 0.3), vec![1]), (Vector3::new(0.6, 0.7, 0.4), vec![1])]);
    match solve_heteroclinic(&flat, &flat, &params, None)? {
        HeteroclinicOutcome::Found { curve, report } => {
            let e = curvature_energy(&curve, &l, params.tol)?;
            println!("flat ends: found after {} iterations, residual {:.2e}", report.iterations, report.certified_residual);
            println!("  energy/8π² = {:.3e}", e / (8.0 * std::f64::consts::PI.powi(2)));
            println!("  asymptotics: {:?}", asymptotic_fit(&curve));
        }
        HeteroclinicOutcome::NotFound { reason, .. } => println!("flat ends: not found ({reason})"),
    }

    let spin = model_from_blocks(&[(Vector3::new(0.25, 0.5, 0.125), vec![2])]);
    match solve_heteroclinic(&spin, &spin, &params, None)? {
        HeteroclinicOutcome::Found { report, .. } => println!("spin-½ ends: found, residual {:.2e}", report.certified_residual),
        HeteroclinicOutcome::NotFound { reason, report } => {
            println!("spin-½ ends: not found after {} iterations ({reason})", report.iterations)
        }
    }
    Ok(())
}
