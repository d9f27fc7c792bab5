//! Build model solutions Γ + N/t, check them, and list the singular points they produce.

use nahmlab::linalg::c;
use nahmlab::model::fixtures::{model_from_blocks, su2_sum};
use nahmlab::model::{singularity_set, su2_weights, su2_weights_jordan, validate_model_solution};
use nahmlab::torus::Lattice3;
use nalgebra::Vector3;

fn main() -> nahmlab::Result<()> {
    let l = Lattice3::cubic();
    // A spin-1 summand and a trivial one at a second point.
    let plus = model_from_blocks(&[(Vector3::new(0.25, 0.5, 0.125), vec![3]), (Vector3::new(0.6, 0.1, 0.3), vec![1])]);
    let minus = model_from_blocks(&[(Vector3::new(0.25, 0.5, 0.125), vec![2, 2])]);
    println!("rank {}, flat: {} / {}", plus.rank(), plus.is_flat(), minus.is_flat());

    // Casimir and nilpotent-Jordan routes to the su(2) weights agree.
    let n = su2_sum(&[3, 2, 1]);
    println!("weights via Casimir {:?}, via Jordan {:?}", su2_weights(&n)?.weights, su2_weights_jordan(&n)?.weights);

    let sing = singularity_set(&plus, &minus, &l)?;
    for sp in &sing.points {
        println!("ξ = {:?}: w₊ = {:?}, w₋ = {:?}", sp.xi.coeffs.as_slice(), sp.weights_plus().weights, sp.weights_minus().weights);
    }

    // Rejections come with the violated relation spelled out.
    let mut bad = plus.nn().clone();
    bad[0] *= c(2.0, 0.0);
    match validate_model_solution(plus.gamma().clone(), bad) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
