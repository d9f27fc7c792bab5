//! The algebraic side: graded pieces on T², their Fourier–Mukai stalks, predicted weights and
//! the parabolic degree of the instanton ledger.

use nahmlab::algnahm::{fm_stalks, graded_from_model, instanton_ledger, parabolic_degree, predicted_weights_checked};
use nahmlab::dirac::Side;
use nahmlab::model::fixtures::model_from_blocks;
use nahmlab::model::singularity_set;
use nahmlab::torus::Lattice3;
use nalgebra::Vector3;

fn main() -> nahmlab::Result<()> {
    let l = Lattice3::cubic();
    let plus = model_from_blocks(&[(Vector3::new(0.0, 0.25, 0.5), vec![3, 1]), (Vector3::new(0.0, 0.75, 0.125), vec![2])]);
    // Tr Γ is conserved along the flow, so both ends share it; that forces par-deg = 0.
    let minus = model_from_blocks(&[(Vector3::new(0.0, 0.25, 0.5), vec![2, 2]), (Vector3::new(0.0, 0.5, 0.5), vec![2])]);
    let sing = singularity_set(&plus, &minus, &l)?;
    for sp in &sing.points {
        let v = graded_from_model(&plus, Side::Plus, &sp.xi, &l)?;
        let fm = fm_stalks(&v);
        println!("ξ = {:?}", sp.xi.coeffs.as_slice());
        println!("  graded (+): {:?}", v.summands.iter().map(|s| (s.alpha, s.jordan.clone())).collect::<Vec<_>>());
        println!("  FM stalk lengths sum to {} = rank {}", fm.total_length(), v.rank);
        let (wp, wm) = predicted_weights_checked(&plus, &minus, sp, &l)?;
        println!("  predicted w₊ = {:?}, w₋ = {:?}", wp.weights, wm.weights);
    }
    let ledger = instanton_ledger(&plus, &minus, &l)?;
    println!("ledger: {}", serde_json::to_string(&ledger).expect("ledger serializes"));
    println!("par-deg = {}", parabolic_degree(&ledger)?.0);
    Ok(())
}
