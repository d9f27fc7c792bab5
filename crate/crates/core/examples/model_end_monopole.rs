//! The monopole near a singular point: Higgs eigenvalues along a ray, the Bogomolny
//! residual under cube refinement and the determinant winding.

use nahmlab::model::fixtures::model_from_blocks;
use nahmlab::model::singularity_set;
use nahmlab::monopole::{bogomolny_residual, det_winding_weight_sum, higgs_field, Cube, Drum, ModelEnd};
use nahmlab::torus::Lattice3;
use nalgebra::Vector3;

fn main() -> nahmlab::Result<()> {
    let l = Lattice3::cubic();
    let plus = model_from_blocks(&[(Vector3::new(0.25, 0.5, 0.125), vec![2])]);
    let minus = model_from_blocks(&[(Vector3::new(0.25, 0.5, 0.125), vec![1, 1])]);
    let sing = singularity_set(&plus, &minus, &l)?;
    let me = ModelEnd::new(&sing.points[0], &l)?;

    let dir = Vector3::new(1.0, 2.0, 2.0) / 3.0;
    for d in [0.2, 0.1, 0.05, 0.025] {
        let s = higgs_field(&me.frame_alone(&(dir * d))?)?;
        let scaled: Vec<f64> = s.eigenvalues().iter().map(|e| 2.0 * e * d).collect();
        println!("d = {d:<6} 2d·eig(−iΦ̂) = {scaled:.4?}");
    }

    let base = Vector3::new(0.08, 0.05, 0.06);
    for h in [0.01, 0.005, 0.0025] {
        let corners: Vec<Vector3<f64>> = (0..8)
            .map(|q| base + Vector3::new((q & 1) as f64, ((q >> 1) & 1) as f64, ((q >> 2) & 1) as f64) * h)
            .collect();
        let hg = me.grid_for(base.norm() * 0.9, (base.norm() + 2.0 * h) * 1.1)?;
        let frames = corners.iter().map(|x| me.frame(x, &hg)).collect::<nahmlab::Result<Vec<_>>>()?;
        let r = bogomolny_residual(&Cube { frames: std::array::from_fn(|q| &frames[q]), h })?;
        println!("h = {h:<7} Bogomolny residual {:.3e}", r.max);
    }

    let drum = Drum::around(0.1);
    let (a, b) = drum.distance_range();
    let hg = me.grid_for(a, b)?;
    println!("Σk from winding: {}", det_winding_weight_sum(&drum, |x| me.frame(x, &hg))?);
    Ok(())
}
