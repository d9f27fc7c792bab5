//! Fit Dirac weights from the 1/(2R) growth of the Higgs field and compare them with the
//! su(2) weights of the model ends.

use nahmlab::model::fixtures::model_from_blocks;
use nahmlab::model::singularity_set;
use nahmlab::monopole::{fit_singularity_weights, higgs_field, ModelEnd, RaySamples};
use nahmlab::torus::Lattice3;
use nalgebra::Vector3;

fn main() -> nahmlab::Result<()> {
    let l = Lattice3::cubic();
    let p = Vector3::new(0.5, 0.25, 0.0);
    let plus = model_from_blocks(&[(p, vec![3, 1])]);
    let minus = model_from_blocks(&[(p, vec![2, 2])]);
    let sing = singularity_set(&plus, &minus, &l)?;
    let sp = &sing.points[0];
    let me = ModelEnd::new(sp, &l)?;

    let radii: Vec<f64> = (0..5).map(|j| 0.2 / 2f64.powi(j)).collect();
    let hg = me.grid_for(radii[4], radii[0])?;
    let dirs = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 0.6, 0.8), Vector3::new(-0.48, 0.6, -0.64)];
    let rays = dirs
        .iter()
        .map(|d| {
            let eigenvalues = radii
                .iter()
                .map(|r| Ok(higgs_field(&me.frame(&(d * *r), &hg)?)?.eigenvalues()))
                .collect::<nahmlab::Result<Vec<_>>>()?;
            Ok(RaySamples { direction: [d[0], d[1], d[2]], radii: radii.clone(), eigenvalues })
        })
        .collect::<nahmlab::Result<Vec<_>>>()?;
    let report = fit_singularity_weights(sp.xi, &rays, sp.weights_plus(), sp.weights_minus());
    println!("fitted k = {:?} (raw {:.4?})", report.fitted, report.raw);
    println!("k₊ = {:?} vs w₊ = {:?}", report.k_plus(), report.predicted_plus.weights);
    println!("−k₋ = {:?} vs w₋ = {:?}", report.k_minus_abs(), report.predicted_minus.weights);
    println!("match: {}, flags: {:?}", report.matches_prediction(), report.flags);
    Ok(())
}
