//! Kernel of the Fourier-mode Dirac operators along a curve, with its certified mode cutoff.

use nahmlab::dirac::{slice_energy, total_kernel, CliffordModel, KernelOptions, ModePolicy};
use nahmlab::flow::{NahmCurve, Tails};
use nahmlab::model::fixtures::model_from_blocks;
use nahmlab::torus::{dual_lattice, DualTorusPoint, Lattice3};
use nalgebra::Vector3;

fn main() -> nahmlab::Result<()> {
    let l = Lattice3::cubic();
    let dl = dual_lattice(&l)?;
    let ends = model_from_blocks(&[(Vector3::new(0.1, 0.2, 0.3), vec![1]), (Vector3::new(0.6, 0.7, 0.4), vec![1])]);
    let tails = Tails { minus: ends.clone(), plus: ends.clone() };
    let curve = NahmCurve::constant(ends.gamma(), 10.0, 201, Some(tails))?;

    let cm = CliffordModel::default();
    for xi in [DualTorusPoint::new(0.0, 0.0, 0.0), DualTorusPoint::new(0.12, 0.2, 0.3)] {
        let tk = total_kernel(&curve, xi, &dl, &cm, &ModePolicy::default(), &KernelOptions::default())?;
        println!(
            "ξ = {:?}: dim Ker 𝒟⁻ = {}, dim Ker 𝒟⁺ = {}, {} modes under cutoff {:.3}, certified {}",
            xi.coeffs.as_slice(),
            tk.dim,
            tk.plus_dim,
            tk.modes_checked,
            tk.cutoff,
            tk.certified
        );
        for k in &tk.modes {
            let p = slice_energy(k);
            println!("  mode {:?}: K = {:?}, κ = {:?}", k.n, p.k, p.kappa);
        }
    }
    Ok(())
}
