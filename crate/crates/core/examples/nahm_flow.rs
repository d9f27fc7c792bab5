//! Integrate Nahm's equation from random data and watch the spectral curve stay put.

use nahmlab::flow::{integrate, spectral_invariants, IntegrateOptions};
use nahmlab::linalg::random_skew;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> nahmlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a0 = [0, 1, 2].map(|_| random_skew(3, 0.3, &mut rng));
    let curve = integrate(&a0, 0.0, 1.0, 1e-9, &IntegrateOptions::default())?;
    let inv = spectral_invariants(&curve);
    println!("{} accepted steps", curve.grid.len() - 1);
    println!("eigenvalues of A₂ + iA₃ at t = 0: {:.6?}", inv.eigenvalues[0]);
    println!("largest drift over [0, 1]: {:.3e}", inv.drift);
    Ok(())
}
