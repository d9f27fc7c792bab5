//! Lattice check of `F(Â) = ∗∇Φ̂` on one cube of samples.

use serde::{Deserialize, Serialize};

use super::frame::{connection_link, higgs_field, KernelFrame};
use crate::error::Result;
use crate::linalg::{c, identity, norm, unitary_log, CMat};

/// Relative orientation of the discrete curvature and `∗∇Φ̂` with the conventions used
/// here (`c_i = iσ_i`, links transporting from the far corner to the near one, dual-torus
/// orientation from the dual basis). Fixed once on the spin-½ model end.
pub const ORIENTATION_SIGN: f64 = -1.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BogomolnyResidual {
    /// `‖F_ij − s ∇_kΦ̂‖` for `(ij,k) = (23,1), (31,2), (12,3)`.
    pub per_plane: [f64; 3],
    pub max: f64,
    /// `‖F‖` and `‖∇Φ̂‖` scales, for relative comparisons.
    pub curvature_norm: f64,
}

/// Corners are indexed by bits: corner `q` sits at `base + h Σ_k bit_k(q) e_k`.
pub struct Cube<'a> {
    pub frames: [&'a KernelFrame; 8],
    pub h: f64,
}

struct Assembled {
    /// `links[q][k]`: transport from `q + e_k` to `q` (only for `bit_k(q) = 0`).
    links: Vec<[Option<CMat>; 3]>,
    phi: Vec<CMat>,
    /// Transport from corner `q` to the base corner.
    to_base: Vec<CMat>,
}

fn assemble(cube: &Cube) -> Result<Assembled> {
    let r = cube.frames[0].rank();
    let mut links: Vec<[Option<CMat>; 3]> = vec![[None, None, None]; 8];
    for q in 0..8usize {
        for k in 0..3 {
            if q & (1 << k) == 0 {
                let l = connection_link(cube.frames[q], cube.frames[q | (1 << k)], [0, 0, 0])?;
                links[q][k] = Some(l.u);
            }
        }
    }
    let phi = cube
        .frames
        .iter()
        .map(|f| higgs_field(f).map(|s| s.phi))
        .collect::<Result<Vec<_>>>()?;
    let mut to_base = vec![identity(r); 8];
    for q in 1..8usize {
        let k = q.trailing_zeros() as usize;
        let prev = q & !(1 << k);
        to_base[q] = &to_base[prev] * links[prev][k].as_ref().unwrap();
    }
    Ok(Assembled { links, phi, to_base })
}

fn link(a: &Assembled, from: usize, to: usize) -> CMat {
    // Transport from corner `from` to adjacent corner `to`.
    let diff = from ^ to;
    let k = diff.trailing_zeros() as usize;
    if to & diff == 0 {
        a.links[to][k].clone().unwrap()
    } else {
        a.links[from][k].clone().unwrap().adjoint()
    }
}

/// Curvature of the face spanned by `i, j` at corner `q`, in the frame at `q`.
fn face_curvature(a: &Assembled, q: usize, i: usize, j: usize, h: f64) -> CMat {
    let (ei, ej) = (1 << i, 1 << j);
    // Loop q → q+e_i → q+e_i+e_j → q+e_j → q, composed as an operator at q.
    let hol = link(a, q | ej, q) * link(a, q | ei | ej, q | ej) * link(a, q | ei, q | ei | ej) * link(a, q, q | ei);
    unitary_log(&hol) * c(1.0 / (h * h), 0.0)
}

pub fn bogomolny_residual(cube: &Cube) -> Result<BogomolnyResidual> {
    let r = cube.frames[0].rank();
    if r == 0 {
        return Ok(BogomolnyResidual { per_plane: [0.0; 3], max: 0.0, curvature_norm: 0.0 });
    }
    let a = assemble(cube)?;
    let h = cube.h;
    let conj = |q: usize, m: &CMat| &a.to_base[q] * m * a.to_base[q].adjoint();
    let mut per_plane = [0.0; 3];
    let mut fnorm = 0.0f64;
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let ek = 1 << k;
        let f = (face_curvature(&a, 0, i, j, h) + conj(ek, &face_curvature(&a, ek, i, j, h))) * c(0.5, 0.0);
        let mut grad = CMat::zeros(r, r);
        for q in 0..8usize {
            if q & ek != 0 {
                continue;
            }
            let u = link(&a, q | ek, q);
            let d = (&u * &a.phi[q | ek] * u.adjoint() - &a.phi[q]) * c(1.0 / h, 0.0);
            grad += conj(q, &d);
        }
        grad *= c(0.25, 0.0);
        per_plane[k] = norm(&(&f - grad * c(ORIENTATION_SIGN, 0.0)));
        fnorm = fnorm.max(norm(&f));
    }
    let max = per_plane.iter().cloned().fold(0.0, f64::max);
    Ok(BogomolnyResidual { per_plane, max, curvature_norm: fnorm })
}
