//! Clifford multiplication on `S = S⁺ ⊕ S⁻ ≅ ℂ² ⊕ ℂ²`.

use crate::linalg::{c, identity, CMat};

/// `c_i = iσ_i` on the two-dimensional spinor space of T³, with the 4×4 block forms
/// `clif(dt) = [[0, −I], [I, 0]]` and `clif(dx^i) = [[0, c_i], [c_i, 0]]`.
#[derive(Debug, Clone)]
pub struct CliffordModel {
    pub c: [CMat; 3],
    pub clif_t: CMat,
    pub clif_x: [CMat; 3],
}

pub fn pauli() -> [CMat; 3] {
    let o = c(0.0, 0.0);
    [
        CMat::from_row_slice(2, 2, &[o, c(1.0, 0.0), c(1.0, 0.0), o]),
        CMat::from_row_slice(2, 2, &[o, c(0.0, -1.0), c(0.0, 1.0), o]),
        CMat::from_row_slice(2, 2, &[c(1.0, 0.0), o, o, c(-1.0, 0.0)]),
    ]
}

fn blocks(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> CMat {
    let mut m = CMat::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(a);
    m.view_mut((0, 2), (2, 2)).copy_from(b);
    m.view_mut((2, 0), (2, 2)).copy_from(cc);
    m.view_mut((2, 2), (2, 2)).copy_from(d);
    m
}

impl Default for CliffordModel {
    fn default() -> Self {
        let s = pauli();
        let cs = [0, 1, 2].map(|i| &s[i] * c(0.0, 1.0));
        let z = CMat::zeros(2, 2);
        let id = identity(2);
        let clif_t = blocks(&z, &(-&id), &id, &z);
        let clif_x = [0, 1, 2].map(|i| blocks(&z, &cs[i], &cs[i], &z));
        Self { c: cs, clif_t, clif_x }
    }
}
