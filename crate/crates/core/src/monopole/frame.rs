use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dirac::{ModeKernel, Side, TotalKernel};
use crate::error::{NahmError, Result};
use crate::linalg::{c, norm, polar_unitary, skew_residual, CMat};
use crate::torus::{DualTorusPoint, Mode};

/// Links whose overlap has a singular value below this are rejected.
pub const LINK_SMIN: f64 = 0.1;

/// Identifies the piece of `V̂_ξ` a block of kernel functions spans: a Fourier mode on the
/// whole line, or one end of a model solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockLabel {
    pub mode: Mode,
    pub side: Option<Side>,
}

#[derive(Debug, Clone)]
pub struct FrameBlock {
    pub label: BlockLabel,
    pub kernel: ModeKernel,
}

/// An orthonormal frame of `V̂_ξ`: the kernel functions of all blocks in order, optionally
/// rotated by a unitary `gauge` (frame vector `a` is `Σ_b raw_b gauge_{ba}`).
#[derive(Debug, Clone)]
pub struct KernelFrame {
    pub xi: DualTorusPoint,
    pub blocks: Vec<FrameBlock>,
    pub gauge: Option<CMat>,
}

impl KernelFrame {
    pub fn from_total(tk: &TotalKernel) -> Self {
        let blocks = tk
            .modes
            .iter()
            .map(|k| FrameBlock { label: BlockLabel { mode: k.n, side: None }, kernel: k.clone() })
            .collect();
        Self { xi: tk.xi, blocks, gauge: None }
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(|b| b.kernel.dim()).sum()
    }

    pub fn regauge(&self, w: &CMat) -> Self {
        let g = match &self.gauge {
            Some(g0) => g0 * w,
            None => w.clone(),
        };
        Self { xi: self.xi, blocks: self.blocks.clone(), gauge: Some(g) }
    }

    fn raw_block_diag(&self, f: impl Fn(&ModeKernel) -> CMat) -> CMat {
        let r = self.rank();
        let mut out = CMat::zeros(r, r);
        let mut off = 0;
        for b in &self.blocks {
            let d = b.kernel.dim();
            out.view_mut((off, off), (d, d)).copy_from(&f(&b.kernel));
            off += d;
        }
        out
    }

    fn apply_gauge(&self, m: CMat) -> CMat {
        match &self.gauge {
            Some(g) => g.adjoint() * m * g,
            None => m,
        }
    }
}

/// `Φ̂(ξ)` with `Φ̂_ab = 2πi ⟨f_a, t f_b⟩`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonopoleSample {
    pub xi: DualTorusPoint,
    pub rank: usize,
    pub phi: CMat,
    pub frame_id: String,
}

impl MonopoleSample {
    /// Eigenvalues of `−iΦ̂`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::herm_eigen(&(&self.phi * c(0.0, -1.0))).0
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::op_norm(&self.phi)
    }
}

pub fn frame_id(xi: &DualTorusPoint) -> String {
    format!("{:.17e},{:.17e},{:.17e}", xi.coeffs[0], xi.coeffs[1], xi.coeffs[2])
}

pub fn higgs_field(frame: &KernelFrame) -> Result<MonopoleSample> {
    let raw = frame.raw_block_diag(|k| k.moment() * c(0.0, 2.0 * PI));
    let phi = frame.apply_gauge(raw);
    let res = skew_residual(&phi);
    if res > 1e-10 * (1.0 + norm(&phi)) {
        return Err(NahmError::Numerical(format!("Φ̂ not skew-Hermitian ({res:e})")));
    }
    Ok(MonopoleSample { xi: frame.xi, rank: frame.rank(), phi, frame_id: frame_id(&frame.xi) })
}

/// Discrete parallel transport from `ξ_b` to `ξ_a`.
#[derive(Debug, Clone)]
pub struct LinkOverlap {
    pub u: CMat,
    pub smin: f64,
}

/// Overlap `G_ab = ⟨f_a(ξ_a), f_b(ξ_b)⟩` and its unitary polar factor. Mode `n` at `ξ_a`
/// pairs with mode `n − shift` at `ξ_b` when `ξ_b` was reduced by the lattice vector
/// `shift`; the accompanying factor `exp(2πi⟨x, shift⟩)` identifies the two Fourier
/// characters exactly, so no extra phase enters the `t`-integral.
pub fn overlap_matrix(a: &KernelFrame, b: &KernelFrame, shift: Mode) -> Result<CMat> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut g = CMat::zeros(ra, rb);
    let mut off_a = 0;
    for ba in &a.blocks {
        let target = BlockLabel {
            mode: [ba.label.mode[0] - shift[0], ba.label.mode[1] - shift[1], ba.label.mode[2] - shift[2]],
            side: ba.label.side,
        };
        let mut off_b = 0;
        for bb in &b.blocks {
            if bb.label == target {
                if ba.kernel.grid != bb.kernel.grid || ba.kernel.measure != bb.kernel.measure {
                    return Err(NahmError::Precondition(
                        "frames on different shooting grids cannot be paired".into(),
                    ));
                }
                for i in 0..ba.kernel.dim() {
                    for j in 0..bb.kernel.dim() {
                        g[(off_a + i, off_b + j)] = ba.kernel.inner_with(&bb.kernel, i, j);
                    }
                }
            }
            off_b += bb.kernel.dim();
        }
        off_a += ba.kernel.dim();
    }
    let ga = a.gauge.clone();
    let gb = b.gauge.clone();
    let mut out = g;
    if let Some(w) = ga {
        out = w.adjoint() * out;
    }
    if let Some(w) = gb {
        out *= w;
    }
    Ok(out)
}

pub fn connection_link(a: &KernelFrame, b: &KernelFrame, shift: Mode) -> Result<LinkOverlap> {
    if a.rank() != b.rank() {
        return Err(NahmError::Precondition(format!(
            "rank {} vs {}: a singular point lies between the samples",
            a.rank(),
            b.rank()
        )));
    }
    if a.rank() == 0 {
        return Ok(LinkOverlap { u: CMat::zeros(0, 0), smin: f64::INFINITY });
    }
    let g = overlap_matrix(a, b, shift)?;
    let (u, smin) = polar_unitary(&g);
    if smin < LINK_SMIN {
        return Err(NahmError::LinkRejected { smin });
    }
    Ok(LinkOverlap { u, smin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{total_kernel, KernelOptions, ModePolicy};
    use crate::flow::NahmCurve;
    use crate::linalg::{identity, random_unitary};
    use crate::model::fixtures::{diagonal_gamma, spin_rep};
    use crate::monopole::ModelEnd;
    use crate::torus::{dual_lattice, Lattice3};
    use nalgebra::Vector3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn same_point_link_is_identity() {
        let me = ModelEnd::from_triples(Some(spin_rep(1)), Some(spin_rep(0))).unwrap();
        let f = me.frame_alone(&Vector3::new(0.05, 0.02, -0.03)).unwrap();
        let l = connection_link(&f, &f, [0, 0, 0]).unwrap();
        assert!((l.u - identity(2)).norm() < 1e-10);
        assert!((l.smin - 1.0).abs() < 1e-8);
    }

    #[test]
    fn link_covariance_under_frame_rotation() {
        let me = ModelEnd::from_triples(Some(crate::model::fixtures::su2_sum(&[2, 1])), None).unwrap();
        let hg = me.grid_for(0.05, 0.07).unwrap();
        let a = me.frame(&Vector3::new(0.05, 0.01, 0.0), &hg).unwrap();
        let b = me.frame(&Vector3::new(0.05, 0.02, 0.0), &hg).unwrap();
        let u = connection_link(&a, &b, [0, 0, 0]).unwrap().u;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (wa, wb) = (random_unitary(2, &mut rng), random_unitary(2, &mut rng));
        let u2 = connection_link(&a.regauge(&wa), &b.regauge(&wb), [0, 0, 0]).unwrap().u;
        // Oracle: polar(W_a† G W_b) = W_a† polar(G) W_b.
        assert!((u2 - wa.adjoint() * &u * wb).norm() < 1e-10);
        assert!((&u * u.adjoint() - identity(2)).norm() < 1e-10);
    }

    #[test]
    fn higgs_skew_and_symmetric_profile_zero() {
        let me = ModelEnd::from_triples(Some(spin_rep(2)), Some(spin_rep(1))).unwrap();
        let s = higgs_field(&me.frame_alone(&Vector3::new(0.0, 0.0, 0.1)).unwrap()).unwrap();
        assert_eq!(s.rank, 2);
        assert!((&s.phi + s.phi.adjoint()).norm() < 1e-12);
        let ev = s.eigenvalues();
        // Plus spin-1 gives +3/(2R), minus spin-½ gives −2/(2R).
        assert!((ev[0] + 10.0).abs() < 1e-5 && (ev[1] - 15.0).abs() < 1e-5, "{ev:?}");
    }

    #[test]
    fn flat_region_is_rank_zero_and_vacuous() {
        let l = Lattice3::cubic();
        let dl = dual_lattice(&l).unwrap();
        let g = diagonal_gamma(&[Vector3::new(0.1, 0.2, 0.3)]);
        let curve = NahmCurve::constant(&g, 4.0, 5, None).unwrap();
        let tk = total_kernel(&curve, DualTorusPoint::new(0.5, 0.5, 0.5), &dl, &Default::default(), &ModePolicy::default(), &KernelOptions::default()).unwrap();
        let f = KernelFrame::from_total(&tk);
        let s = higgs_field(&f).unwrap();
        assert_eq!(s.rank, 0);
        assert_eq!(s.phi.nrows(), 0);
        let l = connection_link(&f, &f, [0, 0, 0]).unwrap();
        assert_eq!(l.u.nrows(), 0);
    }

    #[test]
    fn crossing_a_singular_point_rejects_the_link() {
        let me = ModelEnd::from_triples(Some(spin_rep(1)), None).unwrap();
        let hg = me.grid_for(0.01, 0.01).unwrap();
        let a = me.frame(&Vector3::new(0.0, 0.0, 0.01), &hg).unwrap();
        let b = me.frame(&Vector3::new(0.0, 0.0, -0.01), &hg).unwrap();
        assert!(matches!(connection_link(&a, &b, [0, 0, 0]), Err(NahmError::LinkRejected { .. })));
    }
}
