//! Sum over Fourier modes with a certified cutoff.
//!
//! Along any kernel solution `F = |f|²` satisfies `F'' ≥ (4σ² − 2‖D'‖)F`, where `σ` bounds the
//! singular values of `D_n` from below. Once `2π|n − ξ| > S + √(sup‖D'‖/2)`, with `S` the
//! supremum of `‖Σc_i⊗A_i‖`, `F` is convex and vanishes at both ends, hence is zero: such
//! modes carry no kernel and are skipped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clifford::CliffordModel;
use super::kernel::{mode_kernel, KernelOptions, ModeKernel};
use super::operator::{build_mode_operator, clifford_contract, Chirality};
use crate::error::Result;
use crate::flow::{nahm_rhs, NahmCurve};
use crate::linalg::op_norm;
use crate::torus::{enumerate_modes, DualLattice3, DualTorusPoint, Mode, DEFAULT_MODE_LIMIT};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModePolicy {
    /// Added to the convexity bound.
    pub margin: f64,
    /// Extra shells of width `2π·(shortest dual vector)` beyond the certified cutoff.
    pub extra_shells: usize,
    pub mode_limit: usize,
}

impl Default for ModePolicy {
    fn default() -> Self {
        Self { margin: 1.0, extra_shells: 0, mode_limit: DEFAULT_MODE_LIMIT }
    }
}

/// Uniform bounds entering the cutoff: `sup‖Σc⊗A‖` and `sup‖Σc⊗A'‖`, grid plus tails.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OperatorBounds {
    pub sup_norm: f64,
    pub sup_derivative: f64,
}

pub fn operator_bounds(curve: &NahmCurve, cm: &CliffordModel) -> OperatorBounds {
    let mut s = 0.0f64;
    let mut ds = 0.0f64;
    for a in &curve.a {
        s = s.max(op_norm(&clifford_contract(cm, a)));
        ds = ds.max(op_norm(&clifford_contract(cm, &nahm_rhs(a))));
    }
    if let Some(tl) = &curve.tails {
        for (ms, t) in [(&tl.minus, curve.t_min().abs()), (&tl.plus, curve.t_max().abs())] {
            let g = op_norm(&clifford_contract(cm, ms.gamma()));
            let n = op_norm(&clifford_contract(cm, ms.nn()));
            s = s.max(g + n / t);
            ds = ds.max(n / (t * t));
        }
    }
    OperatorBounds { sup_norm: s, sup_derivative: ds }
}

pub fn certified_cutoff(bounds: &OperatorBounds, margin: f64) -> f64 {
    bounds.sup_norm + (bounds.sup_derivative / 2.0).sqrt() + margin
}

#[derive(Debug, Clone)]
pub struct TotalKernel {
    pub xi: DualTorusPoint,
    pub cutoff: f64,
    /// Nonempty mode kernels of `𝒟⁻`, lexicographic in `n`.
    pub modes: Vec<ModeKernel>,
    pub modes_checked: usize,
    pub dim: usize,
    /// Kernel dimension of the `𝒟⁺` problem over the same modes.
    pub plus_dim: usize,
    pub uncertain_modes: Vec<Mode>,
    pub certified: bool,
}

pub fn total_kernel(
    curve: &NahmCurve,
    xi: DualTorusPoint,
    dl: &DualLattice3,
    cm: &CliffordModel,
    policy: &ModePolicy,
    opts: &KernelOptions,
) -> Result<TotalKernel> {
    let bounds = operator_bounds(curve, cm);
    let cutoff = certified_cutoff(&bounds, policy.margin)
        + policy.extra_shells as f64 * 2.0 * std::f64::consts::PI * dl.shortest_length();
    let modes = enumerate_modes(dl, &xi, cutoff, policy.mode_limit)?;
    let results: Vec<Result<(ModeKernel, usize)>> = modes
        .par_iter()
        .map(|&n| {
            let op = build_mode_operator(curve, n, xi, dl, cm, opts.gap_threshold)?;
            let minus = mode_kernel(&op, Chirality::Minus, opts)?;
            let plus = mode_kernel(&op, Chirality::Plus, opts)?;
            Ok((minus, plus.dim()))
        })
        .collect();
    let mut out = TotalKernel {
        xi,
        cutoff,
        modes: Vec::new(),
        modes_checked: modes.len(),
        dim: 0,
        plus_dim: 0,
        uncertain_modes: Vec::new(),
        certified: true,
    };
    for r in results {
        let (k, plus) = r?;
        out.plus_dim += plus;
        if k.uncertain {
            out.uncertain_modes.push(k.n);
            out.certified = false;
        }
        if k.dim() > 0 {
            out.dim += k.dim();
            out.modes.push(k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::diagonal_gamma;
    use crate::torus::{dual_lattice, Lattice3};
    use nalgebra::Vector3;

    #[test]
    fn flat_rank_two_has_empty_kernel() {
        let l = Lattice3::cubic();
        let dl = dual_lattice(&l).unwrap();
        let g = diagonal_gamma(&[Vector3::new(0.1, 0.2, 0.3), Vector3::new(0.6, 0.5, 0.0)]);
        let curve = NahmCurve::constant(&g, 5.0, 5, None).unwrap();
        let tk = total_kernel(
            &curve,
            DualTorusPoint::new(0.35, 0.8, 0.55),
            &dl,
            &CliffordModel::default(),
            &ModePolicy::default(),
            &KernelOptions::default(),
        )
        .unwrap();
        assert_eq!(tk.dim, 0);
        assert_eq!(tk.plus_dim, 0);
        assert!(tk.certified);
        assert!(tk.modes_checked >= 1);
    }

    #[test]
    fn cutoff_bound_for_flat_data() {
        let cm = CliffordModel::default();
        let g = diagonal_gamma(&[Vector3::new(0.25, 0.0, 0.0)]);
        let curve = NahmCurve::constant(&g, 5.0, 5, None).unwrap();
        let b = operator_bounds(&curve, &cm);
        // Oracle: Σ iσ_i ⊗ 2πi v_i = −2π σ·v has norm 2π|v|; constant data has D' = 0.
        assert!((b.sup_norm - 2.0 * std::f64::consts::PI * 0.25).abs() < 1e-12);
        assert_eq!(b.sup_derivative, 0.0);
    }
}
