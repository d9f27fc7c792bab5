//! Dirac problem of a single model end `Γ + N/t` restricted to one joint eigenspace of `Γ`.
//!
//! Near a spectrum point `p` the twisted operator of the dominant mode is
//! `D(t) = M/t + C` with `M = Σ c_i ⊗ N_i` and `C = Σ c_i ⊗ (−2πi δ_i) = 2π σ·δ ⊗ 1`,
//! `δ = ξ − p`. On the plus end `t ∈ (0, ∞)`; on the minus end `t = −s`, and
//! `g(s) = f(−s)` solves `g' = (M/s − C) g`. Both are solved on a softplus grid in `s`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::clifford::CliffordModel;
use super::kernel::{KernelOptions, ModeKernel};
use super::operator::clifford_contract;
use super::shooting::{shoot, Grid, Measure};
use crate::error::{NahmError, Result};
use crate::linalg::{c, identity, op_norm, CMat};
use crate::model::Triple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

pub fn residue_matrix(cm: &CliffordModel, nn: &Triple) -> CMat {
    clifford_contract(cm, nn)
}

pub fn constant_part(cm: &CliffordModel, delta: &Vector3<f64>, r: usize) -> CMat {
    let t = [0, 1, 2].map(|i| identity(r) * c(0.0, -2.0 * PI * delta[i]));
    clifford_contract(cm, &t)
}

/// A softplus grid shared by every `δ` with `|δ| ∈ [d_min, d_max]`, so that kernels at
/// nearby points can be paired directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLineGrid {
    pub grid: Grid,
    pub scale: f64,
}

impl HalfLineGrid {
    pub fn for_distances(d_min: f64, d_max: f64, residue_norm: f64, opts: &KernelOptions) -> Result<Self> {
        if !(d_min > 0.0 && d_max >= d_min) {
            return Err(NahmError::Precondition("need 0 < d_min ≤ d_max".into()));
        }
        let d_ref = (d_min * d_max).sqrt();
        let scale = 1.0 / (2.0 * PI * d_ref);
        // Left end: 2π d_max s ≤ 1e-6. Right end: 2π d_min s ≥ 30.
        let x0 = (1e-6 * d_ref / d_max).ln();
        let x1 = 30.0 * d_ref / d_min;
        let knorm = residue_norm + d_max / d_ref;
        let n = opts.intervals_for(x1 - x0, knorm)?;
        Ok(Self { grid: Grid::new(x0, x1, n)?, scale })
    }

    pub fn measure(&self, side: Side) -> Measure {
        Measure::Softplus { scale: self.scale, sigma: side.sign() }
    }
}

/// `L²` kernel of the model-end operator at offset `δ` (Cartesian) from the spectrum point.
pub fn half_line_kernel(
    cm: &CliffordModel,
    nn: &Triple,
    delta: &Vector3<f64>,
    side: Side,
    hg: &HalfLineGrid,
    opts: &KernelOptions,
) -> Result<ModeKernel> {
    let r = nn[0].nrows();
    let gap = 2.0 * PI * delta.norm();
    if !(gap > opts.gap_threshold) {
        return Err(NahmError::Gap { gap, threshold: opts.gap_threshold });
    }
    let m = residue_matrix(cm, nn);
    let cc = constant_part(cm, delta, r) * c(side.sign(), 0.0);
    let measure = hg.measure(side);
    let scale = hg.scale;
    let k = |x: f64| {
        // (ds/dx)/s → 1 as x → −∞; keep it in closed form.
        let ratio = super::shooting::sigmoid(x) / super::shooting::softplus(x);
        &m * c(ratio, 0.0) + &cc * c(scale * super::shooting::sigmoid(x), 0.0)
    };
    let res = shoot(&k, &hg.grid, measure, &opts.shooting)?;
    Ok(ModeKernel {
        n: [0, 0, 0],
        functions: res.functions,
        grid: hg.grid,
        measure,
        sines: res.sines,
        uncertain: res.uncertain,
        gram_error: res.gram_error,
        gap,
    })
}

/// `‖Σ c_i ⊗ N_i‖`, used to size the grid.
pub fn residue_norm(cm: &CliffordModel, nn: &Triple) -> f64 {
    op_norm(&residue_matrix(cm, nn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::herm_eigen;
    use crate::model::fixtures::{spin_rep, su2_sum};
    use crate::model::triple_zeros;

    #[test]
    fn residue_spectrum_matches_spin_coupling() {
        let cm = CliffordModel::default();
        for two_j in 0..4 {
            let (vals, _) = herm_eigen(&residue_matrix(&cm, &spin_rep(two_j)));
            let j = two_j as f64 / 2.0;
            // Oracle: 2S·J has eigenvalues j (mult 2j+2) and −(j+1) (mult 2j).
            let top = vals.iter().filter(|v| (*v - j).abs() < 1e-12).count();
            let bottom = vals.iter().filter(|v| (*v + j + 1.0).abs() < 1e-12).count();
            assert_eq!(top, two_j + 2);
            assert_eq!(bottom, two_j);
        }
    }

    fn higgs(nn: &Triple, delta: Vector3<f64>, side: Side) -> (usize, Vec<f64>) {
        let cm = CliffordModel::default();
        let opts = KernelOptions::default();
        let d = delta.norm();
        let hg = HalfLineGrid::for_distances(d, d, residue_norm(&cm, nn), &opts).unwrap();
        let k = half_line_kernel(&cm, nn, &delta, side, &hg, &opts).unwrap();
        assert!((k.gram() - identity(k.dim())).norm() < 1e-8, "{}", k.gram_error);
        let phi = k.moment() * c(2.0 * PI, 0.0);
        let (vals, _) = herm_eigen(&phi);
        (k.dim(), vals)
    }

    #[test]
    fn spin_half_plus_end_is_charge_two() {
        let delta = Vector3::new(0.03, -0.04, 0.05);
        let (dim, vals) = higgs(&spin_rep(1), delta, Side::Plus);
        assert_eq!(dim, 1);
        // Oracle: f = t^{1/2} e^{−2π|δ|t} v gives 2π⟨t⟩ = 2π·2/(4π|δ|) = 2/(2|δ|).
        let expect = 2.0 / (2.0 * delta.norm());
        assert!((vals[0] - expect).abs() < 1e-6 * expect, "{} vs {expect}", vals[0]);
    }

    #[test]
    fn trivial_minus_end_has_negative_unit_weights() {
        let delta = Vector3::new(0.1, 0.0, 0.0);
        let (dim, vals) = higgs(&triple_zeros(3), delta, Side::Minus);
        assert_eq!(dim, 3);
        for v in vals {
            assert!((v + 1.0 / (2.0 * 0.1)).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn mixed_plus_end_weights() {
        let delta = Vector3::new(0.0, 0.05, 0.05);
        let (dim, vals) = higgs(&su2_sum(&[3, 1]), delta, Side::Plus);
        assert_eq!(dim, 2);
        let r = delta.norm();
        assert!((vals[0] - 1.0 / (2.0 * r)).abs() < 1e-5 / r);
        assert!((vals[1] - 3.0 / (2.0 * r)).abs() < 1e-5 / r);
    }
}
