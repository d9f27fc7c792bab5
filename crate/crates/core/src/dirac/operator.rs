use nalgebra::Vector3;
use std::f64::consts::PI;

use super::clifford::CliffordModel;
use crate::error::{NahmError, Result};
use crate::flow::NahmCurve;
use crate::linalg::{c, herm_eigen, hermitian_residual, identity, kron, norm, CMat};
use crate::model::Triple;
use crate::torus::{mode_vec, DualLattice3, DualTorusPoint, Mode};

/// Gaps below this are treated as sitting on a singular point.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-6;

/// Which half of the Dirac operator: `𝒟⁻ = −∂_t + 𝔇` has kernel `f' = D f`,
/// `𝒟⁺ = ∂_t + 𝔇` has kernel `f' = −D f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Chirality {
    Minus,
    Plus,
}

impl Chirality {
    pub fn sign(self) -> f64 {
        match self {
            Chirality::Minus => 1.0,
            Chirality::Plus => -1.0,
        }
    }
}

/// `Σ_i c_i ⊗ M_i` (spinor ⊗ gauge).
pub fn clifford_contract(cm: &CliffordModel, m: &Triple) -> CMat {
    let mut out = kron(&cm.c[0], &m[0]);
    out += kron(&cm.c[1], &m[1]);
    out += kron(&cm.c[2], &m[2]);
    out
}

/// The Fourier-mode operator `D_n(t) = Σ c_i ⊗ (A_i(t) + 2πi(n − ξ)_i)`.
#[derive(Debug, Clone)]
pub struct ModeOperator<'a> {
    curve: &'a NahmCurve,
    cm: CliffordModel,
    pub n: Mode,
    pub xi: DualTorusPoint,
    /// Cartesian `2π(n − ξ)`.
    pub frequency: Vector3<f64>,
    /// `min |eig d±|` over both limits.
    pub gap: f64,
}

impl<'a> ModeOperator<'a> {
    pub fn curve(&self) -> &NahmCurve {
        self.curve
    }

    pub fn dim(&self) -> usize {
        2 * self.curve.rank()
    }

    fn shifted(&self, a: &Triple) -> Triple {
        let r = self.curve.rank();
        [0, 1, 2].map(|i| &a[i] + identity(r) * c(0.0, self.frequency[i]))
    }

    pub fn eval(&self, t: f64) -> CMat {
        clifford_contract(&self.cm, &self.shifted(&self.curve.eval(t)))
    }

    /// `d±`: the operator with `A` replaced by its limit `Γ±` (end samples without tails).
    pub fn limit(&self, plus: bool) -> CMat {
        let a = match &self.curve.tails {
            Some(tl) if plus => tl.plus.gamma().clone(),
            Some(tl) => tl.minus.gamma().clone(),
            None if plus => self.curve.a.last().unwrap().clone(),
            None => self.curve.a[0].clone(),
        };
        clifford_contract(&self.cm, &self.shifted(&a))
    }
}

pub fn build_mode_operator<'a>(
    curve: &'a NahmCurve,
    n: Mode,
    xi: DualTorusPoint,
    dl: &DualLattice3,
    cm: &CliffordModel,
    gap_threshold: f64,
) -> Result<ModeOperator<'a>> {
    let frequency = dl.to_cartesian(&(mode_vec(&n) - xi.coeffs)) * (2.0 * PI);
    let mut op = ModeOperator { curve, cm: cm.clone(), n, xi, frequency, gap: 0.0 };
    for &t in [curve.t_min(), curve.t_max()].iter() {
        let d = op.eval(t);
        let res = hermitian_residual(&d);
        if res > 1e-10 * (1.0 + norm(&d)) {
            return Err(NahmError::Numerical(format!("D_n({t}) not Hermitian ({res:e})")));
        }
    }
    let gap = [false, true]
        .iter()
        .map(|&p| {
            let (vals, _) = herm_eigen(&op.limit(p));
            vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    if !(gap > gap_threshold) {
        return Err(NahmError::Gap { gap, threshold: gap_threshold });
    }
    op.gap = gap;
    Ok(op)
}
