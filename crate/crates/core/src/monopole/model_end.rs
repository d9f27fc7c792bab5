//! The transform of the model ends at one spectrum point: for `ξ = p + δ` near `p`, the
//! dominant Fourier mode of each end contributes the half-line kernel of `M/t ± C`.

use nalgebra::Vector3;

use super::frame::{BlockLabel, FrameBlock, KernelFrame};
use crate::dirac::halfline::{half_line_kernel, residue_norm, HalfLineGrid, Side};
use crate::dirac::{CliffordModel, KernelOptions};
use crate::error::{NahmError, Result};
use crate::model::{SingularPoint, Su2WeightVector, Triple};
use crate::torus::{dual_lattice, DualTorusPoint, Lattice3};

#[derive(Debug, Clone)]
pub struct ModelEnd {
    pub cm: CliffordModel,
    /// Cartesian position of the spectrum point (unreduced).
    pub center: Vector3<f64>,
    pub point: DualTorusPoint,
    /// `(side, N restricted to the eigenspace)`, plus side first.
    pub ends: Vec<(Side, Triple)>,
    pub weights_plus: Su2WeightVector,
    pub weights_minus: Su2WeightVector,
    pub opts: KernelOptions,
    /// Dual lattice coefficients ↔ Cartesian.
    lattice: Lattice3,
}

impl ModelEnd {
    pub fn new(sp: &SingularPoint, l: &Lattice3) -> Result<Self> {
        let dl = dual_lattice(l)?;
        let mut ends = Vec::new();
        if let Some(p) = &sp.plus {
            ends.push((Side::Plus, p.nn.clone()));
        }
        if let Some(m) = &sp.minus {
            ends.push((Side::Minus, m.nn.clone()));
        }
        if ends.is_empty() {
            return Err(NahmError::Precondition("point carries no model end".into()));
        }
        Ok(Self {
            cm: CliffordModel::default(),
            center: dl.to_cartesian(&sp.xi.coeffs),
            point: sp.xi,
            ends,
            weights_plus: sp.weights_plus(),
            weights_minus: sp.weights_minus(),
            opts: KernelOptions::default(),
            lattice: l.clone(),
        })
    }

    /// Model end built directly from `N` triples (either may be absent).
    pub fn from_triples(plus: Option<Triple>, minus: Option<Triple>) -> Result<Self> {
        let mut ends = Vec::new();
        let mut wp = Su2WeightVector::default();
        let mut wm = Su2WeightVector::default();
        if let Some(n) = plus {
            wp = crate::model::su2_weights(&n)?;
            ends.push((Side::Plus, n));
        }
        if let Some(n) = minus {
            wm = crate::model::su2_weights(&n)?;
            ends.push((Side::Minus, n));
        }
        Ok(Self {
            cm: CliffordModel::default(),
            center: Vector3::zeros(),
            point: DualTorusPoint::origin(),
            ends,
            weights_plus: wp,
            weights_minus: wm,
            opts: KernelOptions::default(),
            lattice: Lattice3::cubic(),
        })
    }

    pub fn rank(&self) -> usize {
        self.weights_plus.weights.len() + self.weights_minus.weights.len()
    }

    pub fn residue_norm(&self) -> f64 {
        self.ends.iter().map(|(_, n)| residue_norm(&self.cm, n)).fold(0.0, f64::max)
    }

    /// Shared grid for every offset with `|δ| ∈ [d_min, d_max]`.
    pub fn grid_for(&self, d_min: f64, d_max: f64) -> Result<HalfLineGrid> {
        HalfLineGrid::for_distances(d_min, d_max, self.residue_norm(), &self.opts)
    }

    /// Frame at the Cartesian offset `delta` from the point.
    pub fn frame(&self, delta: &Vector3<f64>, hg: &HalfLineGrid) -> Result<KernelFrame> {
        let dl = dual_lattice(&self.lattice)?;
        let xi = crate::torus::reduce(&dl.to_coeffs(&(self.center + delta)));
        let mut blocks = Vec::new();
        for (side, nn) in &self.ends {
            let kernel = half_line_kernel(&self.cm, nn, delta, *side, hg, &self.opts)?;
            blocks.push(FrameBlock { label: BlockLabel { mode: [0, 0, 0], side: Some(*side) }, kernel });
        }
        Ok(KernelFrame { xi, blocks, gauge: None })
    }

    /// Frame on a grid fitted to this offset alone.
    pub fn frame_alone(&self, delta: &Vector3<f64>) -> Result<KernelFrame> {
        let d = delta.norm();
        self.frame(delta, &self.grid_for(d, d)?)
    }
}
