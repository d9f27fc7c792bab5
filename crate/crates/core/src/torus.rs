//! Lattices in ℝ³, the torus T³ = ℝ³/Λ, its dual torus and flat twists.
//!
//! Covectors on the dual side are stored by their coefficients in the dual basis;
//! Euclidean lengths go through the Gram matrix of the dual basis.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NahmError, Result};

/// Coefficients that land within this distance of 1 are snapped to 0.
const DOMAIN_SNAP: f64 = 1e-12;

/// Default ceiling for [`enumerate_modes`].
pub const DEFAULT_MODE_LIMIT: usize = 200_000;

/// Integer coordinates of a dual-lattice vector.
pub type Mode = [i64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice3 {
    /// Generators as columns.
    basis: Matrix3<f64>,
}

impl Lattice3 {
    pub fn new(basis: Matrix3<f64>) -> Result<Self> {
        if !basis.iter().all(|x| x.is_finite()) {
            return Err(NahmError::InvalidLattice("non-finite entry".into()));
        }
        let det = basis.determinant();
        if det.abs() <= 1e-12 {
            return Err(NahmError::InvalidLattice(format!("|det| = {:.3e}", det.abs())));
        }
        Ok(Self { basis })
    }

    /// Row-major 3×3 input whose columns are the generators.
    pub fn from_row_major(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn cubic() -> Self {
        Self { basis: Matrix3::identity() }
    }

    pub fn basis(&self) -> &Matrix3<f64> {
        &self.basis
    }

    pub fn volume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    pub fn row_major(&self) -> [[f64; 3]; 3] {
        let b = &self.basis;
        [
            [b[(0, 0)], b[(0, 1)], b[(0, 2)]],
            [b[(1, 0)], b[(1, 1)], b[(1, 2)]],
            [b[(2, 0)], b[(2, 1)], b[(2, 2)]],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualLattice3 {
    /// Dual generators as rows (the inverse of the lattice basis).
    basis: Matrix3<f64>,
    gram: Matrix3<f64>,
    min_gram_eig: f64,
}

impl DualLattice3 {
    pub fn basis(&self) -> &Matrix3<f64> {
        &self.basis
    }

    /// Gram matrix of the dual generators.
    pub fn gram(&self) -> &Matrix3<f64> {
        &self.gram
    }

    /// Cartesian covector components of a coefficient vector.
    pub fn to_cartesian(&self, coeffs: &Vector3<f64>) -> Vector3<f64> {
        self.basis.transpose() * coeffs
    }

    /// Dual-basis coefficients of a Cartesian covector.
    pub fn to_coeffs(&self, cart: &Vector3<f64>) -> Vector3<f64> {
        // The rows of `basis` are the dual generators, so ξ = basisᵀ a.
        self.basis
            .transpose()
            .lu()
            .solve(cart)
            .expect("dual basis is invertible")
    }

    /// Euclidean length of the covector with the given coefficients.
    pub fn norm(&self, coeffs: &Vector3<f64>) -> f64 {
        (coeffs.transpose() * self.gram * coeffs)[(0, 0)].max(0.0).sqrt()
    }

    /// Half-width of the integer box that contains every vector of length ≤ `radius`.
    fn box_radius(&self, radius: f64) -> i64 {
        (radius / self.min_gram_eig.sqrt()).ceil() as i64
    }

    /// Length of the shortest nonzero dual vector.
    pub fn shortest_length(&self) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..3 {
            best = best.min(self.norm(&Vector3::from_fn(|i, _| if i == k { 1.0 } else { 0.0 })));
        }
        let r = self.box_radius(best);
        for i in -r..=r {
            for j in -r..=r {
                for k in -r..=r {
                    if (i, j, k) != (0, 0, 0) {
                        best = best.min(self.norm(&Vector3::new(i as f64, j as f64, k as f64)));
                    }
                }
            }
        }
        best
    }

    /// The lattice this is dual to.
    pub fn dual(&self) -> Lattice3 {
        Lattice3 {
            basis: self.basis.try_inverse().expect("invertible"),
        }
    }
}

pub fn dual_lattice(l: &Lattice3) -> Result<DualLattice3> {
    let inv = l
        .basis
        .try_inverse()
        .ok_or_else(|| NahmError::InvalidLattice("singular basis".into()))?;
    let gram = inv * inv.transpose();
    let min_gram_eig = gram.symmetric_eigenvalues().min();
    Ok(DualLattice3 { basis: inv, gram, min_gram_eig })
}

/// A point of the dual torus, stored as dual-basis coefficients in `[0, 1)³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualTorusPoint {
    pub coeffs: Vector3<f64>,
}

impl DualTorusPoint {
    pub fn origin() -> Self {
        Self { coeffs: Vector3::zeros() }
    }

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        reduce(&Vector3::new(a, b, c))
    }
}

fn reduce_coeff(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 - DOMAIN_SNAP || r < DOMAIN_SNAP {
        0.0
    } else {
        r
    }
}

/// Reduce dual-basis coefficients into the fundamental domain.
pub fn reduce(coeffs: &Vector3<f64>) -> DualTorusPoint {
    DualTorusPoint { coeffs: coeffs.map(reduce_coeff) }
}

/// Distance on T̂³: minimum over lattice translates of the covector length.
pub fn torus_distance(a: &DualTorusPoint, b: &DualTorusPoint, dl: &DualLattice3) -> f64 {
    let mut delta = a.coeffs - b.coeffs;
    delta = delta.map(|x| x - x.round());
    let mut best = dl.norm(&delta);
    let r = dl.box_radius(best) + 1;
    for i in -r..=r {
        for j in -r..=r {
            for k in -r..=r {
                let v = delta + Vector3::new(i as f64, j as f64, k as f64);
                best = best.min(dl.norm(&v));
            }
        }
    }
    best
}

/// Length of `2π(n − ξ)` for a mode `n`.
pub fn mode_frequency(n: &Mode, xi: &DualTorusPoint, dl: &DualLattice3) -> f64 {
    2.0 * PI * dl.norm(&(mode_vec(n) - xi.coeffs))
}

pub fn mode_vec(n: &Mode) -> Vector3<f64> {
    Vector3::new(n[0] as f64, n[1] as f64, n[2] as f64)
}

/// All `n ∈ Λ*` with `|2π(n − ξ)| ≤ cutoff`, in lexicographic order.
pub fn enumerate_modes(
    dl: &DualLattice3,
    xi: &DualTorusPoint,
    cutoff: f64,
    limit: usize,
) -> Result<Vec<Mode>> {
    if !(cutoff > 0.0) {
        return Err(NahmError::Precondition("mode cutoff must be positive".into()));
    }
    let r = cutoff / (2.0 * PI);
    let half = dl.box_radius(r) + 1;
    let side = (2 * half + 1) as f64;
    if side * side * side > 64.0 * limit as f64 {
        return Err(NahmError::TooManyModes { limit });
    }
    let center = xi.coeffs.map(|x| x.round() as i64);
    let mut out = Vec::new();
    for i in center[0] - half..=center[0] + half {
        for j in center[1] - half..=center[1] + half {
            for k in center[2] - half..=center[2] + half {
                let n = [i, j, k];
                if mode_frequency(&n, xi, dl) <= cutoff {
                    out.push(n);
                    if out.len() > limit {
                        return Err(NahmError::TooManyModes { limit });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `exp(2πi⟨x, v⟩)` for a torus point `x` (Cartesian) and dual-lattice vector `v`.
pub fn poincare_phase(x: &Vector3<f64>, v: &Mode, dl: &DualLattice3) -> Complex64 {
    // Work with x in lattice coordinates, reduced mod 1 per component, so that the
    // integer pairing never sees large arguments.
    let y = dl.basis() * x;
    let mut total = 0.0;
    for k in 0..3 {
        let fy = y[k] - y[k].round();
        let t = fy * v[k] as f64;
        total += t - t.round();
    }
    Complex64::from_polar(1.0, 2.0 * PI * (total - total.round()))
}

/// The splitting T³ = S¹ × T² with holomorphic coordinates τ = t + i x¹ and w = x² + i x³.
///
/// Requires the first generator to be the unit vector along x¹ and the other two to lie
/// in the (x², x³)-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCoords {
    /// Generators of the T² lattice in the w-plane, as columns.
    t2_basis: Matrix2<f64>,
    t2_dual: Matrix2<f64>,
}

impl ComplexCoords {
    pub fn new(l: &Lattice3) -> Result<Self> {
        let b = l.basis();
        let tol = 1e-12;
        let b1 = b.column(0);
        if (b1 - Vector3::x()).norm() > tol {
            return Err(NahmError::SplitUnavailable(
                "first generator must be the unit x¹ vector".into(),
            ));
        }
        if b[(0, 1)].abs() > tol || b[(0, 2)].abs() > tol {
            return Err(NahmError::SplitUnavailable(
                "T² generators must be orthogonal to the S¹ factor".into(),
            ));
        }
        let t2_basis = Matrix2::new(b[(1, 1)], b[(1, 2)], b[(2, 1)], b[(2, 2)]);
        let t2_dual = t2_basis
            .try_inverse()
            .ok_or_else(|| NahmError::SplitUnavailable("degenerate T² lattice".into()))?;
        Ok(Self { t2_basis, t2_dual })
    }

    pub fn tau(t: f64, x1: f64) -> Complex64 {
        Complex64::new(t, x1)
    }

    pub fn w(x2: f64, x3: f64) -> Complex64 {
        Complex64::new(x2, x3)
    }

    pub fn t2_basis(&self) -> &Matrix2<f64> {
        &self.t2_basis
    }

    /// Coefficients, reduced to `[0,1)²`, of the T̂² covector with Cartesian components
    /// `(ξ₂, ξ₃)`.
    pub fn reduce_t2(&self, xi23: &Vector2<f64>) -> Vector2<f64> {
        // Dual generators are the rows of the inverse; coefficients are basisᵀ ξ.
        let a = self.t2_basis.transpose() * xi23;
        a.map(reduce_coeff)
    }

    pub fn t2_distance(&self, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
        let gram = self.t2_dual * self.t2_dual.transpose();
        let d = (a - b).map(|x| x - x.round());
        let mut best = f64::INFINITY;
        for i in -2..=2 {
            for j in -2..=2 {
                let v = d + Vector2::new(i as f64, j as f64);
                best = best.min((v.transpose() * gram * v)[(0, 0)].max(0.0).sqrt());
            }
        }
        best
    }
}
