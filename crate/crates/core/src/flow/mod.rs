//! Nahm's equation `A_i' = −[A_j, A_k]` in temporal gauge: sampled curves, integration,
//! conserved quantities, energy and residual diagnostics.

mod heteroclinic;
mod integrate;

pub use heteroclinic::{
    linearized_splitting, solve_heteroclinic, HeteroclinicOutcome, HeteroclinicParams,
    LinearSplitting, SolveReport,
};
pub use integrate::{integrate, IntegrateOptions};

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NahmError, Result};
use crate::linalg::{c, commutator, eigenvalues, norm, skew_part, skew_residual, CMat, I};
use crate::model::{triple_norm, triple_sub, ModelSolution, Triple};
use crate::torus::Lattice3;

/// `(−[A₂,A₃], −[A₃,A₁], −[A₁,A₂])`.
pub fn nahm_rhs(a: &Triple) -> Triple {
    [0, 1, 2].map(|i| -commutator(&a[(i + 1) % 3], &a[(i + 2) % 3]))
}

/// Chern–Simons functional `tr(A₁[A₂,A₃])`, real on skew-Hermitian triples. The flow
/// is its gradient flow: it increases at rate `Σ‖[A_j,A_k]‖²`.
pub fn chern_simons(a: &Triple) -> f64 {
    (&a[0] * commutator(&a[1], &a[2])).trace().re
}

/// Asymptotic model data at both ends of the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tails {
    pub minus: ModelSolution,
    pub plus: ModelSolution,
}

/// A sampled solution on a strictly increasing grid, optionally with model tails beyond it.
///
/// Samples are treated as immutable once the curve has been evaluated: node slopes are
/// cached on first use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NahmCurve {
    pub grid: Vec<f64>,
    pub a: Vec<Triple>,
    pub tails: Option<Tails>,
    #[serde(skip)]
    slopes: Slopes,
}

/// Lazily computed `nahm_rhs` at the nodes; invisible to equality and serialisation.
#[derive(Clone, Default)]
struct Slopes(OnceLock<Vec<Triple>>);

impl PartialEq for Slopes {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl std::fmt::Debug for Slopes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Slopes")
    }
}

impl NahmCurve {
    pub fn new(grid: Vec<f64>, a: Vec<Triple>, tails: Option<Tails>) -> Result<Self> {
        if grid.len() != a.len() || grid.len() < 2 {
            return Err(NahmError::Dimension(format!(
                "{} grid points for {} samples",
                grid.len(),
                a.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(NahmError::Precondition("grid must be strictly increasing".into()));
        }
        let r = a[0][0].nrows();
        for (k, s) in a.iter().enumerate() {
            for m in s {
                if m.nrows() != r || m.ncols() != r {
                    return Err(NahmError::Dimension(format!("sample {k} has wrong shape")));
                }
                if skew_residual(m) > 1e-10 * (1.0 + norm(m)) {
                    return Err(NahmError::Precondition(format!(
                        "sample {k} is not skew-Hermitian"
                    )));
                }
            }
        }
        Ok(Self { grid, a, tails, slopes: Slopes::default() })
    }

    /// Uniform grid on `[−t_max, t_max]` holding the constant value `a`.
    pub fn constant(a: &Triple, t_max: f64, n: usize, tails: Option<Tails>) -> Result<Self> {
        let grid = uniform_grid(-t_max, t_max, n);
        let samples = vec![a.clone(); n];
        Self::new(grid, samples, tails)
    }

    pub fn rank(&self) -> usize {
        self.a[0][0].nrows()
    }

    pub fn t_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Value at any `t`: cubic Hermite on the grid (slopes from the right-hand side),
    /// model tails outside it when present, the end sample otherwise.
    pub fn eval(&self, t: f64) -> Triple {
        let n = self.grid.len();
        if t <= self.grid[0] {
            return match &self.tails {
                Some(tl) if t < self.grid[0] => tl.minus.eval(t),
                _ => self.a[0].clone(),
            };
        }
        if t >= self.grid[n - 1] {
            return match &self.tails {
                Some(tl) if t > self.grid[n - 1] => tl.plus.eval(t),
                _ => self.a[n - 1].clone(),
            };
        }
        let k = match self.grid.binary_search_by(|g| g.total_cmp(&t)) {
            Ok(k) => return self.a[k].clone(),
            Err(k) => k - 1,
        };
        let f = self.slopes.0.get_or_init(|| self.a.iter().map(nahm_rhs).collect());
        hermite(self.grid[k], self.grid[k + 1], &self.a[k], &self.a[k + 1], &f[k], &f[k + 1], t)
    }

    /// Deviation of the end samples from the model tails.
    pub fn tail_consistency(&self) -> Option<(f64, f64)> {
        let tl = self.tails.as_ref()?;
        let lo = triple_norm(&triple_sub(&self.a[0], &tl.minus.eval(self.t_min())));
        let hi = triple_norm(&triple_sub(self.a.last().unwrap(), &tl.plus.eval(self.t_max())));
        Some((lo, hi))
    }
}

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { b } else { a + k as f64 * h }).collect()
}

/// Cubic Hermite interpolation of a triple between two nodes.
pub fn hermite(t0: f64, t1: f64, a0: &Triple, a1: &Triple, f0: &Triple, f1: &Triple, t: f64) -> Triple {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
    let h10 = s * s * s - 2.0 * s * s + s;
    let h01 = -2.0 * s * s * s + 3.0 * s * s;
    let h11 = s * s * s - s * s;
    [0, 1, 2].map(|i| {
        &a0[i] * c(h00, 0.0) + &f0[i] * c(h10 * h, 0.0) + &a1[i] * c(h01, 0.0) + &f1[i] * c(h11 * h, 0.0)
    })
}

/// Derivative of [`hermite`].
pub fn hermite_derivative(
    t0: f64,
    t1: f64,
    a0: &Triple,
    a1: &Triple,
    f0: &Triple,
    f1: &Triple,
    t: f64,
) -> Triple {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let d00 = (6.0 * s * s - 6.0 * s) / h;
    let d10 = 3.0 * s * s - 4.0 * s + 1.0;
    let d01 = (-6.0 * s * s + 6.0 * s) / h;
    let d11 = 3.0 * s * s - 2.0 * s;
    [0, 1, 2].map(|i| {
        &a0[i] * c(d00, 0.0) + &f0[i] * c(d10, 0.0) + &a1[i] * c(d01, 0.0) + &f1[i] * c(d11, 0.0)
    })
}

/// Eigenvalues of `B = A₂ + iA₃` per sample and their largest drift from the first sample.
#[derive(Debug, Clone)]
pub struct SpectralInvariants {
    pub eigenvalues: Vec<Vec<Complex64>>,
    pub drift: f64,
}

pub fn lax_matrix(a: &Triple) -> CMat {
    &a[1] + &a[2] * I
}

/// Distance between two multisets of complex numbers (greedy nearest matching).
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, y) in b.iter().enumerate() {
            if !used[j] && (x - y).norm() < best.0 {
                best = ((x - y).norm(), j);
            }
        }
        if best.1 == usize::MAX {
            return f64::INFINITY;
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

pub fn spectral_invariants(curve: &NahmCurve) -> SpectralInvariants {
    let eigenvalues: Vec<Vec<Complex64>> =
        curve.a.iter().map(|a| eigenvalues(&lax_matrix(a))).collect();
    let drift = eigenvalues
        .iter()
        .map(|e| multiset_distance(&eigenvalues[0], e))
        .fold(0.0, f64::max);
    SpectralInvariants { eigenvalues, drift }
}

/// First-derivative weights at `x0` for arbitrary nodes (Fornberg).
pub fn derivative_weights(nodes: &[f64], x0: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[1]).collect()
}

/// Pointwise `max_i ‖∂_tA_i + [A_j, A_k]‖` with a five-point derivative stencil.
pub fn asd_residual(curve: &NahmCurve) -> Vec<f64> {
    let n = curve.grid.len();
    let width = 5.min(n);
    (0..n)
        .map(|k| {
            let start = k.saturating_sub(width / 2).min(n - width);
            let nodes = &curve.grid[start..start + width];
            let w = derivative_weights(nodes, curve.grid[k]);
            let rhs = nahm_rhs(&curve.a[k]);
            (0..3)
                .map(|i| {
                    let mut d = CMat::zeros(curve.rank(), curve.rank());
                    for (j, wj) in w.iter().enumerate() {
                        d += &curve.a[start + j][i] * c(*wj, 0.0);
                    }
                    norm(&(d - &rhs[i]))
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Quadrature weights on an arbitrary grid: composite Simpson on uniform grids with an
/// odd number of points, trapezoid otherwise.
pub fn quadrature_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let uniform = grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1.0));
    if uniform && n >= 3 && n % 2 == 1 {
        return crate::linalg::simpson_weights(n, h);
    }
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let d = grid[k + 1] - grid[k];
        w[k] += d / 2.0;
        w[k + 1] += d / 2.0;
    }
    w
}

/// Closed-form tail energy of a model end on `[T, ∞)`: `Vol·2Σ‖N_i‖²/(3T³)`.
pub fn model_tail_energy(ms: &ModelSolution, t_abs: f64, volume: f64) -> f64 {
    let n2: f64 = ms.nn().iter().map(|m| norm(m).powi(2)).sum();
    volume * 2.0 * n2 / (3.0 * t_abs.powi(3))
}

/// Energy density `Σ‖∂_tA_i‖² + Σ_{i<j}‖[A_i,A_j]‖²` with `∂_tA` taken from the equation.
pub fn energy_density(a: &Triple) -> f64 {
    let f = nahm_rhs(a);
    let kin: f64 = f.iter().map(|m| norm(m).powi(2)).sum();
    let pot: f64 = (0..3)
        .map(|i| norm(&commutator(&a[i], &a[(i + 1) % 3])).powi(2))
        .sum();
    kin + pot
}

/// `‖F‖²_{L²}` over `ℝ × T³`; refuses curves that do not solve the equation to `tol`.
pub fn curvature_energy(curve: &NahmCurve, l: &Lattice3, tol: f64) -> Result<f64> {
    let res = asd_residual(curve).into_iter().fold(0.0, f64::max);
    if res > tol {
        return Err(NahmError::ResidualTooLarge { residual: res, tol });
    }
    let vol = l.volume();
    let w = quadrature_weights(&curve.grid);
    let mut e: f64 = curve.a.iter().zip(&w).map(|(a, wk)| wk * energy_density(a)).sum();
    e *= vol;
    if let Some(tl) = &curve.tails {
        e += model_tail_energy(&tl.minus, curve.t_min().abs(), vol);
        e += model_tail_energy(&tl.plus, curve.t_max().abs(), vol);
    }
    Ok(e)
}

/// Decay of `A − (Γ₊ + N₊/t)` on the right end, split into the part commuting with `Γ₊`
/// (power law) and the rest (exponential). Rates are `None` when the residual sits at the
/// rounding floor and carries no decay information.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub center_rate: Option<f64>,
    pub perp_rate: Option<f64>,
    /// The x-dependent component; identically zero for invariant curves.
    pub nonconstant_residual: f64,
    pub center_max: f64,
    pub perp_max: f64,
}

pub fn asymptotic_fit(curve: &NahmCurve) -> Option<AsymptoticFit> {
    let tl = curve.tails.as_ref()?;
    let eig = crate::model::joint_eigenspaces(tl.plus.gamma());
    let project = |x: &CMat| -> CMat {
        let mut out = CMat::zeros(x.nrows(), x.ncols());
        for (_, v) in &eig {
            let p = v * v.adjoint();
            out += &p * x * &p;
        }
        out
    };
    let t_hi = curve.t_max();
    let mut ts = Vec::new();
    let mut cen = Vec::new();
    let mut perp = Vec::new();
    for (t, a) in curve.grid.iter().zip(&curve.a) {
        if *t < 0.5 * t_hi || *t <= 0.0 {
            continue;
        }
        let d = triple_sub(a, &tl.plus.eval(*t));
        let (mut c2, mut p2) = (0.0, 0.0);
        for m in &d {
            let pc = project(m);
            c2 += norm(&pc).powi(2);
            p2 += norm(&(m - pc)).powi(2);
        }
        ts.push(*t);
        cen.push(c2.sqrt());
        perp.push(p2.sqrt());
    }
    let floor = 1e-12 * (1.0 + triple_norm(tl.plus.gamma()));
    let fit = |ys: &[f64], log_x: bool| -> Option<f64> {
        let pts: Vec<(f64, f64)> = ts
            .iter()
            .zip(ys)
            .filter(|(_, y)| **y > floor)
            .map(|(t, y)| (if log_x { t.ln() } else { *t }, y.ln()))
            .collect();
        if pts.len() < 4 {
            return None;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        Some(-crate::linalg::linear_fit(&x, &y).1)
    };
    Some(AsymptoticFit {
        center_rate: fit(&cen, true),
        perp_rate: fit(&perp, false),
        nonconstant_residual: 0.0,
        center_max: cen.iter().cloned().fold(0.0, f64::max),
        perp_max: perp.iter().cloned().fold(0.0, f64::max),
    })
}

/// Project every sample to its skew-Hermitian part.
pub fn reproject(a: &Triple) -> Triple {
    [0, 1, 2].map(|i| skew_part(&a[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_skew;
    use crate::model::fixtures::*;
    use crate::model::{triple_zeros, validate_model_solution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rhs_vanishes_on_commuting_data() {
        let g = diagonal_gamma(&[nalgebra::Vector3::new(0.1, 0.2, 0.3), nalgebra::Vector3::zeros()]);
        assert!(triple_norm(&nahm_rhs(&g)) == 0.0);
    }

    #[test]
    fn rhs_matches_model_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ms = random_model(5, &mut rng);
        for t in [1.0, 3.5, 40.0] {
            let d = triple_sub(&nahm_rhs(&ms.eval(t)), &ms.eval_derivative(t));
            assert!(triple_norm(&d) < 1e-12);
        }
    }

    #[test]
    fn rhs_swap_antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = [0, 1, 2].map(|_| random_skew(3, 1.0, &mut rng));
        let swapped = [a[0].clone(), a[2].clone(), a[1].clone()];
        let f = nahm_rhs(&a);
        let g = nahm_rhs(&swapped);
        // Swapping A₂ ↔ A₃ negates the first component and exchanges/negates the others.
        assert!(norm(&(&g[0] + &f[0])) < 1e-14);
        assert!(norm(&(&g[1] + &f[2])) < 1e-14);
        assert!(norm(&(&g[2] + &f[1])) < 1e-14);
    }

    #[test]
    fn chern_simons_is_monotone_along_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = [0, 1, 2].map(|_| random_skew(2, 0.5, &mut rng));
        let seg = integrate(&a, 0.0, 0.5, 1e-10, &IntegrateOptions::default()).unwrap();
        let cs: Vec<f64> = seg.a.iter().map(chern_simons).collect();
        assert!(cs.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn fornberg_weights_are_exact_on_quartics() {
        let nodes = [0.0, 0.3, 0.5, 0.9, 1.4];
        let w = derivative_weights(&nodes, 0.5);
        let d: f64 = nodes.iter().zip(&w).map(|(x, wi)| wi * x.powi(4)).sum();
        assert!((d - 4.0 * 0.125).abs() < 1e-12);
    }

    #[test]
    fn asd_residual_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ms = random_model(2, &mut rng);
        let grid = uniform_grid(1.0, 3.0, 201);
        let samples = grid.iter().map(|t| ms.eval(*t)).collect();
        let curve = NahmCurve::new(grid, samples, None).unwrap();
        let res = asd_residual(&curve).into_iter().fold(0.0, f64::max);
        assert!(res < 1e-6, "stencil error {res}");

        let a = [0, 1, 2].map(|_| random_skew(2, 1.0, &mut rng));
        let flat = NahmCurve::constant(&a, 1.0, 11, None).unwrap();
        let expect = (0..3)
            .map(|i| norm(&commutator(&a[(i + 1) % 3], &a[(i + 2) % 3])))
            .fold(0.0, f64::max);
        for r in asd_residual(&flat) {
            assert!((r - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_energy_matches_quadrature() {
        let nn = su2_sum(&[2]);
        let ms = validate_model_solution(triple_zeros(2), nn).unwrap();
        let t0 = 5.0;
        // Oracle: Simpson of 2Σ‖N‖²/t⁴ in the variable u = 1/t on (0, 1/T].
        let n2: f64 = ms.nn().iter().map(|m| norm(m).powi(2)).sum();
        let m = 2001;
        let w = crate::linalg::simpson_weights(m, (1.0 / t0) / (m - 1) as f64);
        let quad: f64 = (0..m)
            .map(|k| {
                let u = k as f64 * (1.0 / t0) / (m - 1) as f64;
                w[k] * 2.0 * n2 * u * u
            })
            .sum();
        assert!((quad - model_tail_energy(&ms, t0, 1.0)).abs() < 1e-8);
        // The density on the model really is 2Σ‖N‖²/t⁴.
        assert!((energy_density(&ms.eval(t0)) - 2.0 * n2 / t0.powi(4)).abs() < 1e-14);
    }

    #[test]
    fn flat_curve_energy_is_zero() {
        let g = diagonal_gamma(&[nalgebra::Vector3::new(0.1, 0.2, 0.3), nalgebra::Vector3::zeros()]);
        let curve = NahmCurve::constant(&g, 5.0, 51, None).unwrap();
        assert_eq!(curvature_energy(&curve, &Lattice3::cubic(), 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn kinetic_equals_potential_on_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = [0, 1, 2].map(|_| random_skew(3, 0.3, &mut rng));
        let seg = integrate(&a, 0.0, 1.0, 1e-10, &IntegrateOptions::default()).unwrap();
        for s in &seg.a {
            let kin: f64 = nahm_rhs(s).iter().map(|m| norm(m).powi(2)).sum();
            let pot: f64 = (0..3).map(|i| norm(&commutator(&s[i], &s[(i + 1) % 3])).powi(2)).sum();
            assert!((kin - pot).abs() < 1e-12);
        }
    }

    #[test]
    fn model_lax_residual_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ms = random_model(3, &mut rng);
        let grid = uniform_grid(1.0, 10.0, 11);
        let samples: Vec<Triple> = grid.iter().map(|t| ms.eval(*t)).collect();
        for (t, a) in grid.iter().zip(&samples) {
            let b = lax_matrix(a) - lax_matrix(ms.gamma()) - lax_matrix(ms.nn()) * c(1.0 / t, 0.0);
            assert!(norm(&b) < 1e-13);
        }
    }
}
