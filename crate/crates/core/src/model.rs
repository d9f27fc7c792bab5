//! Model solutions `Γ + N/t`, su(2) weight data, spectra and singularity sets.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{NahmError, Result, Violation};
use crate::linalg::{c, commutator, herm_eigen, identity, norm, rank, select_columns, CMat, I};
use crate::torus::{dual_lattice, reduce, torus_distance, DualTorusPoint, Lattice3};

/// Absolute tolerance for the defining identities, scaled by the size of the data.
pub const MODEL_TOL: f64 = 1e-10;

pub type Triple = [CMat; 3];

const SUB: [&str; 3] = ["₁", "₂", "₃"];

pub fn triple_zeros(r: usize) -> Triple {
    [CMat::zeros(r, r), CMat::zeros(r, r), CMat::zeros(r, r)]
}

pub fn triple_norm(a: &Triple) -> f64 {
    a.iter().map(|m| norm(m).powi(2)).sum::<f64>().sqrt()
}

pub fn triple_sub(a: &Triple, b: &Triple) -> Triple {
    [&a[0] - &b[0], &a[1] - &b[1], &a[2] - &b[2]]
}

pub fn triple_axpy(a: &Triple, s: f64, b: &Triple) -> Triple {
    let s = c(s, 0.0);
    [&a[0] + &b[0] * s, &a[1] + &b[1] * s, &a[2] + &b[2] * s]
}

pub fn triple_scale(a: &Triple, s: f64) -> Triple {
    let s = c(s, 0.0);
    [&a[0] * s, &a[1] * s, &a[2] * s]
}

/// `U† a U` componentwise.
pub fn triple_conj(a: &Triple, u: &CMat) -> Triple {
    let ud = u.adjoint();
    [&ud * &a[0] * u, &ud * &a[1] * u, &ud * &a[2] * u]
}

/// Residual of `N_i = [N_j, N_k]` over even permutations.
pub fn su2_relation_residual(nn: &Triple) -> f64 {
    (0..3)
        .map(|i| norm(&(&nn[i] - commutator(&nn[(i + 1) % 3], &nn[(i + 2) % 3]))))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSolution {
    gamma: Triple,
    nn: Triple,
}

impl ModelSolution {
    pub fn gamma(&self) -> &Triple {
        &self.gamma
    }

    pub fn nn(&self) -> &Triple {
        &self.nn
    }

    pub fn rank(&self) -> usize {
        self.gamma[0].nrows()
    }

    /// `Γ + N/t`.
    pub fn eval(&self, t: f64) -> Triple {
        triple_axpy(&self.gamma, 1.0 / t, &self.nn)
    }

    /// `d/dt (Γ + N/t) = −N/t²`.
    pub fn eval_derivative(&self, t: f64) -> Triple {
        triple_scale(&self.nn, -1.0 / (t * t))
    }

    pub fn conjugate(&self, u: &CMat) -> Self {
        Self { gamma: triple_conj(&self.gamma, u), nn: triple_conj(&self.nn, u) }
    }

    pub fn is_flat(&self) -> bool {
        triple_norm(&self.nn) == 0.0
    }

    /// Direct sum of two model solutions.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let ds = |a: &Triple, b: &Triple| -> Triple {
            [0, 1, 2].map(|i| block_diag(&[a[i].clone(), b[i].clone()]))
        };
        Self { gamma: ds(&self.gamma, &other.gamma), nn: ds(&self.nn, &other.nn) }
    }
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

pub fn validate_model_solution(gamma: Triple, nn: Triple) -> Result<ModelSolution> {
    let r = gamma[0].nrows();
    for (name, trip) in [("Γ", &gamma), ("N", &nn)] {
        for (i, m) in trip.iter().enumerate() {
            if m.nrows() != r || m.ncols() != r {
                return Err(NahmError::Dimension(format!(
                    "{name}{} is {}×{}, expected {r}×{r}",
                    SUB[i],
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
    }
    let scale = 1.0 + triple_norm(&gamma).max(triple_norm(&nn)).powi(2);
    let tol = MODEL_TOL * scale;
    let mut violations = Vec::new();
    let mut check = |identity: String, residual: f64| {
        if !(residual <= tol) {
            violations.push(Violation { identity, residual });
        }
    };
    for (name, trip) in [("Γ", &gamma), ("N", &nn)] {
        for i in 0..3 {
            let m = &trip[i];
            check(format!("{name}{s}† ≠ −{name}{s}", s = SUB[i]), norm(&(m + m.adjoint())));
        }
    }
    for i in 0..3 {
        for j in i + 1..3 {
            check(
                format!("[Γ{},Γ{}] ≠ 0", SUB[i], SUB[j]),
                norm(&commutator(&gamma[i], &gamma[j])),
            );
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            check(
                format!("[Γ{},N{}] ≠ 0", SUB[i], SUB[j]),
                norm(&commutator(&gamma[i], &nn[j])),
            );
        }
    }
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        check(
            format!("N{} ≠ [N{},N{}]", SUB[i], SUB[j], SUB[k]),
            norm(&(&nn[i] - commutator(&nn[j], &nn[k]))),
        );
    }
    if violations.is_empty() {
        Ok(ModelSolution { gamma, nn })
    } else {
        Err(NahmError::InvalidModel(violations))
    }
}

/// Dimensions of the irreducible summands of an su(2) representation, sorted descending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Su2WeightVector {
    pub weights: Vec<usize>,
}

impl Su2WeightVector {
    pub fn new(mut weights: Vec<usize>) -> Self {
        weights.sort_unstable_by(|a, b| b.cmp(a));
        Self { weights }
    }

    pub fn dim(&self) -> usize {
        self.weights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl std::fmt::Display for Su2WeightVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Summand sizes read off the Casimir `−Σ N_i²`, which acts as `j(j+1)` on a spin-`j` block.
pub fn su2_weights_casimir(nn: &Triple) -> Result<Su2WeightVector> {
    let r = nn[0].nrows();
    if r == 0 {
        return Ok(Su2WeightVector::default());
    }
    let cas = -(&nn[0] * &nn[0] + &nn[1] * &nn[1] + &nn[2] * &nn[2]);
    let (vals, _) = herm_eigen(&cas);
    let mut weights = Vec::new();
    let mut k = 0;
    while k < r {
        let two_j = ((1.0 + 4.0 * vals[k].max(0.0)).sqrt() - 1.0).round() as usize;
        let dim = two_j + 1;
        let target = (two_j as f64 / 2.0) * (two_j as f64 / 2.0 + 1.0);
        let mut mult = 0;
        while k < r && (vals[k] - target).abs() < 1e-6 * (1.0 + target) {
            mult += 1;
            k += 1;
        }
        if mult == 0 || mult % dim != 0 {
            return Err(NahmError::Consistency(format!(
                "Casimir eigenvalue {:.6} has multiplicity {mult}, not a multiple of {dim}",
                vals[k.min(r - 1)]
            )));
        }
        weights.extend(std::iter::repeat(dim).take(mult / dim));
    }
    Ok(Su2WeightVector::new(weights))
}

/// Jordan block sizes of a nilpotent matrix from the ranks of its powers.
pub fn nilpotent_jordan_sizes(m: &CMat, threshold: f64) -> Result<Vec<usize>> {
    let r = m.nrows();
    let mut ranks = vec![r];
    let mut p = identity(r);
    for _ in 0..r {
        p = &p * m;
        let rk = rank(&p, threshold);
        ranks.push(rk);
        if rk == 0 {
            break;
        }
    }
    if *ranks.last().unwrap() != 0 {
        return Err(NahmError::Consistency("matrix is not nilpotent".into()));
    }
    Ok(sizes_from_ranks(&ranks))
}

/// Given `ranks[k] = rank(M^k)` ending in 0, the Jordan block sizes, descending.
pub fn sizes_from_ranks(ranks: &[usize]) -> Vec<usize> {
    // #blocks of size ≥ k is ranks[k−1] − ranks[k].
    let at_least: Vec<usize> = ranks.windows(2).map(|w| w[0] - w[1]).collect();
    let mut sizes = Vec::new();
    for k in 1..=at_least.len() {
        let next = at_least.get(k).copied().unwrap_or(0);
        let exactly = at_least[k - 1] - next;
        sizes.extend(std::iter::repeat(k).take(exactly));
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Summand sizes read off the Jordan blocks of the ladder operator `N₂ + iN₃`.
pub fn su2_weights_jordan(nn: &Triple) -> Result<Su2WeightVector> {
    let e = &nn[1] + &nn[2] * I;
    let thr = 1e-8 * norm(&e).max(1.0);
    Ok(Su2WeightVector::new(nilpotent_jordan_sizes(&e, thr)?))
}

/// Summand sizes of the su(2) representation `N`, cross-checked by two independent routes.
pub fn su2_weights(nn: &Triple) -> Result<Su2WeightVector> {
    let scale = 1.0 + triple_norm(nn).powi(2);
    let res = su2_relation_residual(nn);
    if res > MODEL_TOL * scale {
        return Err(NahmError::Su2Relations(res));
    }
    let a = su2_weights_casimir(nn)?;
    let b = su2_weights_jordan(nn)?;
    if a != b {
        return Err(NahmError::Consistency(format!(
            "Casimir route gives {a}, Jordan route gives {b}"
        )));
    }
    Ok(a)
}

/// One point of a spectrum: the reduced point, its multiplicity and an orthonormal basis of
/// the joint eigenspace.
#[derive(Debug, Clone)]
pub struct SpectrumPoint {
    pub xi: DualTorusPoint,
    /// Unreduced Cartesian covector `(2πi)⁻¹ λ`.
    pub raw: Vector3<f64>,
    pub multiplicity: usize,
    pub basis: CMat,
}

#[derive(Debug, Clone, Default)]
pub struct SpectrumSet {
    pub points: Vec<SpectrumPoint>,
}

impl SpectrumSet {
    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    pub fn find(&self, xi: &DualTorusPoint, l: &Lattice3, tol: f64) -> Option<&SpectrumPoint> {
        let dl = dual_lattice(l).ok()?;
        self.points.iter().find(|p| torus_distance(&p.xi, xi, &dl) < tol)
    }
}

/// Fixed generic weights for the combined Hermitian operator.
const MIX: [f64; 3] = [0.736_067_977_499_789_7, 0.414_213_562_373_095_1, 0.141_592_653_589_793_2];

fn split_cluster(gamma_h: &[CMat; 3], basis: CMat, tol: f64, axis: usize, out: &mut Vec<CMat>) {
    if axis == 3 || basis.ncols() <= 1 {
        out.push(basis);
        return;
    }
    let restricted = basis.adjoint() * &gamma_h[axis] * &basis;
    let (vals, vecs) = herm_eigen(&restricted);
    for group in cluster_sorted(&vals, tol) {
        let sub = &basis * select_columns(&vecs, group);
        split_cluster(gamma_h, sub, tol, axis + 1, out);
    }
}

/// Consecutive runs of ascending values whose neighbours differ by at most `tol`.
fn cluster_sorted(vals: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (v - vals[*g.last().unwrap()]).abs() <= tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    groups
}

/// Joint eigenspaces of a commuting skew-Hermitian triple with their joint eigenvalues
/// divided by `2πi` (Cartesian covectors).
pub fn joint_eigenspaces(gamma: &Triple) -> Vec<(Vector3<f64>, CMat)> {
    let r = gamma[0].nrows();
    if r == 0 {
        return Vec::new();
    }
    let gamma_h = [0, 1, 2].map(|i| &gamma[i] * c(0.0, -1.0));
    let scale = triple_norm(gamma).max(1.0);
    let tol = 1e-8 * scale;
    let mix = &gamma_h[0] * c(MIX[0], 0.0) + &gamma_h[1] * c(MIX[1], 0.0) + &gamma_h[2] * c(MIX[2], 0.0);
    let (vals, vecs) = herm_eigen(&mix);
    let mut blocks = Vec::new();
    for group in cluster_sorted(&vals, tol) {
        split_cluster(&gamma_h, select_columns(&vecs, group), tol, 0, &mut blocks);
    }
    blocks
        .into_iter()
        .map(|b| {
            let k = b.ncols() as f64;
            let mu = Vector3::from_fn(|i, _| {
                (b.adjoint() * &gamma_h[i] * &b).trace().re / k / (2.0 * PI)
            });
            (mu, b)
        })
        .collect()
}

pub fn spectrum_set(ms: &ModelSolution, l: &Lattice3) -> Result<SpectrumSet> {
    spectrum_of_gamma(&ms.gamma, l)
}

pub fn spectrum_of_gamma(gamma: &Triple, l: &Lattice3) -> Result<SpectrumSet> {
    let scale = triple_norm(gamma).max(1.0);
    for i in 0..3 {
        for j in i + 1..3 {
            let res = norm(&commutator(&gamma[i], &gamma[j]));
            if res > MODEL_TOL * scale * scale {
                return Err(NahmError::InvalidModel(vec![Violation {
                    identity: format!("[Γ{},Γ{}] ≠ 0", SUB[i], SUB[j]),
                    residual: res,
                }]));
            }
        }
    }
    let dl = dual_lattice(l)?;
    let mut points: Vec<SpectrumPoint> = joint_eigenspaces(gamma)
        .into_iter()
        .map(|(raw, basis)| SpectrumPoint {
            xi: reduce(&(l.basis().transpose() * raw)),
            raw,
            multiplicity: basis.ncols(),
            basis,
        })
        .collect();
    let tol = 1e-8 * scale;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if torus_distance(&points[a].xi, &points[b].xi, &dl) < tol {
                return Err(NahmError::NonInjectiveSpectrum(format!(
                    "joint eigenvalues {:?} and {:?} reduce to the same point",
                    points[a].raw.as_slice(),
                    points[b].raw.as_slice()
                )));
            }
        }
    }
    points.sort_by(|p, q| {
        p.xi.coeffs
            .iter()
            .zip(q.xi.coeffs.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(SpectrumSet { points })
}

/// Model data restricted to one joint eigenspace.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub basis: CMat,
    pub raw: Vector3<f64>,
    /// `N` restricted to the eigenspace.
    pub nn: Triple,
    pub weights: Su2WeightVector,
}

#[derive(Debug, Clone)]
pub struct SingularPoint {
    pub xi: DualTorusPoint,
    pub plus: Option<LocalModel>,
    pub minus: Option<LocalModel>,
}

impl SingularPoint {
    pub fn weights_plus(&self) -> Su2WeightVector {
        self.plus.as_ref().map(|m| m.weights.clone()).unwrap_or_default()
    }

    pub fn weights_minus(&self) -> Su2WeightVector {
        self.minus.as_ref().map(|m| m.weights.clone()).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SingularitySet {
    pub points: Vec<SingularPoint>,
}

impl SingularitySet {
    pub fn xis(&self) -> Vec<DualTorusPoint> {
        self.points.iter().map(|p| p.xi).collect()
    }
}

fn localize(ms: &ModelSolution, l: &Lattice3) -> Result<Vec<(DualTorusPoint, LocalModel)>> {
    spectrum_set(ms, l)?
        .points
        .into_iter()
        .map(|p| {
            let nn = triple_conj_rect(&ms.nn, &p.basis);
            let weights = su2_weights(&nn)?;
            Ok((p.xi, LocalModel { basis: p.basis, raw: p.raw, nn, weights }))
        })
        .collect()
}

/// `V† a V` for a rectangular isometry `V`.
pub fn triple_conj_rect(a: &Triple, v: &CMat) -> Triple {
    let vd = v.adjoint();
    [&vd * &a[0] * v, &vd * &a[1] * v, &vd * &a[2] * v]
}

pub fn singularity_set(
    plus: &ModelSolution,
    minus: &ModelSolution,
    l: &Lattice3,
) -> Result<SingularitySet> {
    if plus.rank() != minus.rank() {
        return Err(NahmError::Dimension(format!(
            "rank {} at +∞ vs {} at −∞",
            plus.rank(),
            minus.rank()
        )));
    }
    let dl = dual_lattice(l)?;
    let tol = 1e-8 * triple_norm(plus.gamma()).max(triple_norm(minus.gamma())).max(1.0);
    let mut points: Vec<SingularPoint> = Vec::new();
    for (xi, local) in localize(plus, l)? {
        points.push(SingularPoint { xi, plus: Some(local), minus: None });
    }
    for (xi, local) in localize(minus, l)? {
        match points.iter_mut().find(|p| torus_distance(&p.xi, &xi, &dl) < tol) {
            Some(p) => p.minus = Some(local),
            None => points.push(SingularPoint { xi, plus: None, minus: Some(local) }),
        }
    }
    points.sort_by(|p, q| {
        p.xi.coeffs
            .iter()
            .zip(q.xi.coeffs.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(SingularitySet { points })
}

/// Tensor with the flat line bundle `L_{−ξ}`: `Γ_i ↦ Γ_i − 2πi ξ_i`, `ξ` in dual coefficients.
pub fn twist(ms: &ModelSolution, xi: &Vector3<f64>, l: &Lattice3) -> Result<ModelSolution> {
    let cart = dual_lattice(l)?.to_cartesian(xi);
    let r = ms.rank();
    let gamma = [0, 1, 2].map(|i| &ms.gamma[i] - identity(r) * c(0.0, 2.0 * PI * cart[i]));
    Ok(ModelSolution { gamma, nn: ms.nn.clone() })
}

/// Constructors for standard model data used by tests and examples.
pub mod fixtures {
    use super::*;
    use crate::linalg::random_unitary;
    use rand::Rng;

    /// Spin-`two_j/2` irreducible triple with `N_i = −i J_i`, dimension `two_j + 1`.
    pub fn spin_rep(two_j: usize) -> Triple {
        let d = two_j + 1;
        let j = two_j as f64 / 2.0;
        let mut jp = CMat::zeros(d, d);
        // Basis ordered by J₃ eigenvalue m = j, j−1, …, −j.
        for k in 1..d {
            let m = j - k as f64;
            jp[(k - 1, k)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
        let jm = jp.adjoint();
        let j1 = (&jp + &jm) * c(0.5, 0.0);
        let j2 = (&jp - &jm) * c(0.0, -0.5);
        let j3 = CMat::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| c(j - k as f64, 0.0)));
        [j1 * c(0.0, -1.0), j2 * c(0.0, -1.0), j3 * c(0.0, -1.0)]
    }

    /// Direct sum of irreducibles of the given dimensions.
    pub fn su2_sum(dims: &[usize]) -> Triple {
        let reps: Vec<Triple> = dims.iter().map(|&d| spin_rep(d - 1)).collect();
        [0, 1, 2].map(|i| block_diag(&reps.iter().map(|t| t[i].clone()).collect::<Vec<_>>()))
    }

    /// Commuting triple `2πi·diag(raw_k)` from Cartesian covectors.
    pub fn diagonal_gamma(raw: &[Vector3<f64>]) -> Triple {
        [0, 1, 2].map(|i| {
            CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                raw.len(),
                raw.iter().map(|v| c(0.0, 2.0 * PI * v[i])),
            ))
        })
    }

    /// Model solution with the block at Cartesian covector `raw[k]` carrying the su(2)
    /// summands `dims[k]`.
    pub fn model_from_blocks(blocks: &[(Vector3<f64>, Vec<usize>)]) -> ModelSolution {
        let mut gamma_blocks: Vec<Triple> = Vec::new();
        let mut nn_blocks: Vec<Triple> = Vec::new();
        for (raw, dims) in blocks {
            let n = su2_sum(dims);
            let r = n[0].nrows();
            gamma_blocks.push([0, 1, 2].map(|i| identity(r) * c(0.0, 2.0 * PI * raw[i])));
            nn_blocks.push(n);
        }
        let cat = |ts: &[Triple]| -> Triple {
            [0, 1, 2].map(|i| block_diag(&ts.iter().map(|t| t[i].clone()).collect::<Vec<_>>()))
        };
        validate_model_solution(cat(&gamma_blocks), cat(&nn_blocks)).expect("fixture is valid")
    }

    /// Random partition of `r` into positive parts.
    pub fn random_partition<R: Rng>(r: usize, rng: &mut R) -> Vec<usize> {
        let mut parts = Vec::new();
        let mut left = r;
        while left > 0 {
            let p = rng.gen_range(1..=left);
            parts.push(p);
            left -= p;
        }
        parts
    }

    /// Random valid model solution of rank `r` on the cubic lattice, conjugated by a
    /// random unitary. Distinct blocks sit at least 0.05 apart on the torus.
    pub fn random_model<R: Rng>(r: usize, rng: &mut R) -> ModelSolution {
        let blocks_dims = random_partition(r, rng);
        let mut blocks = Vec::new();
        let mut used: Vec<Vector3<f64>> = Vec::new();
        for d in blocks_dims {
            let raw = loop {
                let cand = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let ok = used.iter().all(|u| {
                    let diff = (cand - u).map(|x| x - x.round());
                    diff.norm() > 0.05
                });
                if ok {
                    break cand;
                }
            };
            used.push(raw);
            blocks.push((raw, random_partition(d, rng)));
        }
        let ms = model_from_blocks(&blocks);
        let u = random_unitary(r, rng);
        ms.conjugate(&u)
    }
}
