//! Boundary-value solve for curves joining two model ends.
//!
//! Hermite–Simpson collocation on a fixed grid; end conditions restrict the deviation from
//! the model to the linearised unstable (left end) or stable (right end) subspace of the
//! flow at `Γ±`. The resulting overdetermined system is solved by Levenberg–Marquardt on
//! block-tridiagonal normal equations. A curve is only returned when its pointwise residual
//! is certified below the tolerance; otherwise the residual history is reported.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{NahmError, Result};
use crate::linalg::{c, commutator, real_to_skew, skew_dim, skew_to_real};
use crate::model::{joint_eigenspaces, triple_norm, ModelSolution, Triple};

use super::{hermite, hermite_derivative, nahm_rhs, uniform_grid, NahmCurve, Tails};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeteroclinicParams {
    pub t_max: f64,
    pub grid_n: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for HeteroclinicParams {
    fn default() -> Self {
        Self { t_max: 20.0, grid_n: 2001, tol: 1e-8, max_iter: 60 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    /// Max-norm of the collocation and boundary residual after each iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// Pointwise `‖A' − rhs(A)‖` of the interpolant, maximised over Gauss points.
    pub certified_residual: f64,
    pub boundary_residual: f64,
}

#[derive(Debug, Clone)]
pub enum HeteroclinicOutcome {
    Found { curve: NahmCurve, report: SolveReport },
    NotFound { report: SolveReport, reason: String },
}

impl HeteroclinicOutcome {
    pub fn curve(&self) -> Option<&NahmCurve> {
        match self {
            Self::Found { curve, .. } => Some(curve),
            Self::NotFound { .. } => None,
        }
    }

    pub fn report(&self) -> &SolveReport {
        match self {
            Self::Found { report, .. } | Self::NotFound { report, .. } => report,
        }
    }
}

/// Eigen-splitting of the (symmetric) linearised flow at a commuting triple, in the
/// isometric real coordinates of a triple.
#[derive(Debug, Clone)]
pub struct LinearSplitting {
    pub eigenvalues: Vec<f64>,
    pub stable: DMatrix<f64>,
    pub center: DMatrix<f64>,
    pub unstable: DMatrix<f64>,
}

fn triple_to_real(a: &Triple, out: &mut [f64]) {
    let d = skew_dim(a[0].nrows());
    for i in 0..3 {
        skew_to_real(&a[i], &mut out[i * d..(i + 1) * d]);
    }
}

fn real_to_triple(x: &[f64], r: usize) -> Triple {
    let d = skew_dim(r);
    [0, 1, 2].map(|i| real_to_skew(&x[i * d..(i + 1) * d], r))
}

/// Directional derivative of the right-hand side at `a` along `delta`.
fn rhs_derivative(a: &Triple, delta: &Triple) -> Triple {
    [0, 1, 2].map(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        -(commutator(&delta[j], &a[k]) + commutator(&a[j], &delta[k]))
    })
}

/// Real Jacobian of the right-hand side at `a`.
fn rhs_jacobian(a: &Triple) -> DMatrix<f64> {
    let r = a[0].nrows();
    let n = 3 * skew_dim(r);
    let mut jac = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for m in 0..n {
        e[m] = 1.0;
        let d = real_to_triple(&e, r);
        triple_to_real(&rhs_derivative(a, &d), &mut col);
        jac.set_column(m, &DVector::from_column_slice(&col));
        e[m] = 0.0;
    }
    jac
}

pub fn linearized_splitting(gamma: &Triple) -> LinearSplitting {
    let jac = rhs_jacobian(gamma);
    let sym = (&jac + jac.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let eps = 1e-9 * (1.0 + triple_norm(gamma));
    let n = jac.nrows();
    let pick = |pred: &dyn Fn(f64) -> bool| -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = (0..n)
            .filter(|&k| pred(eig.eigenvalues[k]))
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    };
    LinearSplitting {
        eigenvalues: eig.eigenvalues.iter().cloned().collect(),
        stable: pick(&|l| l < -eps),
        center: pick(&|l| l.abs() <= eps),
        unstable: pick(&|l| l > eps),
    }
}

/// Smallest nonzero distance between joint eigenvalues of `Γ`.
fn min_gamma_gap(gamma: &Triple) -> Option<f64> {
    let pts = joint_eigenspaces(gamma);
    let mut best: Option<f64> = None;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let d = 2.0 * std::f64::consts::PI * (pts[a].0 - pts[b].0).norm();
            if d > 0.0 {
                best = Some(best.map_or(d, |x: f64| x.min(d)));
            }
        }
    }
    best
}

fn hcat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks[0].nrows();
    let k: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, k);
    let mut off = 0;
    for b in blocks {
        out.view_mut((0, off), (n, b.ncols())).copy_from(b);
        off += b.ncols();
    }
    out
}

struct System {
    r: usize,
    n: usize,
    grid: Vec<f64>,
    p_minus: DMatrix<f64>,
    p_plus: DMatrix<f64>,
    m_minus: DVector<f64>,
    m_plus: DVector<f64>,
}

struct Linearization {
    /// Scaled collocation residual per interval.
    res: Vec<DVector<f64>>,
    ja: Vec<DMatrix<f64>>,
    jb: Vec<DMatrix<f64>>,
    bc_lo: DVector<f64>,
    bc_hi: DVector<f64>,
}

impl System {
    fn node_triples(&self, y: &[DVector<f64>]) -> Vec<Triple> {
        y.iter().map(|v| real_to_triple(v.as_slice(), self.r)).collect()
    }

    fn to_real(&self, a: &Triple) -> DVector<f64> {
        let mut v = vec![0.0; self.n];
        triple_to_real(a, &mut v);
        DVector::from_vec(v)
    }

    fn residual(&self, y: &[DVector<f64>], with_jac: bool) -> Linearization {
        let a = self.node_triples(y);
        let f: Vec<Triple> = a.iter().map(nahm_rhs).collect();
        let jf: Vec<DMatrix<f64>> = if with_jac { a.iter().map(rhs_jacobian).collect() } else { Vec::new() };
        let id = DMatrix::<f64>::identity(self.n, self.n);
        let mut res = Vec::with_capacity(y.len() - 1);
        let mut ja = Vec::new();
        let mut jb = Vec::new();
        for k in 0..y.len() - 1 {
            let h = self.grid[k + 1] - self.grid[k];
            let am: Triple = [0, 1, 2].map(|i| {
                (&a[k][i] + &a[k + 1][i]) * c(0.5, 0.0) + (&f[k][i] - &f[k + 1][i]) * c(h / 8.0, 0.0)
            });
            let fm = nahm_rhs(&am);
            let fk = self.to_real(&f[k]);
            let fk1 = self.to_real(&f[k + 1]);
            let fmr = self.to_real(&fm);
            let rk = (&y[k + 1] - &y[k]) / h - (fk + fmr * 4.0 + fk1) / 6.0;
            res.push(rk);
            if with_jac {
                let jm = rhs_jacobian(&am);
                let dm_a = &id * 0.5 + &jf[k] * (h / 8.0);
                let dm_b = &id * 0.5 - &jf[k + 1] * (h / 8.0);
                ja.push(-&id / h - (&jf[k] + &jm * dm_a * 4.0) / 6.0);
                jb.push(&id / h - (&jf[k + 1] + &jm * dm_b * 4.0) / 6.0);
            }
        }
        let last = y.len() - 1;
        let bc_lo = self.p_minus.transpose() * (&y[0] - &self.m_minus);
        let bc_hi = self.p_plus.transpose() * (&y[last] - &self.m_plus);
        Linearization { res, ja, jb, bc_lo, bc_hi }
    }
}

fn max_abs(lin: &Linearization) -> f64 {
    let mut m = lin.bc_lo.amax().max(lin.bc_hi.amax());
    for r in &lin.res {
        m = m.max(r.amax());
    }
    m
}

fn cost(lin: &Linearization) -> f64 {
    lin.res.iter().map(|r| r.norm_squared()).sum::<f64>() + lin.bc_lo.norm_squared() + lin.bc_hi.norm_squared()
}

/// Solve `(JᵀJ + μI) δ = −Jᵀr` for the block-bidiagonal Jacobian.
fn lm_step(sys: &System, lin: &Linearization, mu: f64) -> Option<Vec<DVector<f64>>> {
    let nodes = lin.res.len() + 1;
    let n = sys.n;
    let mut diag: Vec<DMatrix<f64>> = vec![DMatrix::identity(n, n) * mu; nodes];
    let mut upper: Vec<DMatrix<f64>> = Vec::with_capacity(nodes - 1);
    let mut g: Vec<DVector<f64>> = vec![DVector::zeros(n); nodes];
    for k in 0..nodes - 1 {
        let (a, b, r) = (&lin.ja[k], &lin.jb[k], &lin.res[k]);
        diag[k] += a.transpose() * a;
        diag[k + 1] += b.transpose() * b;
        upper.push(a.transpose() * b);
        g[k] += a.transpose() * r;
        g[k + 1] += b.transpose() * r;
    }
    diag[0] += &sys.p_minus * sys.p_minus.transpose();
    g[0] += &sys.p_minus * &lin.bc_lo;
    diag[nodes - 1] += &sys.p_plus * sys.p_plus.transpose();
    g[nodes - 1] += &sys.p_plus * &lin.bc_hi;

    // Block Thomas elimination.
    let mut c_mats: Vec<DMatrix<f64>> = Vec::with_capacity(nodes);
    let mut d_vecs: Vec<DVector<f64>> = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let mut s = diag[k].clone();
        let mut rhs = -&g[k];
        if k > 0 {
            let ut = upper[k - 1].transpose();
            s -= &ut * &c_mats[k - 1];
            rhs -= &ut * &d_vecs[k - 1];
        }
        let chol = s.cholesky()?;
        if k + 1 < nodes {
            c_mats.push(chol.solve(&upper[k]));
        }
        d_vecs.push(chol.solve(&rhs));
    }
    let mut x = vec![DVector::zeros(n); nodes];
    x[nodes - 1] = d_vecs[nodes - 1].clone();
    for k in (0..nodes - 1).rev() {
        x[k] = &d_vecs[k] - &c_mats[k] * &x[k + 1];
    }
    Some(x)
}

/// Pointwise residual of the cubic interpolant at the Gauss points and midpoint.
fn certify(grid: &[f64], a: &[Triple]) -> f64 {
    let f: Vec<Triple> = a.iter().map(nahm_rhs).collect();
    let g = 0.5 / 3f64.sqrt();
    let mut worst: f64 = 0.0;
    for k in 0..a.len() - 1 {
        let (t0, t1) = (grid[k], grid[k + 1]);
        for s in [0.5 - g, 0.5, 0.5 + g] {
            let t = t0 + s * (t1 - t0);
            let p = hermite(t0, t1, &a[k], &a[k + 1], &f[k], &f[k + 1], t);
            let dp = hermite_derivative(t0, t1, &a[k], &a[k + 1], &f[k], &f[k + 1], t);
            let rhs = nahm_rhs(&p);
            let d = (0..3).map(|i| crate::linalg::norm(&(&dp[i] - &rhs[i]))).fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    worst
}

/// Default initial guess: a tanh blend of the two model ends.
pub fn blend_guess(minus: &ModelSolution, plus: &ModelSolution, grid: &[f64]) -> Vec<Triple> {
    grid.iter()
        .map(|&t| {
            let s = 0.5 * (1.0 + t.tanh());
            // Keep clear of the model poles at t = 0.
            let lo = minus.eval(t.min(-1.0));
            let hi = plus.eval(t.max(1.0));
            [0, 1, 2].map(|i| &lo[i] * c(1.0 - s, 0.0) + &hi[i] * c(s, 0.0))
        })
        .collect()
}

pub fn solve_heteroclinic(
    minus: &ModelSolution,
    plus: &ModelSolution,
    params: &HeteroclinicParams,
    initial: Option<&[Triple]>,
) -> Result<HeteroclinicOutcome> {
    let r = plus.rank();
    if minus.rank() != r {
        return Err(NahmError::Dimension(format!("rank {} vs {}", minus.rank(), r)));
    }
    if params.grid_n < 3 || !(params.t_max > 0.0) || !(params.tol > 0.0) {
        return Err(NahmError::Precondition("need grid_n ≥ 3, T > 0, tol > 0".into()));
    }
    for ms in [minus, plus] {
        if let Some(gap) = min_gamma_gap(ms.gamma()) {
            let nnorm = triple_norm(ms.nn());
            if nnorm / params.t_max >= 0.1 * gap {
                return Err(NahmError::Precondition(format!(
                    "T = {} too small: ‖N‖/T = {:.3e} vs Γ-gap {:.3e}",
                    params.t_max,
                    nnorm / params.t_max,
                    gap
                )));
            }
        }
    }
    let grid = uniform_grid(-params.t_max, params.t_max, params.grid_n);
    let split_lo = linearized_splitting(minus.gamma());
    let split_hi = linearized_splitting(plus.gamma());
    let n = 3 * skew_dim(r);
    let mut sys = System {
        r,
        n,
        grid: grid.clone(),
        p_minus: hcat(&[&split_lo.stable, &split_lo.center]),
        p_plus: hcat(&[&split_hi.unstable, &split_hi.center]),
        m_minus: DVector::zeros(n),
        m_plus: DVector::zeros(n),
    };
    sys.m_minus = sys.to_real(&minus.eval(-params.t_max));
    sys.m_plus = sys.to_real(&plus.eval(params.t_max));

    let guess: Vec<Triple> = match initial {
        Some(g) if g.len() == grid.len() => g.to_vec(),
        Some(g) => {
            return Err(NahmError::Dimension(format!(
                "initial guess has {} samples, grid has {}",
                g.len(),
                grid.len()
            )))
        }
        None => blend_guess(minus, plus, &grid),
    };
    let mut y: Vec<DVector<f64>> = guess.iter().map(|a| sys.to_real(a)).collect();
    let mut lin = sys.residual(&y, true);
    let mut current = cost(&lin);
    let mut history = vec![max_abs(&lin)];
    let mut mu = 1e-6;
    let mut iterations = 0;
    let target = 0.25 * params.tol;
    let mut reason = String::from("iteration budget exhausted");
    while history.last().copied().unwrap_or(f64::INFINITY) > target {
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;
        let mut accepted = false;
        while mu < 1e14 {
            let Some(step) = lm_step(&sys, &lin, mu) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<DVector<f64>> = y.iter().zip(&step).map(|(a, d)| a + d).collect();
            let trial_lin = sys.residual(&trial, false);
            let trial_cost = cost(&trial_lin);
            if trial_cost.is_finite() && trial_cost < current {
                y = trial;
                current = trial_cost;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            reason = "Levenberg–Marquardt could not decrease the residual".into();
            break;
        }
        lin = sys.residual(&y, true);
        history.push(max_abs(&lin));
    }

    let a = sys.node_triples(&y);
    let certified = certify(&grid, &a);
    let boundary = lin.bc_lo.amax().max(lin.bc_hi.amax());
    let report = SolveReport {
        residual_history: history,
        iterations,
        certified_residual: certified,
        boundary_residual: boundary,
    };
    if certified <= params.tol && boundary <= params.tol {
        let a = a.into_iter().map(|t| super::reproject(&t)).collect();
        let curve = NahmCurve::new(
            grid,
            a,
            Some(Tails { minus: minus.clone(), plus: plus.clone() }),
        )?;
        Ok(HeteroclinicOutcome::Found { curve, report })
    } else {
        if certified > params.tol && reason.starts_with("iteration") {
            reason = format!("certified residual {certified:.3e} above tolerance");
        }
        Ok(HeteroclinicOutcome::NotFound { report, reason })
    }
}
