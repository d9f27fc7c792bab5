//! Subspace shooting for `g' = K(x) g` on a uniform grid.
//!
//! The subspace of solutions admissible at the left end is marched forward and the one
//! admissible at the right end backward, both with fourth-order Magnus steps and a QR
//! re-orthonormalisation after every step. Their intersection at the middle node is read
//! off from principal angles, and the intersecting solutions are rebuilt on the whole grid
//! from the stored triangular factors. Beyond the grid, solutions are continued by the
//! frozen-coefficient exponentials of `K` at the ends.

use num_complex::Complex64;

use crate::error::{NahmError, Result};
use crate::linalg::{
    c, commutator, expm, herm_eigen, inv_sqrt_hpd, principal_sines, select_columns, thin_qr, CMat,
    CVec,
};

/// How grid coordinates relate to the physical line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    /// `t = x`, `dt = dx`.
    Linear,
    /// Half-line `t = σ·a·ln(1 + eˣ)`: logarithmic near `t = 0`, linear far out.
    Softplus { scale: f64, sigma: f64 },
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Measure {
    /// `dt/dx` up to sign.
    pub fn weight(&self, x: f64) -> f64 {
        match self {
            Measure::Linear => 1.0,
            Measure::Softplus { scale, .. } => scale * sigmoid(x),
        }
    }

    pub fn position(&self, x: f64) -> f64 {
        match self {
            Measure::Linear => x,
            Measure::Softplus { scale, sigma } => sigma * scale * softplus(x),
        }
    }

    /// Eigenvalues of `K(x₀)` above this are admissible at the left end.
    pub fn left_threshold(&self) -> f64 {
        match self {
            Measure::Linear => 0.0,
            Measure::Softplus { .. } => -0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    /// Even number of intervals.
    pub intervals: usize,
}

impl Grid {
    pub fn new(x0: f64, x1: f64, intervals: usize) -> Result<Self> {
        if !(x1 > x0) || intervals < 2 || intervals % 2 != 0 {
            return Err(NahmError::Precondition(
                "grid needs x1 > x0 and an even number of intervals".into(),
            ));
        }
        Ok(Self { x0, x1, intervals })
    }

    pub fn step(&self) -> f64 {
        (self.x1 - self.x0) / self.intervals as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.x1
        } else {
            self.x0 + k as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.intervals).map(|k| self.point(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Continuation `Σ_j a_j e^{λ_j (x − x_end)} v_j` past one end of the grid.
#[derive(Debug, Clone)]
pub struct TailExpansion {
    pub vectors: CMat,
    pub rates: Vec<f64>,
    pub coeffs: CVec,
    pub anchor: f64,
}

/// One solution: samples on the grid plus closed-form tails at both ends.
#[derive(Debug, Clone)]
pub struct KernelFunction {
    pub samples: Vec<CVec>,
    pub left: TailExpansion,
    pub right: TailExpansion,
}

impl KernelFunction {
    fn scaled_sum(parts: &[(&KernelFunction, Complex64)]) -> KernelFunction {
        let first = parts[0].0;
        let samples = (0..first.samples.len())
            .map(|k| {
                let mut v = CVec::zeros(first.samples[k].len());
                for (f, w) in parts {
                    v += &f.samples[k] * *w;
                }
                v
            })
            .collect();
        let comb = |sel: &dyn Fn(&KernelFunction) -> &TailExpansion| {
            let t0 = sel(first);
            let mut coeffs = CVec::zeros(t0.coeffs.len());
            for (f, w) in parts {
                coeffs += &sel(f).coeffs * *w;
            }
            TailExpansion { vectors: t0.vectors.clone(), rates: t0.rates.clone(), coeffs, anchor: t0.anchor }
        };
        KernelFunction { samples, left: comb(&|f| &f.left), right: comb(&|f| &f.right) }
    }

    /// Pointwise density `|g(x_k)|²`.
    pub fn density(&self) -> Vec<f64> {
        self.samples.iter().map(|v| v.norm_squared()).collect()
    }
}

/// Tail integrals `∫ conj(f) w(x) [pos(x)]^p g dx` over one end, `p ∈ {0, 1}`. For the
/// half-line map the leading asymptotics `s ≈ a eˣ` (left) and `s ≈ s₁ + a(x − x₁)`
/// (right) are used.
fn tail_pair(a: &TailExpansion, b: &TailExpansion, measure: Measure, right: bool, moment: bool) -> Complex64 {
    let overlap = a.vectors.adjoint() * &b.vectors;
    let mut acc = c(0.0, 0.0);
    for j in 0..a.rates.len() {
        let aj = a.coeffs[j].conj();
        if aj == c(0.0, 0.0) {
            continue;
        }
        for l in 0..b.rates.len() {
            let w = aj * b.coeffs[l] * overlap[(j, l)];
            if w == c(0.0, 0.0) {
                continue;
            }
            let lam = a.rates[j] + b.rates[l];
            let x = a.anchor;
            let val = match (measure, right, moment) {
                (Measure::Linear, false, false) => 1.0 / lam,
                (Measure::Linear, false, true) => x / lam - 1.0 / (lam * lam),
                (Measure::Linear, true, false) => -1.0 / lam,
                (Measure::Linear, true, true) => -x / lam + 1.0 / (lam * lam),
                (Measure::Softplus { scale, .. }, false, false) => scale * x.exp() / (lam + 1.0),
                (Measure::Softplus { scale, sigma }, false, true) => {
                    sigma * scale * scale * (2.0 * x).exp() / (lam + 2.0)
                }
                (Measure::Softplus { scale, .. }, true, false) => -scale / lam,
                (Measure::Softplus { scale, sigma }, true, true) => {
                    let s1 = scale * softplus(x);
                    sigma * scale * (-s1 / lam + scale / (lam * lam))
                }
            };
            acc += w * val;
        }
    }
    acc
}

/// `∫ ⟨f, g⟩ dt` (or `∫ t⟨f, g⟩ dt` with `moment`) using Simpson on the grid plus tails.
pub fn inner(f: &KernelFunction, g: &KernelFunction, grid: &Grid, measure: Measure, moment: bool) -> Complex64 {
    let w = crate::linalg::simpson_weights(grid.len(), grid.step());
    let mut acc = c(0.0, 0.0);
    for k in 0..grid.len() {
        let x = grid.point(k);
        let mut wk = w[k] * measure.weight(x);
        if moment {
            wk *= measure.position(x);
        }
        acc += f.samples[k].dotc(&g.samples[k]) * wk;
    }
    acc += tail_pair(&f.left, &g.left, measure, false, moment);
    acc += tail_pair(&f.right, &g.right, measure, true, moment);
    acc
}

pub fn gram(fs: &[KernelFunction], grid: &Grid, measure: Measure, moment: bool) -> CMat {
    let n = fs.len();
    let mut g = CMat::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = inner(&fs[a], &fs[b], grid, measure, moment);
            g[(a, b)] = v;
            g[(b, a)] = v.conj();
        }
    }
    g
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Principal-angle sines below this count as kernel directions.
    pub angle_threshold: f64,
    /// Sines in `[angle_threshold, uncertain_upper)` flag the dimension as uncertain.
    pub uncertain_upper: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { angle_threshold: 1e-6, uncertain_upper: 1e-4 }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    /// L²-orthonormal basis of the solutions admissible at both ends.
    pub functions: Vec<KernelFunction>,
    pub sines: Vec<f64>,
    pub uncertain: bool,
    /// `‖G − I‖` of the returned basis.
    pub gram_error: f64,
    pub left_dim: usize,
    pub right_dim: usize,
}

impl ShootingResult {
    pub fn dim(&self) -> usize {
        self.functions.len()
    }
}

/// Fourth-order Magnus exponent for one step.
fn magnus_exponent(k: &dyn Fn(f64) -> CMat, x: f64, h: f64) -> CMat {
    let g = 3f64.sqrt() / 6.0;
    let k1 = k(x + (0.5 - g) * h);
    let k2 = k(x + (0.5 + g) * h);
    (&k1 + &k2) * c(0.5 * h, 0.0) + commutator(&k2, &k1) * c(3f64.sqrt() * h * h / 12.0, 0.0)
}

/// `exp(Ω) Q` by a truncated Taylor series when `‖Ω‖` is small, `expm` otherwise.
fn exp_action(omega: &CMat, q: &CMat) -> CMat {
    let l1 = |m: &CMat| m.iter().map(|z| z.l1_norm()).fold(0.0, f64::max);
    let size = l1(omega) * omega.nrows() as f64;
    if size > 0.5 {
        return expm(omega) * q;
    }
    let mut term = q.clone();
    let mut out = q.clone();
    let scale = l1(q);
    for j in 1..30 {
        term = omega * term * c(1.0 / j as f64, 0.0);
        out += &term;
        if l1(&term) <= 1e-17 * scale {
            break;
        }
    }
    out
}

/// Applies step exponentials, reusing `exp(Ω)` while consecutive steps share the same `Ω`
/// (autonomous stretches such as frozen tails or constant curves).
#[derive(Default)]
struct Stepper {
    omega: Option<CMat>,
    full: Option<CMat>,
}

impl Stepper {
    fn apply(&mut self, omega: CMat, q: &CMat) -> CMat {
        if self.omega.as_ref() == Some(&omega) {
            let full = self.full.get_or_insert_with(|| exp_action(&omega, &CMat::identity(omega.nrows(), omega.ncols())));
            return &*full * q;
        }
        let out = exp_action(&omega, q);
        self.omega = Some(omega);
        self.full = None;
        out
    }
}

fn check_triangular(r: &CMat) -> Result<()> {
    for i in 0..r.nrows() {
        let d = r[(i, i)].norm();
        if !(d.is_finite() && d > 1e-300) {
            return Err(NahmError::Numerical(format!(
                "orthonormalisation failed (|R_ii| = {d:e})"
            )));
        }
    }
    Ok(())
}

fn solve_upper(r: &CMat, b: &CVec) -> CVec {
    r.solve_upper_triangular(b).expect("checked nonsingular")
}

pub fn shoot(
    k: &(dyn Fn(f64) -> CMat + Sync),
    grid: &Grid,
    measure: Measure,
    opts: &ShootingOptions,
) -> Result<ShootingResult> {
    let n = grid.intervals;
    let h = grid.step();
    let xs = grid.points();
    let mid = n / 2;

    let k_lo = k(grid.x0);
    let k_hi = k(grid.x1);
    let dim = k_lo.nrows();
    let (vals_lo, vecs_lo) = herm_eigen(&k_lo);
    let (vals_hi, vecs_hi) = herm_eigen(&k_hi);
    let thr = measure.left_threshold();
    let left_idx: Vec<usize> = (0..dim).filter(|&j| vals_lo[j] > thr).collect();
    let right_idx: Vec<usize> = (0..dim).filter(|&j| vals_hi[j] < 0.0).collect();
    let v_left = select_columns(&vecs_lo, left_idx.iter().cloned());
    let v_right = select_columns(&vecs_hi, right_idx.iter().cloned());
    let left_rates: Vec<f64> = left_idx.iter().map(|&j| vals_lo[j]).collect();
    let right_rates: Vec<f64> = right_idx.iter().map(|&j| vals_hi[j]).collect();

    let empty = |sines: Vec<f64>| ShootingResult {
        functions: Vec::new(),
        sines,
        uncertain: false,
        gram_error: 0.0,
        left_dim: left_idx.len(),
        right_dim: right_idx.len(),
    };
    if left_idx.is_empty() || right_idx.is_empty() {
        return Ok(empty(Vec::new()));
    }

    // Forward march of the left subspace up to the middle node.
    let mut q_fwd: Vec<CMat> = Vec::with_capacity(mid + 1);
    let mut r_fwd: Vec<CMat> = Vec::with_capacity(mid + 1);
    q_fwd.push(v_left.clone());
    r_fwd.push(CMat::identity(left_idx.len(), left_idx.len()));
    let mut stepper = Stepper::default();
    for step in 0..mid {
        let (q, r) = thin_qr(&stepper.apply(magnus_exponent(k, xs[step], h), &q_fwd[step]));
        check_triangular(&r)?;
        q_fwd.push(q);
        r_fwd.push(r);
    }
    // Backward march of the right subspace down to the middle node.
    let mut q_bwd: Vec<CMat> = vec![CMat::zeros(0, 0); n + 1];
    let mut r_bwd: Vec<CMat> = vec![CMat::zeros(0, 0); n + 1];
    q_bwd[n] = v_right.clone();
    let mut stepper = Stepper::default();
    for step in (mid..n).rev() {
        let (q, r) = thin_qr(&stepper.apply(-magnus_exponent(k, xs[step], h), &q_bwd[step + 1]));
        check_triangular(&r)?;
        q_bwd[step] = q;
        r_bwd[step] = r;
    }

    let (sines, dirs) = principal_sines(&q_fwd[mid], &q_bwd[mid]);
    let uncertain = sines
        .iter()
        .any(|&s| s >= opts.angle_threshold && s < opts.uncertain_upper);
    let picked: Vec<usize> = (0..sines.len()).filter(|&j| sines[j] < opts.angle_threshold).collect();
    if picked.is_empty() {
        let mut out = empty(sines);
        out.uncertain = uncertain;
        return Ok(out);
    }

    let mut raw = Vec::with_capacity(picked.len());
    for &j in &picked {
        let d_mid = dirs.column(j).into_owned();
        let v = &q_bwd[mid] * &d_mid;
        let c_mid = q_fwd[mid].adjoint() * &v;
        let mut samples = vec![CVec::zeros(dim); n + 1];
        samples[mid] = v;
        let mut cc = c_mid;
        for kk in (0..mid).rev() {
            cc = solve_upper(&r_fwd[kk + 1], &cc);
            samples[kk] = &q_fwd[kk] * &cc;
        }
        let left_coeffs = cc;
        let mut dd = d_mid;
        for kk in mid..n {
            dd = solve_upper(&r_bwd[kk], &dd);
            samples[kk + 1] = &q_bwd[kk + 1] * &dd;
        }
        raw.push(KernelFunction {
            samples,
            left: TailExpansion {
                vectors: v_left.clone(),
                rates: left_rates.clone(),
                coeffs: left_coeffs,
                anchor: grid.x0,
            },
            right: TailExpansion {
                vectors: v_right.clone(),
                rates: right_rates.clone(),
                coeffs: dd,
                anchor: grid.x1,
            },
        });
    }

    // Rescale each to unit norm first so the Gram matrix is well conditioned.
    let raw: Vec<KernelFunction> = raw
        .iter()
        .map(|f| {
            let nn = inner(f, f, grid, measure, false).re.sqrt();
            KernelFunction::scaled_sum(&[(f, c(1.0 / nn, 0.0))])
        })
        .collect();
    let g = gram(&raw, grid, measure, false);
    let w = inv_sqrt_hpd(&g)?;
    let functions: Vec<KernelFunction> = (0..raw.len())
        .map(|b| {
            let parts: Vec<(&KernelFunction, Complex64)> =
                (0..raw.len()).map(|a| (&raw[a], w[(a, b)])).collect();
            KernelFunction::scaled_sum(&parts)
        })
        .collect();
    let g2 = gram(&functions, grid, measure, false);
    let gram_error = crate::linalg::norm(&(g2 - CMat::identity(functions.len(), functions.len())));
    Ok(ShootingResult {
        functions,
        sines,
        uncertain,
        gram_error,
        left_dim: left_idx.len(),
        right_dim: right_idx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use std::f64::consts::PI;

    /// `K(x) = [[0, 1], [1, 0]]·a(x)`-type problems with a localised coupling that admits
    /// an exact decaying solution.
    #[test]
    fn scalar_soliton_kernel() {
        // g' = K g with K = diag(−tanh x, tanh x): the first component e.g. sech(x) is L².
        let k = |x: f64| {
            let t = x.tanh();
            CMat::from_diagonal(&CVec::from_vec(vec![c(-t, 0.0), c(t, 0.0)]))
        };
        let grid = Grid::new(-12.0, 12.0, 600).unwrap();
        let res = shoot(&k, &grid, Measure::Linear, &ShootingOptions::default()).unwrap();
        assert_eq!(res.dim(), 1);
        assert!(res.gram_error < 1e-10);
        // Oracle: ∫ sech² = 2, so the normalised modulus at 0 is 1/√2.
        let v = &res.functions[0].samples[300];
        assert!((v.norm() - 0.5f64.sqrt()).abs() < 1e-6, "{}", v.norm());
        assert!(v[1].norm() < 1e-10);
    }

    #[test]
    fn constant_operator_has_no_kernel() {
        let d = crate::dirac::clifford::pauli()[0].clone() * c(2.0 * PI * 0.3, 0.0);
        let k = move |_x: f64| d.clone();
        let grid = Grid::new(-5.0, 5.0, 100).unwrap();
        let res = shoot(&k, &grid, Measure::Linear, &ShootingOptions::default()).unwrap();
        assert_eq!(res.dim(), 0);
        assert_eq!(res.left_dim, 1);
        assert_eq!(res.right_dim, 1);
        assert!(res.sines.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn softplus_measure_power_law_moments() {
        // In s: g' = (λ/s − a) g, i.e. g = s^λ e^{−a s}, with λ = 1, a = 2.
        let (lam, a) = (1.0, 2.0);
        let m = Measure::Softplus { scale: 0.5, sigma: 1.0 };
        let k = move |x: f64| {
            let s = m.position(x);
            identity(1) * c(m.weight(x) * (lam / s - a), 0.0)
        };
        let grid = Grid::new(-12.0, 60.0, 2400).unwrap();
        let res = shoot(&k, &grid, m, &ShootingOptions::default()).unwrap();
        assert_eq!(res.dim(), 1);
        assert!(res.gram_error < 1e-10);
        let f = &res.functions[0];
        // Oracle: ⟨s⟩ for s² e^{−4s} is Γ(4)/4⁴ ÷ Γ(3)/4³ = 3/4.
        let mean = inner(f, f, &grid, m, true).re;
        assert!((mean - 0.75).abs() < 1e-8, "{mean}");
    }

    #[test]
    fn softplus_map_limits() {
        let m = Measure::Softplus { scale: 2.0, sigma: -1.0 };
        assert!((m.position(-20.0) + 2.0 * (-20.0f64).exp()).abs() < 1e-15);
        assert!((m.position(50.0) + 100.0).abs() < 1e-12);
        assert!((m.weight(50.0) - 2.0).abs() < 1e-15);
    }
}
