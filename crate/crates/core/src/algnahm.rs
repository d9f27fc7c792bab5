//! Algebraic side of a singular point: graded pieces of model data as semistable degree-0
//! bundles on T², their Fourier–Mukai stalks, predicted weights, and parabolic degrees.
//!
//! With `τ = t + i x¹` and `w = x² + i x³`, a form `Σ M_i dx^i` has `dτ̄`-component
//! `(i/2) M₁` and `dw̄`-component `(M₂ + i M₃)/2`.

use std::f64::consts::PI;

use nalgebra::Vector2;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dirac::Side;
use crate::error::{NahmError, Result};
use crate::linalg::{c, norm, CMat, I};
use crate::model::{
    joint_eigenspaces, nilpotent_jordan_sizes, sizes_from_ranks, triple_norm, twist, ModelSolution,
    SingularPoint, Su2WeightVector, Triple,
};
use crate::torus::{ComplexCoords, DualTorusPoint, Lattice3};

/// `(Γ_τ̄, Γ_w̄)`: the `dτ̄` and `dw̄` components of `Σ M_i dx^i`.
pub fn dbar_components(m: &Triple) -> (CMat, CMat) {
    let tau_bar = &m[0] * c(0.0, 0.5);
    let w_bar = (&m[1] + &m[2] * I) * c(0.5, 0.0);
    (tau_bar, w_bar)
}

/// How the Jordan data of a summand was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JordanRoute {
    /// Exact Gaussian elimination over `ℚ(i)`.
    Exact,
    /// Ranks of powers with a relative singular-value threshold.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summand {
    /// Point of T̂² as coefficients in `[0,1)²` of the dual T² lattice.
    pub alpha: [f64; 2],
    /// Jordan block sizes, descending.
    pub jordan: Vec<usize>,
    pub route: JordanRoute,
}

/// `⊕ F_α ⊗ (ℂ^{r_α}, ∂̄ + N_α dw̄)` recorded as spectrum points with Jordan types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemistableDeg0 {
    pub side: Side,
    pub rank: usize,
    pub summands: Vec<Summand>,
}

/// Points of T̂² closer than this (in coefficient space) are identified.
pub const ALPHA_TOL: f64 = 1e-8;

fn alpha_distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1]].map(|x| x - x.round());
    d[0].hypot(d[1])
}

impl SemistableDeg0 {
    pub fn validate(&self) -> Result<()> {
        let total: usize = self.summands.iter().flat_map(|s| s.jordan.iter()).sum();
        if total != self.rank {
            return Err(NahmError::Consistency(format!("Jordan sizes sum to {total}, rank is {}", self.rank)));
        }
        for (k, a) in self.summands.iter().enumerate() {
            if a.jordan.is_empty() || a.jordan.contains(&0) {
                return Err(NahmError::Consistency(format!("summand at {:?} has empty Jordan data", a.alpha)));
            }
            if self.summands[k + 1..].iter().any(|b| alpha_distance(&a.alpha, &b.alpha) < ALPHA_TOL) {
                return Err(NahmError::Consistency(format!("repeated spectrum point {:?}", a.alpha)));
            }
        }
        Ok(())
    }

    pub fn jordan_at(&self, alpha: &[f64; 2]) -> Vec<usize> {
        self.summands
            .iter()
            .find(|s| alpha_distance(&s.alpha, alpha) < ALPHA_TOL)
            .map(|s| s.jordan.clone())
            .unwrap_or_default()
    }
}

/// Graded piece of one end of the model data at `point`: restrict `Γ_w̄ + N_w̄` of the
/// twisted model to `X₀ = ker Γ_τ̄` and split it by T̂²-point.
///
/// Integer shifts of the `x¹`-covector are gauge, so `X₀` is the sum of joint eigenspaces
/// whose `x¹`-component is an integer.
pub fn graded_from_model(
    ms: &ModelSolution,
    side: Side,
    point: &DualTorusPoint,
    l: &Lattice3,
) -> Result<SemistableDeg0> {
    let cc = ComplexCoords::new(l)?;
    let tw = twist(ms, &point.coeffs, l)?;
    let (_, gw) = dbar_components(tw.gamma());
    let (_, nw) = dbar_components(tw.nn());
    let m = &gw + &nw;
    let scale = triple_norm(tw.gamma()).max(triple_norm(tw.nn())).max(1.0);
    let tol = 1e-8 * scale;

    // (alpha, basis, Γ_w̄ eigenvalue) for each eigenspace in X₀.
    let mut pieces: Vec<([f64; 2], CMat, num_complex::Complex64)> = Vec::new();
    for (mu, basis) in joint_eigenspaces(tw.gamma()) {
        if (mu[0] - mu[0].round()).abs() > tol {
            continue;
        }
        let k = basis.ncols() as f64;
        let lambda = (basis.adjoint() * &gw * &basis).trace() / k;
        let zeta = lambda / c(0.0, PI);
        let a = cc.reduce_t2(&Vector2::new(zeta.re, zeta.im));
        pieces.push(([a[0], a[1]], basis, lambda));
    }

    let mut groups: Vec<([f64; 2], Vec<usize>)> = Vec::new();
    for (k, (a, _, _)) in pieces.iter().enumerate() {
        match groups.iter_mut().find(|(g, _)| alpha_distance(g, a) < ALPHA_TOL.max(tol)) {
            Some((_, idx)) => idx.push(k),
            None => groups.push((*a, vec![k])),
        }
    }

    let thr = 1e-8 * norm(&m).max(1.0);
    let mut summands = Vec::new();
    let mut rank = 0;
    for (alpha, idx) in groups {
        let cols: usize = idx.iter().map(|&k| pieces[k].1.ncols()).sum();
        let mut b = CMat::zeros(m.nrows(), cols);
        let mut shift = CMat::zeros(cols, cols);
        let mut off = 0;
        for &k in &idx {
            let (_, basis, lambda) = &pieces[k];
            let d = basis.ncols();
            b.view_mut((0, off), (m.nrows(), d)).copy_from(basis);
            for i in 0..d {
                shift[(off + i, off + i)] = *lambda;
            }
            off += d;
        }
        let nil = b.adjoint() * &m * &b - shift;
        let (jordan, route) = match QiMatrix::from_dyadic(&nil) {
            Some(q) => (q.nilpotent_jordan_sizes()?, JordanRoute::Exact),
            None => (nilpotent_jordan_sizes(&nil, thr)?, JordanRoute::Numerical),
        };
        rank += cols;
        summands.push(Summand { alpha, jordan, route });
    }
    summands.sort_by(|a, b| a.alpha[0].total_cmp(&b.alpha[0]).then(a.alpha[1].total_cmp(&b.alpha[1])));
    let out = SemistableDeg0 { side, rank, summands };
    out.validate()?;
    Ok(out)
}

/// `H¹` of the Fourier–Mukai transform: a skyscraper `⊕_j O/m^{i_{α,j}}` at each `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FMStalkTable {
    pub stalks: Vec<([f64; 2], Vec<usize>)>,
    /// Ranks of `H⁰` and `H²`; zero for semistable degree-0 input.
    pub h0: usize,
    pub h2: usize,
}

impl FMStalkTable {
    pub fn total_length(&self) -> usize {
        self.stalks.iter().flat_map(|(_, l)| l.iter()).sum()
    }

    pub fn stalk(&self, alpha: &[f64; 2]) -> Vec<usize> {
        self.stalks
            .iter()
            .find(|(a, _)| alpha_distance(a, alpha) < ALPHA_TOL)
            .map(|(_, l)| l.clone())
            .unwrap_or_default()
    }
}

pub fn fm_stalks(v: &SemistableDeg0) -> FMStalkTable {
    FMStalkTable {
        stalks: v.summands.iter().map(|s| (s.alpha, s.jordan.clone())).collect(),
        h0: 0,
        h2: 0,
    }
}

/// `(w₊, w₋)` read from the stalks at `0 ∈ T̂²` of the graded pieces at a point.
pub fn predicted_weights(plus: &SemistableDeg0, minus: &SemistableDeg0) -> (Su2WeightVector, Su2WeightVector) {
    let at0 = |v: &SemistableDeg0| Su2WeightVector::new(fm_stalks(v).stalk(&[0.0, 0.0]));
    (at0(plus), at0(minus))
}

/// Predicted weights at a singular point through the Jordan route, checked against the
/// su(2) weights of the local models.
pub fn predicted_weights_checked(
    plus: &ModelSolution,
    minus: &ModelSolution,
    sp: &SingularPoint,
    l: &Lattice3,
) -> Result<(Su2WeightVector, Su2WeightVector)> {
    let gp = graded_from_model(plus, Side::Plus, &sp.xi, l)?;
    let gm = graded_from_model(minus, Side::Minus, &sp.xi, l)?;
    let (wp, wm) = predicted_weights(&gp, &gm);
    if wp != sp.weights_plus() || wm != sp.weights_minus() {
        return Err(NahmError::Consistency(format!(
            "Jordan route gives ({wp}, {wm}), su(2) route gives ({}, {})",
            sp.weights_plus(),
            sp.weights_minus()
        )));
    }
    Ok((wp, wm))
}

type Qi = Complex<BigRational>;

/// Dense matrix over `ℚ(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QiMatrix {
    n: usize,
    rows: Vec<Vec<Qi>>,
}

/// Largest power of two allowed in denominators when reading floats as exact rationals.
const DYADIC_BITS: i32 = 30;

fn dyadic(x: f64) -> Option<BigRational> {
    let scaled = x * 2f64.powi(DYADIC_BITS);
    if !x.is_finite() || scaled.fract() != 0.0 || scaled.abs() > 2f64.powi(52) {
        return None;
    }
    Some(BigRational::new(BigInt::from(scaled as i64), BigInt::from(1i64) << DYADIC_BITS as usize))
}

impl QiMatrix {
    pub fn from_entries(n: usize, f: impl Fn(usize, usize) -> Qi) -> Self {
        Self { n, rows: (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect() }
    }

    /// Exact image of a float matrix whose entries are all dyadic rationals with small
    /// denominators; `None` otherwise.
    pub fn from_dyadic(m: &CMat) -> Option<Self> {
        let n = m.nrows();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(Qi::new(dyadic(m[(i, j)].re)?, dyadic(m[(i, j)].im)?));
            }
            rows.push(row);
        }
        Some(Self { n, rows })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_entries(n, |i, j| if i == j { Qi::one() } else { Qi::zero() })
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_entries(self.n, |i, j| {
            (0..self.n).fold(Qi::zero(), |acc, k| acc + &self.rows[i][k] * &other.rows[k][j])
        })
    }

    pub fn rank(&self) -> usize {
        let mut a = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.n {
            let Some(p) = (rank..self.n).find(|&r| !a[r][col].is_zero()) else { continue };
            a.swap(rank, p);
            let pivot = a[rank][col].clone();
            for r in rank + 1..self.n {
                if a[r][col].is_zero() {
                    continue;
                }
                let f = &a[r][col] / &pivot;
                for k in col..self.n {
                    let sub = &f * &a[rank][k];
                    a[r][k] = &a[r][k] - sub;
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn nilpotent_jordan_sizes(&self) -> Result<Vec<usize>> {
        let mut ranks = vec![self.n];
        let mut p = Self::identity(self.n);
        for _ in 0..self.n {
            p = p.mul(self);
            let rk = p.rank();
            ranks.push(rk);
            if rk == 0 {
                break;
            }
        }
        if *ranks.last().unwrap() != 0 {
            return Err(NahmError::Consistency("graded piece is not nilpotent after the eigenvalue split".into()));
        }
        Ok(sizes_from_ranks(&ranks))
    }
}

/// Exact rational, serialized as a numerator/denominator pair of decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        Self(BigRational::new(num.into(), den.into()))
    }

    /// Exact value of a finite float.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Self)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    num: String,
    den: String,
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalRepr { num: self.0.numer().to_string(), den: self.0.denom().to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = RationalRepr::deserialize(d)?;
        let num: BigInt = r.num.parse().map_err(D::Error::custom)?;
        let den: BigInt = r.den.parse().map_err(D::Error::custom)?;
        if den.is_zero() {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(Self(BigRational::new(num, den)))
    }
}

/// Weights `a ∈ (−1, 0]` along one divisor with the ranks of the graded pieces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DivisorWeights {
    pub weights: Vec<(Rational, usize)>,
}

/// The numbers the parabolic degree consumes; divisors are `t = +∞` and `t = −∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicLedger {
    pub rank: usize,
    /// `c₁` of the 0-level bundle on a `ℙ¹`-slice.
    pub c1: i64,
    pub divisors: [DivisorWeights; 2],
}

impl ParabolicLedger {
    pub fn validate(&self) -> Result<()> {
        let lo = BigRational::from_integer((-1).into());
        for d in &self.divisors {
            for (a, _) in &d.weights {
                if a.0 <= lo || a.0.is_positive() {
                    return Err(NahmError::ParabolicWeight(a.to_string()));
                }
            }
            let total: usize = d.weights.iter().map(|(_, r)| r).sum();
            if !d.weights.is_empty() && total != self.rank {
                return Err(NahmError::Consistency(format!("graded ranks sum to {total}, rank is {}", self.rank)));
            }
        }
        Ok(())
    }
}

/// `c₁ − Σ_divisors Σ_a a · rank Gr_a`, exactly.
pub fn parabolic_degree(ledger: &ParabolicLedger) -> Result<Rational> {
    ledger.validate()?;
    let mut deg = BigRational::from_integer(ledger.c1.into());
    for d in &ledger.divisors {
        for (a, r) in &d.weights {
            deg -= &a.0 * BigRational::from_integer((*r as i64).into());
        }
    }
    Ok(Rational(deg))
}

fn push_weight(d: &mut DivisorWeights, a: BigRational) {
    let a = Rational(a);
    match d.weights.iter_mut().find(|(w, _)| *w == a) {
        Some((_, r)) => *r += 1,
        None => d.weights.push((a, 1)),
    }
}

/// Nearest multiple of `2^−DYADIC_BITS`; removes eigen-solver noise so that equal traces
/// give exactly equal sums.
fn snap(x: f64) -> Option<BigRational> {
    let scaled = (x * 2f64.powi(DYADIC_BITS)).round();
    (scaled.is_finite() && scaled.abs() <= 2f64.powi(62))
        .then(|| BigRational::new(BigInt::from(scaled as i64), BigInt::from(1i64) << DYADIC_BITS as usize))
}

/// Ledger of the ends of an instanton from the `x¹`-covector components `a` of the joint
/// spectra. An eigenline grows like `|z|^a` at `+∞` and `|z|^{−a}` at `−∞`; the 0-level
/// extension uses the frame shifted by `⌈±a⌉`, so the weights are `±a − ⌈±a⌉`. The
/// components are snapped to a dyadic grid before the exact arithmetic.
pub fn instanton_ledger(plus: &ModelSolution, minus: &ModelSolution, l: &Lattice3) -> Result<ParabolicLedger> {
    ComplexCoords::new(l)?;
    if plus.rank() != minus.rank() {
        return Err(NahmError::Dimension(format!("rank {} vs {}", plus.rank(), minus.rank())));
    }
    let mut c1 = BigRational::zero();
    let mut divisors = [DivisorWeights::default(), DivisorWeights::default()];
    for (k, (ms, sign)) in [(plus, 1.0), (minus, -1.0)].into_iter().enumerate() {
        for (mu, basis) in joint_eigenspaces(ms.gamma()) {
            let a = snap(sign * mu[0]).ok_or_else(|| NahmError::Numerical("non-finite spectrum".into()))?;
            let ceil = a.ceil();
            for _ in 0..basis.ncols() {
                c1 -= &ceil;
                push_weight(&mut divisors[k], &a - &ceil);
            }
        }
        divisors[k].weights.sort();
    }
    let c1 = c1.to_integer().to_i64().ok_or_else(|| NahmError::Numerical("c₁ overflow".into()))?;
    let ledger = ParabolicLedger { rank: plus.rank(), c1, divisors };
    ledger.validate()?;
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;
    use crate::model::fixtures::{diagonal_gamma, model_from_blocks, random_model, spin_rep, su2_sum};
    use crate::model::{singularity_set, su2_weights, validate_model_solution, triple_conj_rect, triple_zeros};
    use nalgebra::{Matrix4, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero_gamma_model(nn: Triple) -> ModelSolution {
        let r = nn[0].nrows();
        validate_model_solution(triple_zeros(r), nn).unwrap()
    }

    #[test]
    fn dbar_constants_match_covector_expansion() {
        // Oracle: write (dτ, dτ̄, dw, dw̄) in the real basis (dt, dx¹, dx², dx³), invert, and
        // read off the dτ̄ and dw̄ coefficients of Σ M_i dx^i for random M_i.
        let z = num_complex::Complex64::new(0.0, 0.0);
        let one = c(1.0, 0.0);
        let basis = Matrix4::from_row_slice(&[
            one, I, z, z, // dτ
            one, -I, z, z, // dτ̄
            z, z, one, I, // dw
            z, z, one, -I, // dw̄
        ]);
        // θ = B dx, so row k of B⁻¹ holds the coefficients of dx^k in (dτ, dτ̄, dw, dw̄).
        let inv = basis.try_inverse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let m: Triple = [0, 1, 2].map(|_| CMat::from_fn(3, 3, |_, _| c(rng.gen(), rng.gen())));
            let comp = |slot: usize| -> CMat {
                (0..3).fold(CMat::zeros(3, 3), |acc, i| acc + &m[i] * inv[(i + 1, slot)])
            };
            let (tb, wb) = dbar_components(&m);
            assert!((comp(1) - tb).norm() < 1e-12);
            assert!((comp(3) - wb).norm() < 1e-12);
        }
    }

    #[test]
    fn spin_half_is_one_jordan_block_at_origin() {
        let ms = zero_gamma_model(spin_rep(1));
        let g = graded_from_model(&ms, Side::Plus, &DualTorusPoint::origin(), &Lattice3::cubic()).unwrap();
        assert_eq!(g.summands.len(), 1);
        assert_eq!(g.summands[0].alpha, [0.0, 0.0]);
        assert_eq!(g.summands[0].jordan, vec![2]);
        assert_eq!(g.summands[0].route, JordanRoute::Exact);
    }

    #[test]
    fn flat_distinct_points_give_size_one_blocks() {
        let raw = [Vector3::new(0.0, 0.1, 0.2), Vector3::new(0.0, 0.3, 0.4), Vector3::new(0.5, 0.3, 0.4)];
        let ms = validate_model_solution(diagonal_gamma(&raw), triple_zeros(3)).unwrap();
        let g = graded_from_model(&ms, Side::Minus, &DualTorusPoint::origin(), &Lattice3::cubic()).unwrap();
        // The third eigenline has x¹-component ½, so it is not in X₀.
        assert_eq!(g.rank, 2);
        assert_eq!(g.summands.iter().map(|s| s.jordan.clone()).collect::<Vec<_>>(), vec![vec![1], vec![1]]);
        assert!((g.summands[0].alpha[0] - 0.1).abs() < 1e-12 && (g.summands[1].alpha[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn point_outside_spectrum_gives_empty_bundle() {
        let ms = model_from_blocks(&[(Vector3::new(0.2, 0.0, 0.0), vec![2])]);
        let g = graded_from_model(&ms, Side::Plus, &DualTorusPoint::origin(), &Lattice3::cubic()).unwrap();
        assert_eq!(g.rank, 0);
        assert!(g.summands.is_empty());
        assert_eq!(fm_stalks(&g).total_length(), 0);
    }

    #[test]
    fn tbar_point_uses_the_pi_i_identification() {
        // A Γ-eigenvalue 2πi ξ gives a Γ_w̄-eigenvalue πi(ξ₂ + iξ₃).
        let xi = Vector3::new(0.0, 0.3, -0.15);
        let g = diagonal_gamma(&[xi]);
        let (_, gw) = dbar_components(&g);
        let expect = c(0.0, PI) * c(xi[1], xi[2]);
        assert!((gw[(0, 0)] - expect).norm() < 1e-14);
        let ms = validate_model_solution(g, triple_zeros(1)).unwrap();
        let v = graded_from_model(&ms, Side::Plus, &DualTorusPoint::origin(), &Lattice3::cubic()).unwrap();
        assert!((v.summands[0].alpha[0] - 0.3).abs() < 1e-12);
        assert!((v.summands[0].alpha[1] - 0.85).abs() < 1e-12);
    }

    #[test]
    fn split_unavailable_is_an_error() {
        let l = Lattice3::from_row_major([[1.0, 0.2, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let ms = zero_gamma_model(spin_rep(1));
        assert!(matches!(
            graded_from_model(&ms, Side::Plus, &DualTorusPoint::origin(), &l),
            Err(NahmError::SplitUnavailable(_))
        ));
    }

    #[test]
    fn fm_stalk_fixtures() {
        let one = SemistableDeg0 {
            side: Side::Plus,
            rank: 1,
            summands: vec![Summand { alpha: [0.0, 0.0], jordan: vec![1], route: JordanRoute::Exact }],
        };
        assert_eq!(fm_stalks(&one).stalk(&[0.0, 0.0]), vec![1]);
        let two = SemistableDeg0 {
            side: Side::Plus,
            rank: 3,
            summands: vec![
                Summand { alpha: [0.25, 0.5], jordan: vec![2], route: JordanRoute::Exact },
                Summand { alpha: [0.5, 0.0], jordan: vec![1], route: JordanRoute::Exact },
            ],
        };
        let t = fm_stalks(&two);
        assert_eq!(t.stalk(&[0.25, 0.5]), vec![2]);
        assert_eq!(t.stalk(&[0.5, 0.0]), vec![1]);
        assert!(t.stalk(&[0.0, 0.0]).is_empty());
        assert_eq!((t.h0, t.h2, t.total_length()), (0, 0, 3));
    }

    #[test]
    fn predicted_weight_fixtures() {
        let l = Lattice3::cubic();
        let o = DualTorusPoint::origin();
        let at = |p: ModelSolution, m: ModelSolution| {
            let gp = graded_from_model(&p, Side::Plus, &o, &l).unwrap();
            let gm = graded_from_model(&m, Side::Minus, &o, &l).unwrap();
            let (a, b) = predicted_weights(&gp, &gm);
            (a.weights, b.weights)
        };
        let spin_half = zero_gamma_model(spin_rep(1));
        let trivial2 = zero_gamma_model(triple_zeros(2));
        let far = model_from_blocks(&[(Vector3::new(0.3, 0.3, 0.3), vec![1, 1])]);
        assert_eq!(at(spin_half.clone(), far), (vec![2], vec![]));
        assert_eq!(at(trivial2.clone(), trivial2), (vec![1, 1], vec![1, 1]));
        let mixed = zero_gamma_model(su2_sum(&[2, 1]));
        assert_eq!(at(mixed, spin_half).0, vec![2, 1]);
    }

    #[test]
    fn exact_jordan_of_rescaled_ladders() {
        // The ladder of an irreducible of dimension d is similar to a single d-block.
        let q = |n: i64| Qi::new(BigRational::from_integer(n.into()), BigRational::zero());
        for dims in [vec![3], vec![4, 2, 1], vec![2, 2]] {
            let n: usize = dims.iter().sum();
            let mut starts = Vec::new();
            let mut s = 0;
            for d in &dims {
                starts.push((s, *d));
                s += d;
            }
            let m = QiMatrix::from_entries(n, |i, j| {
                let inside = starts.iter().any(|&(s, d)| i >= s && j == i + 1 && j < s + d);
                if inside { q(1) } else { q(0) }
            });
            let mut expect = dims.clone();
            expect.sort_unstable_by(|a, b| b.cmp(a));
            assert_eq!(m.nilpotent_jordan_sizes().unwrap(), expect);
        }
        let not_nil = QiMatrix::identity(2);
        assert!(not_nil.nilpotent_jordan_sizes().is_err());
    }

    #[test]
    fn jordan_route_matches_su2_route_on_random_models() {
        let l = Lattice3::cubic();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for case in 0..100 {
            let r = 1 + case % 6;
            let plus = random_model(r, &mut rng);
            let minus = random_model(r, &mut rng);
            let sing = singularity_set(&plus, &minus, &l).unwrap();
            for sp in &sing.points {
                let (wp, wm) = predicted_weights_checked(&plus, &minus, sp, &l).unwrap();
                if let Some(lm) = &sp.plus {
                    assert_eq!(wp, su2_weights(&triple_conj_rect(plus.nn(), &lm.basis)).unwrap());
                }
                assert_eq!(wm, sp.weights_minus());
                let g = graded_from_model(&plus, Side::Plus, &sp.xi, &l).unwrap();
                assert_eq!(fm_stalks(&g).total_length(), g.rank);
            }
        }
    }

    #[test]
    fn predicted_weights_invariant_under_conjugation() {
        let l = Lattice3::cubic();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = model_from_blocks(&[(Vector3::zeros(), vec![3, 1]), (Vector3::new(0.0, 0.2, 0.1), vec![2])]);
        let o = DualTorusPoint::origin();
        let g0 = graded_from_model(&base, Side::Plus, &o, &l).unwrap();
        for _ in 0..5 {
            let u = random_unitary(base.rank(), &mut rng);
            let g = graded_from_model(&base.conjugate(&u), Side::Plus, &o, &l).unwrap();
            assert_eq!(g.summands.len(), g0.summands.len());
            for (a, b) in g.summands.iter().zip(&g0.summands) {
                assert_eq!(a.jordan, b.jordan);
                assert!(alpha_distance(&a.alpha, &b.alpha) < 1e-8);
            }
        }
    }

    #[test]
    fn parabolic_degree_fixtures() {
        let empty = ParabolicLedger { rank: 2, c1: 0, divisors: Default::default() };
        assert!(parabolic_degree(&empty).unwrap().is_zero());
        let half = ParabolicLedger {
            rank: 2,
            c1: 0,
            divisors: [DivisorWeights { weights: vec![(Rational::new(-1, 2), 2)] }, DivisorWeights::default()],
        };
        assert_eq!(parabolic_degree(&half).unwrap(), Rational::new(1, 1));
        let bad = ParabolicLedger {
            rank: 1,
            c1: 0,
            divisors: [DivisorWeights { weights: vec![(Rational::new(1, 3), 1)] }, DivisorWeights::default()],
        };
        assert!(matches!(parabolic_degree(&bad), Err(NahmError::ParabolicWeight(_))));
        let minus_one = ParabolicLedger {
            rank: 1,
            c1: 0,
            divisors: [DivisorWeights { weights: vec![(Rational::new(-1, 1), 1)] }, DivisorWeights::default()],
        };
        assert!(parabolic_degree(&minus_one).is_err());
    }

    #[test]
    fn instanton_ledgers_have_degree_zero() {
        let l = Lattice3::cubic();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for r in 1..=6 {
            // Flat instantons have Γ₊ = Γ₋.
            let ms = random_model(r, &mut rng);
            let ledger = instanton_ledger(&ms, &ms, &l).unwrap();
            assert!(parabolic_degree(&ledger).unwrap().is_zero(), "{ledger:?}");
        }
        // Same trace, different spectra.
        let p = model_from_blocks(&[(Vector3::new(0.25, 0.0, 0.0), vec![1]), (Vector3::new(-0.75, 0.1, 0.0), vec![1])]);
        let m = model_from_blocks(&[(Vector3::new(-0.5, 0.0, 0.0), vec![1]), (Vector3::new(0.0, 0.2, 0.0), vec![1])]);
        let ledger = instanton_ledger(&p, &m, &l).unwrap();
        assert!(parabolic_degree(&ledger).unwrap().is_zero());
        // Different traces break it.
        let m2 = model_from_blocks(&[(Vector3::new(-0.375, 0.0, 0.0), vec![2])]);
        assert!(!parabolic_degree(&instanton_ledger(&p, &m2, &l).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn rational_round_trips_through_json() {
        let r = Rational::new(-7, 12);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"num":"-7","den":"12"}"#);
        assert_eq!(serde_json::from_str::<Rational>(&s).unwrap(), r);
    }
}
