//! Small dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{NahmError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Skew-Hermitian part `(m - m†)/2`.
pub fn skew_part(m: &CMat) -> CMat {
    (m - m.adjoint()) * c(0.5, 0.0)
}

/// Frobenius norm. On skew-Hermitian matrices this is `sqrt(-tr(M^2))`.
pub fn norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn skew_residual(m: &CMat) -> f64 {
    norm(&(m + m.adjoint()))
}

pub fn hermitian_residual(m: &CMat) -> f64 {
    norm(&(m - m.adjoint()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn herm_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let sym = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Columns of `v` selected by `keep`.
pub fn select_columns(v: &CMat, keep: impl IntoIterator<Item = usize>) -> CMat {
    let cols: Vec<usize> = keep.into_iter().collect();
    let mut out = CMat::zeros(v.nrows(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        out.set_column(dst, &v.column(src));
    }
    out
}

/// Thin QR: `m = q r` with `q` having orthonormal columns and `r` upper triangular.
pub fn thin_qr(m: &CMat) -> (CMat, CMat) {
    if m.ncols() == 0 {
        return (CMat::zeros(m.nrows(), 0), CMat::zeros(0, 0));
    }
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

pub fn orthonormalize(m: &CMat) -> CMat {
    thin_qr(m).0
}

/// Unitary factor of the polar decomposition together with the smallest singular value.
pub fn polar_unitary(g: &CMat) -> (CMat, f64) {
    if g.is_empty() {
        return (CMat::zeros(g.nrows(), g.ncols()), f64::INFINITY);
    }
    // U = G (G†G)^{-1/2}; the complex SVD loses covariance on nearly degenerate spectra.
    let (vals, v) = herm_eigen(&(g.adjoint() * g));
    let smin = vals[0].max(0.0).sqrt();
    if smin == 0.0 {
        let svd = g.clone().svd(true, true);
        return (svd.u.expect("svd u") * svd.v_t.expect("svd v_t"), 0.0);
    }
    let inv_sqrt = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|l| c(1.0 / l.sqrt(), 0.0))));
    (g * &v * inv_sqrt * v.adjoint(), smin)
}

/// Numerical rank with an absolute threshold on singular values.
pub fn rank(m: &CMat, threshold: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > threshold)
        .count()
}

/// Sines of the principal angles between the column spans of two orthonormal frames,
/// sorted ascending, with the matching directions expressed in the second frame.
pub fn principal_sines(qa: &CMat, qb: &CMat) -> (Vec<f64>, CMat) {
    let k = qb.ncols();
    if k == 0 || qa.ncols() == 0 {
        return (vec![1.0; k], identity(k));
    }
    // Residual of qb after projection onto span(qa); its singular values are the sines.
    let resid = qb - qa * (qa.adjoint() * qb);
    let gram = resid.adjoint() * &resid;
    let (vals, vecs) = herm_eigen(&gram);
    let sines = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    (sines, vecs)
}

/// Inverse square root of a Hermitian positive-definite matrix.
pub fn inv_sqrt_hpd(g: &CMat) -> Result<CMat> {
    let (vals, vecs) = herm_eigen(g);
    if vals.iter().any(|&v| v <= 1e-300) {
        return Err(NahmError::Numerical(format!(
            "Gram matrix not positive definite (min eigenvalue {:e})",
            vals.first().cloned().unwrap_or(0.0)
        )));
    }
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|v| c(1.0 / v.sqrt(), 0.0)),
    ));
    Ok(&vecs * d * vecs.adjoint())
}

/// Principal logarithm of a unitary matrix (skew-Hermitian result).
pub fn unitary_log(u: &CMat) -> CMat {
    let n = u.nrows();
    if n == 0 {
        return zeros(0);
    }
    let (q, t) = nalgebra::linalg::Schur::new(u.clone()).unpack();
    let d = CMat::from_diagonal(&CVec::from_iterator(
        n,
        (0..n).map(|k| c(0.0, t[(k, k)].arg())),
    ));
    let l = &q * d * q.adjoint();
    skew_part(&l)
}

/// Eigenvalues of a general complex matrix via complex Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let t = nalgebra::linalg::Schur::new(m.clone()).unpack().1;
    (0..n).map(|k| t[(k, k)]).collect()
}

pub fn det(m: &CMat) -> Complex64 {
    if m.is_empty() {
        return c(1.0, 0.0);
    }
    m.clone().determinant()
}

pub fn expm(m: &CMat) -> CMat {
    if m.is_empty() {
        return m.clone();
    }
    m.clone().exp()
}

/// Random Haar-like unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: rand::Rng>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| c(gaussian(rng), gaussian(rng)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMat::from_diagonal(&CVec::from_iterator(
        n,
        (0..n).map(|k| {
            let d = r[(k, k)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            }
        }),
    ));
    q * phases
}

/// Random skew-Hermitian matrix with Gaussian entries of the given scale.
pub fn random_skew<R: rand::Rng>(n: usize, scale: f64, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| c(gaussian(rng), gaussian(rng)) * scale);
    skew_part(&g)
}

pub fn gaussian<R: rand::Rng>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Composite Simpson weights on a uniform grid with an odd number of points.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number of points >= 3");
    (0..n)
        .map(|k| {
            let w = if k == 0 || k == n - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Least-squares line fit `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Number of real coordinates of an `r×r` skew-Hermitian matrix.
pub fn skew_dim(r: usize) -> usize {
    r * r
}

/// Isometric real coordinates of a skew-Hermitian matrix: `Im` of the diagonal, then
/// `√2·Re` and `√2·Im` of each strictly upper entry.
pub fn skew_to_real(m: &CMat, out: &mut [f64]) {
    let r = m.nrows();
    let s2 = std::f64::consts::SQRT_2;
    let mut k = 0;
    for a in 0..r {
        out[k] = m[(a, a)].im;
        k += 1;
    }
    for a in 0..r {
        for b in a + 1..r {
            out[k] = s2 * m[(a, b)].re;
            out[k + 1] = s2 * m[(a, b)].im;
            k += 2;
        }
    }
}

pub fn real_to_skew(x: &[f64], r: usize) -> CMat {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMat::zeros(r, r);
    let mut k = 0;
    for a in 0..r {
        m[(a, a)] = c(0.0, x[k]);
        k += 1;
    }
    for a in 0..r {
        for b in a + 1..r {
            let z = c(x[k] * s2, x[k + 1] * s2);
            m[(a, b)] = z;
            m[(b, a)] = -z.conj();
            k += 2;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_log_inverts_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_skew(4, 0.3, &mut rng);
        let u = expm(&x);
        let l = unitary_log(&u);
        assert!(norm(&(l - x)) < 1e-10);
    }

    #[test]
    fn polar_of_unitary_is_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(3, &mut rng);
        let (p, smin) = polar_unitary(&u);
        assert!(norm(&(p - &u)) < 1e-12);
        assert!((smin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn principal_sines_detect_shared_direction() {
        let e = identity(3);
        let qa = select_columns(&e, [0, 1]);
        let qb = orthonormalize(&CMat::from_columns(&[
            e.column(1).into_owned(),
            (e.column(0) + e.column(2)).into_owned(),
        ]));
        let (s, _) = principal_sines(&qa, &qb);
        assert!(s[0] < 1e-14);
        assert!((s[1] - (0.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn skew_coordinates_are_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_skew(4, 1.0, &mut rng);
        let mut x = vec![0.0; skew_dim(4)];
        skew_to_real(&m, &mut x);
        let n2: f64 = x.iter().map(|v| v * v).sum();
        assert!((n2.sqrt() - norm(&m)).abs() < 1e-13);
        assert!(norm(&(real_to_skew(&x, 4) - m)) < 1e-14);
    }

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let n = 11;
        let h = 0.1;
        let w = simpson_weights(n, h);
        let integral: f64 = (0..n).map(|k| w[k] * (k as f64 * h).powi(3)).sum();
        assert!((integral - 0.25).abs() < 1e-14);
    }
}
