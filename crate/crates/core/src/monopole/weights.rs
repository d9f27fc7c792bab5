//! Dirac-type weights from the `k/(2R)` growth of `−iΦ̂` along rays.

use serde::{Deserialize, Serialize};

use crate::linalg::linear_fit;
use crate::model::Su2WeightVector;
use crate::torus::DualTorusPoint;

/// Fitted values further than this from an integer are flagged.
pub const INTEGER_TOL: f64 = 0.1;
/// Largest allowed spread of a fitted weight across rays.
pub const ISOTROPY_TOL: f64 = 0.1;

/// `−iΦ̂` eigenvalues (ascending) sampled along one ray at the given distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RaySamples {
    pub direction: [f64; 3],
    pub radii: Vec<f64>,
    pub eigenvalues: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightReport {
    pub point: DualTorusPoint,
    /// Rounded weights, ascending.
    pub fitted: Vec<i64>,
    /// Ray-averaged fitted slopes before rounding.
    pub raw: Vec<f64>,
    /// Fitted offsets `c` (ray-averaged).
    pub offsets: Vec<f64>,
    /// Largest least-squares residual over all fits.
    pub fit_residual: f64,
    pub isotropy_spread: f64,
    pub predicted_plus: Su2WeightVector,
    pub predicted_minus: Su2WeightVector,
    pub flags: Vec<String>,
    /// Weight sum from the determinant winding, when computed.
    pub winding: Option<i64>,
}

impl WeightReport {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    /// Positive fitted weights, descending.
    pub fn k_plus(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.fitted.iter().cloned().filter(|&k| k > 0).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    /// Negatives of the negative fitted weights, descending.
    pub fn k_minus_abs(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.fitted.iter().cloned().filter(|&k| k < 0).map(|k| -k).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    /// `k₊ = w₊` and `k₋ = −w₋` as multisets, and the winding sum (if any) equals `Σk`.
    pub fn matches_prediction(&self) -> bool {
        let wp: Vec<i64> = self.predicted_plus.weights.iter().map(|&w| w as i64).collect();
        let wm: Vec<i64> = self.predicted_minus.weights.iter().map(|&w| w as i64).collect();
        let sum: i64 = self.fitted.iter().sum();
        !self.flagged()
            && self.k_plus() == wp
            && self.k_minus_abs() == wm
            && self.winding.map_or(true, |w| w == sum)
    }
}

pub fn fit_singularity_weights(
    point: DualTorusPoint,
    rays: &[RaySamples],
    predicted_plus: Su2WeightVector,
    predicted_minus: Su2WeightVector,
) -> WeightReport {
    let mut flags = Vec::new();
    if rays.len() < 3 {
        flags.push(format!("{} rays, need at least 3", rays.len()));
    }
    let rank = rays.first().and_then(|r| r.eigenvalues.first()).map_or(0, |e| e.len());
    let mut per_ray: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut fit_residual = 0.0f64;
    for ray in rays {
        if ray.radii.len() < 4 {
            flags.push(format!("ray {:?} has {} radii, need at least 4", ray.direction, ray.radii.len()));
        }
        if ray.eigenvalues.iter().any(|e| e.len() != rank) {
            flags.push(format!("rank changes along ray {:?}", ray.direction));
            continue;
        }
        let x: Vec<f64> = ray.radii.iter().map(|r| 1.0 / (2.0 * r)).collect();
        let mut fits = Vec::with_capacity(rank);
        for e in 0..rank {
            let y: Vec<f64> = ray.eigenvalues.iter().map(|v| v[e]).collect();
            let (c0, k) = linear_fit(&x, &y);
            let res = x
                .iter()
                .zip(&y)
                .map(|(xi, yi)| (yi - (c0 + k * xi)).abs())
                .fold(0.0, f64::max);
            fit_residual = fit_residual.max(res);
            fits.push((k, c0));
        }
        per_ray.push(fits);
    }
    let mut raw = vec![0.0; rank];
    let mut offsets = vec![0.0; rank];
    let mut spread = 0.0f64;
    if !per_ray.is_empty() {
        for e in 0..rank {
            let ks: Vec<f64> = per_ray.iter().map(|f| f[e].0).collect();
            let lo = ks.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            spread = spread.max(hi - lo);
            raw[e] = ks.iter().sum::<f64>() / ks.len() as f64;
            offsets[e] = per_ray.iter().map(|f| f[e].1).sum::<f64>() / ks.len() as f64;
        }
    }
    if spread >= ISOTROPY_TOL {
        flags.push(format!("anisotropic fit (spread {spread:.3})"));
    }
    let fitted: Vec<i64> = raw.iter().map(|k| k.round() as i64).collect();
    for (k, kr) in raw.iter().zip(&fitted) {
        if (k - *kr as f64).abs() >= INTEGER_TOL {
            flags.push(format!("non-integer weight {k:.4}"));
        }
        if *kr == 0 {
            flags.push("zero weight".into());
        }
    }
    WeightReport {
        point,
        fitted,
        raw,
        offsets,
        fit_residual,
        isotropy_spread: spread,
        predicted_plus,
        predicted_minus,
        flags,
        winding: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(ks: &[f64], c: f64, radii: &[f64], dirs: usize) -> Vec<RaySamples> {
        (0..dirs)
            .map(|d| RaySamples {
                direction: [d as f64, 1.0, 0.0],
                radii: radii.to_vec(),
                eigenvalues: radii
                    .iter()
                    .map(|r| {
                        let mut v: Vec<f64> = ks.iter().map(|k| k / (2.0 * r) + c).collect();
                        v.sort_by(f64::total_cmp);
                        v
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn exact_unit_weight() {
        let rays = synthetic(&[1.0], 0.0, &[0.04, 0.02, 0.01, 0.005], 3);
        let rep = fit_singularity_weights(
            DualTorusPoint::origin(),
            &rays,
            Su2WeightVector::new(vec![1]),
            Su2WeightVector::default(),
        );
        assert_eq!(rep.fitted, vec![1]);
        assert!(rep.offsets[0].abs() < 1e-12);
        assert!(rep.matches_prediction());
    }

    #[test]
    fn mixed_signs_split_into_sides() {
        let rays = synthetic(&[2.0, 1.0, -1.0, -1.0, -1.0], 0.3, &[0.1, 0.05, 0.025, 0.0125], 3);
        let rep = fit_singularity_weights(
            DualTorusPoint::origin(),
            &rays,
            Su2WeightVector::new(vec![2, 1]),
            Su2WeightVector::new(vec![1, 1, 1]),
        );
        assert_eq!(rep.k_plus(), vec![2, 1]);
        assert_eq!(rep.k_minus_abs(), vec![1, 1, 1]);
        assert!(rep.matches_prediction());
    }

    #[test]
    fn half_integer_is_flagged_not_rounded_silently() {
        let rays = synthetic(&[1.5], 0.0, &[0.04, 0.02, 0.01, 0.005], 3);
        let rep = fit_singularity_weights(
            DualTorusPoint::origin(),
            &rays,
            Su2WeightVector::new(vec![2]),
            Su2WeightVector::default(),
        );
        assert!(rep.flagged());
        assert!(!rep.matches_prediction());
    }

    #[test]
    fn too_few_rays_flagged() {
        let rays = synthetic(&[1.0], 0.0, &[0.04, 0.02, 0.01, 0.005], 2);
        let rep = fit_singularity_weights(DualTorusPoint::origin(), &rays, Su2WeightVector::new(vec![1]), Default::default());
        assert!(rep.flagged());
    }
}
