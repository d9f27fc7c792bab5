//! Weight sum from the winding of a scattering determinant.
//!
//! Paths run from the bottom of a drum around the point (`p − a e₁`), out radially to the
//! rim at angle `θ` in the `(ξ₂, ξ₃)`-plane, up along `ξ₁` with `exp(h(−iΦ̂))` factors, and
//! back in to the top (`p + a e₁`). The phase of `det Ψ(θ)` winds once per unit of flux
//! through the drum, i.e. `Σ k_i` times.

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::frame::{connection_link, higgs_field, KernelFrame};
use crate::error::{NahmError, Result};
use crate::linalg::{c, det, expm, identity, CMat};

/// Relates the winding direction of `det Ψ` to the sign of `Σk`; fixed once on the
/// spin-½ plus end.
pub const WINDING_SIGN: i64 = -1;

/// Determinants smaller than this make the winding untrustworthy.
pub const DET_FLOOR: f64 = 1e-8;

pub fn winding_number(values: &[Complex64]) -> Result<i64> {
    if values.is_empty() {
        return Ok(0);
    }
    if let Some(v) = values.iter().find(|v| v.norm() < DET_FLOOR) {
        return Err(NahmError::Numerical(format!(
            "|det| = {:e} on the circle: circle too small or too large",
            v.norm()
        )));
    }
    let mut total = 0.0;
    for k in 0..values.len() {
        let step = (values[(k + 1) % values.len()] / values[k]).arg();
        if step.abs() > PI / 2.0 {
            return Err(NahmError::Numerical("phase under-resolved on the circle".into()));
        }
        total += step;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

#[derive(Debug, Clone, Copy)]
pub struct Drum {
    pub half_height: f64,
    pub radius: f64,
    pub step: f64,
    pub angles: usize,
}

impl Drum {
    pub fn around(scale: f64) -> Self {
        Self { half_height: scale, radius: scale, step: scale / 5.0, angles: 24 }
    }

    fn counts(&self) -> (usize, usize) {
        let nr = (self.radius / self.step).ceil().max(1.0) as usize;
        let nv = (2.0 * self.half_height / self.step).ceil().max(1.0) as usize;
        (nr, nv)
    }

    /// Offsets along the path at angle `θ`, with a flag marking vertical steps.
    fn path(&self, theta: f64) -> Vec<(Vector3<f64>, bool)> {
        let (nr, nv) = self.counts();
        let (a, rho) = (self.half_height, self.radius);
        let dir = Vector3::new(0.0, theta.cos(), theta.sin());
        let mut pts = Vec::new();
        for k in 0..=nr {
            pts.push((Vector3::new(-a, 0.0, 0.0) + dir * (rho * k as f64 / nr as f64), false));
        }
        for k in 1..=nv {
            pts.push((Vector3::new(-a + 2.0 * a * k as f64 / nv as f64, 0.0, 0.0) + dir * rho, true));
        }
        for k in 1..=nr {
            pts.push((Vector3::new(a, 0.0, 0.0) + dir * (rho * (1.0 - k as f64 / nr as f64)), false));
        }
        pts
    }

    /// Smallest and largest distance from the centre along any path.
    pub fn distance_range(&self) -> (f64, f64) {
        (self.half_height.min(self.radius), self.half_height.hypot(self.radius))
    }
}

/// `det Ψ(θ_m)` for `θ_m = 2πm/angles`, with frames supplied by `frame_at(offset)`.
pub fn scattering_determinants<F>(drum: &Drum, frame_at: F) -> Result<Vec<Complex64>>
where
    F: Fn(&Vector3<f64>) -> Result<KernelFrame> + Sync,
{
    let bottom = frame_at(&Vector3::new(-drum.half_height, 0.0, 0.0))?;
    let top = frame_at(&Vector3::new(drum.half_height, 0.0, 0.0))?;
    (0..drum.angles)
        .into_par_iter()
        .map(|m| {
            let theta = 2.0 * PI * m as f64 / drum.angles as f64;
            let path = drum.path(theta);
            let last = path.len() - 1;
            let mut frames: Vec<KernelFrame> = Vec::with_capacity(path.len());
            for (k, (x, _)) in path.iter().enumerate() {
                frames.push(if k == 0 {
                    bottom.clone()
                } else if k == last {
                    top.clone()
                } else {
                    frame_at(x)?
                });
            }
            let r = bottom.rank();
            let mut psi: CMat = identity(r);
            for k in 0..last {
                if path[k + 1].1 {
                    let h = (path[k + 1].0 - path[k].0).norm();
                    let phi = higgs_field(&frames[k])?.phi;
                    psi *= expm(&(phi * c(0.0, -h)));
                }
                psi *= connection_link(&frames[k], &frames[k + 1], [0, 0, 0])?.u;
            }
            Ok(det(&psi))
        })
        .collect()
}

/// `Σk` at the point from the determinant winding.
pub fn det_winding_weight_sum<F>(drum: &Drum, frame_at: F) -> Result<i64>
where
    F: Fn(&Vector3<f64>) -> Result<KernelFrame> + Sync,
{
    let dets = scattering_determinants(drum, frame_at)?;
    Ok(WINDING_SIGN * winding_number(&dets)?)
}
