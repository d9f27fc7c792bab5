use serde::{Deserialize, Serialize};

use super::kernel::ModeKernel;
use crate::linalg::linear_fit;

/// `F(t) = Σ_a |f_a(t)|²` on the shooting grid, with the monotonicity radius `K` and the
/// exponential decay rate `κ` fitted beyond it.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SliceEnergyProfile {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub k: Option<f64>,
    pub kappa: Option<f64>,
}

/// Fraction of the peak below which the tail counts as entered.
const TAIL_START: f64 = 1e-2;
/// Fraction of the peak below which values are left out of the rate fit.
const TAIL_FLOOR: f64 = 1e-10;

impl SliceEnergyProfile {
    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    fn peak(&self) -> (usize, f64) {
        self.f
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (k, v)| if v > a.1 { (k, v) } else { a })
    }

    /// `F` strictly decreasing in `|t|` wherever `|t| > K` (down to the fit floor).
    pub fn monotone_beyond_k(&self) -> bool {
        let Some(k) = self.k else { return self.is_empty() };
        let (_, fmax) = self.peak();
        let floor = TAIL_FLOOR * fmax;
        self.t.windows(2).zip(self.f.windows(2)).all(|(t, f)| {
            if f[0] < floor || f[1] < floor {
                return true;
            }
            if t[0] >= k && t[0] > 0.0 {
                f[1] < f[0]
            } else if t[1] <= -k && t[1] < 0.0 {
                f[1] > f[0]
            } else {
                true
            }
        })
    }
}

pub fn slice_energy(kernel: &ModeKernel) -> SliceEnergyProfile {
    if kernel.dim() == 0 {
        return SliceEnergyProfile::default();
    }
    let mut t = kernel.positions();
    let mut f = vec![0.0; t.len()];
    for g in &kernel.functions {
        for (acc, d) in f.iter_mut().zip(g.density()) {
            *acc += d;
        }
    }
    if t.len() > 1 && t[0] > t[t.len() - 1] {
        // Half-line kernels on the minus side run towards −∞.
        t.reverse();
        f.reverse();
    }
    profile_from_samples(t, f)
}

/// Fit `K` and `κ` to sampled `(t, F)` with `t` increasing.
pub fn profile_from_samples(t: Vec<f64>, f: Vec<f64>) -> SliceEnergyProfile {
    let mut p = SliceEnergyProfile { t, f, k: None, kappa: None };
    if p.f.is_empty() {
        return p;
    }
    let (ipk, fmax) = p.peak();
    let n = p.t.len();
    let mut k_out: Option<f64> = None;
    let mut kappa: Option<f64> = None;
    // Outward sides: towards +∞ (t > 0) and towards −∞ (t < 0).
    let sides: [Vec<usize>; 2] = [
        (ipk..n).filter(|&i| p.t[i] > 0.0).collect(),
        (0..=ipk).rev().filter(|&i| p.t[i] < 0.0).collect(),
    ];
    for idx in sides.iter() {
        let Some(&start) = idx.iter().find(|&&i| p.f[i] <= TAIL_START * fmax) else { continue };
        let kk = p.t[start].abs();
        k_out = Some(k_out.map_or(kk, |v: f64| v.max(kk)));
        let (xs, ys): (Vec<f64>, Vec<f64>) = idx
            .iter()
            .filter(|&&i| {
                p.t[i].abs() >= kk && p.f[i] <= TAIL_START * fmax && p.f[i] >= TAIL_FLOOR * fmax
            })
            .map(|&i| (p.t[i].abs(), -p.f[i].ln()))
            .unzip();
        if xs.len() >= 4 {
            let (_, slope) = linear_fit(&xs, &ys);
            kappa = Some(kappa.map_or(slope, |v: f64| v.min(slope)));
        }
    }
    p.k = k_out;
    p.kappa = kappa;
    p
}
