//! Adaptive Dormand–Prince 5(4) integration of the Nahm equation.

use crate::error::{NahmError, Result};
use crate::linalg::c;
use crate::model::{triple_norm, Triple};

use super::{nahm_rhs, reproject, NahmCurve};

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub max_steps: usize,
    /// Steps smaller than this fraction of `|t1 − t0|` count as blow-up.
    pub min_step_fraction: f64,
    /// Data larger than this is treated as having reached a pole.
    pub max_norm: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { max_steps: 1_000_000, min_step_fraction: 1e-12, max_norm: 1e12 }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn comb(y: &Triple, h: f64, terms: &[(f64, &Triple)]) -> Triple {
    [0, 1, 2].map(|i| {
        let mut out = y[i].clone();
        for (w, k) in terms {
            if *w != 0.0 {
                out += &k[i] * c(h * w, 0.0);
            }
        }
        out
    })
}

/// Integrate from `a0` at `t0` to `t1` with local error per step at most `tol`.
/// Every accepted step is stored as a sample.
pub fn integrate(a0: &Triple, t0: f64, t1: f64, tol: f64, opts: &IntegrateOptions) -> Result<NahmCurve> {
    if t0 == t1 || !(tol > 0.0) {
        return Err(NahmError::Precondition("need t0 ≠ t1 and tol > 0".into()));
    }
    let span = (t1 - t0).abs();
    let dir = (t1 - t0).signum();
    let h_min = opts.min_step_fraction * span;
    let mut t = t0;
    let mut y = reproject(a0);
    let mut h = dir * (span / 100.0).min(0.1 / (1.0 + triple_norm(&y)));
    let mut grid = vec![t];
    let mut samples = vec![y.clone()];
    let mut k1 = nahm_rhs(&y);
    for _ in 0..opts.max_steps {
        if (t1 - t) * dir <= 0.0 {
            break;
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let k2 = nahm_rhs(&comb(&y, h, &[(A21, &k1)]));
        let k3 = nahm_rhs(&comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = nahm_rhs(&comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = nahm_rhs(&comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = nahm_rhs(&comb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = comb(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = nahm_rhs(&y_new);
        let err_t = comb(
            &[0, 1, 2].map(|i| y[i].clone() * c(0.0, 0.0)),
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let err = triple_norm(&err_t);
        let finite = err.is_finite() && triple_norm(&y_new).is_finite();
        if finite && err <= tol {
            t += h;
            y = reproject(&y_new);
            k1 = nahm_rhs(&y);
            grid.push(t);
            samples.push(y.clone());
            if triple_norm(&y) > opts.max_norm {
                return Err(NahmError::BlowUp { t_last: t });
            }
        }
        let factor = if finite && err > 0.0 {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
        } else if finite {
            5.0
        } else {
            0.2
        };
        h *= factor;
        if h.abs() < h_min {
            return Err(NahmError::BlowUp { t_last: t });
        }
    }
    if (t1 - t) * dir > 0.0 {
        return Err(NahmError::Numerical(format!("step budget exhausted at t = {t}")));
    }
    if dir < 0.0 {
        grid.reverse();
        samples.reverse();
    }
    NahmCurve::new(grid, samples, None)
}
