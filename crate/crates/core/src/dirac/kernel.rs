use super::operator::{Chirality, ModeOperator};
use super::shooting::{gram, inner, shoot, Grid, KernelFunction, Measure, ShootingOptions};
use crate::error::{NahmError, Result};
use crate::linalg::{op_norm, CMat};
use crate::torus::Mode;

#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    /// Target `h·‖D‖` per step.
    pub step_norm: f64,
    pub min_intervals: usize,
    pub max_intervals: usize,
    pub shooting: ShootingOptions,
    pub gap_threshold: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            step_norm: 0.1,
            min_intervals: 64,
            max_intervals: 400_000,
            shooting: ShootingOptions::default(),
            gap_threshold: super::operator::DEFAULT_GAP_THRESHOLD,
        }
    }
}

impl KernelOptions {
    /// Even interval count for a span of `length` with operator norm up to `dnorm`.
    pub fn intervals_for(&self, length: f64, dnorm: f64) -> Result<usize> {
        let want = (length * dnorm / self.step_norm).ceil() as usize;
        let n = want.max(self.min_intervals);
        let n = n + n % 2;
        if n > self.max_intervals {
            return Err(NahmError::Numerical(format!(
                "{n} shooting intervals needed, limit is {}",
                self.max_intervals
            )));
        }
        Ok(n)
    }
}

/// L²-orthonormal kernel basis of one Fourier mode.
#[derive(Debug, Clone)]
pub struct ModeKernel {
    pub n: Mode,
    pub functions: Vec<KernelFunction>,
    pub grid: Grid,
    pub measure: Measure,
    pub sines: Vec<f64>,
    pub uncertain: bool,
    pub gram_error: f64,
    pub gap: f64,
}

impl ModeKernel {
    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn gram(&self) -> CMat {
        gram(&self.functions, &self.grid, self.measure, false)
    }

    /// `⟨f_a, t f_b⟩`.
    pub fn moment(&self) -> CMat {
        gram(&self.functions, &self.grid, self.measure, true)
    }

    pub fn positions(&self) -> Vec<f64> {
        self.grid.points().iter().map(|&x| self.measure.position(x)).collect()
    }

    pub fn inner_with(&self, other: &ModeKernel, a: usize, b: usize) -> num_complex::Complex64 {
        inner(&self.functions[a], &other.functions[b], &self.grid, self.measure, false)
    }
}

pub fn mode_kernel(op: &ModeOperator, chirality: Chirality, opts: &KernelOptions) -> Result<ModeKernel> {
    let curve = op.curve();
    let (t0, t1) = (curve.t_min(), curve.t_max());
    let dnorm = curve
        .grid
        .iter()
        .step_by((curve.grid.len() / 64).max(1))
        .chain([t0, t1].iter())
        .map(|&t| op_norm(&op.eval(t)))
        .fold(0.0, f64::max);
    let grid = Grid::new(t0, t1, opts.intervals_for(t1 - t0, dnorm)?)?;
    let s = chirality.sign();
    let k = |t: f64| op.eval(t) * crate::linalg::c(s, 0.0);
    let res = shoot(&k, &grid, Measure::Linear, &opts.shooting)?;
    Ok(ModeKernel {
        n: op.n,
        functions: res.functions,
        grid,
        measure: Measure::Linear,
        sines: res.sines,
        uncertain: res.uncertain,
        gram_error: res.gram_error,
        gap: op.gap,
    })
}
