//! Pipeline configuration: lattice, model ends, solver, transform and weight parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{NahmError, Result};
use crate::flow::HeteroclinicParams;
use crate::linalg::{c, identity, CMat};
use crate::model::fixtures::su2_sum;
use crate::model::{block_diag, validate_model_solution, ModelSolution, Triple};
use crate::torus::{dual_lattice, Lattice3};

/// A matrix as rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMat> {
    let r = m.len();
    if m.iter().any(|row| row.len() != r) {
        return Err(NahmError::Config("matrices must be square".into()));
    }
    Ok(CMat::from_fn(r, r, |i, j| c(m[i][j][0], m[i][j][1])))
}

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// One joint eigenspace: its point of T̂³ (dual-lattice coefficients) and su(2) summands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub xi: [f64; 3],
    pub su2: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Matrices { gamma: [MatrixJson; 3], nn: [MatrixJson; 3] },
    Blocks { blocks: Vec<BlockSpec> },
}

impl ModelSpec {
    pub fn build(&self, l: &Lattice3) -> Result<ModelSolution> {
        let (gamma, nn): (Triple, Triple) = match self {
            Self::Matrices { gamma, nn } => {
                let g = [matrix_from_json(&gamma[0])?, matrix_from_json(&gamma[1])?, matrix_from_json(&gamma[2])?];
                let n = [matrix_from_json(&nn[0])?, matrix_from_json(&nn[1])?, matrix_from_json(&nn[2])?];
                (g, n)
            }
            Self::Blocks { blocks } => {
                let dl = dual_lattice(l)?;
                let mut g_blocks: Vec<Triple> = Vec::new();
                let mut n_blocks: Vec<Triple> = Vec::new();
                for b in blocks {
                    if b.su2.is_empty() || b.su2.contains(&0) {
                        return Err(NahmError::Config("su2 summand dimensions must be positive".into()));
                    }
                    let n = su2_sum(&b.su2);
                    let r = n[0].nrows();
                    let cart = dl.to_cartesian(&nalgebra::Vector3::from(b.xi));
                    g_blocks.push([0, 1, 2].map(|i| identity(r) * c(0.0, 2.0 * std::f64::consts::PI * cart[i])));
                    n_blocks.push(n);
                }
                let cat = |ts: &[Triple]| -> Triple {
                    [0, 1, 2].map(|i| block_diag(&ts.iter().map(|t| t[i].clone()).collect::<Vec<_>>()))
                };
                (cat(&g_blocks), cat(&n_blocks))
            }
        };
        validate_model_solution(gamma, nn)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformParams {
    pub margin: f64,
    pub extra_shells: usize,
    /// Points per axis of the ξ-grid on T̂³.
    pub xi_grid: usize,
    pub step_norm: f64,
    pub min_intervals: usize,
    /// Bogomolny cube edge before refinement, and number of halvings.
    pub bogomolny_h: f64,
    pub refine: usize,
    /// Cartesian offset of the Bogomolny cube from each singular point.
    pub bogomolny_offset: [f64; 3],
}

impl Default for TransformParams {
    fn default() -> Self {
        Self {
            margin: 1.0,
            extra_shells: 0,
            xi_grid: 9,
            step_norm: 0.1,
            min_intervals: 64,
            bogomolny_h: 0.01,
            refine: 2,
            bogomolny_offset: [0.08, 0.05, 0.06],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightParams {
    /// Largest ray radius; radii are `d0·2^{−j}`, `j < levels`. Unset: a quarter of the
    /// distance to the nearest other singular point (or lattice translate).
    pub d0: Option<f64>,
    pub levels: usize,
    pub rays: usize,
    /// Half-height and radius of the winding drum; 0 disables the winding.
    pub drum_scale: f64,
    /// Distances at which the slice-energy decay rate is fitted.
    pub decay_distances: Vec<f64>,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self { d0: None, levels: 5, rays: 3, drum_scale: 0.1, decay_distances: vec![0.05, 0.1, 0.2] }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Rows of a matrix whose columns are the lattice generators.
    pub lattice: [[f64; 3]; 3],
    pub plus: ModelSpec,
    pub minus: ModelSpec,
    #[serde(default)]
    pub solver: HeteroclinicParams,
    #[serde(default)]
    pub transform: TransformParams,
    #[serde(default)]
    pub weights: WeightParams,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "yes")]
    pub cache: bool,
    #[serde(default)]
    pub seed: u64,
}

/// A config that passed every structural check, with its models built.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub config: PipelineConfig,
    pub lattice: Lattice3,
    pub plus: ModelSolution,
    pub minus: ModelSolution,
    pub hash: String,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NahmError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| NahmError::Config(format!("{}: {e}", path.display())))
    }

    /// sha256 of the canonical JSON form, leaving out `output_dir` and `threads`, which do
    /// not affect results.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        canon.threads = None;
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Structural checks that need no model data.
    pub fn parameter_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let s = &self.solver;
        if !(s.tol > 0.0) {
            v.push(format!("solver.tol = {} must be positive", s.tol));
        }
        if !(s.t_max > 0.0) {
            v.push(format!("solver.t_max = {} must be positive", s.t_max));
        }
        if s.grid_n < 3 {
            v.push(format!("solver.grid_n = {} must be at least 3", s.grid_n));
        }
        let t = &self.transform;
        if t.xi_grid < 3 {
            v.push(format!("transform.xi_grid = {} must be at least 3", t.xi_grid));
        }
        for (name, x) in [("transform.margin", t.margin), ("transform.step_norm", t.step_norm), ("transform.bogomolny_h", t.bogomolny_h)] {
            if !(x > 0.0) {
                v.push(format!("{name} = {x} must be positive"));
            }
        }
        let w = &self.weights;
        if let Some(d0) = w.d0.filter(|d| !(*d > 0.0)) {
            v.push(format!("weights.d0 = {d0} must be positive"));
        }
        if w.levels < 4 {
            v.push(format!("weights.levels = {} must be at least 4", w.levels));
        }
        if w.rays < 3 {
            v.push(format!("weights.rays = {} must be at least 3", w.rays));
        }
        if !(w.drum_scale >= 0.0) {
            v.push(format!("weights.drum_scale = {} must be non-negative", w.drum_scale));
        }
        if w.decay_distances.iter().any(|d| !(*d > 0.0)) {
            v.push("weights.decay_distances must be positive".into());
        }
        if self.threads == Some(0) {
            v.push("threads must be at least 1".into());
        }
        v
    }

    pub fn validate(self) -> Result<ValidatedConfig> {
        let mut violations = self.parameter_violations();
        let lattice = Lattice3::from_row_major(self.lattice);
        let mut built = None;
        match &lattice {
            Err(e) => violations.push(e.to_string()),
            Ok(l) => {
                let plus = self.plus.build(l).map_err(|e| format!("plus: {e}"));
                let minus = self.minus.build(l).map_err(|e| format!("minus: {e}"));
                match (plus, minus) {
                    (Ok(p), Ok(m)) if p.rank() != m.rank() => {
                        violations.push(format!("rank {} at +∞ vs {} at −∞", p.rank(), m.rank()))
                    }
                    (Ok(p), Ok(m)) => built = Some((p, m)),
                    (p, m) => violations.extend(p.err().into_iter().chain(m.err())),
                }
            }
        }
        if !violations.is_empty() {
            return Err(NahmError::Config(violations.join("; ")));
        }
        let (plus, minus) = built.expect("models built");
        let hash = self.hash();
        Ok(ValidatedConfig { lattice: lattice.expect("lattice valid"), plus, minus, hash, config: self })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn spin_half_json() -> &'static str {
        r#"{
            "lattice": [[1,0,0],[0,1,0],[0,0,1]],
            "plus": {"blocks": [{"xi": [0,0,0], "su2": [2]}]},
            "minus": {"blocks": [{"xi": [0,0,0], "su2": [2]}]}
        }"#
    }

    #[test]
    fn defaults_fill_in_and_validate() {
        let cfg: PipelineConfig = serde_json::from_str(spin_half_json()).unwrap();
        assert_eq!(cfg.transform, TransformParams::default());
        let v = cfg.validate().unwrap();
        assert_eq!(v.plus.rank(), 2);
        assert_eq!(v.hash.len(), 64);
    }

    #[test]
    fn hash_tracks_content() {
        let a: PipelineConfig = serde_json::from_str(spin_half_json()).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn non_commuting_gamma_is_named() {
        let i = |x: f64| [0.0, x];
        let text = serde_json::json!({
            "lattice": [[1,0,0],[0,1,0],[0,0,1]],
            "plus": {"gamma": [[[i(0.), i(1.)], [i(1.), i(0.)]], [[[0.,0.], [1.,0.]], [[-1.,0.], [0.,0.]]], [[i(0.), i(0.)], [i(0.), i(0.)]]],
                     "nn": [[[[0.,0.],[0.,0.]],[[0.,0.],[0.,0.]]], [[[0.,0.],[0.,0.]],[[0.,0.],[0.,0.]]], [[[0.,0.],[0.,0.]],[[0.,0.],[0.,0.]]]]},
            "minus": {"blocks": [{"xi": [0,0,0], "su2": [1, 1]}]}
        });
        let cfg: PipelineConfig = serde_json::from_value(text).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("[Γ₁,Γ₂] ≠ 0"), "{err}");
    }

    #[test]
    fn bad_parameters_are_listed() {
        let mut cfg: PipelineConfig = serde_json::from_str(spin_half_json()).unwrap();
        cfg.solver.tol = 0.0;
        cfg.transform.xi_grid = 2;
        let v = cfg.parameter_violations();
        assert_eq!(v.len(), 2);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = spin_half_json().replace("\"lattice\"", "\"latice\"");
        assert!(serde_json::from_str::<PipelineConfig>(&text).is_err());
    }
}
