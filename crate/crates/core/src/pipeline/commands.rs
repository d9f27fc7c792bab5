//! The pipeline stages: validate, solve, transform, weights, report.
//!
//! Every stage writes JSON reports and CSV tables into the output directory, records itself
//! in the run manifest and returns an exit code: 0 success, 2 validation failure,
//! 3 no solution, 4 numerical certification failure (1 for I/O problems).

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{cache_key, KernelCache, Lookup};
use super::config::{matrix_to_json, MatrixJson, PipelineConfig, ValidatedConfig};
use super::io::{read_json, write_json, CurveFile, Table};
use super::manifest::RunManifest;
use crate::algnahm::predicted_weights_checked;
use crate::dirac::{slice_energy, total_kernel, CliffordModel, KernelOptions, ModePolicy};
use crate::error::{NahmError, Result};
use crate::flow::{asd_residual, asymptotic_fit, curvature_energy, solve_heteroclinic, AsymptoticFit, HeteroclinicOutcome};
use crate::linalg::gaussian;
use crate::model::{singularity_set, SingularPoint, SingularitySet};
use crate::monopole::{
    bogomolny_residual, det_winding_weight_sum, fit_singularity_weights, higgs_field, Cube, Drum, KernelFrame,
    ModelEnd, RaySamples, WeightReport,
};
use crate::torus::{dual_lattice, torus_distance, DualTorusPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;
pub const EXIT_CERTIFICATION: i32 = 4;

pub fn exit_code(e: &NahmError) -> i32 {
    use NahmError::*;
    match e {
        InvalidLattice(_) | Dimension(_) | InvalidModel(_) | Su2Relations(_) | NonInjectiveSpectrum(_)
        | Precondition(_) | SplitUnavailable(_) | ParabolicWeight(_) | Config(_) => EXIT_VALIDATION,
        TooManyModes { .. } | BlowUp { .. } | Gap { .. } | Numerical(_) | ResidualTooLarge { .. }
        | LinkRejected { .. } | Consistency(_) => EXIT_CERTIFICATION,
        Io(_) | Json(_) => EXIT_IO,
    }
}

/// Command-line overrides shared by all stages.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub refine: Option<usize>,
    /// Curve file for `transform` (default `<out>/curve.json`).
    pub curve: Option<PathBuf>,
    /// Restrict `weights` to one point of T̂³ (dual-lattice coefficients).
    pub point: Option<[f64; 3]>,
}

impl RunOptions {
    /// Fold the overrides into the config.
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.refine {
            cfg.transform.refine = k;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub stage: String,
    pub status: String,
    pub exit_code: i32,
    pub files: Vec<String>,
    pub messages: Vec<String>,
}

fn finish(v: &ValidatedConfig, stage: &str, start: Instant, mut o: Outcome) -> Result<Outcome> {
    let out = &v.config.output_dir;
    let mut m = RunManifest::open(out, &v.hash, v.config.seed, v.config.threads.unwrap_or(0));
    m.record(out, stage, &o.status, o.exit_code, start.elapsed().as_secs_f64(), &o.files)?;
    m.save(out)?;
    o.files.push(super::manifest::MANIFEST_FILE.into());
    Ok(o)
}

fn xi_array(xi: &DualTorusPoint) -> [f64; 3] {
    [xi.coeffs[0], xi.coeffs[1], xi.coeffs[2]]
}

// ---------------------------------------------------------------------------------------
// validate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub xi: [f64; 3],
    pub weights_plus: Vec<usize>,
    pub weights_minus: Vec<usize>,
    /// Jordan-route prediction, when the lattice splits as S¹ × T².
    pub jordan_plus: Option<Vec<usize>>,
    pub jordan_minus: Option<Vec<usize>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub manifest: String,
    pub valid: bool,
    pub violations: Vec<String>,
    pub rank: usize,
    pub singular_points: Vec<PointSummary>,
}

pub const VALIDATION_FILE: &str = "validation.json";

/// Validate a raw config; always writes a report when the output directory is usable.
pub fn cmd_validate(cfg: PipelineConfig) -> Result<(ValidationReport, Outcome)> {
    let start = Instant::now();
    let out = cfg.output_dir.clone();
    let hash = cfg.hash();
    let v = match cfg.validate() {
        Ok(v) => v,
        Err(e) => {
            let report = ValidationReport {
                manifest: hash,
                valid: false,
                violations: vec![e.to_string()],
                rank: 0,
                singular_points: Vec::new(),
            };
            write_json(&out.join(VALIDATION_FILE), &report)?;
            let o = Outcome {
                stage: "validate".into(),
                status: "invalid".into(),
                exit_code: EXIT_VALIDATION,
                files: vec![VALIDATION_FILE.into()],
                messages: report.violations.clone(),
            };
            return Ok((report, o));
        }
    };
    let mut report = ValidationReport {
        manifest: v.hash.clone(),
        valid: true,
        violations: Vec::new(),
        rank: v.plus.rank(),
        singular_points: Vec::new(),
    };
    let mut code = EXIT_OK;
    match singularity_set(&v.plus, &v.minus, &v.lattice) {
        Err(e) => {
            report.valid = false;
            report.violations.push(e.to_string());
            code = exit_code(&e);
        }
        Ok(sing) => {
            for sp in &sing.points {
                let mut s = PointSummary {
                    xi: xi_array(&sp.xi),
                    weights_plus: sp.weights_plus().weights,
                    weights_minus: sp.weights_minus().weights,
                    jordan_plus: None,
                    jordan_minus: None,
                    note: None,
                };
                match predicted_weights_checked(&v.plus, &v.minus, sp, &v.lattice) {
                    Ok((wp, wm)) => {
                        s.jordan_plus = Some(wp.weights);
                        s.jordan_minus = Some(wm.weights);
                    }
                    Err(NahmError::SplitUnavailable(msg)) => s.note = Some(format!("Jordan route skipped: {msg}")),
                    Err(e) => {
                        report.valid = false;
                        report.violations.push(e.to_string());
                        code = exit_code(&e);
                    }
                }
                report.singular_points.push(s);
            }
        }
    }
    write_json(&v.config.output_dir.join(VALIDATION_FILE), &report)?;
    let o = Outcome {
        stage: "validate".into(),
        status: if report.valid { "valid".into() } else { "invalid".into() },
        exit_code: code,
        files: vec![VALIDATION_FILE.into()],
        messages: report.violations.clone(),
    };
    Ok((report, finish(&v, "validate", start, o)?))
}

// ---------------------------------------------------------------------------------------
// solve

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub manifest: String,
    pub found: bool,
    pub reason: Option<String>,
    pub iterations: usize,
    pub certified_residual: f64,
    pub boundary_residual: f64,
    pub residual_history: Vec<f64>,
    pub energy: Option<f64>,
    /// `energy / 8π²` and its distance to the nearest integer.
    pub charge: Option<f64>,
    pub integrality_gap: Option<f64>,
    pub asymptotics: Option<AsymptoticFit>,
}

pub const SOLVE_FILE: &str = "solve.json";
pub const CURVE_FILE: &str = "curve.json";
pub const RESIDUAL_FILE: &str = "residual.csv";
pub const RESIDUAL_HEADER: &[&str] = &["t", "residual"];

pub fn cmd_solve(v: &ValidatedConfig) -> Result<(SolveSummary, Outcome)> {
    let start = Instant::now();
    let out = &v.config.output_dir;
    let params = &v.config.solver;
    let outcome = solve_heteroclinic(&v.minus, &v.plus, params, None)?;
    let rep = outcome.report().clone();
    let mut summary = SolveSummary {
        manifest: v.hash.clone(),
        found: false,
        reason: None,
        iterations: rep.iterations,
        certified_residual: rep.certified_residual,
        boundary_residual: rep.boundary_residual,
        residual_history: rep.residual_history,
        energy: None,
        charge: None,
        integrality_gap: None,
        asymptotics: None,
    };
    let mut files = Vec::new();
    let code = match &outcome {
        HeteroclinicOutcome::NotFound { reason, .. } => {
            summary.reason = Some(reason.clone());
            EXIT_NO_SOLUTION
        }
        HeteroclinicOutcome::Found { curve, .. } => {
            summary.found = true;
            let energy = curvature_energy(curve, &v.lattice, params.tol)?;
            let charge = energy / (8.0 * std::f64::consts::PI.powi(2));
            summary.energy = Some(energy);
            summary.charge = Some(charge);
            summary.integrality_gap = Some((charge - charge.round()).abs());
            summary.asymptotics = asymptotic_fit(curve);
            write_json(&out.join(CURVE_FILE), &CurveFile { manifest: v.hash.clone(), curve: curve.clone() })?;
            let mut t = Table::new(RESIDUAL_HEADER);
            for (tt, r) in curve.grid.iter().zip(asd_residual(curve)) {
                t.push(vec![(*tt).into(), r.into()])?;
            }
            t.write(&out.join(RESIDUAL_FILE))?;
            files.push(CURVE_FILE.to_string());
            files.push(RESIDUAL_FILE.to_string());
            EXIT_OK
        }
    };
    write_json(&out.join(SOLVE_FILE), &summary)?;
    files.insert(0, SOLVE_FILE.into());
    let status = if summary.found { "found" } else { "no-solution" };
    let o = Outcome {
        stage: "solve".into(),
        status: status.into(),
        exit_code: code,
        files,
        messages: summary.reason.iter().cloned().collect(),
    };
    Ok((summary, finish(v, "solve", start, o)?))
}

// ---------------------------------------------------------------------------------------
// transform

/// Per-ξ result, as stored in the kernel cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub xi: [f64; 3],
    /// `ok`, `singular` (ξ ∈ Sing) or `error: …`.
    pub status: String,
    pub rank: usize,
    pub plus_dim: usize,
    pub certified: bool,
    pub uncertain_modes: usize,
    pub modes_checked: usize,
    pub cutoff: f64,
    pub phi: MatrixJson,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BogomolnyRow {
    pub source: String,
    pub point: [f64; 3],
    pub h: f64,
    pub per_plane: [f64; 3],
    pub max: f64,
    pub curvature_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub point: [f64; 3],
    pub hs: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log₂(r₀ / r_last) / refinements`.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformReport {
    pub manifest: String,
    pub curve_manifest: String,
    pub grid: usize,
    pub samples: usize,
    pub singular_samples: usize,
    pub error_samples: usize,
    pub max_rank: usize,
    /// Rank is constant over the non-singular samples.
    pub rank_constant: bool,
    pub plus_dim_total: usize,
    pub uncertain_samples: usize,
    pub warnings: Vec<String>,
    pub global_bogomolny: Vec<BogomolnyRow>,
    pub model_end_bogomolny: Vec<ConvergenceSummary>,
}

pub const TRANSFORM_FILE: &str = "transform.json";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const SAMPLES_HEADER: &[&str] =
    &["xi1", "xi2", "xi3", "status", "rank", "plus_dim", "certified", "uncertain_modes", "modes_checked", "cutoff", "phi_norm"];
pub const EIGEN_FILE: &str = "eigenvalues.csv";
pub const EIGEN_HEADER: &[&str] = &["xi1", "xi2", "xi3", "index", "eigenvalue"];
pub const BOGOMOLNY_FILE: &str = "bogomolny.csv";
pub const BOGOMOLNY_HEADER: &[&str] = &["source", "xi1", "xi2", "xi3", "h", "res23", "res31", "res12", "max", "curvature_norm"];
pub const CACHE_DIR: &str = "cache";

fn kernel_options(v: &ValidatedConfig) -> KernelOptions {
    KernelOptions {
        step_norm: v.config.transform.step_norm,
        min_intervals: v.config.transform.min_intervals,
        ..KernelOptions::default()
    }
}

fn mode_policy(v: &ValidatedConfig) -> ModePolicy {
    ModePolicy { margin: v.config.transform.margin, extra_shells: v.config.transform.extra_shells, ..ModePolicy::default() }
}

fn cube_offsets(h: f64) -> [Vector3<f64>; 8] {
    std::array::from_fn(|q| Vector3::new((q & 1) as f64, ((q >> 1) & 1) as f64, ((q >> 2) & 1) as f64) * h)
}

fn bogomolny_row(source: &str, point: [f64; 3], frames: &[KernelFrame], h: f64) -> Result<BogomolnyRow> {
    let refs: [&KernelFrame; 8] = std::array::from_fn(|q| &frames[q]);
    let r = bogomolny_residual(&Cube { frames: refs, h })?;
    Ok(BogomolnyRow { source: source.into(), point, h, per_plane: r.per_plane, max: r.max, curvature_norm: r.curvature_norm })
}

/// Bogomolny residuals of a model end at a sequence of halved cube sizes.
pub fn model_end_convergence(me: &ModelEnd, offset: Vector3<f64>, h0: f64, refine: usize) -> Result<(Vec<BogomolnyRow>, ConvergenceSummary)> {
    let point = xi_array(&me.point);
    let mut rows = Vec::new();
    for j in 0..=refine {
        let h = h0 / 2f64.powi(j as i32);
        let corners = cube_offsets(h).map(|o| offset + o);
        let dmin = corners.iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
        let dmax = corners.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let hg = me.grid_for(dmin, dmax)?;
        let frames = corners.iter().map(|c| me.frame(c, &hg)).collect::<Result<Vec<_>>>()?;
        rows.push(bogomolny_row("model-end", point, &frames, h)?);
    }
    let residuals: Vec<f64> = rows.iter().map(|r| r.max).collect();
    let order = (refine > 0 && residuals[refine] > 0.0)
        .then(|| (residuals[0] / residuals[refine]).log2() / refine as f64);
    let summary = ConvergenceSummary { point, hs: rows.iter().map(|r| r.h).collect(), residuals, order };
    Ok((rows, summary))
}

pub fn cmd_transform(v: &ValidatedConfig, curve_path: Option<&Path>) -> Result<(TransformReport, Outcome)> {
    let start = Instant::now();
    let out = &v.config.output_dir;
    let tp = &v.config.transform;
    let default_curve = out.join(CURVE_FILE);
    let path = curve_path.unwrap_or(&default_curve);
    if !path.exists() {
        let solved: Option<SolveSummary> = read_opt(&out.join(SOLVE_FILE))?;
        if curve_path.is_none() && solved.is_some_and(|s| !s.found) {
            return Err(NahmError::Precondition("no curve to transform: solve found no solution".into()))
                .or_else(|e| no_curve(v, start, e));
        }
        return Err(NahmError::Precondition(format!("curve file {} not found; run solve first", path.display())));
    }
    let cf: CurveFile = read_json(path)?;
    let curve = cf.curve;
    let dl = dual_lattice(&v.lattice)?;
    let cm = CliffordModel::default();
    let sing = singularity_set(&v.plus, &v.minus, &v.lattice)?;
    let policy = mode_policy(v);
    let opts = kernel_options(v);
    let curve_hash = cache_key(&curve);
    let cache = if v.config.cache { Some(KernelCache::new(&out.join(CACHE_DIR))?) } else { None };

    let n = tp.xi_grid;
    let points: Vec<DualTorusPoint> = (0..n * n * n)
        .map(|k| DualTorusPoint::new((k / (n * n)) as f64 / n as f64, ((k / n) % n) as f64 / n as f64, (k % n) as f64 / n as f64))
        .collect();
    let results: Vec<(SampleRecord, Lookup)> = points
        .par_iter()
        .map(|xi| {
            let key = cache_key(&(&curve_hash, xi_array(xi), &policy, format!("{opts:?}")));
            if let Some(c) = &cache {
                if let (Some(rec), Lookup::Hit) = c.load::<SampleRecord>(&key) {
                    return (rec, Lookup::Hit);
                }
            }
            let rec = sample_at(&curve, xi, &sing, &dl, &cm, &policy, &opts);
            let lookup = match &cache {
                Some(c) => {
                    let (_, l) = c.load::<SampleRecord>(&key);
                    let _ = c.store(&key, &rec);
                    l
                }
                None => Lookup::Miss,
            };
            (rec, lookup)
        })
        .collect();

    let mut report = TransformReport {
        manifest: v.hash.clone(),
        curve_manifest: cf.manifest.clone(),
        grid: n,
        samples: results.len(),
        singular_samples: 0,
        error_samples: 0,
        max_rank: 0,
        rank_constant: true,
        plus_dim_total: 0,
        uncertain_samples: 0,
        warnings: Vec::new(),
        global_bogomolny: Vec::new(),
        model_end_bogomolny: Vec::new(),
    };
    if cf.manifest != v.hash {
        report.warnings.push(format!("curve was produced by config {}", cf.manifest));
    }
    let mut samples = Table::new(SAMPLES_HEADER);
    let mut eig = Table::new(EIGEN_HEADER);
    let mut first_rank: Option<usize> = None;
    // Cache traffic goes to the stage messages, not the report, so reruns stay bit-identical.
    let mut cache_notes = Vec::new();
    let hits = results.iter().filter(|(_, l)| *l == Lookup::Hit).count();
    if cache.is_some() {
        cache_notes.push(format!("kernel cache: {hits} of {} samples reused", results.len()));
    }
    for (rec, lookup) in &results {
        if *lookup == Lookup::Corrupt {
            cache_notes.push(format!("cache entry for {:?} failed its checksum; recomputed", rec.xi));
        }
        if rec.status == "singular" {
            report.singular_samples += 1;
        } else if rec.status.starts_with("error") {
            report.error_samples += 1;
            report.warnings.push(format!("{:?}: {}", rec.xi, rec.status));
        } else {
            report.max_rank = report.max_rank.max(rec.rank);
            report.plus_dim_total += rec.plus_dim;
            if *first_rank.get_or_insert(rec.rank) != rec.rank {
                report.rank_constant = false;
            }
            if !rec.certified {
                report.uncertain_samples += 1;
                report.warnings.push(format!("{:?}: {} uncertain mode tails", rec.xi, rec.uncertain_modes));
            }
        }
        let phi_norm = rec.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        samples.push(vec![
            rec.xi[0].into(),
            rec.xi[1].into(),
            rec.xi[2].into(),
            rec.status.clone().into(),
            rec.rank.into(),
            rec.plus_dim.into(),
            (rec.certified as usize).into(),
            rec.uncertain_modes.into(),
            rec.modes_checked.into(),
            rec.cutoff.into(),
            phi_norm.into(),
        ])?;
        for (k, e) in rec.eigenvalues.iter().enumerate() {
            eig.push(vec![rec.xi[0].into(), rec.xi[1].into(), rec.xi[2].into(), k.into(), (*e).into()])?;
        }
    }

    let mut bog = Table::new(BOGOMOLNY_HEADER);
    // Global cubes at samples with a nonzero kernel.
    for (rec, _) in &results {
        if rec.status != "ok" || rec.rank == 0 {
            continue;
        }
        let base = dl.to_cartesian(&Vector3::from(rec.xi));
        let frames = cube_offsets(tp.bogomolny_h)
            .iter()
            .map(|o| {
                let xi = crate::torus::reduce(&dl.to_coeffs(&(base + o)));
                total_kernel(&curve, xi, &dl, &cm, &policy, &opts).map(|tk| KernelFrame::from_total(&tk))
            })
            .collect::<Result<Vec<_>>>();
        match frames.and_then(|f| bogomolny_row("global", rec.xi, &f, tp.bogomolny_h)) {
            Ok(row) => report.global_bogomolny.push(row),
            Err(e) => report.warnings.push(format!("global cube at {:?}: {e}", rec.xi)),
        }
    }
    let offset = Vector3::from(tp.bogomolny_offset);
    for sp in &sing.points {
        let me = ModelEnd::new(sp, &v.lattice)?;
        let (rows, summary) = model_end_convergence(&me, offset, tp.bogomolny_h, tp.refine)?;
        for r in &rows {
            push_bog(&mut bog, r)?;
        }
        report.model_end_bogomolny.push(summary);
    }
    for r in &report.global_bogomolny {
        push_bog(&mut bog, r)?;
    }
    samples.write(&out.join(SAMPLES_FILE))?;
    eig.write(&out.join(EIGEN_FILE))?;
    bog.write(&out.join(BOGOMOLNY_FILE))?;
    write_json(&out.join(TRANSFORM_FILE), &report)?;
    let certified = report.error_samples == 0 && report.uncertain_samples == 0;
    let o = Outcome {
        stage: "transform".into(),
        status: if !certified {
            "uncertified".into()
        } else if report.warnings.is_empty() {
            "ok".into()
        } else {
            "ok-with-warnings".into()
        },
        exit_code: if certified { EXIT_OK } else { EXIT_CERTIFICATION },
        files: [TRANSFORM_FILE, SAMPLES_FILE, EIGEN_FILE, BOGOMOLNY_FILE].map(String::from).to_vec(),
        messages: report.warnings.iter().cloned().chain(cache_notes).collect(),
    };
    Ok((report, finish(v, "transform", start, o)?))
}

fn no_curve(v: &ValidatedConfig, start: Instant, e: NahmError) -> Result<(TransformReport, Outcome)> {
    let o = Outcome {
        stage: "transform".into(),
        status: "no-solution".into(),
        exit_code: EXIT_NO_SOLUTION,
        files: Vec::new(),
        messages: vec![e.to_string()],
    };
    let report = TransformReport {
        manifest: v.hash.clone(),
        curve_manifest: String::new(),
        grid: 0,
        samples: 0,
        singular_samples: 0,
        error_samples: 0,
        max_rank: 0,
        rank_constant: true,
        plus_dim_total: 0,
        uncertain_samples: 0,
        warnings: Vec::new(),
        global_bogomolny: Vec::new(),
        model_end_bogomolny: Vec::new(),
    };
    Ok((report, finish(v, "transform", start, o)?))
}

fn push_bog(t: &mut Table, r: &BogomolnyRow) -> Result<()> {
    t.push(vec![
        r.source.clone().into(),
        r.point[0].into(),
        r.point[1].into(),
        r.point[2].into(),
        r.h.into(),
        r.per_plane[0].into(),
        r.per_plane[1].into(),
        r.per_plane[2].into(),
        r.max.into(),
        r.curvature_norm.into(),
    ])
}

/// Distance on T̂³ below which a sample counts as sitting on the singular set.
const ON_SING: f64 = 1e-9;

fn sample_at(
    curve: &crate::flow::NahmCurve,
    xi: &DualTorusPoint,
    sing: &SingularitySet,
    dl: &crate::torus::DualLattice3,
    cm: &CliffordModel,
    policy: &ModePolicy,
    opts: &KernelOptions,
) -> SampleRecord {
    let mut rec = SampleRecord {
        xi: xi_array(xi),
        status: "ok".into(),
        rank: 0,
        plus_dim: 0,
        certified: false,
        uncertain_modes: 0,
        modes_checked: 0,
        cutoff: 0.0,
        phi: Vec::new(),
        eigenvalues: Vec::new(),
    };
    if sing.points.iter().any(|p| torus_distance(&p.xi, xi, dl) < ON_SING) {
        rec.status = "singular".into();
        return rec;
    }
    let result = total_kernel(curve, *xi, dl, cm, policy, opts).and_then(|tk| {
        let s = higgs_field(&KernelFrame::from_total(&tk))?;
        Ok((tk, s))
    });
    match result {
        Ok((tk, s)) => {
            rec.rank = tk.dim;
            rec.plus_dim = tk.plus_dim;
            rec.certified = tk.certified;
            rec.uncertain_modes = tk.uncertain_modes.len();
            rec.modes_checked = tk.modes_checked;
            rec.cutoff = tk.cutoff;
            rec.eigenvalues = s.eigenvalues();
            rec.phi = matrix_to_json(&s.phi);
        }
        Err(e) => rec.status = format!("error: {e}"),
    }
    rec
}

// ---------------------------------------------------------------------------------------
// weights

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecaySample {
    pub distance: f64,
    /// Fitted slice-energy decay rate per kernel block.
    pub kappa: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointWeights {
    pub xi: [f64; 3],
    pub report: WeightReport,
    pub jordan_plus: Option<Vec<usize>>,
    pub jordan_minus: Option<Vec<usize>>,
    /// `max/min` of `‖Φ̂‖·d` along each ray.
    pub higgs_band: Vec<f64>,
    pub rays: Vec<RaySamples>,
    pub decay: Vec<DecaySample>,
    /// `PASS`, `FAIL` or `FLAGGED`.
    pub status: String,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsReport {
    pub manifest: String,
    pub points: Vec<PointWeights>,
}

pub const WEIGHTS_FILE: &str = "weights.json";
pub const RAYS_FILE: &str = "rays.csv";
pub const RAYS_HEADER: &[&str] = &["xi1", "xi2", "xi3", "ray", "radius", "index", "eigenvalue"];

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(gaussian(rng), gaussian(rng), gaussian(rng));
        if v.norm() > 1e-3 {
            return v.normalize();
        }
    }
}

/// Ray fits, winding, decay rates and the algebraic prediction at one singular point.
/// `nearest` is the distance from the point to the rest of the singular set.
pub fn analyse_point(v: &ValidatedConfig, sp: &SingularPoint, nearest: f64, rng: &mut ChaCha8Rng) -> Result<PointWeights> {
    let wp = &v.config.weights;
    let me = ModelEnd::new(sp, &v.lattice)?;
    let d0 = wp.d0.unwrap_or(0.25 * nearest);
    let radii: Vec<f64> = (0..wp.levels).map(|j| d0 / 2f64.powi(j as i32)).collect();
    let hg = me.grid_for(radii[radii.len() - 1], radii[0])?;
    let dirs: Vec<Vector3<f64>> = (0..wp.rays).map(|_| random_direction(rng)).collect();
    let mut rays = Vec::new();
    let mut band = Vec::new();
    for d in &dirs {
        let samples = radii
            .par_iter()
            .map(|r| higgs_field(&me.frame(&(d * *r), &hg)?))
            .collect::<Result<Vec<_>>>()?;
        let scaled: Vec<f64> = samples.iter().zip(&radii).map(|(s, r)| s.norm() * r).collect();
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        band.push(if lo > 0.0 { hi / lo } else { f64::INFINITY });
        rays.push(RaySamples {
            direction: [d[0], d[1], d[2]],
            radii: radii.clone(),
            eigenvalues: samples.iter().map(|s| s.eigenvalues()).collect(),
        });
    }
    let mut report = fit_singularity_weights(sp.xi, &rays, sp.weights_plus(), sp.weights_minus());
    // Fitted weights: positive ones are k₊, negatives of the negative ones are k₋.
    let mut notes = Vec::new();
    if wp.drum_scale > 0.0 {
        let drum = Drum::around(wp.drum_scale);
        let (a, b) = drum.distance_range();
        let dhg = me.grid_for(a, b)?;
        match det_winding_weight_sum(&drum, |x| me.frame(x, &dhg)) {
            Ok(w) => report.winding = Some(w),
            Err(e) => notes.push(format!("winding unavailable: {e}")),
        }
    }
    let mut decay = Vec::new();
    for &dist in &wp.decay_distances {
        let f = me.frame_alone(&(dirs[0] * dist))?;
        decay.push(DecaySample { distance: dist, kappa: f.blocks.iter().map(|b| slice_energy(&b.kernel).kappa).collect() });
    }
    let (mut jp, mut jm) = (None, None);
    let mut jordan_ok = true;
    match predicted_weights_checked(&v.plus, &v.minus, sp, &v.lattice) {
        Ok((a, b)) => {
            jp = Some(a.weights);
            jm = Some(b.weights);
        }
        Err(NahmError::SplitUnavailable(m)) => notes.push(format!("Jordan route skipped: {m}")),
        Err(e) => {
            jordan_ok = false;
            notes.push(e.to_string());
        }
    }
    let status = if report.flagged() {
        "FLAGGED"
    } else if report.matches_prediction() && jordan_ok {
        "PASS"
    } else {
        "FAIL"
    };
    Ok(PointWeights {
        xi: xi_array(&sp.xi),
        report,
        jordan_plus: jp,
        jordan_minus: jm,
        higgs_band: band,
        rays,
        decay,
        status: status.into(),
        notes,
    })
}

/// Distance from `sp` to the other singular points and to its own lattice translates.
pub fn nearest_other(sing: &SingularitySet, sp: &SingularPoint, dl: &crate::torus::DualLattice3) -> f64 {
    sing.points
        .iter()
        .filter(|q| !std::ptr::eq(*q, sp))
        .map(|q| torus_distance(&q.xi, &sp.xi, dl))
        .fold(dl.shortest_length(), f64::min)
}

pub fn cmd_weights(v: &ValidatedConfig, point: Option<[f64; 3]>) -> Result<(WeightsReport, Outcome)> {
    let start = Instant::now();
    let out = &v.config.output_dir;
    let sing = singularity_set(&v.plus, &v.minus, &v.lattice)?;
    let dl = dual_lattice(&v.lattice)?;
    let selected: Vec<&SingularPoint> = match point {
        None => sing.points.iter().collect(),
        Some(p) => {
            let xi = crate::torus::reduce(&Vector3::from(p));
            let hit: Vec<&SingularPoint> = sing.points.iter().filter(|s| torus_distance(&s.xi, &xi, &dl) < 1e-8).collect();
            if hit.is_empty() {
                return Err(NahmError::Precondition(format!("p = {p:?} ∉ Sing")));
            }
            hit
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(v.config.seed);
    let mut points = Vec::new();
    for sp in selected {
        points.push(analyse_point(v, sp, nearest_other(&sing, sp, &dl), &mut rng)?);
    }
    let mut t = Table::new(RAYS_HEADER);
    for p in &points {
        for (k, ray) in p.rays.iter().enumerate() {
            for (r, eig) in ray.radii.iter().zip(&ray.eigenvalues) {
                for (i, e) in eig.iter().enumerate() {
                    t.push(vec![p.xi[0].into(), p.xi[1].into(), p.xi[2].into(), k.into(), (*r).into(), i.into(), (*e).into()])?;
                }
            }
        }
    }
    let report = WeightsReport { manifest: v.hash.clone(), points };
    write_json(&out.join(WEIGHTS_FILE), &report)?;
    t.write(&out.join(RAYS_FILE))?;
    let all_pass = report.points.iter().all(|p| p.status == "PASS");
    let o = Outcome {
        stage: "weights".into(),
        status: if all_pass { "PASS".into() } else { "FAIL/FLAGGED".into() },
        exit_code: if all_pass { EXIT_OK } else { EXIT_CERTIFICATION },
        files: vec![WEIGHTS_FILE.into(), RAYS_FILE.into()],
        messages: report.points.iter().map(|p| format!("{:?}: {}", p.xi, p.status)).collect(),
    };
    Ok((report, finish(v, "weights", start, o)?))
}

// ---------------------------------------------------------------------------------------
// report

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub validation: Option<ValidationReport>,
    pub solve: Option<SolveSummary>,
    pub transform: Option<TransformReport>,
    pub weights: Option<WeightsReport>,
    /// Stages that did not finish with exit code 0.
    pub failed_stages: Vec<String>,
}

pub const REPORT_FILE: &str = "report.json";

fn read_opt<T: serde::de::DeserializeOwned>(p: &Path) -> Result<Option<T>> {
    if p.exists() {
        read_json(p).map(Some)
    } else {
        Ok(None)
    }
}

/// Collect the stage outputs present in the output directory into one report.
pub fn cmd_report(v: &ValidatedConfig) -> Result<(RunReport, Outcome)> {
    let start = Instant::now();
    let out = &v.config.output_dir;
    let manifest = RunManifest::open(out, &v.hash, v.config.seed, v.config.threads.unwrap_or(0));
    let failed_stages =
        manifest.stages.iter().filter(|s| s.exit_code != EXIT_OK && s.name != "report").map(|s| s.name.clone()).collect();
    let report = RunReport {
        manifest,
        validation: read_opt(&out.join(VALIDATION_FILE))?,
        solve: read_opt(&out.join(SOLVE_FILE))?,
        transform: read_opt(&out.join(TRANSFORM_FILE))?,
        weights: read_opt(&out.join(WEIGHTS_FILE))?,
        failed_stages,
    };
    write_json(&out.join(REPORT_FILE), &report)?;
    let o = Outcome {
        stage: "report".into(),
        status: "ok".into(),
        exit_code: EXIT_OK,
        files: vec![REPORT_FILE.into()],
        messages: report.failed_stages.iter().map(|s| format!("stage {s} did not succeed")).collect(),
    };
    Ok((report, finish(v, "report", start, o)?))
}
