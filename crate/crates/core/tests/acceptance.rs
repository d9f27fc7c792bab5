//! Acceptance run: one PASS/FAIL line per criterion, with the measured numbers.
//!
//! Built without the test harness so the lines always reach stdout; the process exits
//! non-zero when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use nahmlab::algnahm::{
    fm_stalks, graded_from_model, instanton_ledger, parabolic_degree, predicted_weights, DivisorWeights,
    ParabolicLedger, Rational,
};
use nahmlab::dirac::{total_kernel, CliffordModel, KernelOptions, ModePolicy, Side};
use nahmlab::flow::{
    curvature_energy, integrate, nahm_rhs, solve_heteroclinic, spectral_invariants, HeteroclinicOutcome,
    IntegrateOptions,
};
use nahmlab::linalg::{norm, random_skew, random_unitary};
use nahmlab::model::fixtures::random_model;
use nahmlab::model::{singularity_set, su2_weights, triple_sub, SingularitySet};
use nahmlab::pipeline::commands::{analyse_point, model_end_convergence, nearest_other, PointWeights};
use nahmlab::pipeline::{PipelineConfig, ValidatedConfig};
use nahmlab::torus::{dual_lattice, torus_distance, DualTorusPoint, Lattice3};
use nahmlab::{NahmError, Result};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

// Tolerances and sizes, as fixed by the acceptance criteria.
const MODEL_RESIDUAL: f64 = 1e-12;
const LAX_DRIFT: f64 = 1e-6;
const LAX_TOL: f64 = 1e-9;
const LAX_SEEDS: usize = 50;
const SOLVER_CERT: f64 = 1e-8;
const INTEGRALITY: f64 = 1e-3;
const GENERIC_XI: usize = 10;
const HIGGS_BAND: f64 = 3.0;
const BOGOMOLNY_ORDER: f64 = 1.7;
const DECAY_FACTOR: f64 = 5.0;

struct Line {
    id: usize,
    pass: bool,
    detail: String,
    seconds: f64,
    budget: f64,
}

impl Line {
    fn ok(&self) -> bool {
        self.pass && self.seconds <= self.budget
    }

    fn print(self) -> Self {
        let timing = format!("{:.1}s / budget {:.0}s", self.seconds, self.budget);
        println!("criterion {}: {} — {} ({timing})", self.id, if self.ok() { "PASS" } else { "FAIL" }, self.detail);
        self
    }
}

fn config(plus: serde_json::Value, minus: serde_json::Value, seed: u64) -> ValidatedConfig {
    let cfg: PipelineConfig = serde_json::from_value(json!({
        "lattice": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        "plus": plus,
        "minus": minus,
        "seed": seed,
    }))
    .expect("fixture config parses");
    cfg.validate().expect("fixture config is valid")
}

fn blocks(list: &[([f64; 3], &[usize])]) -> serde_json::Value {
    json!({ "blocks": list.iter().map(|(xi, su2)| json!({"xi": xi, "su2": su2})).collect::<Vec<_>>() })
}

/// Flat ends: the only L²-finite invariant instantons, solved as certified curves.
fn flat_fixtures() -> Vec<(&'static str, ValidatedConfig)> {
    let two = blocks(&[([0.1, 0.2, 0.3], &[1]), ([0.6, 0.7, 0.4], &[1])]);
    let three = blocks(&[([0.15, 0.4, 0.8], &[1]), ([0.55, 0.1, 0.35], &[1]), ([0.85, 0.75, 0.2], &[1])]);
    vec![("flat rank 2", config(two.clone(), two, 11)), ("flat rank 3", config(three.clone(), three, 12))]
}

/// Model ends with nonzero su(2) data at a shared spectrum point.
fn model_end_fixtures() -> Vec<(&'static str, ValidatedConfig)> {
    let p = [0.25, 0.5, 0.125];
    vec![
        ("ends 2 | 1+1", config(blocks(&[(p, &[2])]), blocks(&[(p, &[1, 1])]), 21)),
        ("ends 3+1 | 2+2", config(blocks(&[(p, &[3, 1])]), blocks(&[(p, &[2, 2])]), 22)),
        ("ends 2 | 2", config(blocks(&[(p, &[2])]), blocks(&[(p, &[2])]), 23)),
    ]
}

fn sing(v: &ValidatedConfig) -> SingularitySet {
    singularity_set(&v.plus, &v.minus, &v.lattice).expect("singular set")
}

fn solve(v: &ValidatedConfig) -> Result<HeteroclinicOutcome> {
    solve_heteroclinic(&v.minus, &v.plus, &v.config.solver, None)
}

// 1 ------------------------------------------------------------------------------------

fn criterion_1() -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let r = 1 + k % 6;
        let ms = random_model(r, &mut rng);
        for j in 0..=200 {
            let t = 100f64.powf(j as f64 / 200.0);
            let res = triple_sub(&ms.eval_derivative(t), &nahm_rhs(&ms.eval(t)));
            worst = worst.max(res.iter().map(norm).fold(0.0, f64::max));
        }
    }
    Line {
        id: 1,
        pass: worst < MODEL_RESIDUAL,
        detail: format!("20 random model solutions (rank 1–6), max residual on [1,100] {worst:.2e} < {MODEL_RESIDUAL:e}"),
        seconds: start.elapsed().as_secs_f64(),
        budget: 1.0,
    }
}

// 2 ------------------------------------------------------------------------------------

fn criterion_2() -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let (mut used, mut blown, mut worst) = (0, 0, 0.0f64);
    let mut other = None;
    while used < LAX_SEEDS && used + blown < 10 * LAX_SEEDS {
        let r = rng.gen_range(2..=3);
        let a0 = [0, 1, 2].map(|_| random_skew(r, 0.4, &mut rng));
        match integrate(&a0, 0.0, 1.0, LAX_TOL, &IntegrateOptions::default()) {
            Ok(curve) => {
                used += 1;
                worst = worst.max(spectral_invariants(&curve).drift);
            }
            Err(NahmError::BlowUp { .. }) => blown += 1,
            Err(e) => {
                other = Some(e.to_string());
                break;
            }
        }
    }
    Line {
        id: 2,
        pass: used == LAX_SEEDS && other.is_none() && worst < LAX_DRIFT,
        detail: format!(
            "{used} su(2)/su(3) seeds ({blown} blow-ups skipped), max Lax drift {worst:.2e} < {LAX_DRIFT:e}{}",
            other.map(|e| format!("; error: {e}")).unwrap_or_default()
        ),
        seconds: start.elapsed().as_secs_f64(),
        budget: 10.0,
    }
}

// 3 ------------------------------------------------------------------------------------

fn criterion_3() -> Line {
    let start = Instant::now();
    let (_, v) = flat_fixtures().swap_remove(0);
    let result = (|| -> Result<(usize, usize, usize)> {
        let curve = solve(&v)?.curve().cloned().ok_or_else(|| NahmError::Numerical("flat fixture unsolved".into()))?;
        let dl = dual_lattice(&v.lattice)?;
        let s = sing(&v);
        let (mut tested, mut nonzero, mut skipped) = (0, 0, 0);
        for k in 0..125 {
            let xi = DualTorusPoint::new((k / 25) as f64 / 5.0, ((k / 5) % 5) as f64 / 5.0, (k % 5) as f64 / 5.0);
            if s.points.iter().any(|p| torus_distance(&p.xi, &xi, &dl) < 1e-9) {
                skipped += 1;
                continue;
            }
            let tk = total_kernel(&curve, xi, &dl, &CliffordModel::default(), &ModePolicy::default(), &KernelOptions::default())?;
            tested += 1;
            nonzero += (tk.plus_dim != 0) as usize;
        }
        Ok((tested, nonzero, skipped))
    })();
    let (pass, detail) = match result {
        Ok((t, n, s)) => (n == 0 && t > 0, format!("flat rank-2 fixture, 5³ grid: {t} points off Sing ({s} on Sing), {n} with dim Ker 𝒟⁺ ≠ 0")),
        Err(e) => (false, format!("error: {e}")),
    };
    Line { id: 3, pass, detail, seconds: start.elapsed().as_secs_f64(), budget: 60.0 }
}

// 4 ------------------------------------------------------------------------------------

fn index_check(v: &ValidatedConfig, rng: &mut ChaCha8Rng) -> Result<String> {
    let outcome = solve(v)?;
    let (curve, rep) = match outcome {
        HeteroclinicOutcome::Found { curve, report } => (curve, report),
        HeteroclinicOutcome::NotFound { reason, .. } => return Err(NahmError::Numerical(format!("not found: {reason}"))),
    };
    if rep.certified_residual > SOLVER_CERT {
        return Err(NahmError::ResidualTooLarge { residual: rep.certified_residual, tol: SOLVER_CERT });
    }
    let energy = curvature_energy(&curve, &v.lattice, v.config.solver.tol)?;
    let charge = energy / (8.0 * PI * PI);
    let gap = (charge - charge.round()).abs();
    if gap >= INTEGRALITY {
        return Err(NahmError::Numerical(format!("energy/8π² = {charge} is {gap:.2e} from an integer")));
    }
    let index = charge.round() as usize;
    let dl = dual_lattice(&v.lattice)?;
    let s = sing(v);
    let mut checked = 0;
    while checked < GENERIC_XI {
        let xi = DualTorusPoint::new(rng.gen(), rng.gen(), rng.gen());
        if s.points.iter().any(|p| torus_distance(&p.xi, &xi, &dl) < 0.05) {
            continue;
        }
        let dim = |extra| {
            let policy = ModePolicy { extra_shells: extra, ..ModePolicy::default() };
            total_kernel(&curve, xi, &dl, &CliffordModel::default(), &policy, &KernelOptions::default())
                .map(|tk| (tk.dim, tk.certified))
        };
        let ((d0, c0), (d1, c1)) = (dim(0)?, dim(1)?);
        if d0 != index || d1 != index || !c0 || !c1 {
            return Err(NahmError::Consistency(format!(
                "ξ = {:?}: dim {d0} (+1 shell: {d1}), certified {c0}/{c1}, index {index}",
                xi.coeffs.as_slice()
            )));
        }
        checked += 1;
    }
    Ok(format!("residual {:.1e}, E/8π² = {charge:.1e}, dim = {index} at {checked} ξ (+1 shell stable)", rep.certified_residual))
}

fn criterion_4() -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, v) in flat_fixtures() {
        match index_check(&v, &mut rng) {
            Ok(s) => parts.push(format!("{name}: {s}")),
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    // Non-flat ends: the solver must decline rather than certify something.
    for (name, v) in model_end_fixtures().into_iter().take(1) {
        match solve(&v) {
            Ok(HeteroclinicOutcome::NotFound { .. }) => parts.push(format!("{name}: no curve (as expected)")),
            Ok(HeteroclinicOutcome::Found { report, .. }) => {
                pass = false;
                parts.push(format!("{name}: unexpectedly certified ({:.1e})", report.certified_residual));
            }
            Err(e) => parts.push(format!("{name}: {e}")),
        }
    }
    Line { id: 4, pass, detail: parts.join("; "), seconds: start.elapsed().as_secs_f64(), budget: 600.0 }
}

// 5, 7, 9 share the per-point analysis ---------------------------------------------------

struct Analysed {
    name: String,
    certified_instanton: bool,
    result: Result<PointWeights>,
}

fn analyse_all() -> Vec<Analysed> {
    let mut out = Vec::new();
    for (set, certified) in [(flat_fixtures(), true), (model_end_fixtures(), false)] {
        for (name, v) in set {
            let s = sing(&v);
            let dl = dual_lattice(&v.lattice).expect("dual lattice");
            let mut rng = ChaCha8Rng::seed_from_u64(v.config.seed);
            for sp in &s.points {
                out.push(Analysed {
                    name: format!("{name} @ {:?}", sp.xi.coeffs.as_slice()),
                    certified_instanton: certified,
                    result: analyse_point(&v, sp, nearest_other(&s, sp, &dl), &mut rng),
                });
            }
        }
    }
    out
}

fn criterion_5(points: &[Analysed], seconds: f64) -> Line {
    let mut worst: f64 = 1.0;
    let mut errors = Vec::new();
    for p in points {
        match &p.result {
            Ok(w) => worst = w.higgs_band.iter().cloned().fold(worst, f64::max),
            Err(e) => errors.push(format!("{}: {e}", p.name)),
        }
    }
    Line {
        id: 5,
        pass: errors.is_empty() && worst <= HIGGS_BAND,
        detail: format!(
            "{} points × 3 rays × 5 radii: max/min of ‖Φ̂‖·d ≤ {worst:.4} (band {HIGGS_BAND}){}",
            points.len(),
            if errors.is_empty() { String::new() } else { format!("; {}", errors.join("; ")) }
        ),
        seconds,
        budget: 300.0 * points.len() as f64,
    }
}

fn criterion_7(points: &[Analysed], seconds: f64) -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut instanton_points = 0;
    for p in points {
        instanton_points += p.certified_instanton as usize;
        match &p.result {
            Ok(w) => {
                let ok = w.report.matches_prediction() && w.report.winding.is_some();
                pass &= ok;
                if !ok || !p.certified_instanton {
                    parts.push(format!(
                        "{}: k = {:?}, w₊ = {:?}, w₋ = {:?}, winding {:?}{}",
                        p.name,
                        w.report.fitted,
                        w.report.predicted_plus.weights,
                        w.report.predicted_minus.weights,
                        w.report.winding,
                        if ok { "" } else { " MISMATCH" }
                    ));
                }
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: {e}", p.name));
            }
        }
    }
    Line {
        id: 7,
        pass,
        detail: format!("{instanton_points} instanton points all exact; model ends: {}", parts.join("; ")),
        seconds,
        budget: f64::INFINITY,
    }
}

fn criterion_9(points: &[Analysed], seconds: f64) -> Line {
    let mut worst: f64 = 1.0;
    let mut missing = Vec::new();
    for p in points {
        let Ok(w) = &p.result else { continue };
        let blocks = w.decay.first().map_or(0, |d| d.kappa.len());
        for b in 0..blocks {
            let ratios: Vec<f64> = w.decay.iter().filter_map(|d| d.kappa[b].map(|k| k / d.distance)).collect();
            if ratios.len() < w.decay.len() {
                missing.push(p.name.clone());
                continue;
            }
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            worst = worst.max(hi / lo);
        }
    }
    Line {
        id: 9,
        pass: missing.is_empty() && worst <= DECAY_FACTOR,
        detail: format!(
            "κ/d over d ∈ {{0.05, 0.1, 0.2}}: max/min ≤ {worst:.3} (factor {DECAY_FACTOR}){}",
            if missing.is_empty() { String::new() } else { format!("; no rate fitted at {}", missing.join(", ")) }
        ),
        seconds,
        budget: 300.0,
    }
}

// 6 ------------------------------------------------------------------------------------

fn criterion_6() -> Line {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, v) in flat_fixtures().into_iter().take(1).chain(model_end_fixtures()) {
        let tp = &v.config.transform;
        for sp in &sing(&v).points {
            let r = nahmlab::monopole::ModelEnd::new(sp, &v.lattice)
                .and_then(|me| model_end_convergence(&me, Vector3::from(tp.bogomolny_offset), tp.bogomolny_h, tp.refine));
            match r {
                Ok((_, c)) => {
                    let order = c.order.unwrap_or(f64::NAN);
                    worst = worst.min(order);
                    pass &= order >= BOGOMOLNY_ORDER;
                    parts.push(format!(
                        "{name} @ {:?}: {:.2e}→{:.2e} order {order:.2}",
                        c.point,
                        c.residuals[0],
                        c.residuals[tp.refine]
                    ));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("{name}: {e}"));
                }
            }
        }
    }
    Line {
        id: 6,
        pass,
        detail: format!("worst order {worst:.3} ≥ {BOGOMOLNY_ORDER}; {}", parts.join("; ")),
        seconds: start.elapsed().as_secs_f64(),
        budget: 900.0,
    }
}

// 8 ------------------------------------------------------------------------------------

fn criterion_8() -> Line {
    let start = Instant::now();
    let l = Lattice3::cubic();
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    let mut failures = Vec::new();
    let (mut cases, mut stalks_checked) = (0, 0);
    for k in 0..100 {
        let r = 1 + k % 6;
        let plus = random_model(r, &mut rng);
        let minus = random_model(r, &mut rng);
        let s = match singularity_set(&plus, &minus, &l) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("case {k}: {e}"));
                continue;
            }
        };
        for sp in &s.points {
            let Some(local) = &sp.plus else { continue };
            cases += 1;
            let r = graded_from_model(&plus, Side::Plus, &sp.xi, &l).and_then(|g| {
                let fm = fm_stalks(&g);
                if fm.total_length() != g.rank || fm.h0 != 0 || fm.h2 != 0 {
                    return Err(NahmError::Consistency(format!("stalk length {} vs rank {}", fm.total_length(), g.rank)));
                }
                stalks_checked += 1;
                let su2 = su2_weights(&local.nn)?;
                let jordan = g.jordan_at(&[0.0, 0.0]);
                if jordan != su2.weights {
                    return Err(NahmError::Consistency(format!("Jordan {jordan:?} vs su(2) {:?}", su2.weights)));
                }
                Ok(())
            });
            if let Err(e) = r {
                failures.push(format!("case {k}: {e}"));
            }
        }
        // Conjugation invariance of the prediction.
        if let Some(sp) = s.points.first() {
            let u = random_unitary(r, &mut rng);
            let pred = |p: &nahmlab::model::ModelSolution, m: &nahmlab::model::ModelSolution| {
                Ok::<_, NahmError>(predicted_weights(
                    &graded_from_model(p, Side::Plus, &sp.xi, &l)?,
                    &graded_from_model(m, Side::Minus, &sp.xi, &l)?,
                ))
            };
            match (pred(&plus, &minus), pred(&plus.conjugate(&u), &minus.conjugate(&u))) {
                (Ok(a), Ok(b)) if a == b => {}
                (a, b) => failures.push(format!("case {k}: conjugation changed the prediction ({a:?} vs {b:?})")),
            }
        }
    }
    // Parabolic-degree fixtures, exact.
    let fixtures = [
        (ParabolicLedger { rank: 2, c1: 0, divisors: [DivisorWeights { weights: vec![(Rational::new(-1, 2), 2)] }, DivisorWeights::default()] }, Rational::new(1, 1)),
        (
            ParabolicLedger {
                rank: 3,
                c1: -1,
                divisors: [
                    DivisorWeights { weights: vec![(Rational::new(-1, 3), 3)] },
                    DivisorWeights { weights: vec![(Rational::new(0, 1), 3)] },
                ],
            },
            Rational::new(0, 1),
        ),
        (
            ParabolicLedger {
                rank: 2,
                c1: 1,
                divisors: [
                    DivisorWeights { weights: vec![(Rational::new(-1, 4), 1), (Rational::new(-3, 4), 1)] },
                    DivisorWeights { weights: vec![(Rational::new(-1, 2), 2)] },
                ],
            },
            Rational::new(3, 1),
        ),
    ];
    for (i, (ledger, want)) in fixtures.iter().enumerate() {
        match parabolic_degree(ledger) {
            Ok(d) if &d == want => {}
            other => failures.push(format!("par-deg fixture {i}: {other:?}, want {want:?}")),
        }
    }
    // Instanton ledgers: ends sharing Tr Γ, as conserved by the flow, have degree 0.
    let mut ledgers = 0;
    for k in 0..20 {
        let r = 1 + k % 6;
        let plus = random_model(r, &mut rng);
        let u = random_unitary(r, &mut rng);
        let minus = plus.conjugate(&u);
        match instanton_ledger(&plus, &minus, &l).and_then(|led| parabolic_degree(&led)) {
            Ok(d) if d.is_zero() => ledgers += 1,
            other => failures.push(format!("instanton ledger {k}: {other:?}")),
        }
    }
    for (name, v) in flat_fixtures() {
        match instanton_ledger(&v.plus, &v.minus, &v.lattice).and_then(|led| parabolic_degree(&led)) {
            Ok(d) if d.is_zero() => ledgers += 1,
            other => failures.push(format!("{name} ledger: {other:?}")),
        }
    }
    Line {
        id: 8,
        pass: failures.is_empty() && cases >= 100,
        detail: format!(
            "{cases} graded/su(2) comparisons, {stalks_checked} stalk tables, {} par-deg fixtures, {ledgers} degree-0 ledgers{}",
            fixtures.len(),
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
        seconds: start.elapsed().as_secs_f64(),
        budget: 5.0,
    }
}

fn main() {
    // Harness flags that `cargo test` forwards (e.g. `--nocapture`) do not apply here.
    println!();
    let mut lines = vec![criterion_1().print(), criterion_2().print(), criterion_3().print(), criterion_4().print()];
    let start = Instant::now();
    let points = analyse_all();
    let analysis = start.elapsed().as_secs_f64();
    lines.push(criterion_5(&points, analysis).print());
    lines.push(criterion_6().print());
    lines.push(criterion_7(&points, analysis).print());
    lines.push(criterion_8().print());
    lines.push(criterion_9(&points, analysis).print());
    let failed = lines.iter().filter(|l| !l.ok()).count();
    println!("{} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
