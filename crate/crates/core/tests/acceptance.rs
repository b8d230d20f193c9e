//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{equilateral, heavy_anchor, random_constraint, random_instance, rng, square_halfspace, step_pairs, uniform_box};
use fermat_weber::certify::{anchor_optimality, fixed_point_residual, vi_certificate, DEFAULT_VI_SAMPLES, DEFAULT_VI_SEED};
use fermat_weber::oracle::{final_grid_pitch, grid_search_2d, projected_subgradient, OracleConfig};
use fermat_weber::problem::DEFAULT_ETA_ANCHOR as ETA;
use fermat_weber::stability::{continuity_probe, finite_difference_check, PerturbationSpec};
use fermat_weber::{solve, vector, ProblemInstance, SolveResult, SolveStatus, Tolerances, Vector};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// The seeded random suite shared by the trace criteria.
struct Suite {
    instances: Vec<ProblemInstance>,
    results: Vec<SolveResult>,
}

fn build_suite() -> Suite {
    let instances: Vec<ProblemInstance> = (0..200u64)
        .map(|i| random_instance(1000 + i, (2, 10), i as usize))
        .collect();
    let tol = Tolerances::default();
    let results = instances.iter().map(|inst| solve(inst, &tol, None).unwrap()).collect();
    Suite { instances, results }
}

fn symmetric_solve() -> Outcome {
    let inst = equilateral();
    let mut pass = true;
    let mut details = Vec::new();
    // The default start is the centroid, which already is the answer.
    for (label, x0) in [("default start", None), ("start (0.1,0.1)", Some(vector(&[0.1, 0.1])))] {
        let started = Instant::now();
        let res = solve(&inst, &Tolerances::default(), x0.as_ref()).unwrap();
        let elapsed = started.elapsed();
        let dx = (&res.x_final - vector(&[0.5, 0.28867513])).amax();
        let df = (res.objective - 1.7320508).abs();
        pass &= dx <= 1e-6 && df <= 1e-6 && res.iterations < 2000 && elapsed < Duration::from_millis(100);
        details.push(format!(
            "{label}: |dx| {dx:.2e}, |df| {df:.2e}, {} iterations, {:.3} ms",
            res.iterations,
            elapsed.as_secs_f64() * 1e3
        ));
    }
    outcome(pass, details.join("; "))
}

fn constrained_solve() -> Outcome {
    let inst = square_halfspace();
    let res = solve(&inst, &Tolerances::default(), None).unwrap();
    let dx = (&res.x_final - vector(&[0.0, 0.5])).amax();
    let df = (res.objective - 4.2360680).abs();
    let cfg = OracleConfig::default();
    let grid = grid_search_2d(&inst, &cfg).unwrap();
    let dg = (&grid - &res.x_final).amax();
    let pitch = final_grid_pitch(&cfg);
    let pass = dx <= 1e-6 && df <= 1e-6 && dg <= 2.0 * pitch;
    outcome(pass, format!("|dx| {dx:.2e}, |df| {df:.2e}, grid offset {dg:.2e} vs 2*pitch {:.2e}", 2.0 * pitch))
}

fn anchor_case() -> Outcome {
    let inst = heavy_anchor();
    let res = solve(&inst, &Tolerances::default(), None).unwrap();
    let exact = res.x_final == vector(&[0.0, 0.0]);
    let margin = anchor_optimality(&inst, 0).margin.unwrap_or(f64::NAN);
    let dm = (margin - (3.0 - 2f64.sqrt())).abs();
    let oracle = projected_subgradient(&inst, &OracleConfig::default()).unwrap();
    let pass = res.status == SolveStatus::AnchorOptimal(0) && exact && dm <= 1e-9 && oracle.objective >= 2.0 - 1e-6;
    outcome(
        pass,
        format!(
            "status {}, x exact {exact}, margin error {dm:.2e}, oracle best f {:.10}",
            res.status, oracle.objective
        ),
    )
}

fn descent(suite: &Suite) -> Outcome {
    let mut pairs = 0;
    let mut violations = 0;
    for (inst, res) in suite.instances.iter().zip(&suite.results) {
        for (x, next) in step_pairs(inst, res) {
            let fx = inst.objective(&x).unwrap();
            pairs += 1;
            if inst.objective(&next).unwrap() > fx + 1e-12 * (1.0 + fx) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations in {pairs} steps over 200 instances"))
}

fn fejer(suite: &Suite) -> Outcome {
    let reference = Tolerances::default().with_epsilon(1e-13).with_max_iter(1_000_000);
    let mut pairs = 0;
    let mut worst = f64::NEG_INFINITY;
    for (inst, res) in suite.instances.iter().zip(&suite.results).take(50) {
        let star = solve(inst, &reference, None).unwrap().x_final;
        for (x, next) in step_pairs(inst, res) {
            pairs += 1;
            worst = worst.max((&next - &star).norm() - (&x - &star).norm());
        }
    }
    outcome(worst <= 1e-10, format!("largest distance increase {worst:.2e} over {pairs} steps"))
}

fn surrogate(suite: &Suite) -> Outcome {
    let mut worst = [f64::NEG_INFINITY; 4];
    let mut checks = 0usize;
    for (idx, (inst, res)) in suite.instances.iter().zip(&suite.results).enumerate() {
        let mut r = rng(5000 + idx as u64);
        let around = inst.weighted_mean();
        let zs: Vec<Vector> = (0..50)
            .map(|_| inst.constraint().sample_feasible(&around, 1.0, &mut r))
            .collect();
        let fz: Vec<f64> = zs.iter().map(|z| inst.objective(z).unwrap()).collect();
        for (x, next) in step_pairs(inst, res) {
            let fx = inst.objective(&x).unwrap();
            let f_next = inst.objective(&next).unwrap();
            let l = inst.lipschitz_weight(&x, ETA).unwrap();
            let t = inst.weiszfeld_map(&x, ETA).unwrap();
            let h_next = inst.auxiliary_value(&next, &x, ETA).unwrap();

            worst[0] = worst[0].max(2.0 * f_next - fx - h_next);
            let delta = &next - &x;
            let bound = fx + 0.5 * l * (delta.norm_squared() + 2.0 * (&x - &t).dot(&delta));
            worst[1] = worst[1].max(f_next - bound);
            for (z, f_z) in zs.iter().zip(&fz) {
                let h_z = inst.auxiliary_value(z, &x, ETA).unwrap();
                worst[0] = worst[0].max(2.0 * f_z - fx - h_z);
                worst[3] = worst[3].max(h_next - h_z);
                let rhs = 0.5 * l * ((&x - z).norm_squared() - (&next - z).norm_squared());
                worst[2] = worst[2].max(f_next - f_z - rhs);
                checks += 1;
            }
        }
    }
    let pass = worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-9 && worst[3] <= 1e-9;
    outcome(
        pass,
        format!(
            "worst excess: minorization {:.2e}, surrogate bound {:.2e}, sandwich {:.2e}, minimizer {:.2e} ({checks} step/z pairs)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn certification(suite: &Suite) -> Outcome {
    let tol = Tolerances::default();
    let mut checked = 0;
    let mut worst_fpr: f64 = 0.0;
    let mut worst_vi: f64 = 0.0;
    for (inst, res) in suite.instances.iter().zip(&suite.results) {
        if res.status != SolveStatus::Converged {
            continue;
        }
        checked += 1;
        worst_fpr = worst_fpr.max(fixed_point_residual(inst, &res.x_final, ETA).unwrap());
        worst_vi = worst_vi.max(vi_certificate(inst, &res.x_final, DEFAULT_VI_SAMPLES, DEFAULT_VI_SEED, ETA).unwrap());
    }
    let pass = checked > 0 && worst_fpr <= 10.0 * tol.epsilon && worst_vi <= 1e-6;
    outcome(
        pass,
        format!("{checked} converged outputs, max residual {worst_fpr:.2e}, max vi {worst_vi:.2e}"),
    )
}

fn projections() -> Outcome {
    let mut failures = Vec::new();
    for variant in 0..common::VARIANTS {
        let mut r = rng(7000 + variant as u64);
        let mut bad = 0;
        for _ in 0..1000 {
            let n = r.random_range(2..=10);
            let set = random_constraint(variant, n, &mut r);
            let x = uniform_box(n, 3.0, &mut r);
            let y = uniform_box(n, 3.0, &mut r);
            let px = set.project(&x).unwrap();
            let py = set.project(&y).unwrap();
            let nonexpansive = (&px - &py).norm() <= (&x - &y).norm() + 1e-12;
            let vi = (&x - &px).dot(&(&py - &px)) <= 1e-10;
            let idempotent = (set.project(&px).unwrap() - &px).amax() <= 1e-12;
            if !(nonexpansive && vi && idempotent) {
                bad += 1;
            }
        }
        if bad > 0 {
            failures.push(format!("variant {variant}: {bad}"));
        }
    }
    let detail = if failures.is_empty() {
        "7 variants x 1000 pairs, no violations".to_string()
    } else {
        failures.join(", ")
    };
    outcome(failures.is_empty(), detail)
}

fn value_derivative() -> Outcome {
    let tol = Tolerances::default();
    let eq = finite_difference_check(&equilateral(), 1e-5, &tol).unwrap();
    let sq = finite_difference_check(&square_halfspace(), 1e-5, &tol).unwrap();
    let pass = eq.max_error <= 1e-4 && sq.max_error <= 1e-4 && eq.checked > 0 && sq.checked > 0;
    outcome(
        pass,
        format!("max error equilateral {:.2e}, square/halfspace {:.2e}", eq.max_error, sq.max_error),
    )
}

fn continuity() -> Outcome {
    let inst = equilateral();
    let spec = PerturbationSpec::random(vec![1e-1, 1e-2, 1e-3, 1e-4], 8, 0);
    let report = continuity_probe(&inst, &spec, &Tolerances::default()).unwrap();
    let total = inst.total_weight();
    let mut monotone = true;
    let mut lipschitz = true;
    let mut worst_small: f64 = 0.0;
    let mut flagged = 0;
    for dir in 0..8 {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.direction == dir).collect();
        let shifts: Vec<Option<f64>> = rows.iter().map(|r| r.solution_shift).collect();
        for w in shifts.windows(2) {
            if let (Some(a), Some(b)) = (w[0], w[1]) {
                monotone &= b <= a;
            }
        }
        for r in &rows {
            match (r.solution_shift, r.value_shift) {
                (Some(dm), Some(dv)) => {
                    lipschitz &= dv <= total * r.delta;
                    if r.delta == 1e-4 {
                        worst_small = worst_small.max(dm);
                    }
                }
                _ => flagged += 1,
            }
        }
    }
    let pass = monotone && lipschitz && worst_small <= 1e-3 && flagged == 0;
    outcome(
        pass,
        format!("monotone {monotone}, value bound {lipschitz}, max shift at 1e-4 {worst_small:.2e}, flagged rows {flagged}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let inst = random_instance(20_000 + i, (2, 20), i as usize);
        let f = solve(&inst, &tol, None).unwrap().objective;
        let g = projected_subgradient(&inst, &OracleConfig::default()).unwrap().objective;
        worst = worst.max((f - g).abs() / (1.0 + f));
    }
    outcome(worst <= 1e-3, format!("max |df|/(1+f) {worst:.2e} over 50 instances"))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "symmetric unconstrained solve", symmetric_solve()));
    results.push((2, "constrained solve", constrained_solve()));
    results.push((3, "anchor case", anchor_case()));
    let suite = build_suite();
    results.push((4, "descent suite", descent(&suite)));
    results.push((5, "Fejer suite", fejer(&suite)));
    results.push((6, "surrogate suite", surrogate(&suite)));
    results.push((7, "certification equivalence", certification(&suite)));
    results.push((8, "projection properties", projections()));
    results.push((9, "value-function derivative", value_derivative()));
    results.push((10, "stability", continuity()));
    let mut eleven = oracle_equivalence();
    let elapsed = started.elapsed();
    eleven.pass &= elapsed < Duration::from_secs(300);
    eleven.detail = format!("{}; suite runtime {:.1} s", eleven.detail, elapsed.as_secs_f64());
    results.push((11, "oracle equivalence", eleven));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} [{tag}] {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
