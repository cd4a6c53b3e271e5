//! Acceptance run. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails. Criteria run one after another so the large solves do
//! not compete for memory.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ddfem::drivers::{self, Study, COOK_DIAGONAL, COOK_TIP, MU};
use ddfem::mesh_io;
use ddfem_core::exact::{verify_exact, LinearManufactured};
use ddfem_core::mesh::{structured_square_mesh, Diagonal};
use ddfem_core::postprocess::{FieldSlopes, Slope};
use ddfem_core::{Constraint, MixedSpaces, Pair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn require(ok: bool, what: String) -> Check {
    if ok {
        Ok(what)
    } else {
        Err(what)
    }
}

fn last(s: Option<FieldSlopes>) -> Option<Slope> {
    s.map(|s| s.last)
}

fn show(s: Option<Slope>) -> String {
    match s {
        Some(Slope::Rate(r)) => format!("{r:.3}"),
        Some(Slope::Exact) => "exact".into(),
        None => "missing".into(),
    }
}

fn study_failures(study: &Study) -> Option<String> {
    let f: Vec<String> = study
        .rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|e| format!("level {}: {e}", r.level)))
        .collect();
    (!f.is_empty()).then(|| f.join("; "))
}

/// Last-interval slopes of u, K, P (H(div)), p and corrected u against
/// lower bounds.
fn slopes_at_least(study: &Study, min: [f64; 5]) -> Check {
    if let Some(f) = study_failures(study) {
        return Err(f);
    }
    let r = &study.report;
    let got = [last(r.u), last(r.k), last(r.stress_hdiv), last(r.p), last(r.u_corr)];
    let names = ["u", "K", "P", "p", "u_corr"];
    let ok = got.iter().zip(min).all(|(s, m)| s.is_some_and(|s| s.at_least(m)));
    let text = names
        .iter()
        .zip(got)
        .zip(min)
        .map(|((n, s), m)| format!("{n} {} (>= {m})", show(s)))
        .collect::<Vec<_>>();
    require(ok, text.join(", "))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<[f64; 2]> = (0..100)
        .map(|_| {
            let r = rng.gen_range(0.5..1.0);
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    let v = verify_exact(3.0, MU, &points, 1e-6);
    require(v <= 1e-6, format!("max strong-form violation {v:.2e}"))
}

fn criterion_2() -> Check {
    let mut worst = 0.0f64;
    for (pair, levels) in [(Pair::Low, &[4, 8, 16, 32][..]), (Pair::High, &[4, 8, 16][..])] {
        let study = drivers::run_inflation(levels, pair, 1.0, Constraint::C1, true).map_err(|e| e.to_string())?;
        if let Some(f) = study_failures(&study) {
            return Err(f);
        }
        for e in &study.report.levels {
            let u_corr = e.u_corr.ok_or("missing corrected displacement")?;
            worst = [e.u, e.k, e.stress_hdiv, e.p, u_corr].into_iter().fold(worst, f64::max);
        }
    }
    require(worst <= 1e-8, format!("largest error {worst:.2e}"))
}

fn criterion_3() -> Check {
    let study =
        drivers::run_inflation(&[4, 8, 16, 32], Pair::Low, 3.0, Constraint::C1, true).map_err(|e| e.to_string())?;
    slopes_at_least(&study, [0.9, 1.8, 1.8, 1.8, 2.6])
}

fn criterion_4() -> Check {
    let study =
        drivers::run_inflation(&[4, 8, 16], Pair::High, 3.0, Constraint::C1, true).map_err(|e| e.to_string())?;
    slopes_at_least(&study, [1.8, 2.7, 2.7, 2.7, 3.5])
}

/// Raw and corrected tip deflections at `f = 0.2` against the reference
/// rows for `n = 6, 12, 24`.
fn criterion_5() -> Check {
    let table = [
        (
            Pair::Low,
            0.02,
            [[-12.0410, 12.9525], [-12.8011, 13.5491], [-13.2271, 13.8653]],
            [[-14.2161, 14.1681], [-13.9479, 14.1875], [-13.8282, 14.1967]],
        ),
        (
            Pair::High,
            0.01,
            [[-13.6393, 14.1568], [-13.6878, 14.1896], [-13.7104, 14.1988]],
            [[-14.0563, 14.1492], [-13.8711, 14.1790], [-13.7904, 14.1915]],
        ),
    ];
    let mut ok = true;
    let mut worst = [0.0f64; 2];
    let mut lines = Vec::new();
    for (pair, tol, raw, corr) in table {
        for (i, n) in [6, 12, 24].into_iter().enumerate() {
            let solved = drivers::solve_cook(n, pair, 0.2, Constraint::C2, COOK_DIAGONAL)
                .map_err(|e| format!("n = {n}: {e}"))?;
            let u = drivers::displacement_at(&solved, COOK_TIP, false).map_err(|e| e.to_string())?;
            let c = drivers::displacement_at(&solved, COOK_TIP, true).map_err(|e| e.to_string())?;
            let dr = rel(u[0], raw[i][0]).max(rel(u[1], raw[i][1]));
            let dc = rel(c[0], corr[i][0]).max(rel(c[1], corr[i][1]));
            ok &= dr <= tol && dc <= tol;
            let k = pair.order() - 1;
            worst[k] = worst[k].max(dr).max(dc);
            if n == 6 {
                lines.push(format!("k={} n=6 ({:.4}, {:.4})", pair.order(), u[0], u[1]));
            }
        }
    }
    lines.push(format!(
        "worst relative deviation k=1 {:.2}%, k=2 {:.2}%",
        100.0 * worst[0],
        100.0 * worst[1]
    ));
    require(ok, lines.join(", "))
}

fn criterion_6() -> Check {
    let solved = drivers::solve_cook(24, Pair::Low, 0.4, Constraint::C2, COOK_DIAGONAL).map_err(|e| e.to_string())?;
    let u = drivers::displacement_at(&solved, COOK_TIP, false).map_err(|e| e.to_string())?;
    let expect = [-21.9595, 21.2735];
    let d = rel(u[0], expect[0]).max(rel(u[1], expect[1]));
    let its: Vec<usize> = solved.report.steps.iter().map(|s| s.iterations).collect();
    let residual = solved.report.final_residual;
    let ok = d <= 0.02 && its.iter().all(|&i| i <= 15) && residual <= 1e-9;
    require(
        ok,
        format!(
            "tip ({:.4}, {:.4}), deviation {:.2}%, iterations per step {its:?}, residual {residual:.1e}",
            u[0],
            u[1],
            100.0 * d
        ),
    )
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut jac = 0.0f64;
    for pair in [Pair::Low, Pair::High] {
        for variant in [Constraint::C1, Constraint::C2] {
            let problem = common::perturbed_problem(pair, variant);
            for amplitude in [0.0, 0.005, 0.015] {
                let mut x: Vec<f64> = (0..problem.n_dofs())
                    .map(|_| rng.gen_range(-1.0..1.0) * amplitude)
                    .collect();
                let p = problem.layout().p();
                x[p].iter_mut().for_each(|v| *v += problem.material.mu);
                problem.apply_constraints(&mut x);
                jac = jac.max(common::fd_defect(&problem, &x, &mut rng));
            }
        }
    }
    let mut commuting = 0.0f64;
    let mut normal = 0.0f64;
    let mut dual = 0.0f64;
    let mut linear = 0.0f64;
    for k in 1..=2 {
        for seed in 0..4 {
            let mesh = common::wobbly_mesh(2, seed);
            commuting = commuting.max(common::commuting_defect(&mesh, k, &mut rng));
            normal = normal.max(common::normal_trace_jump(&common::wobbly_mesh(3, seed), k));
        }
        dual = dual.max(common::dual_basis_defect(k));
        let (a, b) = common::linearisation_defect(Pair::from_order(k).unwrap());
        linear = linear.max(a).max(b);
    }
    let quad = (0..=10).map(common::quadrature_defect).fold(0.0f64, f64::max);
    let mesh = structured_square_mesh(1, Diagonal::default()).map_err(|e| e.to_string())?;
    let totals: Vec<usize> = [Pair::Low, Pair::High]
        .into_iter()
        .map(|p| MixedSpaces::new(&mesh, p).map(|s| s.local_dofs()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let ok = jac <= 1e-6
        && commuting <= 1e-11
        && dual <= 1e-12
        && normal <= 1e-11
        && quad <= 1e-13
        && totals == [29, 60]
        && linear <= 1e-12;
    require(
        ok,
        format!(
            "jacobian {jac:.1e}, commuting {commuting:.1e}, dual {dual:.1e}, normal jump {normal:.1e}, \
             quadrature {quad:.1e}, local dofs {totals:?}, linearisation {linear:.1e}"
        ),
    )
}

fn criterion_8() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for (pair, levels) in [(Pair::Low, &[4, 8, 16, 32][..]), (Pair::High, &[4, 8, 16][..])] {
        let k = pair.order() as f64;
        let exact = LinearManufactured::in_space(MU, pair.order()).ok_or("no in-space solution")?;
        let study = drivers::run_linearised(&[2, 4], pair, &exact, false).map_err(|e| e.to_string())?;
        if let Some(f) = study_failures(&study) {
            return Err(f);
        }
        let in_space = study
            .report
            .levels
            .iter()
            .map(|e| e.u.max(e.k).max(e.stress_hdiv).max(e.p))
            .fold(0.0, f64::max);
        ok &= in_space <= 1e-9;

        let study =
            drivers::run_linearised(levels, pair, &LinearManufactured::smooth(MU), true).map_err(|e| e.to_string())?;
        if let Some(f) = study_failures(&study) {
            return Err(f);
        }
        let r = &study.report;
        let checks = [
            ("u", last(r.u), k, 0.2),
            ("K", last(r.k), k + 1.0, 0.2),
            ("P", last(r.stress_hdiv), k, 0.2),
            ("p", last(r.p), k + 1.0, 0.2),
            ("u_corr", last(r.u_corr), k + 2.0, 0.3),
        ];
        for (_, s, nominal, tol) in checks {
            ok &= s.and_then(Slope::value).is_some_and(|v| (v - nominal).abs() <= tol);
        }
        let text: Vec<String> = checks
            .iter()
            .map(|(n, s, nominal, _)| format!("{n} {} ({nominal})", show(*s)))
            .collect();
        lines.push(format!(
            "k={} in-space {in_space:.1e}, slopes {}",
            pair.order(),
            text.join(" ")
        ));
    }
    require(ok, lines.join("; "))
}

fn criterion_9() -> Check {
    let mesh = mesh_io::read_mesh(drivers::asset_path("perforated.msh")).map_err(|e| e.to_string())?;
    let solved = drivers::solve_stretch(mesh, Pair::High, 1.5, Constraint::C1).map_err(|e| e.to_string())?;
    let s = drivers::jacobian_stats(&solved).map_err(|e| e.to_string())?;
    let ok = s.negative as f64 <= 1e-3 * s.count as f64 && (0.95..=1.05).contains(&s.median);
    require(
        ok,
        format!("{} of {} nodes negative, median J {:.6}", s.negative, s.count, s.median),
    )
}

#[test]
fn acceptance() {
    let criteria: [(fn() -> Check, u64); 9] = [
        (criterion_1, 1),
        (criterion_2, 60),
        (criterion_3, 600),
        (criterion_4, 1200),
        (criterion_5, 600),
        (criterion_6, 300),
        (criterion_7, 60),
        (criterion_8, 300),
        (criterion_9, 600),
    ];
    let mut failed = Vec::new();
    for (i, (run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(limit);
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let time = format!("{:.1} s of {limit} s", elapsed.as_secs_f64());
        println!(
            "criterion {}: {} [{time}] {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
