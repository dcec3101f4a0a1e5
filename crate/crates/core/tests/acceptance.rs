//! Acceptance suite. Runs without the libtest harness so the per-criterion
//! `PASS`/`FAIL` lines are always printed; criteria run sequentially so the
//! wall-clock limits are measured without interference. Exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use homogen_core::bench::{fit_rate, negative_norm_surrogate, predicted_constants, run_sweep, SweepPlan};
use homogen_core::cell::{effective_tensor, mass_balance_check, solve_cell, EffectiveModel, CELL_TOL};
use homogen_core::corrector::ErrorReport;
use homogen_core::fields::{make_cosine_laminate, make_cosine_1d, FieldSpec, SourceSpec, Tensor};
use homogen_core::grid::Grid;
use homogen_core::linalg::SolveOptions;
use homogen_core::pipeline::{run_case, CaseSpec};
use homogen_core::report::to_json_string;

type Check = Result<String, String>;
type Metric = fn(&ErrorReport) -> f64;
type Criterion = (&'static str, fn() -> Check, Duration);

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `∫₀¹ g` by composite Simpson on `n` (even) panels.
fn simpson(g: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = g(0.0) + g(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    s * h / 3.0
}

fn effective_coefficient() -> Check {
    let cell = solve_cell(&make_cosine_1d(), 256, SolveOptions::with_tol(CELL_TOL)).map_err(err)?;
    let k0 = effective_tensor(&cell).get(0, 0);
    let grid = *cell.grid();
    let n_err = (0..grid.node_count())
        .map(|i| {
            let y = grid.coords(i)[0];
            (cell.corrector(0).values()[i] - (2.0 * PI * y).sin() / (4.0 * PI)).abs()
        })
        .fold(0.0, f64::max);
    ensure((k0 - 0.5).abs() < 1e-6, format!("K0 = {k0}"))?;
    ensure(n_err < 1e-3, format!("corrector max error {n_err:.3e}"))?;
    Ok(format!("K0 = {k0:.12}, |K0 - 0.5| = {:.2e}, corrector max error {n_err:.2e}", (k0 - 0.5).abs()))
}

fn mass_balance() -> Check {
    let mut worst: f64 = 0.0;
    let cases = [(make_cosine_1d(), vec![[1.0, 0.0]]), (make_cosine_laminate(), vec![[1.0, 0.0], [0.0, 1.0]])];
    for (field, etas) in &cases {
        for &eta in etas {
            let mb = mass_balance_check(field, 128, eta).map_err(err)?;
            ensure(mb.defect < 1e-8, format!("{} eta={eta:?}: defect {:.3e}", field.name(), mb.defect))?;
            worst = worst.max(mb.defect);
        }
    }
    Ok(format!("worst |<K grad p> - K0 eta| = {worst:.2e} (1D field has only e1)"))
}

fn laminate_oracle() -> Check {
    // independent oracle: harmonic mean across the layers, arithmetic mean along them
    let across = 1.0 / simpson(|t| 2.0 + (2.0 * PI * t).cos(), 200_000);
    let along = simpson(|t| 1.0 / (2.0 + (2.0 * PI * t).cos()), 200_000);
    ensure((along - 0.577_350_269_189_625_8).abs() < 1e-12, format!("quadrature oracle {along}"))?;
    let cell = solve_cell(&make_cosine_laminate(), 256, SolveOptions::with_tol(CELL_TOL)).map_err(err)?;
    let k0 = effective_tensor(&cell);
    let expected = Tensor::diag([across, along]);
    let diff = k0.max_abs_diff(&expected);
    ensure(diff < 1e-5, format!("K0 = {:?}, max deviation {diff:.3e}", k0.row_major()))?;
    Ok(format!("K0 = diag({:.9}, {:.9}), off-diagonal {:.1e}, max deviation {diff:.2e}", k0.get(0, 0), k0.get(1, 1), k0.get(0, 1)))
}

fn cosine_example() -> Check {
    let (l, d) = (1.0, 64.0);
    let r = run_case(&CaseSpec::cosine_example(d / l, 16)).map_err(err)?.report;
    let c = predicted_constants(l, d).map_err(err)?;
    let q_l2 = r.e_l2 / c.l2_at(d);
    let q_h1 = r.e_h1 / c.h1_at(d);
    let q_e = r.e_energy / c.energy_at(d);
    let msg = format!("e_L2 ratio {q_l2:.4}, e_H1 ratio {q_h1:.4}, energy ratio {q_e:.4}");
    ensure((0.95..=1.05).contains(&q_l2) && (0.95..=1.05).contains(&q_h1) && (0.9..=1.1).contains(&q_e), msg.clone())?;
    Ok(msg)
}

fn reports_of(plan: &SweepPlan, workers: usize) -> Result<Vec<ErrorReport>, String> {
    run_sweep(plan, workers)
        .map_err(err)?
        .into_iter()
        .map(|p| p.report.ok_or_else(|| p.error.unwrap_or_default()))
        .collect()
}

fn rate_of(reports: &[ErrorReport], metric: impl Fn(&ErrorReport) -> f64) -> Result<(f64, f64), String> {
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.eps, metric(r))).collect();
    let fit = fit_rate(&pts).map_err(err)?;
    Ok((fit.rate, fit.r2))
}

fn rates_1d() -> Check {
    let plan = SweepPlan::new(FieldSpec::Cosine1d, SourceSpec::Cosine1d, 1.0, vec![16.0, 32.0, 64.0, 128.0], 16);
    let reports = reports_of(&plan, 4)?;
    let mut parts = Vec::new();
    let mut ok = true;
    let metrics: [(&str, Metric); 3] =
        [("e_L2", |r| r.e_l2), ("e_H1", |r| r.e_h1), ("e_energy", |r| r.e_energy)];
    for (name, m) in metrics {
        let (rate, r2) = rate_of(&reports, m)?;
        ok &= (rate - 2.0).abs() <= 0.1 && r2 > 0.999;
        parts.push(format!("{name} rate {rate:.4} (r2 {r2:.6})"));
    }
    let msg = parts.join(", ");
    ensure(ok, msg.clone())?;
    Ok(msg)
}

fn rates_2d() -> Check {
    let plan = SweepPlan::new(FieldSpec::SeparableCosine, SourceSpec::Uniform { value: 1.0 }, 1.0, vec![8.0, 16.0, 32.0], 16);
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let reports = reports_of(&plan, workers)?;
    let (l2, _) = rate_of(&reports, |r| r.e_l2)?;
    let (h1, _) = rate_of(&reports, |r| r.e_h1)?;
    let improves = reports.iter().all(|r| r.e_h1 < r.e_h1_p0);
    let ratios: Vec<String> = reports.iter().map(|r| format!("{:.3}", r.e_h1 / r.e_h1_p0)).collect();
    let msg = format!(
        "e_L2 rate {l2:.4}, e_H1 rate {h1:.4}, e_H1(p1)/e_H1(p0) per point [{}]",
        ratios.join(", ")
    );
    ensure((l2 - 2.0).abs() <= 0.2 && h1 >= 0.9 && improves, msg.clone())?;
    Ok(msg)
}

fn weak_averaging() -> Check {
    let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0, 128.0]
        .iter()
        .map(|&k| {
            let eps = 1.0 / k;
            negative_norm_surrogate(|x, y| x * (2.0 * PI * y).cos(), eps, 32).map(|s| (eps, s))
        })
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let fit = fit_rate(&pts).map_err(err)?;
    let msg = format!("surrogate rate {:.4} (r2 {:.6})", fit.rate, fit.r2);
    ensure((fit.rate - 1.0).abs() <= 0.15, msg.clone())?;
    Ok(msg)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

fn invariants() -> Check {
    let mut checked = 0;
    for spec in FieldSpec::catalog() {
        let field = spec.build().map_err(err)?;
        let name = field.name().to_string();
        let dim = field.dim();
        let n = 32;
        let cell = solve_cell(&field, n, SolveOptions::with_tol(CELL_TOL)).map_err(err)?;
        let model = EffectiveModel::from_cell(&cell);
        let k0 = model.k0;

        ensure(k0.asymmetry() <= 1e-10 * k0.eigenvalues()[dim - 1], format!("{name}: K0 asymmetric"))?;
        ensure(k0.eigenvalues()[0] > 0.0, format!("{name}: K0 not positive definite"))?;
        let (upper, lower) = model.bracket_margins();
        let tol = 1e-10 * model.big_lambda;
        ensure(upper >= -tol && lower >= -tol, format!("{name}: Voigt-Reuss margins {upper:.3e}, {lower:.3e}"))?;

        for u in cell.correctors() {
            let mean = u.values().iter().sum::<f64>() / u.values().len() as f64;
            ensure(mean.abs() < 1e-12, format!("{name}: corrector mean {mean:.3e}"))?;
        }

        let scaled = solve_cell(&field.scaled(3.0).map_err(err)?, n, SolveOptions::with_tol(CELL_TOL)).map_err(err)?;
        let k0s = effective_tensor(&scaled);
        ensure(k0s.max_abs_diff(&k0.scale(3.0)) <= 1e-9 * model.big_lambda * 3.0, format!("{name}: scaling"))?;

        if dim == 2 {
            let swapped = solve_cell(&field.axes_swapped(), n, SolveOptions::with_tol(CELL_TOL)).map_err(err)?;
            let k0p = effective_tensor(&swapped);
            let expected = Tensor { dim: 2, m: [[k0.m[1][1], k0.m[1][0]], [k0.m[0][1], k0.m[0][0]]] };
            ensure(k0p.max_abs_diff(&expected) <= 1e-9 * model.big_lambda, format!("{name}: permutation"))?;
        }

        // metrics under a constant flux shift, and determinism of the report
        let sources = if spec == FieldSpec::Cosine1d {
            vec![SourceSpec::Uniform { value: 1.0 }, SourceSpec::Cosine1d]
        } else {
            vec![SourceSpec::Uniform { value: 1.0 }]
        };
        for source in sources {
            let base = CaseSpec::new(spec.clone(), source.clone(), 1.0, 4.0, 8);
            let mut shifted = base.clone();
            shifted.flux_offset = [0.7, -0.3];
            let a = run_case(&base).map_err(err)?.report;
            let b = run_case(&shifted).map_err(err)?.report;
            for (m, x, y) in [("e_L2", a.e_l2, b.e_l2), ("e_H1", a.e_h1, b.e_h1), ("e_energy", a.e_energy, b.e_energy)] {
                ensure(
                    close(x, y, 1e-8) || (x - y).abs() < 1e-15,
                    format!("{name}/{}: {m} changed under flux shift: {x:.6e} vs {y:.6e}", source.name()),
                )?;
            }
            let again = run_case(&base).map_err(err)?.report;
            ensure(to_json_string(&a) == to_json_string(&again), format!("{name}: report not deterministic"))?;
        }
        checked += 1;
    }

    let plan = SweepPlan::new(FieldSpec::Cosine1d, SourceSpec::Cosine1d, 1.0, vec![4.0, 8.0, 16.0], 16);
    let serial = reports_of(&plan, 1)?;
    let parallel = reports_of(&plan, 4)?;
    ensure(to_json_string(&serial) == to_json_string(&parallel), "sweep depends on worker count".into())?;
    Ok(format!("{checked} catalog fields"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 effective coefficient", effective_coefficient, Duration::from_secs(1)),
        ("2 mass balance", mass_balance, Duration::from_secs(5)),
        ("3 laminate oracle", laminate_oracle, Duration::from_secs(10)),
        ("4 cosine example constants", cosine_example, Duration::from_secs(5)),
        ("5 1D rate fits", rates_1d, Duration::from_secs(30)),
        ("6 2D rates and corrector gain", rates_2d, Duration::from_secs(600)),
        ("7 weak averaging surrogate", weak_averaging, Duration::from_secs(30)),
        ("8 invariant suite", invariants, Duration::from_secs(120)),
    ];
    let mut failures = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {limit:?}")),
            Err(d) => (false, d),
        };
        println!("{} [{name}] {detail} ({:.2}s)", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
        if !ok {
            failures.push(name);
        }
    }
    if failures.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria: {failures:?}");
        std::process::exit(1);
    }
}
