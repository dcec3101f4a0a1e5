use std::f64::consts::PI;

use proptest::prelude::*;

use homogen_core::cell::{effective_tensor, solve_cell, CELL_TOL};
use homogen_core::fields::{make_laminate, CoefficientField, Tensor};
use homogen_core::grid::{sample_periodic, CellGrid, Grid, MacroGrid, ScalarField};
use homogen_core::linalg::{cg_solve, tridiag_solve, SolveOptions, TripletBuilder};

fn opts() -> SolveOptions {
    SolveOptions::with_tol(CELL_TOL)
}

fn layered_1d(a: f64, b: f64) -> CoefficientField {
    let lo = 1.0 - a.abs() - b.abs();
    CoefficientField::new("layered", 1, lo, 1.0 + a.abs() + b.abs(), move |y| {
        Tensor::scalar(1, 1.0 + a * (2.0 * PI * y[0]).cos() + b * (4.0 * PI * y[0]).sin())
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_corrector_is_l_periodic(l in 0.25f64..2.0, k in 2usize..6) {
        let cell = ScalarField::from_fn(CellGrid::new(1, 16).unwrap(), |y| (2.0 * PI * y[0]).sin());
        let d = l * k as f64;
        let grid = MacroGrid::new(1, d, 16 * k + 1).unwrap();
        let s = sample_periodic(&cell, l, &grid).unwrap();
        for i in 0..grid.node_count() - 16 {
            prop_assert!((s.values()[i] - s.values()[i + 16]).abs() < 1e-9);
        }
    }

    #[test]
    fn one_dimensional_k0_is_discrete_harmonic_mean(a in -0.45f64..0.45, b in -0.45f64..0.45) {
        let field = layered_1d(a, b);
        let n = 64;
        let cell = solve_cell(&field, n, opts()).unwrap();
        let inv: f64 = (0..n)
            .map(|i| 1.0 / field.eval([(i as f64 + 0.5) / n as f64, 0.0]).get(0, 0))
            .sum::<f64>() / n as f64;
        let k0 = effective_tensor(&cell).get(0, 0);
        prop_assert!((k0 - 1.0 / inv).abs() < 1e-9 * k0);
    }

    #[test]
    fn k0_scales_with_coefficient(c in 0.1f64..20.0, a in -0.45f64..0.45) {
        let field = make_laminate("lam", move |t| 1.0 + a * (2.0 * PI * t).sin()).unwrap();
        let k0 = effective_tensor(&solve_cell(&field, 16, opts()).unwrap());
        let k0c = effective_tensor(&solve_cell(&field.scaled(c).unwrap(), 16, opts()).unwrap());
        prop_assert!(k0c.max_abs_diff(&k0.scale(c)) < 1e-9 * c);
    }

    #[test]
    fn laminate_k0_is_diagonal_and_bracketed(a in -0.8f64..0.8) {
        let field = make_laminate("lam", move |t| 1.0 + a * (2.0 * PI * t).cos()).unwrap();
        let k0 = effective_tensor(&solve_cell(&field, 16, opts()).unwrap());
        prop_assert!(k0.get(0, 1).abs() < 1e-10);
        prop_assert!(k0.get(0, 0) <= k0.get(1, 1) + 1e-12);
    }

    #[test]
    fn tridiagonal_and_cg_agree(vals in prop::collection::vec(0.5f64..3.0, 5..40)) {
        // SPD tridiagonal: diagonal dominance from edge weights
        let n = vals.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            diag[i] += vals[i];
            t.add(i, i, vals[i]);
            if i + 1 < n {
                let c = vals[i + 1];
                diag[i] += c;
                diag[i + 1] += c;
                off[i] = -c;
                t.add(i, i, c);
                t.add(i + 1, i + 1, c);
                t.add(i, i + 1, -c);
                t.add(i + 1, i, -c);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x1 = tridiag_solve(&diag, &off, &b).unwrap();
        let x2 = cg_solve(&t.build(), &b, SolveOptions::with_tol(1e-13)).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            prop_assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()));
        }
    }
}
