//! First-order approximation `p₁ = p₀ + l N^j(x/l) ∂_j p₀ + l w(x, x/l)` and
//! the scaled error metrics.
//!
//! All metrics carry the volume normalization `1/D^dim`:
//!
//! ```text
//! e_L2     = D^-dim ∫ ((p - p₀)/D²)² dx
//! e_H1     = D^-dim ∫ |∇((p - p₁)/D)|² dx
//! E(p)     = D^-dim ∫ ∇(p/D)·K ∇(p/D) + (F/D)·∇(p/D) dx
//! e_energy = |E(p) - E₀(p₀)|
//! ```
//!
//! Gradients inside the metrics are edge differences on the macro grid, the
//! same staggering the solvers use, so the discrete energy identity
//! `Σ K g² + F g = Σ f p` holds exactly.

use serde::Serialize;

use crate::cell::{CellSolution, EffectiveSource};
use crate::error::{Error, Result};
use crate::grid::{gradient, integrate, interpolate_periodic, Grid, MacroGrid, ScalarField};

/// Assembles `p₁` on the grid of `p0`. The `w` term is skipped when the
/// source has no micro-structured flux.
pub fn assemble_p1(
    p0: &ScalarField<MacroGrid>,
    cell: &CellSolution,
    source: Option<&EffectiveSource>,
    l: f64,
) -> Result<ScalarField<MacroGrid>> {
    let grid = *p0.grid();
    if cell.grid().dim() != grid.dim() {
        return Err(Error::Validation("cell and macro grids differ in dimension".into()));
    }
    if !(l > 0.0) {
        return Err(Error::Validation(format!("period length must be positive, got {l}")));
    }
    let grad = gradient(p0);
    let with_w = source.is_some_and(|s| s.has_corrector());
    let mut values = Vec::with_capacity(grid.node_count());
    for i in 0..grid.node_count() {
        let x = grid.coords(i);
        let y = [x[0] / l, x[1] / l];
        let mut v = p0.values()[i];
        for j in 0..grid.dim() {
            v += l * interpolate_periodic(cell.corrector(j), y) * grad.component(j)[i];
        }
        if with_w {
            v += l * source.unwrap().w(x, y)?;
        }
        values.push(v);
    }
    ScalarField::new(grid, values)
}

fn check_same(p: &ScalarField<MacroGrid>, q: &ScalarField<MacroGrid>) -> Result<()> {
    if p.grid() != q.grid() {
        return Err(Error::Validation("metric arguments live on different grids".into()));
    }
    Ok(())
}

/// `D^-dim ∫ ((p - q)/D²)² dx`.
pub fn scaled_l2_error(p: &ScalarField<MacroGrid>, q: &ScalarField<MacroGrid>, d: f64) -> Result<f64> {
    check_same(p, q)?;
    let dim = p.grid().dim() as i32;
    let diff = p.sub(q);
    let sq = ScalarField::new(*p.grid(), diff.values().iter().map(|v| (v / (d * d)).powi(2)).collect())?;
    Ok(integrate(&sq) / d.powi(dim))
}

/// `D^-dim ∫ |∇((p - q)/D)|² dx` with edge differences.
pub fn scaled_h1_error(p: &ScalarField<MacroGrid>, q: &ScalarField<MacroGrid>, d: f64) -> Result<f64> {
    check_same(p, q)?;
    let g = p.grid();
    let h = g.spacing();
    let diff = p.sub(q);
    let v = diff.values();
    let s: f64 = g
        .edges()
        .map(|e| {
            let grad = (v[e.hi] - v[e.lo]) / h / d;
            g.edge_weight(&e) * grad * grad
        })
        .sum();
    Ok(s / d.powi(g.dim() as i32))
}

/// `E(p)` for a field with the given edge coefficients and edge fluxes (in
/// [`MacroGrid::edges`] order).
pub fn energy(p: &ScalarField<MacroGrid>, edge_coef: &[f64], edge_flux: &[f64], d: f64) -> f64 {
    let g = p.grid();
    let h = g.spacing();
    let v = p.values();
    let s: f64 = g
        .edges()
        .enumerate()
        .map(|(k, e)| {
            let grad = (v[e.hi] - v[e.lo]) / h / d;
            g.edge_weight(&e) * (edge_coef[k] * grad * grad + edge_flux[k] / d * grad)
        })
        .sum();
    s / d.powi(g.dim() as i32)
}

/// Scaled error metrics for one `(l, D)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub dim: usize,
    pub l: f64,
    pub d: f64,
    pub eps: f64,
    pub m_per_period: usize,
    pub e_l2: f64,
    /// Against `p₁`.
    pub e_h1: f64,
    pub e_energy: f64,
    /// The H¹ metric with `p₀` in place of `p₁`, for comparison.
    pub e_h1_p0: f64,
    pub energy_fine: f64,
    pub energy_homogenized: f64,
}

impl ErrorReport {
    pub const CSV_HEADER: &'static str = "dim,l,D,eps,m_per_period,e_L2,e_H1,e_energy";

    /// One CSV row, `.` decimal separator, 17 significant digits.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
            self.dim, self.l, self.d, self.eps, self.m_per_period, self.e_l2, self.e_h1, self.e_energy
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{effective_source, solve_cell, CELL_TOL};
    use crate::fields::{make_constant, make_cosine_1d, make_cosine_example_source, Tensor};
    use crate::linalg::SolveOptions;
    use crate::macroscale::{solve_homogenized, HomogenizedProblem};
    use std::f64::consts::PI;

    #[test]
    fn constant_field_p1_is_p0() {
        let cell = solve_cell(&make_constant(1, 2.0).unwrap(), 16, SolveOptions::with_tol(CELL_TOL)).unwrap();
        let g = MacroGrid::new(1, 8.0, 129).unwrap();
        let p0 = ScalarField::from_fn(g, |x| x[0] * (8.0 - x[0]));
        let p1 = assemble_p1(&p0, &cell, None, 1.0).unwrap();
        assert_eq!(p1, p0);
        assert_eq!(scaled_l2_error(&p0, &p0, 8.0).unwrap(), 0.0);
        assert_eq!(scaled_h1_error(&p0, &p0, 8.0).unwrap(), 0.0);
    }

    #[test]
    fn cosine_example_p1() {
        let (l, d) = (1.0, 16.0);
        let k = make_cosine_1d();
        let cell = solve_cell(&k, 256, SolveOptions::with_tol(CELL_TOL)).unwrap();
        let es = effective_source(&cell, &make_cosine_example_source(&k, l, d)).unwrap();
        let g = MacroGrid::new(1, d, 16 * 64 + 1).unwrap();
        let hp = HomogenizedProblem::new(Tensor::scalar(1, 0.5), g, &es).unwrap();
        let p0 = solve_homogenized(&hp, SolveOptions::default()).unwrap();
        let p1 = assemble_p1(&p0, &cell, Some(&es), l).unwrap();
        let worst = (0..g.node_count())
            .map(|i| {
                let x = g.coords(i)[0];
                let exact = x * x / 2.0 - d * x / 2.0 + x * l / (2.0 * PI) * (2.0 * PI * x / l).sin();
                (p1.values()[i] - exact).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-6 * d * d, "{worst}");

        // |p1 - p0| <= l (|N| |p0'| + |w|)
        let n_max = cell.corrector(0).max_abs();
        let grad_max = gradient(&p0).component_field(0).max_abs();
        let w_max = (0..g.node_count())
            .map(|i| {
                let x = g.coords(i);
                es.w(x, [x[0] / l, 0.0]).unwrap().abs()
            })
            .fold(0.0, f64::max);
        assert!(p1.sub(&p0).max_abs() <= l * (n_max * grad_max + w_max) + 1e-12);
    }

    #[test]
    fn metrics_reject_mismatched_grids() {
        let a = ScalarField::zeros(MacroGrid::new(1, 1.0, 9).unwrap());
        let b = ScalarField::zeros(MacroGrid::new(1, 1.0, 17).unwrap());
        assert!(scaled_l2_error(&a, &b, 1.0).is_err());
        assert!(scaled_h1_error(&a, &b, 1.0).is_err());
    }

    #[test]
    fn metrics_are_unit_free() {
        // the same profile measured on (0,D) in meters and on (0,1) in units of D
        let d = 7.0;
        let gm = MacroGrid::new(1, d, 201).unwrap();
        let gu = MacroGrid::new(1, 1.0, 201).unwrap();
        let prof = |t: f64| t * (1.0 - t) * (1.0 + 0.1 * (40.0 * t).sin());
        let pm = ScalarField::from_fn(gm, |x| d * d * prof(x[0] / d));
        let qm = ScalarField::from_fn(gm, |x| d * d * prof(x[0] / d) * 0.9);
        let pu = ScalarField::from_fn(gu, |x| prof(x[0]));
        let qu = ScalarField::from_fn(gu, |x| prof(x[0]) * 0.9);
        let l2m = scaled_l2_error(&pm, &qm, d).unwrap();
        let l2u = scaled_l2_error(&pu, &qu, 1.0).unwrap();
        assert!((l2m - l2u).abs() <= 1e-12 * l2u);
        let h1m = scaled_h1_error(&pm, &qm, d).unwrap();
        let h1u = scaled_h1_error(&pu, &qu, 1.0).unwrap();
        assert!((h1m - h1u).abs() <= 1e-12 * h1u);
    }

    #[test]
    fn csv_row_format() {
        let r = ErrorReport {
            dim: 1,
            l: 1.0,
            d: 64.0,
            eps: 1.0 / 64.0,
            m_per_period: 16,
            e_l2: 1e-6,
            e_h1: 3e-6,
            e_energy: 1.2e-4,
            e_h1_p0: 0.0,
            energy_fine: 0.0,
            energy_homogenized: 0.0,
        };
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), ErrorReport::CSV_HEADER.split(',').count());
        assert!(row.starts_with("1,1.0000000000000000e0,6.4000000000000000e1,"));
    }
}
