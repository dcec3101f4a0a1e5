//! Fine-scale and homogenized Dirichlet problems on `(0,D)^dim`.
//!
//! Both are discretized in flux form on the macro grid: coefficients and the
//! flux source `F` live at edge midpoints, the scalar source `f` at nodes.
//! Boundary values are zero.

use crate::cell::EffectiveSource;
use crate::error::{Error, Result};
use crate::fields::{CoefficientField, Tensor, TwoScaleSource};
use crate::grid::{Edge, Grid, MacroGrid, ScalarField};
use crate::linalg::{cg_solve, tridiag_solve, SolveOptions, TripletBuilder};

/// `-div(K(x/l)∇p) = f(x,x/l) + div F(x,x/l)` on `(0,D)^dim`, `p = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct FineProblem {
    pub field: CoefficientField,
    pub l: f64,
    pub d: f64,
    pub source: TwoScaleSource,
    /// Macro cells per period `l`.
    pub cells_per_period: usize,
}

impl FineProblem {
    pub fn new(
        field: CoefficientField,
        l: f64,
        d: f64,
        source: TwoScaleSource,
        cells_per_period: usize,
    ) -> Result<Self> {
        let p = Self { field, l, d, source, cells_per_period };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0) || !(self.d > 0.0) {
            return Err(Error::Validation(format!("l and D must be positive, got l = {}, D = {}", self.l, self.d)));
        }
        if self.d / self.l < 4.0 - 1e-12 {
            return Err(Error::Validation(format!("D/l must be at least 4, got {}", self.d / self.l)));
        }
        if self.source.dim() != self.field.dim() {
            return Err(Error::Validation("source and field dimensions differ".into()));
        }
        let grid = self.grid()?;
        let limit = self.l / 8.0;
        if grid.spacing() > limit * (1.0 + 1e-12) {
            return Err(Error::Resolution { spacing: grid.spacing(), limit });
        }
        Ok(())
    }

    /// Periods tile the domain.
    pub fn is_commensurate(&self) -> bool {
        let r = self.d / self.l;
        (r - r.round()).abs() < 1e-9 * r.max(1.0)
    }

    pub fn grid(&self) -> Result<MacroGrid> {
        if self.cells_per_period == 0 {
            return Err(Error::Validation("cells per period must be positive".into()));
        }
        let cells = (self.d / self.l * self.cells_per_period as f64 - 1e-9).ceil().max(1.0) as usize;
        MacroGrid::new(self.field.dim(), self.d, cells + 1)
    }

    /// `K_aa(x_e/l)` on edge `e`.
    pub fn edge_coefficient(&self, grid: &MacroGrid, e: &Edge) -> f64 {
        let x = grid.edge_midpoint(e);
        self.field.eval([x[0] / self.l, x[1] / self.l]).get(e.axis, e.axis)
    }

    /// `F_a(x_e, x_e/l)` on edge `e`.
    pub fn edge_flux(&self, grid: &MacroGrid, e: &Edge) -> f64 {
        let x = grid.edge_midpoint(e);
        self.source.flux(x, [x[0] / self.l, x[1] / self.l])[e.axis]
    }

    pub fn node_source(&self, x: [f64; 2]) -> f64 {
        self.source.f(x, [x[0] / self.l, x[1] / self.l])
    }
}

/// Homogenized problem `-div(K⁰∇p₀) = f⁰ + div F⁰` on a given grid, with
/// sources tabulated at nodes and edges.
#[derive(Debug, Clone)]
pub struct HomogenizedProblem {
    pub k0: Tensor,
    pub grid: MacroGrid,
    node_f: Vec<f64>,
    edge_flux: Vec<f64>,
}

impl HomogenizedProblem {
    pub fn new(k0: Tensor, grid: MacroGrid, source: &EffectiveSource) -> Result<Self> {
        let node_f = (0..grid.node_count()).map(|i| source.f0(grid.coords(i))).collect();
        let edge_flux = grid
            .edges()
            .map(|e| source.flux0(grid.edge_midpoint(&e)).map(|f| f[e.axis]))
            .collect::<Result<Vec<_>>>()?;
        Self::from_tables(k0, grid, node_f, edge_flux)
    }

    /// Sources given as closures `f⁰(x)` and `F⁰(x)`.
    pub fn from_fns(
        k0: Tensor,
        grid: MacroGrid,
        f0: impl Fn([f64; 2]) -> f64,
        flux0: impl Fn([f64; 2]) -> [f64; 2],
    ) -> Result<Self> {
        let node_f = (0..grid.node_count()).map(|i| f0(grid.coords(i))).collect();
        let edge_flux = grid.edges().map(|e| flux0(grid.edge_midpoint(&e))[e.axis]).collect();
        Self::from_tables(k0, grid, node_f, edge_flux)
    }

    fn from_tables(k0: Tensor, grid: MacroGrid, node_f: Vec<f64>, edge_flux: Vec<f64>) -> Result<Self> {
        if k0.dim != grid.dim() {
            return Err(Error::Validation("K0 and grid dimensions differ".into()));
        }
        let ev = k0.eigenvalues();
        if !(ev[0] > 0.0) || k0.asymmetry() > 1e-10 * ev.last().unwrap().abs() {
            return Err(Error::Validation(format!("K0 must be symmetric positive definite, got {:?}", k0.m)));
        }
        if k0.dim == 2 && k0.get(0, 1).abs() > 1e-10 * ev[1] {
            return Err(Error::Unsupported("K0 with off-diagonal entries".into()));
        }
        Ok(Self { k0, grid, node_f, edge_flux })
    }

    /// `F⁰` component along each edge, in [`MacroGrid::edges`] order.
    pub fn edge_fluxes(&self) -> &[f64] {
        &self.edge_flux
    }
}

/// Assembles and solves the flux-form Dirichlet problem on `grid`.
fn solve_dirichlet(
    grid: &MacroGrid,
    edge_coef: &[f64],
    edge_flux: &[f64],
    node_f: &[f64],
    opts: SolveOptions,
) -> Result<ScalarField<MacroGrid>> {
    let h = grid.spacing();
    let mut unknown = vec![usize::MAX; grid.node_count()];
    let mut nodes = Vec::new();
    for i in 0..grid.node_count() {
        if !grid.is_boundary(i) {
            unknown[i] = nodes.len();
            nodes.push(i);
        }
    }
    let n = nodes.len();
    let mut b: Vec<f64> = nodes.iter().map(|&i| node_f[i]).collect();
    let inv_h2 = 1.0 / (h * h);
    let inv_h = 1.0 / h;
    let mut t = TripletBuilder::new(n);
    for (k, e) in grid.edges().enumerate() {
        let c = edge_coef[k] * inv_h2;
        let (lo, hi) = (unknown[e.lo], unknown[e.hi]);
        let fl = edge_flux[k] * inv_h;
        if lo != usize::MAX {
            t.add(lo, lo, c);
            b[lo] += fl;
        }
        if hi != usize::MAX {
            t.add(hi, hi, c);
            b[hi] -= fl;
        }
        if lo != usize::MAX && hi != usize::MAX {
            t.add(lo, hi, -c);
            t.add(hi, lo, -c);
        }
    }
    let a = t.build();
    let x = if grid.dim() == 1 {
        let diag = a.diagonal();
        let off: Vec<f64> = (0..n.saturating_sub(1))
            .map(|i| a.row(i).find(|&(c, _)| c == i + 1).map_or(0.0, |(_, v)| v))
            .collect();
        tridiag_solve(&diag, &off, &b)?
    } else {
        cg_solve(&a, &b, opts)?
    };
    let mut values = vec![0.0; grid.node_count()];
    for (k, &i) in nodes.iter().enumerate() {
        values[i] = x[k];
    }
    ScalarField::new(*grid, values)
}

/// Discrete fine-scale solution.
pub fn solve_fine(problem: &FineProblem, opts: SolveOptions) -> Result<ScalarField<MacroGrid>> {
    problem.validate()?;
    let grid = problem.grid()?;
    let coef: Vec<f64> = grid.edges().map(|e| problem.edge_coefficient(&grid, &e)).collect();
    let flux: Vec<f64> = if problem.source.has_flux() {
        grid.edges().map(|e| problem.edge_flux(&grid, &e)).collect()
    } else {
        vec![0.0; coef.len()]
    };
    let f: Vec<f64> = if problem.source.has_scalar() {
        (0..grid.node_count()).map(|i| problem.node_source(grid.coords(i))).collect()
    } else {
        vec![0.0; grid.node_count()]
    };
    solve_dirichlet(&grid, &coef, &flux, &f, opts)
}

/// Discrete homogenized solution.
pub fn solve_homogenized(problem: &HomogenizedProblem, opts: SolveOptions) -> Result<ScalarField<MacroGrid>> {
    let coef: Vec<f64> = problem.grid.edges().map(|e| problem.k0.get(e.axis, e.axis)).collect();
    solve_dirichlet(&problem.grid, &coef, &problem.edge_flux, &problem.node_f, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::oracle::oracle_eval;
    use crate::fields::{make_constant, make_cosine_1d, make_cosine_example_source, make_separable_cosine};
    use std::f64::consts::PI;

    fn opts() -> SolveOptions {
        SolveOptions::with_tol(1e-11)
    }

    #[test]
    fn zero_source_zero_solution() {
        let k = make_separable_cosine();
        let p = FineProblem::new(k, 1.0, 4.0, TwoScaleSource::zero(2), 8).unwrap();
        let sol = solve_fine(&p, opts()).unwrap();
        assert_eq!(sol.max_abs(), 0.0);
        let g = MacroGrid::new(1, 1.0, 9).unwrap();
        let hp = HomogenizedProblem::from_fns(Tensor::scalar(1, 1.0), g, |_| 0.0, |_| [0.0; 2]).unwrap();
        assert_eq!(solve_homogenized(&hp, opts()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn constant_coefficient_exact_on_quadratic() {
        let k = 2.5;
        let d = 6.0;
        let field = make_constant(1, k).unwrap();
        let src = TwoScaleSource::new("one", 1).with_scalar(false, |_, _| 1.0);
        let p = FineProblem::new(field, 1.0, d, src, 8).unwrap();
        let sol = solve_fine(&p, opts()).unwrap();
        for (i, v) in sol.values().iter().enumerate() {
            let x = sol.grid().coords(i)[0];
            assert!((v - x * (d - x) / (2.0 * k)).abs() < 1e-12 * d * d);
        }
    }

    #[test]
    fn homogenized_cosine_example() {
        let d = 32.0;
        let g = MacroGrid::new(1, d, 513).unwrap();
        let hp =
            HomogenizedProblem::from_fns(Tensor::scalar(1, 0.5), g, |_| -1.0, |x| [0.5 * x[0], 0.0]).unwrap();
        let p0 = solve_homogenized(&hp, opts()).unwrap();
        for (i, v) in p0.values().iter().enumerate() {
            let x = g.coords(i)[0];
            assert!((v - (x * x / 2.0 - d * x / 2.0)).abs() < 1e-10 * d * d);
        }
    }

    /// Series solution of `-Δu = 1` on the unit square at its centre.
    fn square_center_series() -> f64 {
        let mut s = 0.0;
        for m in (1..400).step_by(2) {
            for n in (1..400).step_by(2) {
                let (mf, nf) = (m as f64, n as f64);
                let sign = if ((m + n) / 2 - 1) % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * 16.0 / (PI.powi(4) * mf * nf * (mf * mf + nf * nf));
            }
        }
        s
    }

    #[test]
    fn poisson_unit_square_center() {
        let exact = square_center_series();
        assert!((exact - 0.07367).abs() < 1e-5, "{exact}");
        let g = MacroGrid::new(2, 1.0, 129).unwrap();
        let hp = HomogenizedProblem::from_fns(Tensor::scalar(2, 1.0), g, |_| 1.0, |_| [0.0; 2]).unwrap();
        let u = solve_homogenized(&hp, opts()).unwrap();
        let c = u.values()[g.flat_index([64, 64])];
        assert!((c - exact).abs() < 1e-3, "{c} vs {exact}");
    }

    #[test]
    fn fine_matches_cosine_example() {
        let (l, d) = (1.0, 16.0);
        let k = make_cosine_1d();
        let err = |cpp: usize| {
            let p = FineProblem::new(k.clone(), l, d, make_cosine_example_source(&k, l, d), cpp).unwrap();
            let sol = solve_fine(&p, opts()).unwrap();
            sol.values()
                .iter()
                .enumerate()
                .map(|(i, v)| (v - oracle_eval(sol.grid().coords(i)[0], l, d).p).abs())
                .fold(0.0, f64::max)
        };
        let e16 = err(16);
        let e32 = err(32);
        assert!(e16 < 5e-3 * d * d);
        let rate = (e16 / e32).log2();
        assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn resolution_and_ratio_checks() {
        let k = make_cosine_1d();
        let src = TwoScaleSource::zero(1);
        assert!(matches!(
            FineProblem::new(k.clone(), 1.0, 8.0, src.clone(), 4),
            Err(Error::Resolution { .. })
        ));
        assert!(FineProblem::new(k.clone(), 1.0, 3.0, src.clone(), 16).is_err());
        assert!(FineProblem::new(k, 1.0, 8.0, src, 8).is_ok());
    }

    #[test]
    fn maximum_principle_and_linearity() {
        let k = make_separable_cosine();
        let s1 = TwoScaleSource::new("a", 2).with_scalar(false, |x, _| 1.0 + x[0]);
        let s2 = TwoScaleSource::new("b", 2).with_scalar(true, |_, y| (2.0 * PI * y[1]).cos());
        let s12 = TwoScaleSource::new("ab", 2)
            .with_scalar(true, |x, y| 1.0 + x[0] + (2.0 * PI * y[1]).cos());
        let solve = |s: &TwoScaleSource| {
            solve_fine(&FineProblem::new(k.clone(), 1.0, 4.0, s.clone(), 8).unwrap(), opts()).unwrap()
        };
        let (a, b, ab) = (solve(&s1), solve(&s2), solve(&s12));
        assert!(a.values().iter().all(|v| *v >= 0.0));
        let scale = ab.max_abs();
        for i in 0..a.values().len() {
            assert!((a.values()[i] + b.values()[i] - ab.values()[i]).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn flux_conservation() {
        for dim in [1usize, 2] {
            let field = if dim == 1 { make_cosine_1d() } else { make_separable_cosine() };
            let src = TwoScaleSource::new("s", dim)
                .with_scalar(true, |x, y| 1.0 + 0.3 * x[0] + (2.0 * PI * y[0]).sin())
                .with_flux(crate::fields::Flux::General {
                    eval: std::sync::Arc::new(|x, y| [x[0] * (2.0 * PI * y[0]).cos(), 0.5 * (2.0 * PI * y[1]).sin()]),
                    micro: true,
                });
            let p = FineProblem::new(field, 1.0, 4.0, src, 8).unwrap();
            let sol = solve_fine(&p, SolveOptions::with_tol(1e-12)).unwrap();
            let g = *sol.grid();
            let h = g.spacing();
            let v = sol.values();
            let m = g.nodes_per_axis();
            let mut outflow = 0.0;
            for e in g.edges() {
                let lo_b = g.is_boundary(e.lo);
                let hi_b = g.is_boundary(e.hi);
                if lo_b == hi_b {
                    continue;
                }
                // edges along the boundary have both ends on it and are skipped
                let q = p.edge_coefficient(&g, &e) * (v[e.hi] - v[e.lo]) / h + p.edge_flux(&g, &e);
                let idx_lo = g.multi_index(e.lo);
                let sign = if idx_lo[e.axis] == 0 { -1.0 } else if g.multi_index(e.hi)[e.axis] == m - 1 { 1.0 } else { 0.0 };
                outflow += sign * q * h.powi(dim as i32 - 1);
            }
            let source: f64 = (0..g.node_count())
                .filter(|&i| !g.is_boundary(i))
                .map(|i| p.node_source(g.coords(i)) * h.powi(dim as i32))
                .sum();
            assert!((outflow + source).abs() < 1e-8 * source.abs().max(1.0), "dim {dim}: {outflow} vs {source}");
        }
    }
}
