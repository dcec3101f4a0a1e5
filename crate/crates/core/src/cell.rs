//! Periodic unit-cell problems.
//!
//! All cell problems share the conservative form
//!
//! ```text
//! -div_y( K ∇_y u + G ) = 0,   u periodic, <u> = 0
//! ```
//!
//! with `G = K e_j` for the corrector `N^j`, `G = F(x,·)` for the source
//! corrector `w(x,·)` and `G = K η` for the mass-balance potential. The
//! operator lives on the staggered edges of a [`CellGrid`]: the coefficient
//! `K_aa` and the flux `G_a` are sampled at the midpoint of each edge along
//! axis `a`. Coefficients must be diagonal (orthotropic).

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{CoefficientField, Flux, Tensor, TwoScaleSource};
use crate::grid::{interpolate_periodic, CellGrid, Grid, ScalarField};
use crate::linalg::{cg_solve, tridiag_solve, SolveOptions, SparseSymMatrix, TripletBuilder};

/// Default relative tolerance for cell solves.
pub const CELL_TOL: f64 = 1e-12;

/// Discrete periodic operator `u -> -div(K ∇u)` on one cell grid.
#[derive(Clone)]
pub struct CellOperator {
    grid: CellGrid,
    field: CoefficientField,
    /// `edge_k[a][i]`: `K_aa` at the midpoint of the edge from node `i` along `a`.
    edge_k: Vec<Vec<f64>>,
    matrix: SparseSymMatrix,
    opts: SolveOptions,
}

impl std::fmt::Debug for CellOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CellOperator").field("grid", &self.grid).field("field", &self.field).finish()
    }
}

impl CellOperator {
    pub fn new(field: &CoefficientField, n: usize, opts: SolveOptions) -> Result<Self> {
        if n < 8 {
            return Err(Error::Validation(format!("cell resolution must be at least 8, got {n}")));
        }
        let grid = CellGrid::new(field.dim(), n)?;
        let h = grid.spacing();
        let mut edge_k = Vec::with_capacity(grid.dim());
        for axis in 0..grid.dim() {
            let mut ks = Vec::with_capacity(grid.node_count());
            for i in 0..grid.node_count() {
                let mut y = grid.coords(i);
                y[axis] += 0.5 * h;
                let k = field.eval(y);
                if !k.is_diagonal() {
                    return Err(Error::Unsupported(format!(
                        "{}: off-diagonal coefficient entries are not supported by the edge scheme",
                        field.name()
                    )));
                }
                let kaa = k.get(axis, axis);
                if !(kaa > 0.0) {
                    return Err(Error::EllipticityViolation(format!(
                        "{}: K_{axis}{axis} = {kaa} at y = {:?}",
                        field.name(),
                        &y[..grid.dim()]
                    )));
                }
                ks.push(kaa);
            }
            edge_k.push(ks);
        }
        let inv_h2 = 1.0 / (h * h);
        let mut t = TripletBuilder::new(grid.node_count());
        for axis in 0..grid.dim() {
            for i in 0..grid.node_count() {
                let j = grid.neighbor(i, axis, true);
                let k = edge_k[axis][i] * inv_h2;
                t.add(i, i, k);
                t.add(j, j, k);
                t.add(i, j, -k);
                t.add(j, i, -k);
            }
        }
        Ok(Self { grid, field: field.clone(), edge_k, matrix: t.build(), opts: opts.periodic() })
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn edge_coefficients(&self, axis: usize) -> &[f64] {
        &self.edge_k[axis]
    }

    /// Midpoint of the edge leaving node `i` along `axis`.
    pub fn edge_midpoint(&self, i: usize, axis: usize) -> [f64; 2] {
        let mut y = self.grid.coords(i);
        y[axis] += 0.5 * self.grid.spacing();
        y
    }

    /// Samples a vector field `G(y)` on the edges (component `a` on `a`-edges).
    pub fn sample_edges(&self, g: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<Vec<f64>> {
        (0..self.grid.dim())
            .map(|axis| {
                (0..self.grid.node_count()).map(|i| g(self.edge_midpoint(i, axis))[axis]).collect()
            })
            .collect()
    }

    /// Right-hand side `div_h G` for edge data `g`.
    fn divergence_rhs(&self, g: &[Vec<f64>]) -> Vec<f64> {
        let inv_h = 1.0 / self.grid.spacing();
        let mut b = vec![0.0; self.grid.node_count()];
        for (axis, ga) in g.iter().enumerate() {
            for i in 0..self.grid.node_count() {
                let j = self.grid.neighbor(i, axis, true);
                // edge i -> j carries ga[i]: it leaves i and enters j
                b[i] += ga[i] * inv_h;
                b[j] -= ga[i] * inv_h;
            }
        }
        b
    }

    /// Solves `-div(K∇u + G) = 0` for zero-mean periodic `u`; returns the
    /// field and the relative residual.
    pub fn solve_flux_form(&self, g: &[Vec<f64>]) -> Result<(ScalarField<CellGrid>, f64)> {
        let b = self.divergence_rhs(g);
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n = self.grid.node_count();
        if bnorm == 0.0 {
            return Ok((ScalarField::zeros(self.grid), 0.0));
        }
        let mut u = if self.grid.dim() == 1 {
            self.solve_pinned_1d(&b)?
        } else {
            cg_solve(&self.matrix, &b, self.opts)?
        };
        let mean = u.iter().sum::<f64>() / n as f64;
        u.iter_mut().for_each(|v| *v -= mean);
        let au = self.matrix.mul_vec(&u);
        let mean_b = b.iter().sum::<f64>() / n as f64;
        let res = au.iter().zip(&b).map(|(a, b)| (a - (b - mean_b)).powi(2)).sum::<f64>().sqrt() / bnorm;
        Ok((ScalarField::new(self.grid, u)?, res))
    }

    /// 1D: fix node 0, solve the remaining tridiagonal system directly.
    fn solve_pinned_1d(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.node_count();
        let inv_h2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        let k = &self.edge_k[0];
        let diag: Vec<f64> = (1..n).map(|i| (k[i - 1] + k[i]) * inv_h2).collect();
        let off: Vec<f64> = (1..n - 1).map(|i| -k[i] * inv_h2).collect();
        let mean_b = b.iter().sum::<f64>() / n as f64;
        let rhs: Vec<f64> = b[1..].iter().map(|v| v - mean_b).collect();
        let inner = tridiag_solve(&diag, &off, &rhs)?;
        let mut u = Vec::with_capacity(n);
        u.push(0.0);
        u.extend(inner);
        Ok(u)
    }

    /// Cell average of the flux `K∇u + G`.
    pub fn average_flux(&self, u: &ScalarField<CellGrid>, g: &[Vec<f64>]) -> [f64; 2] {
        let h = self.grid.spacing();
        let w = h.powi(self.grid.dim() as i32);
        let v = u.values();
        let mut out = [0.0; 2];
        for axis in 0..self.grid.dim() {
            let mut s = 0.0;
            for i in 0..self.grid.node_count() {
                let j = self.grid.neighbor(i, axis, true);
                s += self.edge_k[axis][i] * (v[j] - v[i]) / h + g[axis][i];
            }
            out[axis] = s * w;
        }
        out
    }

    /// Cell average of the discrete gradient of `u` (zero for periodic `u`).
    pub fn average_gradient(&self, u: &ScalarField<CellGrid>) -> [f64; 2] {
        let h = self.grid.spacing();
        let w = h.powi(self.grid.dim() as i32);
        let v = u.values();
        let mut out = [0.0; 2];
        for axis in 0..self.grid.dim() {
            out[axis] = (0..self.grid.node_count())
                .map(|i| (v[self.grid.neighbor(i, axis, true)] - v[i]) / h)
                .sum::<f64>()
                * w;
        }
        out
    }

    /// Edge data of `K e_j`.
    fn unit_flux(&self, j: usize) -> Vec<Vec<f64>> {
        (0..self.grid.dim())
            .map(|axis| {
                if axis == j {
                    self.edge_k[axis].clone()
                } else {
                    vec![0.0; self.grid.node_count()]
                }
            })
            .collect()
    }

    pub fn relative_tolerance(&self) -> f64 {
        self.opts.rel_tol
    }
}

/// Solved correctors `N^1..N^dim` on one cell grid.
#[derive(Clone, Debug)]
pub struct CellSolution {
    operator: Arc<CellOperator>,
    correctors: Vec<ScalarField<CellGrid>>,
    residuals: Vec<f64>,
}

impl CellSolution {
    pub fn operator(&self) -> &CellOperator {
        &self.operator
    }
    pub fn grid(&self) -> &CellGrid {
        self.operator.grid()
    }
    pub fn resolution(&self) -> usize {
        self.grid().nodes_per_axis()
    }
    pub fn corrector(&self, j: usize) -> &ScalarField<CellGrid> {
        &self.correctors[j]
    }
    pub fn correctors(&self) -> &[ScalarField<CellGrid>] {
        &self.correctors
    }
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }
    pub fn field(&self) -> &CoefficientField {
        self.operator.field()
    }
}

/// Solves every corrector `N^j` at resolution `n`.
pub fn solve_cell(field: &CoefficientField, n: usize, opts: SolveOptions) -> Result<CellSolution> {
    let op = Arc::new(CellOperator::new(field, n, opts)?);
    solve_cell_with(op)
}

fn solve_cell_with(op: Arc<CellOperator>) -> Result<CellSolution> {
    let mut correctors = Vec::new();
    let mut residuals = Vec::new();
    for j in 0..op.grid().dim() {
        let (u, r) = op.solve_flux_form(&op.unit_flux(j))?;
        correctors.push(u);
        residuals.push(r);
    }
    Ok(CellSolution { operator: op, correctors, residuals })
}

/// The single corrector `N^j`.
pub fn solve_corrector(field: &CoefficientField, n: usize, j: usize) -> Result<ScalarField<CellGrid>> {
    if j >= field.dim() {
        return Err(Error::Validation(format!("axis {j} out of range for dim {}", field.dim())));
    }
    let op = CellOperator::new(field, n, SolveOptions::with_tol(CELL_TOL))?;
    Ok(op.solve_flux_form(&op.unit_flux(j))?.0)
}

/// `K⁰_ij = <K_ik (δ_kj + ∂_k N^j)>`, using the same edge quadrature as the
/// cell operator.
pub fn effective_tensor(cell: &CellSolution) -> Tensor {
    let op = cell.operator();
    let dim = op.grid().dim();
    let mut k0 = Tensor::zeros(dim);
    for j in 0..dim {
        let avg = op.average_flux(cell.corrector(j), &op.unit_flux(j));
        for i in 0..dim {
            k0.m[i][j] = avg[i];
        }
    }
    k0
}

/// Arithmetic (upper) and harmonic (lower) mean tensors of the
/// edge-sampled coefficient.
pub fn voigt_reuss(op: &CellOperator) -> (Tensor, Tensor) {
    let dim = op.grid().dim();
    let mut voigt = Tensor::zeros(dim);
    let mut reuss = Tensor::zeros(dim);
    for a in 0..dim {
        let ks = op.edge_coefficients(a);
        let n = ks.len() as f64;
        voigt.m[a][a] = ks.iter().sum::<f64>() / n;
        reuss.m[a][a] = n / ks.iter().map(|k| 1.0 / k).sum::<f64>();
    }
    (voigt, reuss)
}

/// Tensor part of the homogenized model.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveModel {
    pub dim: usize,
    pub k0: Tensor,
    /// Ellipticity bounds of the micro-scale field, which `K⁰` inherits.
    pub lambda: f64,
    pub big_lambda: f64,
    pub n: usize,
    pub residuals: Vec<f64>,
    pub voigt: Tensor,
    pub reuss: Tensor,
}

impl EffectiveModel {
    pub fn from_cell(cell: &CellSolution) -> Self {
        let (voigt, reuss) = voigt_reuss(cell.operator());
        Self {
            dim: cell.grid().dim(),
            k0: effective_tensor(cell),
            lambda: cell.field().lambda(),
            big_lambda: cell.field().big_lambda(),
            n: cell.resolution(),
            residuals: cell.residuals().to_vec(),
            voigt,
            reuss,
        }
    }

    pub fn constant(k0: Tensor) -> Self {
        let ev = k0.eigenvalues();
        Self {
            dim: k0.dim,
            k0,
            lambda: ev[0],
            big_lambda: *ev.last().unwrap(),
            n: 0,
            residuals: Vec::new(),
            voigt: k0,
            reuss: k0,
        }
    }

    /// Smallest eigenvalues of `voigt - K⁰` and `K⁰ - reuss`; both must be
    /// nonnegative.
    pub fn bracket_margins(&self) -> (f64, f64) {
        let sub = |a: &Tensor, b: &Tensor| {
            let mut t = *a;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    t.m[i][j] -= b.m[i][j];
                }
            }
            t.eigenvalues()[0]
        };
        (sub(&self.voigt, &self.k0), sub(&self.k0, &self.reuss))
    }
}

/// Outcome of [`mass_balance_check`].
#[derive(Debug, Clone, Serialize)]
pub struct MassBalance {
    pub eta: [f64; 2],
    /// `<K∇p_η>`.
    pub mean_flux: [f64; 2],
    /// `<∇p_η>`.
    pub mean_gradient: [f64; 2],
    /// `|<K∇p_η> - K⁰η|`.
    pub defect: f64,
    /// `|<∇p_η> - η|`.
    pub gradient_defect: f64,
}

/// Solves for `p_η` with `p_η - η·y` periodic and compares the mean
/// micro-scale flux with `K⁰η`.
pub fn mass_balance_check(field: &CoefficientField, n: usize, eta: [f64; 2]) -> Result<MassBalance> {
    let dim = field.dim();
    let norm = eta[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!("eta must be a unit vector, |eta| = {norm}")));
    }
    let cell = solve_cell(field, n, SolveOptions::with_tol(CELL_TOL))?;
    let op = cell.operator();
    let k0 = effective_tensor(&cell);
    let g = op.sample_edges(|y| field.eval(y).apply(eta));
    let (v, _) = op.solve_flux_form(&g)?;
    let mean_flux = op.average_flux(&v, &g);
    let dg = op.average_gradient(&v);
    let mut mean_gradient = [0.0; 2];
    for a in 0..dim {
        mean_gradient[a] = eta[a] + dg[a];
    }
    let target = k0.apply(eta);
    let defect = (0..dim).map(|a| (mean_flux[a] - target[a]).powi(2)).sum::<f64>().sqrt();
    let gradient_defect = (0..dim).map(|a| (mean_gradient[a] - eta[a]).powi(2)).sum::<f64>().sqrt();
    Ok(MassBalance { eta, mean_flux, mean_gradient, defect, gradient_defect })
}

/// Zero-mean periodic solution of `-div(K∇w) = div F(x,·)` at one macro
/// point.
pub fn solve_source_corrector(
    op: &CellOperator,
    flux: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<ScalarField<CellGrid>> {
    let g = op.sample_edges(flux);
    Ok(op.solve_flux_form(&g)?.0)
}

/// A solved source-corrector cell problem together with its averages.
#[derive(Debug, Clone)]
struct CorrectorProfile {
    w: ScalarField<CellGrid>,
    /// `<G + K∇w>`.
    mean_flux: [f64; 2],
}

/// Effective sources `f⁰(x) = <f(x,·)>` and `F⁰(x) = <F(x,·) + K∇_y w(x,·)>`
/// plus evaluation of `w(x, y)`.
pub struct EffectiveSource {
    source: TwoScaleSource,
    op: Arc<CellOperator>,
    /// Separable case: the profile for `Φ`.
    separable: Option<CorrectorProfile>,
    cache: Mutex<HashMap<[u64; 2], Arc<CorrectorProfile>>>,
}

impl std::fmt::Debug for EffectiveSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EffectiveSource").field("source", &self.source).finish()
    }
}

impl EffectiveSource {
    pub fn source(&self) -> &TwoScaleSource {
        &self.source
    }

    /// `f⁰(x)`.
    pub fn f0(&self, x: [f64; 2]) -> f64 {
        if !self.source.has_scalar() {
            return 0.0;
        }
        if !self.source.has_micro_f() {
            return self.source.f(x, [0.0; 2]);
        }
        let g = self.op.grid();
        let w = g.spacing().powi(g.dim() as i32);
        (0..g.node_count()).map(|i| self.source.f(x, g.coords(i))).sum::<f64>() * w
    }

    /// `F⁰(x)`.
    pub fn flux0(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        let off = self.source.flux_offset();
        match self.source.flux_kind() {
            Flux::None => Ok(off),
            Flux::Separable { g, .. } => {
                let p = self.separable.as_ref().expect("separable profile solved");
                let s = g(x);
                Ok([s * p.mean_flux[0] + off[0], s * p.mean_flux[1] + off[1]])
            }
            Flux::General { micro: false, .. } => Ok(self.source.flux(x, [0.0; 2])),
            Flux::General { micro: true, .. } => {
                let p = self.profile_at(x)?;
                Ok([p.mean_flux[0] + off[0], p.mean_flux[1] + off[1]])
            }
        }
    }

    /// `w(x, y)` by interpolation of the cell solution.
    pub fn w(&self, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
        match self.source.flux_kind() {
            Flux::Separable { g, .. } => {
                let p = self.separable.as_ref().expect("separable profile solved");
                Ok(g(x) * interpolate_periodic(&p.w, y))
            }
            Flux::General { micro: true, .. } => Ok(interpolate_periodic(&self.profile_at(x)?.w, y)),
            _ => Ok(0.0),
        }
    }

    /// Whether `w` is identically zero.
    pub fn has_corrector(&self) -> bool {
        self.source.has_micro_flux()
    }

    /// Cell field `ŵ` of the separable case.
    pub fn separable_profile(&self) -> Option<&ScalarField<CellGrid>> {
        self.separable.as_ref().map(|p| &p.w)
    }

    fn profile_at(&self, x: [f64; 2]) -> Result<Arc<CorrectorProfile>> {
        let key = [x[0].to_bits(), x[1].to_bits()];
        if let Some(p) = self.cache.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let src = &self.source;
        let g = self.op.sample_edges(|y| {
            let f = src.flux(x, y);
            let off = src.flux_offset();
            [f[0] - off[0], f[1] - off[1]]
        });
        let (w, _) = self.op.solve_flux_form(&g)?;
        let mean_flux = self.op.average_flux(&w, &g);
        let p = Arc::new(CorrectorProfile { w, mean_flux });
        self.cache.lock().unwrap().insert(key, p.clone());
        Ok(p)
    }
}

/// `<G·(e_i + ∇N^i)>` over all edges.
fn cross_check_flux(cell: &CellSolution, g: &[Vec<f64>]) -> [f64; 2] {
    let op = cell.operator();
    let grid = op.grid();
    let h = grid.spacing();
    let w = h.powi(grid.dim() as i32);
    let mut out = [0.0; 2];
    for (i, out_i) in out.iter_mut().enumerate().take(grid.dim()) {
        let ni = cell.corrector(i).values();
        let mut s = 0.0;
        for (axis, ga) in g.iter().enumerate() {
            for node in 0..grid.node_count() {
                let j = grid.neighbor(node, axis, true);
                let grad = (ni[j] - ni[node]) / h + if axis == i { 1.0 } else { 0.0 };
                s += ga[node] * grad;
            }
        }
        *out_i = s * w;
    }
    out
}

/// Builds the effective sources for `source` on the cell solution, and for
/// separable fluxes verifies `<Φ + K∇ŵ> = <Φ·(e_i + ∇N^i)>`.
pub fn effective_source(cell: &CellSolution, source: &TwoScaleSource) -> Result<EffectiveSource> {
    if source.dim() != cell.grid().dim() {
        return Err(Error::Validation("source and cell dimensions differ".into()));
    }
    let op = Arc::new(cell.operator().clone());
    let separable = match source.flux_kind() {
        Flux::Separable { phi, .. } => {
            let g = op.sample_edges(|y| phi(y));
            let (w, _) = op.solve_flux_form(&g)?;
            let mean_flux = op.average_flux(&w, &g);
            let check = cross_check_flux(cell, &g);
            let scale = mean_flux.iter().chain(&check).fold(1.0f64, |m, v| m.max(v.abs()));
            let tol = 10.0 * op.relative_tolerance().max(1e-12) * scale;
            for a in 0..op.grid().dim() {
                if (mean_flux[a] - check[a]).abs() > tol {
                    return Err(Error::CrossCheckFailure(format!(
                        "F0 component {a}: <F + K grad w> = {} but <F.(e + grad N)> = {}",
                        mean_flux[a], check[a]
                    )));
                }
            }
            Some(CorrectorProfile { w, mean_flux })
        }
        _ => None,
    };
    Ok(EffectiveSource { source: source.clone(), op, separable, cache: Mutex::new(HashMap::new()) })
}
