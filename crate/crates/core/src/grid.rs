//! Structured grids and discrete calculus.
//!
//! Two kinds of grid are used throughout the crate:
//!
//! * [`CellGrid`]: the periodic unit cell `[0,1]^dim` with `n` nodes per axis.
//!   Node `n` along any axis is identified with node `0`.
//! * [`MacroGrid`]: the Dirichlet box `[0,D]^dim` with `m` nodes per axis,
//!   boundary nodes included.
//!
//! Fields are node-centred and stored in lexicographic order with axis 0
//! running fastest.

use crate::error::{Error, Result};

/// Shared behaviour of both grid kinds.
pub trait Grid: Copy {
    fn dim(&self) -> usize;
    fn nodes_per_axis(&self) -> usize;
    fn spacing(&self) -> f64;

    fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.dim() as u32)
    }

    /// Multi-index of a flat node index.
    fn multi_index(&self, flat: usize) -> [usize; 2] {
        let n = self.nodes_per_axis();
        if self.dim() == 1 {
            [flat, 0]
        } else {
            [flat % n, flat / n]
        }
    }

    fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim() == 1 {
            idx[0]
        } else {
            idx[0] + self.nodes_per_axis() * idx[1]
        }
    }

    /// Physical coordinates of a node (unused axes are zero).
    fn coords(&self, flat: usize) -> [f64; 2] {
        let h = self.spacing();
        let idx = self.multi_index(flat);
        [idx[0] as f64 * h, idx[1] as f64 * h]
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::Validation(format!("dim must be 1 or 2, got {dim}")))
    }
}

/// Periodic unit cell grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    dim: usize,
    n: usize,
}

impl CellGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        if n < 4 {
            return Err(Error::Validation(format!(
                "cell grid needs at least 4 nodes per axis, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    /// Flat index of the neighbour one step along `axis`, wrapping around.
    pub fn neighbor(&self, flat: usize, axis: usize, forward: bool) -> usize {
        let mut idx = self.multi_index(flat);
        idx[axis] = if forward {
            (idx[axis] + 1) % self.n
        } else {
            (idx[axis] + self.n - 1) % self.n
        };
        self.flat_index(idx)
    }
}

impl Grid for CellGrid {
    fn dim(&self) -> usize {
        self.dim
    }
    fn nodes_per_axis(&self) -> usize {
        self.n
    }
    fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }
}

/// Dirichlet grid on `[0, extent]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroGrid {
    dim: usize,
    extent: f64,
    m: usize,
}

impl MacroGrid {
    pub fn new(dim: usize, extent: f64, m: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Validation(format!("domain size must be positive, got {extent}")));
        }
        if m < 3 {
            return Err(Error::Validation(format!(
                "macro grid needs at least 3 nodes per axis, got {m}"
            )));
        }
        Ok(Self { dim, extent, m })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] == self.m - 1)
    }

    /// Trapezoidal quadrature weight of a node.
    pub fn weight(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        let h = self.spacing();
        (0..self.dim)
            .map(|a| if idx[a] == 0 || idx[a] == self.m - 1 { 0.5 * h } else { h })
            .product()
    }

    /// Enumerates every grid edge as `(axis, lower node, upper node)`.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let m = self.m;
        (0..self.dim).flat_map(move |axis| {
            (0..self.node_count()).filter_map(move |flat| {
                let idx = self.multi_index(flat);
                if idx[axis] + 1 >= m {
                    return None;
                }
                let mut up = idx;
                up[axis] += 1;
                Some(Edge { axis, lo: flat, hi: self.flat_index(up) })
            })
        })
    }

    /// Midpoint of an edge.
    pub fn edge_midpoint(&self, e: &Edge) -> [f64; 2] {
        let mut x = self.coords(e.lo);
        x[e.axis] += 0.5 * self.spacing();
        x
    }

    /// Quadrature weight attached to an edge: full spacing along the edge,
    /// trapezoidal weight across it.
    pub fn edge_weight(&self, e: &Edge) -> f64 {
        let idx = self.multi_index(e.lo);
        let h = self.spacing();
        (0..self.dim)
            .map(|a| {
                if a == e.axis || (idx[a] != 0 && idx[a] != self.m - 1) {
                    h
                } else {
                    0.5 * h
                }
            })
            .product()
    }
}

impl Grid for MacroGrid {
    fn dim(&self) -> usize {
        self.dim
    }
    fn nodes_per_axis(&self) -> usize {
        self.m
    }
    fn spacing(&self) -> f64 {
        self.extent / (self.m - 1) as f64
    }
}

/// An edge of a macro grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub axis: usize,
    pub lo: usize,
    pub hi: usize,
}

/// Node-centred scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<G: Grid> {
    grid: G,
    values: Vec<f64>,
}

impl<G: Grid> ScalarField<G> {
    pub fn new(grid: G, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Validation(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: G) -> Self {
        Self { values: vec![0.0; grid.node_count()], grid }
    }

    pub fn from_fn(grid: G, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise `self - other`; grids must match.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { grid: self.grid, values }
    }
}

/// Node-centred vector field, one component vector per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<G: Grid> {
    grid: G,
    components: Vec<Vec<f64>>,
}

impl<G: Grid> VectorField<G> {
    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn component_field(&self, axis: usize) -> ScalarField<G> {
        ScalarField { grid: self.grid, values: self.components[axis].clone() }
    }
}

/// Quadrature of a cell field over `Y` (periodic rectangle rule, measure 1).
pub fn integrate_cell(field: &ScalarField<CellGrid>) -> f64 {
    let g = field.grid();
    let w = g.spacing().powi(g.dim() as i32);
    field.values().iter().sum::<f64>() * w
}

/// Trapezoidal quadrature of a macro field over `(0,D)^dim`.
pub fn integrate_macro(field: &ScalarField<MacroGrid>) -> f64 {
    let g = field.grid();
    field.values().iter().enumerate().map(|(i, v)| v * g.weight(i)).sum()
}

/// Grids that support quadrature and differentiation.
pub trait Calculus: Grid {
    fn integrate(field: &ScalarField<Self>) -> f64;
    fn gradient(field: &ScalarField<Self>) -> VectorField<Self>;
}

impl Calculus for CellGrid {
    fn integrate(field: &ScalarField<Self>) -> f64 {
        integrate_cell(field)
    }

    /// Wrap-around centred differences.
    fn gradient(field: &ScalarField<Self>) -> VectorField<Self> {
        let g = *field.grid();
        let inv = 0.5 / g.spacing();
        let v = field.values();
        let components = (0..g.dim())
            .map(|axis| {
                (0..g.node_count())
                    .map(|i| (v[g.neighbor(i, axis, true)] - v[g.neighbor(i, axis, false)]) * inv)
                    .collect()
            })
            .collect();
        VectorField { grid: g, components }
    }
}

impl Calculus for MacroGrid {
    fn integrate(field: &ScalarField<Self>) -> f64 {
        integrate_macro(field)
    }

    /// Centred differences inside, second-order one-sided differences on the
    /// boundary.
    fn gradient(field: &ScalarField<Self>) -> VectorField<Self> {
        let g = *field.grid();
        let h = g.spacing();
        let m = g.nodes_per_axis();
        let v = field.values();
        let at = |idx: [usize; 2]| v[g.flat_index(idx)];
        let components = (0..g.dim())
            .map(|axis| {
                (0..g.node_count())
                    .map(|i| {
                        let idx = g.multi_index(i);
                        let shifted = |k: usize| {
                            let mut j = idx;
                            j[axis] = k;
                            at(j)
                        };
                        let k = idx[axis];
                        if k == 0 {
                            (-3.0 * shifted(0) + 4.0 * shifted(1) - shifted(2)) / (2.0 * h)
                        } else if k == m - 1 {
                            (3.0 * shifted(m - 1) - 4.0 * shifted(m - 2) + shifted(m - 3)) / (2.0 * h)
                        } else {
                            (shifted(k + 1) - shifted(k - 1)) / (2.0 * h)
                        }
                    })
                    .collect()
            })
            .collect();
        VectorField { grid: g, components }
    }
}

/// Quadrature over the field's domain.
pub fn integrate<G: Calculus>(field: &ScalarField<G>) -> f64 {
    G::integrate(field)
}

/// Discrete gradient (periodic on cell grids, one-sided on Dirichlet boundaries).
pub fn gradient<G: Calculus>(field: &ScalarField<G>) -> VectorField<G> {
    G::gradient(field)
}

/// Multilinear interpolation of a periodic cell field at `y` (any real
/// coordinates; reduced mod 1).
pub fn interpolate_periodic(field: &ScalarField<CellGrid>, y: [f64; 2]) -> f64 {
    let g = field.grid();
    let n = g.nodes_per_axis();
    let v = field.values();
    let mut base = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for a in 0..g.dim() {
        let s = y[a].rem_euclid(1.0) * n as f64;
        let fl = s.floor();
        let mut i = fl as usize;
        let mut t = s - fl;
        // rounding can land exactly on n
        if i >= n {
            i = 0;
            t = 0.0;
        }
        base[a] = i;
        frac[a] = t;
    }
    match g.dim() {
        1 => {
            let i0 = base[0];
            let i1 = (i0 + 1) % n;
            (1.0 - frac[0]) * v[i0] + frac[0] * v[i1]
        }
        _ => {
            let (i0, j0) = (base[0], base[1]);
            let (i1, j1) = ((i0 + 1) % n, (j0 + 1) % n);
            let (tx, ty) = (frac[0], frac[1]);
            let at = |i: usize, j: usize| v[i + n * j];
            (1.0 - tx) * (1.0 - ty) * at(i0, j0)
                + tx * (1.0 - ty) * at(i1, j0)
                + (1.0 - tx) * ty * at(i0, j1)
                + tx * ty * at(i1, j1)
        }
    }
}

/// Evaluates a cell field at `y = x/l mod 1` on every macro node.
pub fn sample_periodic(
    cell_field: &ScalarField<CellGrid>,
    l: f64,
    macro_grid: &MacroGrid,
) -> Result<ScalarField<MacroGrid>> {
    if !(l > 0.0) {
        return Err(Error::Validation(format!("period length must be positive, got {l}")));
    }
    if cell_field.grid().dim() != macro_grid.dim() {
        return Err(Error::Validation("cell and macro grids differ in dimension".into()));
    }
    Ok(ScalarField::from_fn(*macro_grid, |x| {
        interpolate_periodic(cell_field, [x[0] / l, x[1] / l])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrate_constants() {
        let cg = CellGrid::new(2, 8).unwrap();
        assert!((integrate(&ScalarField::from_fn(cg, |_| 1.0)) - 1.0).abs() < 1e-15);
        let mg = MacroGrid::new(1, 3.5, 11).unwrap();
        assert!((integrate(&ScalarField::from_fn(mg, |_| 2.0)) - 7.0).abs() < 1e-13);
        let mg2 = MacroGrid::new(2, 2.0, 9).unwrap();
        assert!((integrate(&ScalarField::from_fn(mg2, |_| 1.0)) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn integrate_periodic_sine_vanishes() {
        let cg = CellGrid::new(1, 64).unwrap();
        let f = ScalarField::from_fn(cg, |y| (2.0 * PI * y[0]).sin());
        assert!(integrate(&f).abs() < 1e-12);
    }

    #[test]
    fn gradient_exact_on_affine() {
        let mg = MacroGrid::new(2, 4.0, 17).unwrap();
        let f = ScalarField::from_fn(mg, |x| 3.0 * x[0] - 0.5 * x[1] + 1.0);
        let g = gradient(&f);
        for i in 0..mg.node_count() {
            assert!((g.component(0)[i] - 3.0).abs() < 1e-12);
            assert!((g.component(1)[i] + 0.5).abs() < 1e-12);
        }
        let c = gradient(&ScalarField::from_fn(mg, |_| 5.0));
        assert!(c.component_field(0).max_abs() < 1e-15);
    }

    fn sine_grad_error(n: usize) -> f64 {
        let cg = CellGrid::new(1, n).unwrap();
        let f = ScalarField::from_fn(cg, |y| (2.0 * PI * y[0]).sin());
        let g = gradient(&f);
        (0..n)
            .map(|i| (g.component(0)[i] - 2.0 * PI * (2.0 * PI * cg.coords(i)[0]).cos()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn periodic_gradient_second_order() {
        let h = 1.0 / 128.0;
        let e128 = sine_grad_error(128);
        let e256 = sine_grad_error(256);
        assert!(e128 < 2.0 * PI.powi(3) * h * h);
        let rate = (e128 / e256).log2();
        assert!((rate - 2.0).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn periodic_gradient_sums_to_zero() {
        let cg = CellGrid::new(2, 16).unwrap();
        let f = ScalarField::from_fn(cg, |y| (y[0] * 7.1).sin().exp() * (2.0 * PI * y[1]).cos());
        let g = gradient(&f);
        for a in 0..2 {
            assert!(integrate(&g.component_field(a)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling() {
        let cg = CellGrid::new(1, 64).unwrap();
        let s = ScalarField::from_fn(cg, |y| (2.0 * PI * y[0]).sin());
        let mg = MacroGrid::new(1, 4.0, 17).unwrap();
        let out = sample_periodic(&s, 1.0, &mg).unwrap();
        assert!((out.values()[1] - 1.0).abs() < 1e-12);

        let c = ScalarField::from_fn(cg, |_| 2.5);
        let out = sample_periodic(&c, 0.5, &mg).unwrap();
        assert!(out.values().iter().all(|v| (*v - 2.5).abs() < 1e-15));

        // corrector of the cosine medium sampled at x/l = 1/4
        let cn = CellGrid::new(1, 256).unwrap();
        let nf = ScalarField::from_fn(cn, |y| (2.0 * PI * y[0]).sin() / (4.0 * PI));
        let mg = MacroGrid::new(1, 1.0, 65).unwrap();
        let out = sample_periodic(&nf, 1.0 / 16.0, &mg).unwrap();
        assert!((out.values()[1] - 1.0 / (4.0 * PI)).abs() < 1e-12);

        assert!(sample_periodic(&nf, 0.0, &mg).is_err());
        assert!(sample_periodic(&nf, -1.0, &mg).is_err());
    }

    #[test]
    fn edge_weights_cover_domain() {
        let mg = MacroGrid::new(2, 3.0, 7).unwrap();
        for axis in 0..2 {
            let total: f64 = mg.edges().filter(|e| e.axis == axis).map(|e| mg.edge_weight(&e)).sum();
            assert!((total - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(CellGrid::new(3, 8).is_err());
        assert!(CellGrid::new(1, 3).is_err());
        assert!(MacroGrid::new(1, 0.0, 8).is_err());
        assert!(ScalarField::new(CellGrid::new(1, 8).unwrap(), vec![0.0; 7]).is_err());
    }
}
