//! Sparse symmetric solvers: Jacobi-preconditioned conjugate gradients with
//! optional constant-nullspace projection, and the Thomas algorithm.

use crate::error::{Error, Result};

/// Symmetric matrix in compressed row layout.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates `(row, col, value)` triplets; duplicates are summed.
#[derive(Debug, Default)]
pub struct TripletBuilder {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, rows: vec![Vec::new(); n] }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.rows[row].push((col, value));
    }

    pub fn build(self) -> SparseSymMatrix {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSymMatrix { n: self.n, row_ptr, cols, vals }
    }
}

impl SparseSymMatrix {
    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b.build()
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *o = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let t = self.row(j).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v);
                worst = worst.max((v - t).abs() / scale);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub rel_tol: f64,
    /// Defaults to `50 * sqrt(dimension)` when `None`.
    pub max_iter: Option<usize>,
    /// Treat constants as the nullspace: project them out of `b` and of the
    /// iterates, return a zero-mean solution.
    pub nullspace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: None, nullspace: false }
    }
}

impl SolveOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn periodic(mut self) -> Self {
        self.nullspace = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-4) {
            return Err(Error::Validation(format!(
                "rel_tol must lie in (0, 1e-4], got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

/// Per-solve diagnostics.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
    /// `x^T A x / 2 - b^T x` after every iteration; nonincreasing for CG.
    pub energy_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Conjugate gradients with Jacobi preconditioning.
pub fn cg_solve(a: &SparseSymMatrix, b: &[f64], opts: SolveOptions) -> Result<Vec<f64>> {
    cg_solve_logged(a, b, opts, false).map(|(x, _)| x)
}

/// As [`cg_solve`], returning diagnostics. `log_energy` records the
/// quadratic functional after every iteration (one extra matvec each).
pub fn cg_solve_logged(
    a: &SparseSymMatrix,
    b: &[f64],
    opts: SolveOptions,
    log_energy: bool,
) -> Result<(Vec<f64>, SolveStats)> {
    opts.validate()?;
    let n = a.dimension();
    if b.len() != n {
        return Err(Error::Validation(format!("rhs length {} != matrix dimension {n}", b.len())));
    }
    let max_iter = opts.max_iter.unwrap_or_else(|| ((50.0 * (n as f64).sqrt()).ceil() as usize).max(10));
    let mut rhs = b.to_vec();
    if opts.nullspace {
        remove_mean(&mut rhs);
    }
    let bnorm = dot(&rhs, &rhs).sqrt();
    let mut stats = SolveStats::default();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, stats));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    if opts.nullspace {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let target = opts.rel_tol * bnorm;

    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NoConvergence { iterations: it, residual: dot(&r, &r).sqrt() / bnorm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if opts.nullspace {
            remove_mean(&mut x);
            remove_mean(&mut r);
        }
        if log_energy {
            a.mul_vec_into(&x, &mut ax);
            stats.energy_history.push(0.5 * dot(&x, &ax) - dot(&rhs, &x));
        }
        let rnorm = dot(&r, &r).sqrt();
        stats.iterations = it;
        stats.rel_residual = rnorm / bnorm;
        if rnorm <= target {
            // recompute the true residual to guard against drift in the recursion
            a.mul_vec_into(&x, &mut ax);
            let mut true_r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            if opts.nullspace {
                remove_mean(&mut true_r);
            }
            let true_norm = dot(&true_r, &true_r).sqrt();
            if true_norm <= target * 10.0 {
                stats.rel_residual = true_norm / bnorm;
                return Ok((x, stats));
            }
            r = true_r;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        if opts.nullspace {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: stats.rel_residual })
}

/// Thomas algorithm for a symmetric tridiagonal system: `diag` has length
/// `n`, `off` has length `n - 1` (the sub/super diagonal).
pub fn tridiag_solve(diag: &[f64], off: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if b.len() != n || (n > 0 && off.len() + 1 != n) {
        return Err(Error::Validation("tridiagonal system has inconsistent lengths".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() <= 1e-300_f64.max(scale * 1e-15) {
        return Err(Error::ZeroPivot(0));
    }
    if n > 1 {
        c[0] = off[0] / piv;
    }
    d[0] = b[0] / piv;
    for i in 1..n {
        piv = diag[i] - off[i - 1] * c[i - 1];
        if piv.abs() <= 1e-300_f64.max(scale * 1e-15) {
            return Err(Error::ZeroPivot(i));
        }
        if i < n - 1 {
            c[i] = off[i] / piv;
        }
        d[i] = (b[i] - off[i - 1] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
