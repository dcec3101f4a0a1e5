//! Negative-norm surrogate for the weak convergence of oscillating sources.
//!
//! For `g_ε(x) = f(x, x/ε) - <f(x,·)>` on `(0,1)` the surrogate is the energy
//! norm `|u'|_{L²}` of the Dirichlet solution of `-u'' = g_ε`, which equals
//! the `H⁻¹` norm of `g_ε`.

use crate::error::{Error, Result};
use crate::grid::{CellGrid, Grid, MacroGrid};
use crate::linalg::tridiag_solve;

/// Cell nodes used for the average `<f(x,·)>`.
const AVERAGE_NODES: usize = 64;

pub fn negative_norm_surrogate(
    f: impl Fn(f64, f64) -> f64,
    eps: f64,
    cells_per_period: usize,
) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Validation(format!("eps must lie in (0, 1], got {eps}")));
    }
    if cells_per_period < 8 {
        return Err(Error::Validation("need at least 8 cells per period".into()));
    }
    let cells = (cells_per_period as f64 / eps - 1e-9).ceil() as usize;
    let grid = MacroGrid::new(1, 1.0, cells + 1)?;
    let cell = CellGrid::new(1, AVERAGE_NODES)?;
    let h = grid.spacing();
    let mean = |x: f64| {
        (0..AVERAGE_NODES).map(|i| f(x, cell.coords(i)[0])).sum::<f64>() / AVERAGE_NODES as f64
    };
    let n = cells - 1;
    let b: Vec<f64> = (1..=n)
        .map(|i| {
            let x = i as f64 * h;
            f(x, x / eps) - mean(x)
        })
        .collect();
    let diag = vec![2.0 / (h * h); n];
    let off = vec![-1.0 / (h * h); n.saturating_sub(1)];
    let inner = tridiag_solve(&diag, &off, &b)?;
    let mut u = vec![0.0];
    u.extend(inner);
    u.push(0.0);
    let energy: f64 = u.windows(2).map(|w| ((w[1] - w[0]) / h).powi(2) * h).sum();
    Ok(energy.sqrt())
}
