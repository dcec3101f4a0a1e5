//! Browser bindings for the demo page in `www/`.
//!
//! Three operations are exported: the cell problem of a catalog field, the
//! 1D cosine example at a chosen `D/l`, and a `D/l` sweep of that example.
//! Each has a plain Rust counterpart so it can be tested off the browser.

use wasm_bindgen::prelude::*;

use homogen_core::bench::{fit_rate, oracle_eval};
use homogen_core::cell::{solve_cell, EffectiveModel, CELL_TOL};
use homogen_core::fields::FieldSpec;
use homogen_core::grid::Grid;
use homogen_core::linalg::SolveOptions;
use homogen_core::pipeline::{run_case, CaseSpec};

fn js_err(e: homogen_core::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Effective tensor and first corrector of a catalog field.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct CellView {
    k0: Vec<f64>,
    voigt: Vec<f64>,
    reuss: Vec<f64>,
    y: Vec<f64>,
    coefficient: Vec<f64>,
    corrector: Vec<f64>,
}

#[wasm_bindgen]
impl CellView {
    /// Row-major `K⁰`, `dim²` entries.
    pub fn k0(&self) -> Vec<f64> {
        self.k0.clone()
    }
    pub fn voigt(&self) -> Vec<f64> {
        self.voigt.clone()
    }
    pub fn reuss(&self) -> Vec<f64> {
        self.reuss.clone()
    }
    /// Cell coordinate along the first axis (on `y₂ = 0` in 2D).
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }
    pub fn coefficient(&self) -> Vec<f64> {
        self.coefficient.clone()
    }
    /// `N¹` along the same line.
    pub fn corrector(&self) -> Vec<f64> {
        self.corrector.clone()
    }
}

pub fn cell_view(field: &str, n: usize) -> homogen_core::Result<CellView> {
    let spec = FieldSpec::from_name(field, Some(2), None)?;
    let k = spec.build()?;
    let cell = solve_cell(&k, n, SolveOptions::with_tol(CELL_TOL))?;
    let model = EffectiveModel::from_cell(&cell);
    let grid = *cell.grid();
    let y: Vec<f64> = (0..n).map(|i| grid.coords(i)[0]).collect();
    let coefficient = y.iter().map(|&t| k.eval([t, 0.0]).get(0, 0)).collect();
    let corrector = cell.corrector(0).values()[..n].to_vec();
    let flat = |t: &homogen_core::fields::Tensor| {
        (0..t.dim).flat_map(|i| (0..t.dim).map(move |j| (i, j))).map(|(i, j)| t.get(i, j)).collect()
    };
    Ok(CellView { k0: flat(&model.k0), voigt: flat(&model.voigt), reuss: flat(&model.reuss), y, coefficient, corrector })
}

#[wasm_bindgen(js_name = cellView)]
pub fn cell_view_js(field: &str, n: usize) -> Result<CellView, JsValue> {
    cell_view(field, n).map_err(js_err)
}

/// Fine, homogenized and first-order solutions of the 1D cosine example.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct ExampleCurves {
    x: Vec<f64>,
    p: Vec<f64>,
    p0: Vec<f64>,
    p1: Vec<f64>,
    exact: Vec<f64>,
    metrics: Vec<f64>,
}

#[wasm_bindgen]
impl ExampleCurves {
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    pub fn p(&self) -> Vec<f64> {
        self.p.clone()
    }
    pub fn p0(&self) -> Vec<f64> {
        self.p0.clone()
    }
    pub fn p1(&self) -> Vec<f64> {
        self.p1.clone()
    }
    /// Closed-form fine solution.
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }
    /// `[e_L2, e_H1, e_energy, e_H1 against p₀]`.
    pub fn metrics(&self) -> Vec<f64> {
        self.metrics.clone()
    }
}

pub fn example_curves(d_over_l: f64, cells_per_period: usize) -> homogen_core::Result<ExampleCurves> {
    let out = run_case(&CaseSpec::cosine_example(d_over_l, cells_per_period))?;
    let grid = *out.p.grid();
    let x: Vec<f64> = (0..grid.node_count()).map(|i| grid.coords(i)[0]).collect();
    let exact = x.iter().map(|&x| oracle_eval(x, 1.0, d_over_l).p).collect();
    let r = &out.report;
    Ok(ExampleCurves {
        x,
        p: out.p.into_values(),
        p0: out.p0.into_values(),
        p1: out.p1.into_values(),
        exact,
        metrics: vec![r.e_l2, r.e_h1, r.e_energy, r.e_h1_p0],
    })
}

#[wasm_bindgen(js_name = exampleCurves)]
pub fn example_curves_js(d_over_l: f64, cells_per_period: usize) -> Result<ExampleCurves, JsValue> {
    example_curves(d_over_l, cells_per_period).map_err(js_err)
}

/// Metrics of the 1D example over `D/l = 2^k`, with fitted rates.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SweepView {
    eps: Vec<f64>,
    e_l2: Vec<f64>,
    e_h1: Vec<f64>,
    e_energy: Vec<f64>,
    rates: Vec<f64>,
}

#[wasm_bindgen]
impl SweepView {
    pub fn eps(&self) -> Vec<f64> {
        self.eps.clone()
    }
    pub fn e_l2(&self) -> Vec<f64> {
        self.e_l2.clone()
    }
    pub fn e_h1(&self) -> Vec<f64> {
        self.e_h1.clone()
    }
    pub fn e_energy(&self) -> Vec<f64> {
        self.e_energy.clone()
    }
    /// Fitted rates of `e_L2`, `e_H1`, `e_energy`.
    pub fn rates(&self) -> Vec<f64> {
        self.rates.clone()
    }
}

/// Runs `D/l = 2^k` for `k` in `min_exp..=max_exp` sequentially (no threads
/// in the browser).
pub fn sweep_view(min_exp: u32, max_exp: u32, cells_per_period: usize) -> homogen_core::Result<SweepView> {
    if max_exp < min_exp + 2 {
        return Err(homogen_core::Error::Validation("a sweep needs at least 3 points".into()));
    }
    let mut view = SweepView { eps: vec![], e_l2: vec![], e_h1: vec![], e_energy: vec![], rates: vec![] };
    for k in min_exp..=max_exp {
        let r = run_case(&CaseSpec::cosine_example(2f64.powi(k as i32), cells_per_period))?.report;
        view.eps.push(r.eps);
        view.e_l2.push(r.e_l2);
        view.e_h1.push(r.e_h1);
        view.e_energy.push(r.e_energy);
    }
    for m in [&view.e_l2, &view.e_h1, &view.e_energy] {
        let pts: Vec<(f64, f64)> = view.eps.iter().copied().zip(m.iter().copied()).collect();
        view.rates.push(fit_rate(&pts)?.rate);
    }
    Ok(view)
}

#[wasm_bindgen(js_name = sweepView)]
pub fn sweep_view_js(min_exp: u32, max_exp: u32, cells_per_period: usize) -> Result<SweepView, JsValue> {
    sweep_view(min_exp, max_exp, cells_per_period).map_err(js_err)
}
