//! End-to-end runs: fine solve, cell problems, homogenized solve, `p₁`, metrics.

use serde::{Deserialize, Serialize};

use crate::cell::{effective_source, solve_cell, EffectiveModel, CELL_TOL};
use crate::corrector::{assemble_p1, energy, scaled_h1_error, scaled_l2_error, ErrorReport};
use crate::error::{Error, Result};
use crate::fields::{validate, FieldSpec, SourceSpec};
use crate::grid::{Grid, MacroGrid, ScalarField};
use crate::linalg::SolveOptions;
use crate::macroscale::{solve_fine, solve_homogenized, FineProblem, HomogenizedProblem};

/// One fine-versus-homogenized comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub field: FieldSpec,
    pub source: SourceSpec,
    pub l: f64,
    pub d: f64,
    pub cells_per_period: usize,
    /// Cell-problem resolution; `None` uses `cells_per_period`, which makes
    /// the cell operator coincide with one period of the fine operator.
    pub cell_resolution: Option<usize>,
    /// Constant added to `F`.
    pub flux_offset: [f64; 2],
    pub macro_tol: f64,
}

impl CaseSpec {
    pub fn new(field: FieldSpec, source: SourceSpec, l: f64, d: f64, cells_per_period: usize) -> Self {
        Self {
            field,
            source,
            l,
            d,
            cells_per_period,
            cell_resolution: None,
            flux_offset: [0.0; 2],
            macro_tol: 1e-10,
        }
    }

    /// The 1D cosine example with `l = 1`.
    pub fn cosine_example(d_over_l: f64, cells_per_period: usize) -> Self {
        Self::new(FieldSpec::Cosine1d, SourceSpec::Cosine1d, 1.0, d_over_l, cells_per_period)
    }

    pub fn cell_n(&self) -> usize {
        self.cell_resolution.unwrap_or(self.cells_per_period)
    }
}

/// Fields and report produced by [`run_case`].
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub report: ErrorReport,
    pub model: EffectiveModel,
    pub p: ScalarField<MacroGrid>,
    pub p0: ScalarField<MacroGrid>,
    pub p1: ScalarField<MacroGrid>,
    /// `D/l` is an integer.
    pub commensurate: bool,
}

pub fn run_case(spec: &CaseSpec) -> Result<CaseOutcome> {
    let field = spec.field.build()?;
    validate(&field, 64)?;
    let source = spec.source.build(&field, spec.l, spec.d)?;
    let source = if spec.flux_offset != [0.0; 2] { source.with_flux_offset(spec.flux_offset) } else { source };
    let problem = FineProblem::new(field.clone(), spec.l, spec.d, source.clone(), spec.cells_per_period)?;
    let grid = problem.grid()?;
    let opts = SolveOptions::with_tol(spec.macro_tol);

    let p = solve_fine(&problem, opts)?;

    let cell_n = spec.cell_n();
    if cell_n < 8 {
        return Err(Error::Validation(format!("cell resolution must be at least 8, got {cell_n}")));
    }
    let cell = solve_cell(&field, cell_n, SolveOptions::with_tol(CELL_TOL))?;
    let model = EffectiveModel::from_cell(&cell);
    let es = effective_source(&cell, &source)?;
    let hp = HomogenizedProblem::new(model.k0, grid, &es)?;
    let p0 = solve_homogenized(&hp, opts)?;
    let p1 = assemble_p1(&p0, &cell, Some(&es), spec.l)?;

    let fine_coef: Vec<f64> = grid.edges().map(|e| problem.edge_coefficient(&grid, &e)).collect();
    let fine_flux: Vec<f64> = grid.edges().map(|e| problem.edge_flux(&grid, &e)).collect();
    let hom_coef: Vec<f64> = grid.edges().map(|e| model.k0.get(e.axis, e.axis)).collect();
    let energy_fine = energy(&p, &fine_coef, &fine_flux, spec.d);
    let energy_homogenized = energy(&p0, &hom_coef, hp.edge_fluxes(), spec.d);

    let report = ErrorReport {
        dim: grid.dim(),
        l: spec.l,
        d: spec.d,
        eps: spec.l / spec.d,
        m_per_period: spec.cells_per_period,
        e_l2: scaled_l2_error(&p, &p0, spec.d)?,
        e_h1: scaled_h1_error(&p, &p1, spec.d)?,
        e_energy: (energy_fine - energy_homogenized).abs(),
        e_h1_p0: scaled_h1_error(&p, &p0, spec.d)?,
        energy_fine,
        energy_homogenized,
    };
    Ok(CaseOutcome { report, model, p, p0, p1, commensurate: problem.is_commensurate() })
}
