//! `D = l·2^k` sweeps executed on a worker pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::predicted_constants;
use super::rate::fit_rate;
use crate::corrector::ErrorReport;
use crate::error::{Error, Result};
use crate::fields::{FieldSpec, SourceSpec};
use crate::pipeline::{run_case, CaseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub field: FieldSpec,
    pub source: SourceSpec,
    pub l: f64,
    /// Values of `D/l`; powers of two, strictly increasing.
    pub ratios: Vec<f64>,
    pub cells_per_period: usize,
    pub cell_resolution: Option<usize>,
}

impl SweepPlan {
    pub fn new(field: FieldSpec, source: SourceSpec, l: f64, ratios: Vec<f64>, cells_per_period: usize) -> Self {
        Self { field, source, l, ratios, cells_per_period, cell_resolution: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratios.len() < 3 {
            return Err(Error::Validation(format!("a sweep needs at least 3 points, got {}", self.ratios.len())));
        }
        if !(self.l > 0.0) {
            return Err(Error::Validation("l must be positive".into()));
        }
        for w in self.ratios.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Validation("sweep ratios must be strictly increasing".into()));
            }
        }
        for &r in &self.ratios {
            let k = r.log2().round();
            if (r - 2f64.powf(k)).abs() > 1e-9 * r || r < 4.0 {
                return Err(Error::Validation(format!("D/l = {r} is not a power of two >= 4")));
            }
        }
        Ok(())
    }

    pub fn cases(&self) -> Vec<CaseSpec> {
        self.ratios
            .iter()
            .map(|&r| {
                let mut c = CaseSpec::new(self.field.clone(), self.source.clone(), self.l, r * self.l, self.cells_per_period);
                c.cell_resolution = self.cell_resolution;
                c
            })
            .collect()
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.field.build()?.dim())
    }
}

/// One executed point; failures are kept so partial results can be written.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub case: CaseSpec,
    pub report: Option<ErrorReport>,
    pub error: Option<String>,
}

/// Runs every point on a pool of `workers` threads; results come back in
/// plan order.
pub fn run_sweep(plan: &SweepPlan, workers: usize) -> Result<Vec<SweepPoint>> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    let cases = plan.cases();
    Ok(pool.install(|| {
        cases
            .par_iter()
            .map(|c| match run_case(c) {
                Ok(out) => SweepPoint { case: c.clone(), report: Some(out.report), error: None },
                Err(e) => SweepPoint { case: c.clone(), report: None, error: Some(e.to_string()) },
            })
            .collect()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateTarget {
    Near { rate: f64, tol: f64 },
    AtLeast { rate: f64 },
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub metric: &'static str,
    pub target: RateTarget,
    pub min_r2: Option<f64>,
    /// Expected prefactor of `metric ≈ P·eps^rate` and its relative tolerance.
    pub prefactor: Option<(f64, f64)>,
}

impl Expectation {
    /// Default expectations for a plan.
    ///
    /// The commensurate 1D cosine example pins all three metrics at rate 2
    /// with the closed-form prefactors; other 1D runs expect rate 2 for the
    /// L² and H¹ metrics; 2D runs expect rate 2 for L² and at least 0.9 for
    /// H¹ (boundary-layer limited). Discontinuous fields are informational.
    pub fn for_plan(plan: &SweepPlan) -> Result<Vec<Expectation>> {
        let field = plan.field.build()?;
        let info = |metric| Expectation { metric, target: RateTarget::Informational, min_r2: None, prefactor: None };
        if field.is_discontinuous() {
            return Ok(vec![info("e_L2"), info("e_H1"), info("e_energy")]);
        }
        if plan.field == FieldSpec::Cosine1d && plan.source == SourceSpec::Cosine1d {
            // metric ≈ c/D² = (c/l²)(l/D)²
            let c = predicted_constants(plan.l, plan.l * plan.ratios[0])?;
            let l2 = plan.l * plan.l;
            let near = RateTarget::Near { rate: 2.0, tol: 0.1 };
            return Ok(vec![
                Expectation { metric: "e_L2", target: near, min_r2: Some(0.999), prefactor: Some((c.c_l2 / l2, 0.05)) },
                Expectation { metric: "e_H1", target: near, min_r2: Some(0.999), prefactor: Some((c.c_h1 / l2, 0.05)) },
                Expectation { metric: "e_energy", target: near, min_r2: Some(0.999), prefactor: Some((c.c_e / l2, 0.1)) },
            ]);
        }
        if field.dim() == 1 {
            let near = RateTarget::Near { rate: 2.0, tol: 0.2 };
            return Ok(vec![
                Expectation { metric: "e_L2", target: near, min_r2: None, prefactor: None },
                Expectation { metric: "e_H1", target: near, min_r2: None, prefactor: None },
                info("e_energy"),
            ]);
        }
        Ok(vec![
            Expectation { metric: "e_L2", target: RateTarget::Near { rate: 2.0, tol: 0.2 }, min_r2: None, prefactor: None },
            Expectation { metric: "e_H1", target: RateTarget::AtLeast { rate: 0.9 }, min_r2: None, prefactor: None },
            info("e_energy"),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub metric: String,
    pub fitted_rate: f64,
    pub expected_rate: f64,
    pub prefactor: f64,
    pub expected_prefactor: Option<f64>,
    pub r2: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepVerdict {
    pub verdicts: Vec<Verdict>,
    /// `e_H1` against `p₁` is below `e_H1` against `p₀` at every point.
    pub corrector_improves: bool,
    pub failed_points: usize,
    pub pass: bool,
}

fn metric_of(r: &ErrorReport, metric: &str) -> f64 {
    match metric {
        "e_L2" => r.e_l2,
        "e_H1" => r.e_h1,
        _ => r.e_energy,
    }
}

impl SweepVerdict {
    pub fn evaluate(points: &[SweepPoint], expectations: &[Expectation]) -> Self {
        let reports: Vec<&ErrorReport> = points.iter().filter_map(|p| p.report.as_ref()).collect();
        let failed_points = points.len() - reports.len();
        let corrector_improves = !reports.is_empty() && reports.iter().all(|r| r.e_h1 < r.e_h1_p0);
        let verdicts: Vec<Verdict> = expectations
            .iter()
            .map(|ex| {
                let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.eps, metric_of(r, ex.metric))).collect();
                let expected_rate = match ex.target {
                    RateTarget::Near { rate, .. } | RateTarget::AtLeast { rate } => rate,
                    RateTarget::Informational => f64::NAN,
                };
                match fit_rate(&pts) {
                    Ok(fit) => {
                        let rate_ok = match ex.target {
                            RateTarget::Near { rate, tol } => (fit.rate - rate).abs() <= tol,
                            RateTarget::AtLeast { rate } => fit.rate >= rate,
                            RateTarget::Informational => true,
                        };
                        let r2_ok = ex.min_r2.is_none_or(|m| fit.r2 > m);
                        let pre_ok = ex.prefactor.is_none_or(|(p, tol)| (fit.prefactor / p - 1.0).abs() <= tol);
                        Verdict {
                            metric: ex.metric.to_string(),
                            fitted_rate: fit.rate,
                            expected_rate,
                            prefactor: fit.prefactor,
                            expected_prefactor: ex.prefactor.map(|p| p.0),
                            r2: fit.r2,
                            pass: rate_ok && r2_ok && pre_ok,
                            note: matches!(ex.target, RateTarget::Informational).then(|| "informational".to_string()),
                        }
                    }
                    Err(e) => Verdict {
                        metric: ex.metric.to_string(),
                        fitted_rate: f64::NAN,
                        expected_rate,
                        prefactor: f64::NAN,
                        expected_prefactor: ex.prefactor.map(|p| p.0),
                        r2: f64::NAN,
                        pass: matches!(ex.target, RateTarget::Informational),
                        note: Some(e.to_string()),
                    },
                }
            })
            .collect();
        let pass = failed_points == 0 && verdicts.iter().all(|v| v.pass);
        Self { verdicts, corrector_improves, failed_points, pass }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_rejected() {
        let plan = SweepPlan::new(FieldSpec::Cosine1d, SourceSpec::Cosine1d, 1.0, vec![8.0, 16.0], 16);
        assert!(plan.validate().is_err());
        assert!(run_sweep(&plan, 1).is_err());
    }

    #[test]
    fn non_power_of_two_rejected() {
        let plan = SweepPlan::new(FieldSpec::Cosine1d, SourceSpec::Cosine1d, 1.0, vec![8.0, 12.0, 16.0], 16);
        assert!(plan.validate().is_err());
    }

    #[test]
    fn results_in_plan_order() {
        let plan = SweepPlan::new(FieldSpec::Cosine1d, SourceSpec::Cosine1d, 1.0, vec![4.0, 8.0, 16.0], 16);
        let pts = run_sweep(&plan, 3).unwrap();
        let ds: Vec<f64> = pts.iter().map(|p| p.report.as_ref().unwrap().d).collect();
        assert_eq!(ds, vec![4.0, 8.0, 16.0]);
    }
}
