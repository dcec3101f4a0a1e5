//! Convergence sweeps, rate fits and the closed-form 1D oracle.

pub mod lemma;
pub mod oracle;
pub mod rate;
pub mod sweep;

pub use lemma::negative_norm_surrogate;
pub use oracle::{oracle_eval, flux_constant, predicted_constants, OracleValues, PredictedConstants};
pub use rate::{fit_rate, RateFit};
pub use sweep::{run_sweep, Expectation, RateTarget, SweepPlan, SweepPoint, SweepVerdict, Verdict};
