//! Closed forms for the 1D cosine medium `K = 1/(2 + cos 2πx/l)` on `(0,D)`
//! with `f = -1`, `F = (x + D/2 + C) K`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

fn commensurate(l: f64, d: f64) -> bool {
    let r = d / l;
    (r - r.round()).abs() < 1e-9 * r.max(1.0)
}

/// The constant `C`. Exactly zero when `D/l` is an integer.
pub fn flux_constant(l: f64, d: f64) -> f64 {
    if commensurate(l, d) {
        return 0.0;
    }
    let a = l / (2.0 * PI);
    let t = 2.0 * PI * d / l;
    a * t.sin() + a * a / d * t.cos() - a * a / d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValues {
    pub p: f64,
    pub p0: f64,
    pub p1: f64,
    pub c: f64,
}

/// Fine solution `p`, homogenized `p₀`, first-order `p₁` and `C` at `x`.
pub fn oracle_eval(x: f64, l: f64, d: f64) -> OracleValues {
    let c = flux_constant(l, d);
    let a = l / (2.0 * PI);
    let t = 2.0 * PI * x / l;
    let p0 = x * x / 2.0 - d * x / 2.0;
    let p = p0 + x * a * t.sin() + a * a * t.cos() - c * x - a * a;
    let p1 = p0 + x * a * t.sin() + l * c / (4.0 * PI) * t.sin();
    OracleValues { p, p0, p1, c }
}

/// Corrector `N(y) = sin(2πy)/(4π)`.
pub fn corrector(y: f64) -> f64 {
    (2.0 * PI * y).sin() / (4.0 * PI)
}

/// Source corrector `w(x, y) = (x + D/2 + C) sin(2πy)/(4π)`.
pub fn source_corrector(x: f64, y: f64, l: f64, d: f64) -> f64 {
    (x + 0.5 * d + flux_constant(l, d)) * corrector(y)
}

/// Leading constants: each metric behaves like `c / D²` as `D/l` grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictedConstants {
    pub c_l2: f64,
    pub c_h1: f64,
    pub c_e: f64,
}

impl PredictedConstants {
    pub fn l2_at(&self, d: f64) -> f64 {
        self.c_l2 / (d * d)
    }
    pub fn h1_at(&self, d: f64) -> f64 {
        self.c_h1 / (d * d)
    }
    pub fn energy_at(&self, d: f64) -> f64 {
        self.c_e / (d * d)
    }
}

/// `c_L2 = l²/(24π²)`, `c_H1 = l²/(8π²)`, `c_E = l²/(2π²)`; requires integer `D/l`.
pub fn predicted_constants(l: f64, d: f64) -> Result<PredictedConstants> {
    if !(l > 0.0) || !(d > 0.0) || !commensurate(l, d) {
        return Err(Error::Validation(format!("D/l must be a positive integer, got {}", d / l)));
    }
    let l2 = l * l;
    Ok(PredictedConstants {
        c_l2: l2 / (24.0 * PI * PI),
        c_h1: l2 / (8.0 * PI * PI),
        c_e: l2 / (2.0 * PI * PI),
    })
}

/// Continuum energy gap `E(p) - E₀(p₀)` for arbitrary `D/l`.
///
/// The `C` term admits two readings; both are returned. `per_2d` reads it as
/// `C/(2D)`, which is what `(1/D³)·CD²/2` gives, `per_d2` as `C/D²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyGap {
    pub per_2d: f64,
    pub per_d2: f64,
}

pub fn energy_gap(l: f64, d: f64) -> EnergyGap {
    let c = flux_constant(l, d);
    let t = 2.0 * PI * d / l;
    let rest = (l * l / (4.0 * PI * PI)) * (t.cos() + 1.0) / (d * d) - l / (2.0 * PI * d.powi(3)) * t.sin();
    EnergyGap { per_2d: c / (2.0 * d) + rest, per_d2: c / (d * d) + rest }
}
