//! Periodic coefficient fields `K(y)` and two-scale sources `f(x,y)`, `F(x,y)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellGrid, Grid};

/// Small dense symmetric-or-not matrix of size `dim <= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tensor {
    pub dim: usize,
    pub m: [[f64; 2]; 2],
}

impl Tensor {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, m: [[0.0; 2]; 2] }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            t.m[i][i] = value;
        }
        t
    }

    pub fn diag(d: [f64; 2]) -> Self {
        Self { dim: 2, m: [[d[0], 0.0], [0.0, d[1]]] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        t.m[0][1] = self.m[1][0];
        t.m[1][0] = self.m[0][1];
        t
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut t = *self;
        for row in t.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        t
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self.m[i][j] * v[j];
            }
        }
        out
    }

    /// Max-entry distance to the transpose.
    pub fn asymmetry(&self) -> f64 {
        if self.dim == 1 {
            0.0
        } else {
            (self.m[0][1] - self.m[1][0]).abs()
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.dim == 1 || (self.m[0][1] == 0.0 && self.m[1][0] == 0.0)
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim == 1 {
            return vec![self.m[0][0]];
        }
        let a = self.m[0][0];
        let d = self.m[1][1];
        let b = 0.5 * (self.m[0][1] + self.m[1][0]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        vec![mean - rad, mean + rad]
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        let mut out = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out = out.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        out
    }

    /// Row-major entries, `dim*dim` of them.
    pub fn row_major(&self) -> Vec<f64> {
        (0..self.dim).flat_map(|i| (0..self.dim).map(move |j| self.m[i][j])).collect()
    }
}

type TensorFn = dyn Fn([f64; 2]) -> Tensor + Send + Sync;

/// Y-periodic, symmetric, uniformly elliptic matrix field with declared
/// ellipticity bounds.
#[derive(Clone)]
pub struct CoefficientField {
    name: String,
    dim: usize,
    lambda: f64,
    big_lambda: f64,
    discontinuous: bool,
    eval: Arc<TensorFn>,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lambda", &self.lambda)
            .field("Lambda", &self.big_lambda)
            .finish()
    }
}

impl CoefficientField {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        lambda: f64,
        big_lambda: f64,
        eval: impl Fn([f64; 2]) -> Tensor + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Validation(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(lambda > 0.0) || !(big_lambda >= lambda) {
            return Err(Error::Validation(format!(
                "ellipticity bounds must satisfy 0 < lambda <= Lambda, got [{lambda}, {big_lambda}]"
            )));
        }
        Ok(Self {
            name: name.into(),
            dim,
            lambda,
            big_lambda,
            discontinuous: false,
            eval: Arc::new(eval),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }
    /// Discontinuous fields only get informational rate checks.
    pub fn is_discontinuous(&self) -> bool {
        self.discontinuous
    }

    /// `K(y)`, with `y` reduced mod 1 first.
    pub fn eval(&self, y: [f64; 2]) -> Tensor {
        let mut w = [0.0; 2];
        for a in 0..self.dim {
            w[a] = y[a].rem_euclid(1.0);
        }
        (self.eval)(w)
    }

    /// `c * K`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Validation(format!("scale factor must be positive, got {c}")));
        }
        let inner = self.eval.clone();
        let mut out = Self::new(
            format!("{}*{c}", self.name),
            self.dim,
            self.lambda * c,
            self.big_lambda * c,
            move |y| inner(y).scale(c),
        )?;
        out.discontinuous = self.discontinuous;
        Ok(out)
    }

    /// The field seen in swapped coordinates: `P K(P y) P^T` with `P` the
    /// axis swap. Identity in 1D.
    pub fn axes_swapped(&self) -> Self {
        if self.dim == 1 {
            return self.clone();
        }
        let inner = self.eval.clone();
        let mut out = Self::new(
            format!("{}(swapped)", self.name),
            2,
            self.lambda,
            self.big_lambda,
            move |y| {
                let k = inner([y[1], y[0]]);
                Tensor { dim: 2, m: [[k.m[1][1], k.m[1][0]], [k.m[0][1], k.m[0][0]]] }
            },
        )
        .expect("bounds already validated");
        out.discontinuous = self.discontinuous;
        out
    }

    fn mark_discontinuous(mut self) -> Self {
        self.discontinuous = true;
        self
    }
}

/// `K ≡ value * I`.
pub fn make_constant(dim: usize, value: f64) -> Result<CoefficientField> {
    if !(value > 0.0) {
        return Err(Error::Validation(format!("constant coefficient must be positive, got {value}")));
    }
    CoefficientField::new(format!("constant({value})"), dim, value, value, move |_| {
        Tensor::scalar(dim, value)
    })
}

/// The cosine medium `K(y) = 1/(2 + cos 2πy)` on the 1D cell.
pub fn make_cosine_1d() -> CoefficientField {
    CoefficientField::new("paper1d", 1, 1.0 / 3.0, 1.0, |y| {
        Tensor::scalar(1, cosine_profile(y[0]))
    })
    .expect("static bounds")
}

/// `1/(2 + cos 2πt)`.
pub fn cosine_profile(t: f64) -> f64 {
    1.0 / (2.0 + (2.0 * PI * t).cos())
}

/// Isotropic separable field `(2+cos 2πy₁)(2+cos 2πy₂)/9 · I`, values in [1/9, 1].
pub fn make_separable_cosine() -> CoefficientField {
    CoefficientField::new("separable_cosine", 2, 1.0 / 9.0, 1.0, |y| {
        let a = (2.0 + (2.0 * PI * y[0]).cos()) * (2.0 + (2.0 * PI * y[1]).cos()) / 9.0;
        Tensor::scalar(2, a)
    })
    .expect("static bounds")
}

/// Laminate `K(y) = a(y₁) I` in 2D. The profile is sampled on 1024 points to
/// reject nonpositive values and to derive the bounds.
pub fn make_laminate(
    name: impl Into<String>,
    profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Result<CoefficientField> {
    const SAMPLES: usize = 1024;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..SAMPLES {
        // nodes and edge midpoints of any power-of-two grid up to 1024
        for t in [i as f64 / SAMPLES as f64, (i as f64 + 0.5) / SAMPLES as f64] {
            let a = profile(t);
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::Validation(format!(
                    "laminate profile must be positive, got {a} at y1 = {t}"
                )));
            }
            lo = lo.min(a);
            hi = hi.max(a);
        }
    }
    CoefficientField::new(name, 2, lo, hi, move |y| Tensor::scalar(2, profile(y[0])))
}

/// Laminate with the cosine profile `1/(2 + cos 2πy₁)`.
pub fn make_cosine_laminate() -> CoefficientField {
    make_laminate("laminate", cosine_profile).expect("positive profile")
}

/// Two-phase checkerboard: `low` on the quadrants where exactly one of
/// `y₁ < 1/2`, `y₂ < 1/2` holds, `high` elsewhere, the phase mean on the
/// interface lines.
pub fn make_checkerboard(low: f64, high: f64) -> Result<CoefficientField> {
    if !(low > 0.0) || !(high > 0.0) {
        return Err(Error::Validation("checkerboard phases must be positive".into()));
    }
    let field = CoefficientField::new(
        format!("checkerboard({low},{high})"),
        2,
        low.min(high),
        low.max(high),
        move |y| {
            // +1 on the lower half of an axis, -1 on the upper half, 0 on the
            // interface lines, so points on an interface get the phase mean
            let side = |t: f64| {
                if (2.0 * t - (2.0 * t).round()).abs() < 1e-12 {
                    0.0
                } else if t < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            };
            let s = side(y[0]) * side(y[1]);
            Tensor::scalar(2, 0.5 * (low + high) + 0.5 * (high - low) * s)
        },
    )?;
    Ok(field.mark_discontinuous())
}

/// Bounds measured by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub lambda_est: f64,
    pub big_lambda_est: f64,
}

/// Samples `K` on the `n^dim` cell nodes and checks symmetry, positivity
/// and the declared ellipticity bounds.
pub fn validate(field: &CoefficientField, n: usize) -> Result<Bounds> {
    let grid = CellGrid::new(field.dim(), n)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..grid.node_count() {
        let y = grid.coords(i);
        let k = field.eval(y);
        if k.asymmetry() > 1e-12 {
            return Err(Error::EllipticityViolation(format!(
                "{}: symmetry residual {:.3e} at y = {:?}",
                field.name(),
                k.asymmetry(),
                &y[..field.dim()]
            )));
        }
        for ev in k.eigenvalues() {
            if !(ev > 0.0) {
                return Err(Error::EllipticityViolation(format!(
                    "{}: eigenvalue {ev} at y = {:?}",
                    field.name(),
                    &y[..field.dim()]
                )));
            }
            lo = lo.min(ev);
            hi = hi.max(ev);
        }
    }
    const SLACK: f64 = 1e-9;
    if lo < field.lambda() - SLACK || hi > field.big_lambda() + SLACK {
        return Err(Error::EllipticityViolation(format!(
            "{}: sampled spectrum [{lo}, {hi}] exceeds declared [{}, {}]",
            field.name(),
            field.lambda(),
            field.big_lambda()
        )));
    }
    Ok(Bounds { lambda_est: lo, big_lambda_est: hi })
}

/// Named catalog entry, addressable from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant { dim: usize, value: f64 },
    #[serde(rename = "paper1d")]
    Cosine1d,
    SeparableCosine,
    Laminate,
    Checkerboard { low: f64, high: f64 },
}

impl FieldSpec {
    pub fn build(&self) -> Result<CoefficientField> {
        match *self {
            FieldSpec::Constant { dim, value } => make_constant(dim, value),
            FieldSpec::Cosine1d => Ok(make_cosine_1d()),
            FieldSpec::SeparableCosine => Ok(make_separable_cosine()),
            FieldSpec::Laminate => Ok(make_cosine_laminate()),
            FieldSpec::Checkerboard { low, high } => make_checkerboard(low, high),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldSpec::Constant { .. } => "constant",
            FieldSpec::Cosine1d => "paper1d",
            FieldSpec::SeparableCosine => "separable_cosine",
            FieldSpec::Laminate => "laminate",
            FieldSpec::Checkerboard { .. } => "checkerboard",
        }
    }

    /// Parses a catalog name with the extra parameters a CLI may supply.
    pub fn from_name(name: &str, dim: Option<usize>, value: Option<f64>) -> Result<Self> {
        Ok(match name {
            "constant" => FieldSpec::Constant { dim: dim.unwrap_or(1), value: value.unwrap_or(1.0) },
            "paper1d" => FieldSpec::Cosine1d,
            "separable_cosine" => FieldSpec::SeparableCosine,
            "laminate" => FieldSpec::Laminate,
            "checkerboard" => FieldSpec::Checkerboard { low: 1.0, high: value.unwrap_or(3.0) },
            other => {
                return Err(Error::Validation(format!(
                    "unknown field '{other}' (expected constant, paper1d, separable_cosine, laminate, checkerboard)"
                )))
            }
        })
    }

    /// Every catalog entry with default parameters.
    pub fn catalog() -> Vec<FieldSpec> {
        vec![
            FieldSpec::Constant { dim: 1, value: 1.0 },
            FieldSpec::Constant { dim: 2, value: 2.0 },
            FieldSpec::Cosine1d,
            FieldSpec::SeparableCosine,
            FieldSpec::Laminate,
            FieldSpec::Checkerboard { low: 1.0, high: 3.0 },
        ]
    }
}

type ScalarSourceFn = dyn Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync;
type MacroScalarFn = dyn Fn([f64; 2]) -> f64 + Send + Sync;
type CellVectorFn = dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync;
type VectorSourceFn = dyn Fn([f64; 2], [f64; 2]) -> [f64; 2] + Send + Sync;

/// Flux part of a two-scale source.
#[derive(Clone)]
pub enum Flux {
    None,
    /// `F(x,y) = g(x) Φ(y)`.
    Separable { g: Arc<MacroScalarFn>, phi: Arc<CellVectorFn> },
    General { eval: Arc<VectorSourceFn>, micro: bool },
}

/// Right-hand side `f(x, x/l) + ∇·F(x, x/l)`.
#[derive(Clone)]
pub struct TwoScaleSource {
    name: String,
    dim: usize,
    f: Option<Arc<ScalarSourceFn>>,
    micro_f: bool,
    flux: Flux,
    offset: [f64; 2],
}

impl fmt::Debug for TwoScaleSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoScaleSource")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("micro_f", &self.micro_f)
            .field("micro_F", &self.has_micro_flux())
            .field("offset", &self.offset)
            .finish()
    }
}

fn wrap(y: [f64; 2]) -> [f64; 2] {
    [y[0].rem_euclid(1.0), y[1].rem_euclid(1.0)]
}

impl TwoScaleSource {
    pub fn zero(dim: usize) -> Self {
        Self { name: "zero".into(), dim, f: None, micro_f: false, flux: Flux::None, offset: [0.0; 2] }
    }

    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self { name: name.into(), ..Self::zero(dim) }
    }

    /// Sets the scalar part. `micro` declares whether it depends on `y`.
    pub fn with_scalar(
        mut self,
        micro: bool,
        f: impl Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.f = Some(Arc::new(f));
        self.micro_f = micro;
        self
    }

    pub fn with_flux(mut self, flux: Flux) -> Self {
        self.flux = flux;
        self
    }

    /// Adds a constant vector to `F`.
    pub fn with_flux_offset(mut self, c: [f64; 2]) -> Self {
        self.offset = [self.offset[0] + c[0], self.offset[1] + c[1]];
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn flux_kind(&self) -> &Flux {
        &self.flux
    }
    pub fn flux_offset(&self) -> [f64; 2] {
        self.offset
    }
    pub fn has_micro_f(&self) -> bool {
        self.f.is_some() && self.micro_f
    }
    pub fn has_micro_flux(&self) -> bool {
        match self.flux {
            Flux::None => false,
            Flux::Separable { .. } => true,
            Flux::General { micro, .. } => micro,
        }
    }
    pub fn has_scalar(&self) -> bool {
        self.f.is_some()
    }
    pub fn has_flux(&self) -> bool {
        !matches!(self.flux, Flux::None) || self.offset != [0.0; 2]
    }

    pub fn f(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.f.as_ref().map_or(0.0, |f| f(x, wrap(y)))
    }

    /// `F(x,y)`, offset included.
    pub fn flux(&self, x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
        let y = wrap(y);
        let base = match &self.flux {
            Flux::None => [0.0; 2],
            Flux::Separable { g, phi } => {
                let s = g(x);
                let p = phi(y);
                [s * p[0], s * p[1]]
            }
            Flux::General { eval, .. } => eval(x, y),
        };
        [base[0] + self.offset[0], base[1] + self.offset[1]]
    }
}

/// Named source, addressable from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Zero,
    /// `f ≡ value`, no flux.
    Uniform { value: f64 },
    /// The 1D cosine example: `f = -1`, `F = (x + D/2 + C) K(y)`.
    #[serde(rename = "paper1d")]
    Cosine1d,
    /// `f(x,y) = x₁ cos 2πy₁`, no flux.
    ModulatedCosine,
}

impl SourceSpec {
    pub fn from_name(name: &str, value: Option<f64>) -> Result<Self> {
        Ok(match name {
            "zero" => SourceSpec::Zero,
            "uniform" => SourceSpec::Uniform { value: value.unwrap_or(1.0) },
            "paper1d" => SourceSpec::Cosine1d,
            "modulated_cosine" => SourceSpec::ModulatedCosine,
            other => {
                return Err(Error::Validation(format!(
                    "unknown source '{other}' (expected zero, uniform, paper1d, modulated_cosine)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceSpec::Zero => "zero",
            SourceSpec::Uniform { .. } => "uniform",
            SourceSpec::Cosine1d => "paper1d",
            SourceSpec::ModulatedCosine => "modulated_cosine",
        }
    }

    /// Builds the source for a given field, period and domain size.
    pub fn build(&self, field: &CoefficientField, l: f64, d: f64) -> Result<TwoScaleSource> {
        let dim = field.dim();
        Ok(match *self {
            SourceSpec::Zero => TwoScaleSource::zero(dim),
            SourceSpec::Uniform { value } => {
                TwoScaleSource::new(format!("uniform({value})"), dim).with_scalar(false, move |_, _| value)
            }
            SourceSpec::Cosine1d => {
                if dim != 1 {
                    return Err(Error::Validation("paper1d source requires a 1D field".into()));
                }
                make_cosine_example_source(field, l, d)
            }
            SourceSpec::ModulatedCosine => TwoScaleSource::new("modulated_cosine", dim)
                .with_scalar(true, |x, y| x[0] * (2.0 * PI * y[0]).cos()),
        })
    }
}

/// Source of the 1D cosine example on `(0, d)` with period `l`:
/// `f = -1`, `F(x,y) = (x + d/2 + C) K(y)`.
pub fn make_cosine_example_source(field: &CoefficientField, l: f64, d: f64) -> TwoScaleSource {
    let c = crate::bench::oracle::flux_constant(l, d);
    let k = field.clone();
    TwoScaleSource::new("paper1d", 1)
        .with_scalar(false, |_, _| -1.0)
        .with_flux(Flux::Separable {
            g: Arc::new(move |x| x[0] + 0.5 * d + c),
            phi: Arc::new(move |y| [k.eval(y).get(0, 0), 0.0]),
        })
}
