//! Config files and flag resolution.
//!
//! A config file is TOML with one optional table per command. Every key has
//! a matching flag; a flag given on the command line wins over the file.
//!
//! ```toml
//! [cell]
//! field = "laminate"
//! n = 256
//!
//! [sweep]
//! field = "paper1d"
//! source = "paper1d"
//! ratios = [16, 32, 64, 128]
//! ```

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use homogen_core::fields::{FieldSpec, SourceSpec};
use homogen_core::Error;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub cell: Option<CellArgs>,
    pub solve: Option<SolveArgs>,
    pub sweep: Option<SweepArgs>,
    pub example1d: Option<Example1dArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))
    }
}

fn field_spec(name: Option<&str>, dim: Option<usize>, value: Option<f64>) -> Result<FieldSpec, Error> {
    FieldSpec::from_name(name.unwrap_or("paper1d"), dim, value)
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellArgs {
    /// Catalog name: constant, paper1d, separable_cosine, laminate, checkerboard
    #[arg(long)]
    pub field: Option<String>,
    /// Dimension of the constant field
    #[arg(long)]
    pub dim: Option<usize>,
    /// Constant field value, or the high phase of the checkerboard
    #[arg(long)]
    pub value: Option<f64>,
    /// Cell nodes per axis
    #[arg(long)]
    pub n: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// Catalog name: constant, paper1d, separable_cosine, laminate, checkerboard
    #[arg(long)]
    pub field: Option<String>,
    /// Dimension of the constant field
    #[arg(long)]
    pub dim: Option<usize>,
    /// Constant field value, or the high phase of the checkerboard
    #[arg(long)]
    pub value: Option<f64>,
    /// Source: zero, uniform, paper1d, modulated_cosine
    #[arg(long)]
    pub source: Option<String>,
    /// Value of the uniform source
    #[arg(long)]
    pub source_value: Option<f64>,
    /// Period length
    #[arg(long)]
    pub l: Option<f64>,
    /// Domain size
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub cells_per_period: Option<usize>,
    /// Cell-problem resolution (defaults to cells per period)
    #[arg(long)]
    pub cell_resolution: Option<usize>,
    /// Constant added to the flux F, as "a" or "a,b"
    #[arg(long, value_delimiter = ',')]
    pub flux_offset: Option<Vec<f64>>,
    /// Relative tolerance of the macro solves
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    /// Catalog name: constant, paper1d, separable_cosine, laminate, checkerboard
    #[arg(long)]
    pub field: Option<String>,
    /// Dimension of the constant field
    #[arg(long)]
    pub dim: Option<usize>,
    /// Constant field value, or the high phase of the checkerboard
    #[arg(long)]
    pub value: Option<f64>,
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub source_value: Option<f64>,
    #[arg(long)]
    pub l: Option<f64>,
    /// Values of D/l, comma separated powers of two
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    #[arg(long)]
    pub cells_per_period: Option<usize>,
    #[arg(long)]
    pub cell_resolution: Option<usize>,
    /// Worker threads (default: available cores)
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1dArgs {
    #[arg(long)]
    pub l: Option<f64>,
    #[arg(long = "D-over-l")]
    #[serde(rename = "D_over_l")]
    pub d_over_l: Option<f64>,
    #[arg(long)]
    pub cells_per_period: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from("."))
}

fn source_spec(name: Option<&str>, value: Option<f64>, default: &str) -> Result<SourceSpec, Error> {
    SourceSpec::from_name(name.unwrap_or(default), value)
}

fn default_source(field: &FieldSpec) -> &'static str {
    if *field == FieldSpec::Cosine1d {
        "paper1d"
    } else {
        "uniform"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellConfig {
    pub field: FieldSpec,
    pub n: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

impl CellArgs {
    pub fn resolve(self, file: Option<Self>) -> Result<CellConfig, Error> {
        let file = file.unwrap_or_default();
        let field = field_spec(
            self.field.or(file.field).as_deref(),
            self.dim.or(file.dim),
            self.value.or(file.value),
        )?;
        Ok(CellConfig { field, n: self.n.or(file.n).unwrap_or(64), out: out_dir(self.out.or(file.out)) })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    pub field: FieldSpec,
    pub source: SourceSpec,
    pub l: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub cells_per_period: usize,
    pub cell_resolution: usize,
    pub flux_offset: [f64; 2],
    pub tol: f64,
    #[serde(skip)]
    pub out: PathBuf,
}

fn offset(v: Option<Vec<f64>>) -> Result<[f64; 2], Error> {
    match v.as_deref() {
        None => Ok([0.0; 2]),
        Some([a]) => Ok([*a, 0.0]),
        Some([a, b]) => Ok([*a, *b]),
        Some(other) => Err(Error::Validation(format!("flux offset takes 1 or 2 components, got {}", other.len()))),
    }
}

impl SolveArgs {
    pub fn resolve(self, file: Option<Self>) -> Result<SolveConfig, Error> {
        let file = file.unwrap_or_default();
        let field = field_spec(
            self.field.or(file.field).as_deref(),
            self.dim.or(file.dim),
            self.value.or(file.value),
        )?;
        let source = source_spec(
            self.source.or(file.source).as_deref(),
            self.source_value.or(file.source_value),
            default_source(&field),
        )?;
        let l = self.l.or(file.l).unwrap_or(1.0);
        let cells_per_period = self.cells_per_period.or(file.cells_per_period).unwrap_or(16);
        Ok(SolveConfig {
            field,
            source,
            l,
            d: self.d.or(file.d).unwrap_or(32.0 * l),
            cells_per_period,
            cell_resolution: self.cell_resolution.or(file.cell_resolution).unwrap_or(cells_per_period),
            flux_offset: offset(self.flux_offset.or(file.flux_offset))?,
            tol: self.tol.or(file.tol).unwrap_or(1e-10),
            out: out_dir(self.out.or(file.out)),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub field: FieldSpec,
    pub source: SourceSpec,
    pub l: f64,
    pub ratios: Vec<f64>,
    pub cells_per_period: usize,
    pub cell_resolution: usize,
    /// Not part of the report: results do not depend on it.
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

impl SweepArgs {
    pub fn resolve(self, file: Option<Self>) -> Result<SweepConfig, Error> {
        let file = file.unwrap_or_default();
        let field = field_spec(
            self.field.or(file.field).as_deref(),
            self.dim.or(file.dim),
            self.value.or(file.value),
        )?;
        let source = source_spec(
            self.source.or(file.source).as_deref(),
            self.source_value.or(file.source_value),
            default_source(&field),
        )?;
        let dim = field.build()?.dim();
        let default_ratios = if dim == 1 { vec![8.0, 16.0, 32.0, 64.0, 128.0] } else { vec![8.0, 16.0, 32.0] };
        let cells_per_period = self.cells_per_period.or(file.cells_per_period).unwrap_or(16);
        let workers = match self.workers.or(file.workers) {
            Some(0) => return Err(Error::Validation("workers must be at least 1".into())),
            Some(w) => w,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        Ok(SweepConfig {
            field,
            source,
            l: self.l.or(file.l).unwrap_or(1.0),
            ratios: self.ratios.or(file.ratios).unwrap_or(default_ratios),
            cells_per_period,
            cell_resolution: self.cell_resolution.or(file.cell_resolution).unwrap_or(cells_per_period),
            workers,
            out: out_dir(self.out.or(file.out)),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Example1dConfig {
    pub l: f64,
    #[serde(rename = "D_over_l")]
    pub d_over_l: f64,
    pub cells_per_period: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Example1dArgs {
    pub fn resolve(self, file: Option<Self>) -> Result<Example1dConfig, Error> {
        let file = file.unwrap_or_default();
        Ok(Example1dConfig {
            l: self.l.or(file.l).unwrap_or(1.0),
            d_over_l: self.d_over_l.or(file.d_over_l).unwrap_or(64.0),
            cells_per_period: self.cells_per_period.or(file.cells_per_period).unwrap_or(16),
            out: out_dir(self.out.or(file.out)),
        })
    }
}
