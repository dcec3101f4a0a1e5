//! JSON and CSV emission with fixed number formatting.
//!
//! Floating-point numbers are written with 17 significant digits so that a
//! report read back reproduces the exact bits. Integers stay integers.

use serde::Serialize;
use serde_json::{Number, Value};

use crate::corrector::ErrorReport;
use crate::grid::{Grid, MacroGrid, ScalarField};

fn reformat(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            let s = n.to_string();
            if s.contains(['.', 'e', 'E']) {
                let x: f64 = s.parse().unwrap_or(f64::NAN);
                float(x)
            } else {
                Value::Number(n)
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(reformat).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, reformat(v))).collect()),
        other => other,
    }
}

/// `x` as a JSON number with 17 significant digits (`null` if not finite).
pub fn float(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    format!("{x:.16e}").parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
}

/// Serializes any value into a JSON tree with 17-digit floats.
pub fn to_value<T: Serialize>(value: &T) -> Value {
    reformat(serde_json::to_value(value).expect("serializable"))
}

/// Pretty JSON text with 17-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(value)).expect("serializable");
    s.push('\n');
    s
}

/// Node coordinates followed by one column per field.
pub fn fields_csv(names: &[&str], fields: &[&ScalarField<MacroGrid>]) -> String {
    let grid = fields[0].grid();
    let mut out = String::new();
    let coords = if grid.dim() == 1 { "x" } else { "x,y" };
    out.push_str(coords);
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for i in 0..grid.node_count() {
        let x = grid.coords(i);
        out.push_str(&format!("{:.16e}", x[0]));
        if grid.dim() == 2 {
            out.push_str(&format!(",{:.16e}", x[1]));
        }
        for f in fields {
            out.push_str(&format!(",{:.16e}", f.values()[i]));
        }
        out.push('\n');
    }
    out
}

/// Header plus one row per report.
pub fn reports_csv<'a>(reports: impl IntoIterator<Item = &'a ErrorReport>) -> String {
    let mut out = String::from(ErrorReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
