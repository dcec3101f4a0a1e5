use std::f64::consts::PI;

use homogen_wasm::{cell_view, example_curves, sweep_view};

#[test]
fn cosine_field_cell_view() {
    let v = cell_view("paper1d", 64).unwrap();
    assert_eq!(v.k0().len(), 1);
    assert!((v.k0()[0] - 0.5).abs() < 1e-6);
    assert_eq!(v.y().len(), 64);
    for (y, n) in v.y().iter().zip(v.corrector()) {
        assert!((n - (2.0 * PI * y).sin() / (4.0 * PI)).abs() < 1e-2);
    }
}

#[test]
fn laminate_cell_view_is_bracketed() {
    let v = cell_view("laminate", 32).unwrap();
    assert_eq!(v.k0().len(), 4);
    for i in [0, 3] {
        assert!(v.reuss()[i] <= v.k0()[i] + 1e-12 && v.k0()[i] <= v.voigt()[i] + 1e-12);
    }
}

#[test]
fn unknown_field_is_an_error() {
    assert!(cell_view("marble", 32).is_err());
}

#[test]
fn example_curves_follow_closed_form() {
    let c = example_curves(8.0, 16).unwrap();
    assert_eq!(c.x().len(), 8 * 16 + 1);
    let worst = c.p().iter().zip(c.exact()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 5e-3 * 64.0, "{worst}");
    let m = c.metrics();
    assert!(m[1] < m[3], "corrector should reduce the H1 error");
}

#[test]
fn sweep_view_rates() {
    let s = sweep_view(3, 6, 16).unwrap();
    assert_eq!(s.eps().len(), 4);
    for r in s.rates() {
        assert!((r - 2.0).abs() < 0.1, "{r}");
    }
    assert!(sweep_view(3, 4, 16).is_err());
}
