//! Perron, trapezoidal and closed-form coefficients agree on both built-in
//! problems.

mod common;

use common::{degenerate_cubic, degenerate_quintic, pearcey_double, pearcey_simple};
use hyperasym::arith::abs;
use hyperasym::coeffs::{perron_coefficients, trapezoidal_coefficients, CoefficientTable};
use hyperasym::problem::{degenerate_3_5, pearcey_cusp};
use hyperasym::Precision;
use rug::{Complex, Float};

const DIGITS: u32 = 40;
const COUNT: usize = 41;

fn prec() -> Precision {
    Precision::new(DIGITS).unwrap()
}

fn agree(label: &str, a: &CoefficientTable, b: &CoefficientTable, digits: i32) {
    let tol = 10f64.powi(-digits);
    for (r, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        let d = abs(&Complex::with_val(x.prec().0, x - y));
        let scale = abs(y);
        let bound = Float::with_val(scale.prec(), &scale * tol);
        assert!(d <= bound, "{label}: r = {r} differs by {:.3e} relative", (d / scale).to_f64());
    }
}

#[test]
fn pearcey_routes_agree() {
    let p = prec();
    let spec = pearcey_cusp(p).unwrap();
    let tol = DIGITS as i32 - 8;
    for (id, closed) in [(1, pearcey_simple(&p, COUNT)), (2, pearcey_double(&p, COUNT))] {
        let perron = perron_coefficients(&spec, id, 0, COUNT).unwrap();
        let trap = trapezoidal_coefficients(&spec, id, 0, COUNT, None, None).unwrap();
        agree(&format!("pearcey {id} perron"), &perron, &closed, tol);
        agree(&format!("pearcey {id} trapezoidal"), &trap, &closed, tol);
    }
}

#[test]
fn degenerate_routes_agree() {
    let p = prec();
    let spec = degenerate_3_5(p).unwrap();
    let tol = DIGITS as i32 - 8;
    for (id, closed) in [(1, degenerate_cubic(&p, COUNT)), (2, degenerate_quintic(&p, COUNT))] {
        let perron = perron_coefficients(&spec, id, 0, COUNT).unwrap();
        let trap = trapezoidal_coefficients(&spec, id, 0, COUNT, None, None).unwrap();
        agree(&format!("degenerate {id} perron"), &perron, &closed, tol);
        agree(&format!("degenerate {id} trapezoidal"), &trap, &closed, tol);
    }
}

#[test]
fn trapezoid_converges_geometrically_in_nodes() {
    let p = prec();
    let spec = pearcey_cusp(p).unwrap();
    let exact = perron_coefficients(&spec, 1, 0, 6).unwrap();
    let err = |m| {
        let t = trapezoidal_coefficients(&spec, 1, 0, 6, Some(0.25), Some(m)).unwrap();
        abs(&Complex::with_val(p.bits(), &t.values[5] - &exact.values[5])).to_f64()
    };
    let (e16, e32) = (err(16), err(32));
    assert!(e32 < e16 * 1e-4, "{e16:.3e} → {e32:.3e}");
}

#[test]
fn growth_law_ratio_is_bounded() {
    let p = prec();
    let spec = pearcey_cusp(p).unwrap();
    let t = perron_coefficients(&spec, 1, 0, 57).unwrap();
    let f = 6.75f64;
    for n in 10..=54 {
        let ratio = (abs(&t.values[n + 2]) / abs(&t.values[n])).to_f64() * f / ((n + 1) as f64 / 2.0);
        assert!(ratio > 0.2 && ratio < 5.0, "N = {n}: {ratio}");
    }
}
