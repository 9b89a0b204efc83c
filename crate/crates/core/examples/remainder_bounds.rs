//! Rigorous bounds on the Poincaré remainder next to the actual remainder.

use hyperasym::arith::abs;
use hyperasym::bounds::remainder_bound;
use hyperasym::coeffs::perron_coefficients;
use hyperasym::geometry::reference_t;
use hyperasym::problem::pearcey_cusp;
use hyperasym::{PhasedComplex, Precision};
use rug::{Complex, Float};

fn main() -> hyperasym::Result<()> {
    let p = Precision::new(30)?;
    let b = p.bits();
    let spec = pearcey_cusp(p)?;
    let z = PhasedComplex::from_phase_over_pi(p.float(1.0), &p.float(-0.25));
    let reference = reference_t(&spec, 1, 0, &z, 1e-25, None)?.value;
    let t = perron_coefficients(&spec, 1, 0, 14)?;
    let mut sum = Complex::new(b);
    println!("{:>3} {:>12} {:>12} {:>7}", "N", "bound", "remainder", "ratio");
    for (n, tn) in t.values.iter().enumerate() {
        if n > 0 {
            let bound = remainder_bound(&spec, 1, 0, &z, n, None)?;
            let rem = abs(&Complex::with_val(b, &reference - &sum)).to_f64();
            println!("{n:>3} {:>12.4e} {rem:>12.4e} {:>7.2}", bound.total, bound.total / rem);
        }
        sum += Complex::with_val(b, tn / z.pow(&(Float::with_val(b, n as u32) / 2u32))?.to_complex());
    }
    Ok(())
}
