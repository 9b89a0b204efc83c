//! A two-column generalized hyperterminant by its convergent series and by
//! nested quadrature.

use hyperasym::arith::abs;
use hyperasym::hyperterm::{hyperterminant, hyperterminant_quadrature, Column, HyperOptions, HyperterminantArgs};
use hyperasym::{PhasedComplex, Precision};
use rug::Complex;

fn main() -> hyperasym::Result<()> {
    let p = Precision::new(30)?;
    let pi = p.pi();
    let col = |m: f64, omega: u32, sigma: f64, phase_over_pi: f64| Column {
        m: p.float(m),
        omega,
        sigma: PhasedComplex::new(p.float(sigma), p.float(phase_over_pi) * &pi),
    };
    let z = PhasedComplex::from_phase_over_pi(p.float(1.0), &p.float(-0.25));
    let args = HyperterminantArgs::new(vec![col(5.5, 2, 6.75, 0.5), col(4.2, 3, 6.75, -4.5)])?;
    let series = hyperterminant(&z, &args, &HyperOptions::for_precision(&p))?;
    let quad = hyperterminant_quadrature(&z, &args, 1e-16)?;
    let d = abs(&Complex::with_val(p.bits(), &series.value - &quad)) / abs(&quad);
    println!("series     {:.20e} {:+.20e}i  ({} terms)", series.value.real().to_f64(), series.value.imag().to_f64(), series.terms);
    println!("quadrature {:.20e} {:+.20e}i", quad.real().to_f64(), quad.imag().to_f64());
    println!("relative difference {:.1e}", d.to_f64());
    Ok(())
}
