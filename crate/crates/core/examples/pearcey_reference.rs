//! Pearcey-type integral at `z = e^{−iπ/4}` by steepest-descent quadrature.

use hyperasym::geometry::reference_t;
use hyperasym::problem::pearcey_cusp;
use hyperasym::{PhasedComplex, Precision};

fn main() -> hyperasym::Result<()> {
    let p = Precision::new(40)?;
    let spec = pearcey_cusp(p)?;
    let z = PhasedComplex::from_phase_over_pi(p.float(1.0), &p.float(-0.25));
    let r = reference_t(&spec, 1, 0, &z, 1e-35, None)?;
    println!("T(z) = {} {:+}i", r.value.real().to_string_radix(10, Some(25)), r.value.imag().to_string_radix(10, Some(25)));
    println!("panels {}, error estimate {:.1e}", r.panels, r.error_estimate);
    Ok(())
}
