//! Expansion coefficients by the Perron formula and by the trapezoidal rule.

use hyperasym::arith::abs;
use hyperasym::coeffs::{perron_coefficients, trapezoidal_coefficients};
use hyperasym::problem::degenerate_3_5;
use hyperasym::Precision;
use rug::Complex;

fn main() -> hyperasym::Result<()> {
    let p = Precision::new(40)?;
    let spec = degenerate_3_5(p)?;
    for id in [1, 2] {
        let perron = perron_coefficients(&spec, id, 0, 30)?;
        let trap = trapezoidal_coefficients(&spec, id, 0, 30, None, None)?;
        println!("saddle {id} (ω = {})", perron.omega);
        for r in (0..30).step_by(5) {
            let (a, b) = (&perron.values[r], &trap.values[r]);
            let d = abs(&Complex::with_val(p.bits(), a - b)) / abs(a);
            println!("  T_{r:<2} = {:>12.5e} {:+.5e}i   routes differ by {:.1e}", a.real().to_f64(), a.imag().to_f64(), d.to_f64());
        }
    }
    Ok(())
}
