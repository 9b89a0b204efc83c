//! Late coefficients of the Pearcey expansion predicted from the adjacent
//! saddle's early coefficients.

use hyperasym::arith::abs;
use hyperasym::coeffs::perron_coefficients;
use hyperasym::engine::{default_inner_counts, late_coefficients};
use hyperasym::problem::pearcey_cusp;
use hyperasym::Precision;
use rug::Complex;

fn main() -> hyperasym::Result<()> {
    let p = Precision::new(40)?;
    let spec = pearcey_cusp(p)?;
    let direct = perron_coefficients(&spec, 1, 0, 61)?;
    for order in [20, 30, 40, 50, 60] {
        let inner = default_inner_counts(&spec, 1, order)?;
        let predicted = late_coefficients(&spec, 1, 0, order, &inner)?;
        let t = &direct.values[order];
        let e = abs(&Complex::with_val(p.bits(), &predicted - t)) / abs(t);
        println!("N = {order}  inner {inner:?}  relative error {:.2e}", e.to_f64());
    }
    Ok(())
}
