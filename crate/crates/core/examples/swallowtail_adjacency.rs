//! Decides which saddles of a swallowtail-type problem are adjacent from
//! the late coefficients alone.

use hyperasym::engine::adjacency_constants;
use hyperasym::problem::swallowtail;
use hyperasym::Precision;

fn main() -> hyperasym::Result<()> {
    let p = Precision::new(40)?;
    let spec = swallowtail(p)?;
    let sol = adjacency_constants(&spec, 1, 0, &[(2, 7), (3, 11)], &[50, 51])?;
    for k in &sol.constants {
        println!("K{}{} = {:.7} {:+.7}i  → {}", k.from_id, k.to_id, k.re, k.im, k.rounded);
    }
    println!("residual {:.1e}, condition {:.1}", sol.residual, sol.condition);
    Ok(())
}
