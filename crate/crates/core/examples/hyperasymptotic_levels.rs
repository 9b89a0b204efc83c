//! Levels 0–2 of the hyperasymptotic expansion against the reference value.
//! Pass `3` as the first argument to include Level 3 (about a minute).

use hyperasym::arith::abs;
use hyperasym::engine::{hyper_expand, ExpandOptions};
use hyperasym::geometry::reference_t;
use hyperasym::problem::builtin;
use hyperasym::{PhasedComplex, Precision};
use rug::Complex;

fn main() -> hyperasym::Result<()> {
    let top: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let p = Precision::new(40)?;
    let z = PhasedComplex::from_phase_over_pi(p.float(1.0), &p.float(-0.25));
    for name in ["pearcey_cusp", "degenerate_3_5"] {
        let spec = builtin(name, p)?;
        let reference = reference_t(&spec, 1, 0, &z, 1e-35, None)?.value;
        println!("{name}");
        for level in 0..=top.min(3) {
            let opts = ExpandOptions { abs_tol: Some(1e-20), ..Default::default() };
            let led = hyper_expand(&spec, 1, 0, &z, level, &opts)?;
            let e = abs(&Complex::with_val(p.bits(), &led.partial_sum - &reference)).to_f64();
            println!("  level {level}  counts {:?}  error {e:.3e}  hyperterminants {}", led.schedule.counts, led.calls.len());
        }
    }
    Ok(())
}
