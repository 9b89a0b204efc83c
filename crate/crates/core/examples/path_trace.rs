//! Traces the steepest-descent path out of the Pearcey saddle and writes it
//! as CSV on stdout.

use hyperasym::geometry::{trace_path, TraceOptions};
use hyperasym::problem::pearcey_cusp;
use hyperasym::Precision;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = Precision::new(20)?;
    let spec = pearcey_cusp(p)?;
    let theta = p.float(-0.25) * p.pi();
    let path = trace_path(&spec, 1, &theta, 0, &p.float(10.0), &TraceOptions::default())?;
    eprintln!("{} points, initial slope {:.6} rad", path.points.len(), path.direction_phi.to_f64());
    path.write_csv(std::io::stdout().lock())?;
    Ok(())
}
