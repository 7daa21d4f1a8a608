//! Extrapolated reference eigenvalues from uniform refinement.
//!
//! The simply-supported square has the closed form 4 pi^4 for the first
//! eigenvalue; the clamped one does not (about 1294.93).

use std::f64::consts::PI;

use plate_afem::afem::{reference_eigenvalues, ClusterWindow};
use plate_afem::eigen::EigenMethod;
use plate_afem::mesh::Geometry;

fn main() -> plate_afem::Result<()> {
    let g = Geometry::Square;
    for bc in ["simply_supported", "clamped"] {
        let r = reference_eigenvalues(g, &g.named_bc(bc)?, ClusterWindow { n: 0, len: 1 }, 20_000, EigenMethod::Auto)?;
        for (n, lam) in r.ndof.iter().zip(&r.sequences[0]) {
            println!("{bc:<16} ndof {n:>6}  lambda_1 {lam:.5}");
        }
        let e = &r.limits[0];
        println!(
            "{bc:<16} limit {:.4} +- {:.2e}, ratio {:.3}, reliable {}",
            e.limit, e.uncertainty, e.ratio, e.reliable
        );
    }
    println!("4 pi^4 = {:.4}", 4.0 * PI.powi(4));
    Ok(())
}
