//! The first six discrete eigenvalues of the simply-supported square, their
//! separation and the guaranteed lower bounds.
//!
//! The exact spectrum is pi^4 (m^2 + n^2)^2: 4 pi^4, then a double
//! eigenvalue 25 pi^4, then 64 pi^4.

use std::f64::consts::PI;

use plate_afem::afem::solve_level;
use plate_afem::eigen::{lower_bound, separation, EigenMethod};
use plate_afem::mesh::{uniform_refine, BoundaryPart, Geometry};
use plate_afem::space::MorleySpace;

fn main() -> plate_afem::Result<()> {
    let mut mesh = Geometry::Square.build_uniform(BoundaryPart::SimplySupported)?;
    for _ in 0..5 {
        mesh = uniform_refine(&mesh);
    }
    let space = MorleySpace::new(mesh)?;
    let h = space.mesh().h_max();
    // the double eigenvalue (indices 2 and 3) as the cluster
    let (cluster, m_j) = solve_level(&space, 1, 2, 4, EigenMethod::Auto)?;
    println!("ndof {}, h_max {h:.4}", space.ndof());
    for (k, (lam, res)) in cluster.eigenvalues.iter().zip(&cluster.residuals).enumerate() {
        println!("lambda_{} = {lam:.4}  residual {res:.1e}  lower bound {:.4}", cluster.first + k + 1, lower_bound(*lam, h, 1.0));
    }
    println!("exact 25 pi^4 = {:.4}, M_J = {m_j:.4}", 25.0 * PI.powi(4));
    let all = solve_level(&space, 0, 6, 4, EigenMethod::Auto)?.0;
    let sep = separation(&all.eigenvalues, 1, 2)?;
    println!("separation within the first six: M_J {:.4}, gap {:.4}", sep.m_j, sep.gap);
    Ok(())
}
