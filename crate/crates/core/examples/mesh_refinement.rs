//! Newest-vertex bisection on the L-shaped domain: refine around the
//! re-entrant corner and check that the result stays conforming.

use plate_afem::mesh::{BisectionRule, Geometry, MarkSet};

fn main() -> plate_afem::Result<()> {
    let g = Geometry::LShape;
    let mut mesh = g.build(&g.named_bc("mixed")?)?;
    for level in 0..8 {
        let mut marks = MarkSet::new();
        for t in 0..mesh.num_triangles() {
            let c = mesh.centroid(t);
            if c[0].hypot(c[1]) < 2.0 * mesh.h(t) {
                marks.insert(t);
            }
        }
        mesh = mesh.refine(&marks, BisectionRule::Newest);
        let min_angle = (0..mesh.num_triangles()).map(|t| mesh.min_angle(t)).fold(f64::INFINITY, f64::min);
        println!(
            "level {:>2}: {:>5} triangles, {:>5} edges, conforming {}, euler {}, min angle {:.2} deg",
            level + 1,
            mesh.num_triangles(),
            mesh.num_edges(),
            mesh.is_conforming(),
            mesh.euler_ok(),
            min_angle.to_degrees()
        );
    }
    println!("fingerprint {}", mesh.fingerprint());
    Ok(())
}
