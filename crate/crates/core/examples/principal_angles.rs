//! Principal angle between the discrete eigenspace on each uniform level and
//! the one on the finest level, measured in the broken energy inner product.

use plate_afem::afem::{angle_to_reference, solve_level};
use plate_afem::eigen::{principal_angle, EigenMethod};
use plate_afem::mesh::{uniform_refine, Geometry};
use plate_afem::space::MorleySpace;

fn main() -> plate_afem::Result<()> {
    let g = Geometry::Square;
    let mut mesh = g.build(&g.named_bc("simply_supported")?)?;
    mesh = uniform_refine(&uniform_refine(&mesh));
    let mut levels = Vec::new();
    for _ in 0..5 {
        mesh = uniform_refine(&mesh);
        let space = MorleySpace::new(mesh.clone())?;
        // the double eigenvalue 25 pi^4
        let (cluster, _) = solve_level(&space, 1, 2, 4, EigenMethod::Auto)?;
        levels.push((space, cluster));
    }
    let (fine, fine_cluster) = levels.last().expect("five levels");
    for (space, cluster) in &levels[..levels.len() - 1] {
        let sin = angle_to_reference(space, &cluster.vectors, fine, &fine_cluster.vectors)?;
        println!("ndof {:>6}  sin angle {sin:.3e}", space.ndof());
    }

    // plain Euclidean example: span{e1} against span{(1, 1)}
    let s = principal_angle(&[vec![1.0, 0.0]], &[vec![1.0, 1.0]])?;
    println!("sin angle(e1, e1 + e2) = {s:.6} (1/sqrt 2 = {:.6})", 0.5f64.sqrt());
    Ok(())
}
