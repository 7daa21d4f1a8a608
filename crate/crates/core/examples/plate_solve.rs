//! Clamped plate with a manufactured load: u = sin^2(pi x) sin^2(pi y) on the
//! unit square. Prints the broken energy error per uniform level.

use std::f64::consts::PI;

use plate_afem::assembly::solve_linear;
use plate_afem::mesh::{uniform_refine, BoundaryPart, Geometry};
use plate_afem::quadrature::QuadratureRule;
use plate_afem::space::MorleySpace;
use plate_afem::sparse::LinearSolver;

fn main() -> plate_afem::Result<()> {
    let p4 = PI.powi(4);
    let f = move |p: [f64; 2]| {
        let (sx, sy) = ((PI * p[0]).sin().powi(2), (PI * p[1]).sin().powi(2));
        let (cx, cy) = ((2.0 * PI * p[0]).cos(), (2.0 * PI * p[1]).cos());
        -8.0 * p4 * (cx * sy + sx * cy) + 8.0 * p4 * cx * cy
    };
    let hess = |p: [f64; 2]| {
        let pi2 = PI * PI;
        let (sx, sy) = ((PI * p[0]).sin().powi(2), (PI * p[1]).sin().powi(2));
        [
            2.0 * pi2 * (2.0 * PI * p[0]).cos() * sy,
            pi2 * (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).sin(),
            2.0 * pi2 * sx * (2.0 * PI * p[1]).cos(),
        ]
    };
    let load_rule = QuadratureRule::degree6();
    let err_rule = QuadratureRule::collapsed(6);
    let mut mesh = uniform_refine(&uniform_refine(&Geometry::Square.build_uniform(BoundaryPart::Clamped)?));
    for _ in 0..5 {
        let space = MorleySpace::new(mesh.clone())?;
        let u = solve_linear(&space, &f, &load_rule, LinearSolver::Cholesky)?;
        let err2: f64 = (0..mesh.num_triangles())
            .map(|t| {
                let h = space.element_polynomial(&u, t).hessian();
                err_rule.integrate(&mesh.triangle_points(t), mesh.area(t), |x| {
                    let e = hess(x);
                    (e[0] - h.xx).powi(2) + 2.0 * (e[1] - h.xy).powi(2) + (e[2] - h.yy).powi(2)
                })
            })
            .sum();
        println!("ndof {:>6}  energy error {:.4e}", space.ndof(), err2.sqrt());
        mesh = uniform_refine(&mesh);
    }
    Ok(())
}
