//! Morley interpolation of a smooth function: the piecewise Hessian error
//! decays like h, i.e. ndof^(-1/2).

use plate_afem::mesh::{uniform_refine, BoundaryPart, Geometry};
use plate_afem::quadrature::QuadratureRule;
use plate_afem::space::{MorleySpace, SmoothFunction};

fn main() -> plate_afem::Result<()> {
    // u = sin(x) exp(y)
    let u = SmoothFunction(|p: [f64; 2]| {
        let (s, c, e) = (p[0].sin(), p[0].cos(), p[1].exp());
        (s * e, [c * e, s * e])
    });
    let hess = |p: [f64; 2]| {
        let (s, c, e) = (p[0].sin(), p[0].cos(), p[1].exp());
        [-s * e, c * e, s * e]
    };
    let rule = QuadratureRule::collapsed(6);
    let mut mesh = Geometry::Square.build_uniform(BoundaryPart::Free)?;
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..6 {
        let space = MorleySpace::new(mesh.clone())?;
        let coeffs = space.interpolate(&u);
        let err2: f64 = (0..mesh.num_triangles())
            .map(|t| {
                let h = space.element_polynomial(&coeffs, t).hessian();
                rule.integrate(&mesh.triangle_points(t), mesh.area(t), |x| {
                    let e = hess(x);
                    (e[0] - h.xx).powi(2) + 2.0 * (e[1] - h.xy).powi(2) + (e[2] - h.yy).powi(2)
                })
            })
            .sum();
        let (n, err) = (space.ndof() as f64, err2.sqrt());
        match prev {
            Some((n0, e0)) => println!("ndof {n:>6}  |D2(u - Iu)| {err:.3e}  slope {:.3}", (err / e0).ln() / (n / n0).ln()),
            None => println!("ndof {n:>6}  |D2(u - Iu)| {err:.3e}"),
        }
        prev = Some((n, err));
        mesh = uniform_refine(&mesh);
    }
    Ok(())
}
