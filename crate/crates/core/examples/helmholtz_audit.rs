//! Discrete Helmholtz decomposition of piecewise constant symmetric tensor
//! fields into Morley Hessians and symmetric curls.

use plate_afem::helmholtz::audit;
use plate_afem::mesh::{uniform_refine, Geometry};
use plate_afem::space::MorleySpace;

fn main() -> plate_afem::Result<()> {
    for g in [Geometry::Square, Geometry::LShape] {
        for bc in ["clamped", "simply_supported", "mixed"] {
            let mesh = uniform_refine(&g.build(&g.named_bc(bc)?)?);
            let space = MorleySpace::new(mesh)?;
            let report = audit(&space, 5, 7)?;
            println!(
                "{:<7} {:<16} passed {}  dims {}",
                g.name(),
                bc,
                report.passed(),
                serde_json::to_string(&report.dims)?
            );
            println!("{:<24} residuals {}", "", serde_json::to_string(&report.residuals)?);
        }
    }
    Ok(())
}
