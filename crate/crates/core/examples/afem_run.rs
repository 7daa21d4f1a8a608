//! Adaptive loop for the first eigenvalue of the L-shaped plate with mixed
//! boundary conditions, compared against uniform refinement.

use plate_afem::afem::{convergence_rate_last, run_afem, AfemConfig, Strategy};
use plate_afem::mesh::Geometry;

fn main() -> plate_afem::Result<()> {
    let mut config = AfemConfig::new(Geometry::LShape, "mixed", 0, 1);
    config.max_levels = 40;
    config.max_ndof = 20_000;
    config.deterministic = true;
    let adaptive = run_afem(&config)?;
    let trace = &adaptive.trace;
    trace.write_csv(std::io::stdout())?;

    config.strategy = Strategy::Uniform;
    let uniform = run_afem(&config)?;

    let rate = |t: &plate_afem::afem::AfemTrace| convergence_rate_last(&t.ndofs(), &t.eta2(), 6.min(t.levels.len()));
    println!("eta2 slope: adaptive {:.3}, uniform {:.3}", rate(trace)?, rate(&uniform.trace)?);
    Ok(())
}
