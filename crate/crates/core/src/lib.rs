//! Adaptive Morley finite elements for clustered eigenvalues of the
//! biharmonic operator on polygonal plates.

pub mod error;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod space;
pub mod sparse;
pub mod assembly;
pub mod eigen;
pub mod estimator;
pub mod afem;
pub mod cli;
pub mod helmholtz;

pub use error::{Error, Result};
