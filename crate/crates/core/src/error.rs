use thiserror::Error;

/// Errors raised by mesh handling, discretisation, solvers and the adaptive loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {triangle} (signed area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("triangle {0} is not positively oriented")]
    NegativeOrientation(usize),

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("boundary edge {0:?} does not lie in exactly one boundary part")]
    BoundaryLabel([usize; 2]),

    #[error("mesh is not a refinement of the coarse mesh: {0}")]
    NotARefinement(String),

    #[error("singular local dual system on triangle {triangle} (residual {residual:e})")]
    SingularLocalSystem { triangle: usize, residual: f64 },

    #[error("dof index {index} out of range (ndof = {ndof})")]
    DofOutOfRange { index: usize, ndof: usize },

    #[error("point outside triangle {0}")]
    PointOutside(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular system: V_h contains affine functions under these boundary conditions")]
    SingularSystem,

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("cluster splits a multiple eigenvalue (indices {inside} and {outside})")]
    ClusterSplit { inside: usize, outside: usize },

    #[error("rank-deficient basis (Gram condition {0:e})")]
    RankDeficient(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("identity audit failed: {0}")]
    AuditFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
            Error::AuditFailure(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
