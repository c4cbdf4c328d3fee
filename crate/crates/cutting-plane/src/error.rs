use thiserror::Error;

#[derive(Debug, Error)]
pub enum CutPlaneError {
    #[error("point is not strictly interior: slack {slack} on plane {plane}")]
    NotInterior { plane: usize, slack: f64 },

    #[error("barrier Hessian is not positive definite (plane normals do not span the space)")]
    NotPositiveDefinite,

    #[error("polytope needs at least dim + 1 = {needed} planes, got {got}")]
    TooFewPlanes { needed: usize, got: usize },

    #[error("invalid polytope data: {0}")]
    InvalidPolytope(String),

    #[error("no strictly interior point found (polytope may be empty or degenerate)")]
    NoInteriorPoint,

    #[error("volumetric-center Newton iteration exceeded {0} steps")]
    NewtonStalled(usize),

    #[error("polytope appears unbounded (volumetric center diverged)")]
    Unbounded,

    #[error("degenerate cut: oracle returned a zero or non-finite direction")]
    DegenerateCut,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("oracle failure: {0}")]
    Oracle(#[source] Box<dyn std::error::Error + Send + Sync>),
}

impl CutPlaneError {
    /// Wraps an arbitrary error produced while answering an oracle query.
    pub fn oracle<E: std::error::Error + Send + Sync + 'static>(err: E) -> Self {
        CutPlaneError::Oracle(Box::new(err))
    }
}
