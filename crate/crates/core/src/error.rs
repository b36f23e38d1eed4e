use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("polygon is self-intersecting: edges {0} and {1} cross")]
    SelfIntersecting(usize, usize),

    #[error("boundary discretization has {count} vertices, above the cap of {cap}")]
    TooManyVertices { count: usize, cap: usize },

    #[error("boundary under-resolved: longest edge {max_edge:.3e} exceeds {limit:.3e}; {hint}")]
    UnderResolved {
        max_edge: f64,
        limit: f64,
        hint: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("masked: target lies within {distance:.3e} of the image of the boundary")]
    Masked { distance: f64 },

    #[error("refine boundary sampling near y: {0}")]
    Unresolved(String),

    #[error("degree rounding residual {residual:.3e} exceeds {limit}")]
    RoundingResidual { residual: f64, limit: f64 },

    #[error("point at distance {dist:.3e} from the boundary is not resolved; requires k_max >= {required}")]
    TooCloseToBoundary { dist: f64, required: u32 },

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("degenerate at y after {0} refinements")]
    Degenerate(u32),

    #[error(
        "piecewise-constant fields have divergent W^(beta,p) seminorm when beta*p >= 1 (beta*p = {0})"
    )]
    DivergentSeminorm(f64),

    #[error("inadmissible chain parameters: {0}")]
    Inadmissible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
