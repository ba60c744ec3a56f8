use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate segment: endpoints coincide at ({0}, {1})")]
    DegenerateSegment(f64, f64),

    #[error("polygon is not simple: {0}")]
    NonSimplePolygon(String),

    #[error("point ({0}, {1}) lies outside the polygon")]
    PointOutsidePolygon(f64, f64),

    #[error("region is not a union of triangles of the domain: {0}")]
    BadRegion(String),

    #[error("direction vector is not unit length (|v| = {0})")]
    NonUnitVector(f64),

    #[error("segment is not axis-parallel: ({0:?}) -> ({1:?})")]
    NotAxisParallel((f64, f64), (f64, f64)),

    #[error("grid lies on the jump set: {0}")]
    GridOnJumpSet(String),

    #[error("admissibility check failed: {0}")]
    NotAdmissible(String),

    #[error("invalid catalogue parameters: {0}")]
    BadCatalogueParams(String),

    #[error("rejection sampling budget exhausted: {0}")]
    SamplingBudget(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("extension failed: {0}")]
    Extension(String),

    #[error("injectivity violated: {0}")]
    Injectivity(String),

    #[error("pipeline stage failed: {0}")]
    Pipeline(String),

    #[error("configuration error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
