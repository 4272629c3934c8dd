use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate polytope: {0}")]
    DegeneratePolytope(String),

    /// Facet indices whose normal is (nearly) orthogonal to the flow direction.
    #[error("transversality violated on facets {facets:?}")]
    Transversality { facets: Vec<usize> },

    #[error("edge {edge} is parallel to the flow direction")]
    ParallelEdge { edge: usize },

    #[error("series tail not certifiable: {0}")]
    TailNotCertifiable(String),

    #[error("degenerate arrangement: {0}")]
    Arrangement(String),
}

pub type Result<T> = std::result::Result<T, Error>;
