use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet order too small: got {order}, need at least {min}")]
    JetOrderTooSmall { order: usize, min: usize },

    #[error("jet mismatch: {0}")]
    JetMismatch(String),

    /// Division by a (numerically) vanishing jet, or a pole of a derived field.
    #[error("singularity at q = {q}: {what}")]
    Singular { q: f64, what: String },

    #[error("{func} domain error at q = {q} (argument value {arg})")]
    Domain { func: String, q: f64, arg: f64 },

    #[error("non-finite jet produced by {what} at q = {q}")]
    NonFinite { q: f64, what: String },

    #[error("jet order exhausted: this operation needs K >= {required}")]
    JetExhausted { required: usize },

    #[error("syntax error at offset {offset}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("in `{expr}`: {source}")]
    InExpr { expr: String, source: Box<Error> },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The non-degeneracy condition fails at the listed sample points.
    #[error("degenerate at {} sample point(s), first at q = {}", points.len(), points.first().copied().unwrap_or(f64::NAN))]
    Degenerate { points: Vec<f64> },

    /// Points of a discretization grid where a potential cannot be evaluated.
    #[error("potential singular at {} grid point(s), first at q = {}", points.len(), points.first().copied().unwrap_or(f64::NAN))]
    SingularPotential { points: Vec<f64> },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator shape: {0}")]
    Shape(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn singular(q: f64, what: impl Into<String>) -> Self {
        Error::Singular {
            q,
            what: what.into(),
        }
    }

    /// The evaluation point this error is attached to, if any.
    pub fn location(&self) -> Option<f64> {
        match self {
            Error::Singular { q, .. } | Error::Domain { q, .. } | Error::NonFinite { q, .. } => {
                Some(*q)
            }
            Error::InExpr { source, .. } => source.location(),
            Error::Degenerate { points } => points.first().copied(),
            _ => None,
        }
    }
}
