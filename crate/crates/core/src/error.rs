use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigenvalue {lambda} of frequency {frequency:?} is shared with frequency {other:?}; request the merged eigenspace or the single orbit explicitly")]
    EigenvalueCollision {
        lambda: f64,
        frequency: [i64; 2],
        other: [i64; 2],
    },

    #[error("pullback spectrum is not constant over the manifold (max deviation {deviation:e}, tolerance {tolerance:e})")]
    ConstancyViolation { deviation: f64, tolerance: f64 },

    #[error("closed form is only available for isotropy irreducible models")]
    NotIsotropyIrreducible,

    #[error("frequency {frequency:?} has common divisor {divisor}; the evaluation map factors through a smaller torus")]
    CoveringDegree { frequency: [i64; 2], divisor: i64 },

    #[error("resultant vanishes identically: the frame has a positive-dimensional zero set")]
    DegenerateFrame,

    #[error("nodal length did not converge: last relative change {last_change:e} at level {level}")]
    NonConvergent { level: usize, last_change: f64 },

    #[error("{uncertified} of {trials} trials uncertified (limit {limit:.2}%)")]
    TooManyUncertified {
        uncertified: usize,
        trials: usize,
        limit: f64,
    },

    #[error("trial {trial} produced a positive-dimensional zero set for a basis not marked degenerate")]
    UnexpectedInfinite { trial: usize },

    #[error("degenerate experiment: trial {trial} found {count} isolated zeros, expected none")]
    DegenerateNonzero { trial: usize, count: usize },

    #[error("section passes within tolerance of a mesh vertex or edge")]
    Ambiguous,

    #[error("mesh format error at line {line}: {message}")]
    MeshFormat { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::EigenvalueCollision { .. }
            | Error::NotIsotropyIrreducible
            | Error::CoveringDegree { .. }
            | Error::MeshFormat { .. }
            | Error::Config(_)
            | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
