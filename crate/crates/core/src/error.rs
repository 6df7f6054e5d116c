use thiserror::Error;

pub type Result<T, E = FllrError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FllrError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("curves are not observed on the same grid")]
    GridMismatch,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("requested {requested} components but the sample covariance only has rank {rank}")]
    RankExceeded { requested: usize, rank: usize },

    #[error("basis functions are not orthonormal under the grid quadrature (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("neighbor count k = {k} exceeds sample size {n}")]
    NeighborCount { k: usize, n: usize },

    #[error("all kernel weights vanish at this center")]
    ZeroWeights,

    #[error("need at least {required} active points, found {found}")]
    TooFewActive { required: usize, found: usize },

    #[error("singular local fit (condition estimate {condition:e})")]
    SingularFit { condition: f64 },

    #[error("bounded least squares did not converge after {iterations} iterations (kkt residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("response is constant; error ratio undefined")]
    ConstantResponse,
}
