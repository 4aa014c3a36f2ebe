use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix has eigenvalue {value:.3e} below the negativity tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("map is not isometric (residual {residual:.3e})")]
    NotIsometric { residual: f64 },
    #[error("matrices do not commute (commutator norm {residual:.3e})")]
    NotCommuting { residual: f64 },
    #[error("matrix is not a contraction (norm {norm:.12})")]
    NotContraction { norm: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("power iteration did not converge after {iterations} doublings (last difference {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("coefficient pair violates the BCL identities (residual {residual:.3e})")]
    IdentityViolation { residual: f64 },
    #[error("X is not unitary on Ran Q (residual {residual:.3e}); tighten the asymptotic tolerance")]
    NonUnitaryX { residual: f64 },
    #[error("tail did not fall below {tol:.1e} by degree {degree} (tail {tail:.3e})")]
    TailNotConverged { degree: usize, tail: f64, tol: f64 },
    #[error("I - z T^* is singular at z = {re}+{im}i")]
    SingularResolvent { re: f64, im: f64 },
    #[error("supplied intertwiner is not unitary (residual {residual:.3e})")]
    NonUnitaryInput { residual: f64 },
    #[error("T = T1 T2 is not pure (Ran Q has dimension {rank})")]
    NotPure { rank: usize },
    #[error("Krylov Gram matrices of the two models differ by {residual:.3e}")]
    GramMismatch { residual: f64 },
    #[error("degenerate construction: {0}")]
    Degenerate(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
