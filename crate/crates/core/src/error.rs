use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma has a pole at z = {0}")]
    Pole(f64),
    #[error("expression is not analytic at {0}")]
    NonAnalytic(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("kernel is undefinable: {0}")]
    Undefinable(String),
    #[error("integral diverges at {endpoint}: {detail}")]
    Divergence { endpoint: String, detail: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("matrix is not hermitian (defect {0:e})")]
    NonHermitian(f64),
    #[error("insufficient decay: {0}")]
    InsufficientDecay(String),
    #[error("noise amplification: {0}")]
    Amplification(String),
    #[error("outside the form domain: {0}")]
    FormDomain(String),
    #[error("trial span is not negative enough (achieved {achieved} of {target}); shrink eps")]
    EpsTooLarge { achieved: usize, target: usize },
    #[error("unperturbed sigma is not admissible: {0}")]
    Assumption(String),
    #[error("integer exponent q = {0}: use the finite-rank path")]
    IntegerExponent(f64),
    #[error("kernel is not self-adjoint: {0}")]
    NotSelfAdjoint(String),
}

impl Error {
    /// True for failures of numerical tolerance rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::InsufficientDecay(_)
                | Error::Amplification(_)
                | Error::EpsTooLarge { .. }
        )
    }
}
