use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("policy not admissible: ||A - BK|| = {norm:.6e} >= 1/sqrt(gamma) = {bound:.6e}")]
    NotAdmissible { norm: f64, bound: f64 },

    #[error("{what} did not converge after {iters} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iters: usize,
        residual: f64,
    },

    #[error("covariance is singular or indefinite (min eigenvalue {min_eig:.3e})")]
    SingularSigma { min_eig: f64 },

    #[error("covariance must satisfy Sigma <= I (max eigenvalue {max_eig:.6e})")]
    SigmaOutOfRange { max_eig: f64 },

    #[error("initial covariance must satisfy Sigma0 <= I (max eigenvalue {max_eig:.6e})")]
    SigmaTooLarge { max_eig: f64 },

    #[error("tau = {tau:.6e} outside (0, 2 sigma_min(R)] = (0, {upper:.6e}]")]
    TauOutOfRange { tau: f64, upper: f64 },

    #[error("optimal gain is not admissible: ||A - BK*|| = {norm:.6e} >= 1/sqrt(gamma) = {bound:.6e}")]
    OptimalNotAdmissible { norm: f64, bound: f64 },

    #[error("update left the admissible set: ||A - BK'|| = {norm:.6e} >= {bound:.6e}")]
    InadmissibleStep { norm: f64, bound: f64 },

    #[error("B has no positive minimum singular value (n = {n}, k = {k}, sigma_min = {sigma_min:.3e})")]
    SingularB { n: usize, k: usize, sigma_min: f64 },

    #[error("rho = {rho:.6e} invalid: {reason}")]
    RhoInvalid { rho: f64, reason: String },

    #[error("Cholesky factor has non-positive diagonal entry {value:.3e} at index {index}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("perturbed gain {sample} is not admissible (||A - BK|| = {norm:.6e})")]
    PerturbationInadmissible { sample: usize, norm: f64 },

    #[error("source optimum is not admissible for the target environment (||A' - B'K*|| = {norm:.6e} >= {bound:.6e})")]
    WarmStartInadmissible { norm: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
