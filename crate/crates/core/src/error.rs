use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhError {
    #[error("argument {0} is within tolerance of a branch point")]
    BranchPointHit(Complex64),

    #[error("point ({0}, {1}) lies on the singular locus of the kernel")]
    SingularLocus(Complex64, Complex64),

    #[error("no convergence after {evals} evaluations (error estimate {estimate:.3e})")]
    NoConvergence { evals: usize, estimate: f64 },

    #[error("integrand is not finite at {0} on the contour")]
    SingularityOnContour(Complex64),

    #[error("inner integral failed at outer node {node}: {source}")]
    InnerFailure {
        node: Complex64,
        #[source]
        source: Box<WhError>,
    },

    #[error("kernel has no registered closed-form factorisation: {0}")]
    UnfactorizableKernel(String),

    #[error("point ({0}, {1}) is outside the validity region of the selected formula: {2}")]
    RegionMismatch(Complex64, Complex64, String),

    #[error("point {0} is within {1:.2e} of a pole, use the residue operations")]
    PoleProximity(Complex64, f64),

    #[error("argument {0} outside the convergence sector")]
    SectorViolation(Complex64),

    #[error("evaluation point {0} is closer than {1:.2e} to the curve")]
    TooCloseToCurve(Complex64, f64),

    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("fit failed: {0}")]
    FitFailed(String),
}

pub type Result<T> = std::result::Result<T, WhError>;
