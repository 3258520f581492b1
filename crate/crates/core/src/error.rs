use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("system is singular at s = {0}")]
    SingularAtS(Complex64),
    #[error("feedback interconnection is ill-posed (I - Dg*Dh is singular)")]
    IllPosedFeedback,
    #[error("closed loop is ill-posed")]
    IllPosedLoop,
    #[error("state matrix is not Hurwitz")]
    NotHurwitz,
    #[error("H2 norm requires zero feedthrough")]
    NonzeroFeedthrough,
    #[error("transfer matrix is not TF-structured with respect to the pattern")]
    NotTfStructured,
    #[error("entry ({0}, {1}) is improper")]
    ImproperEntry(usize, usize),
    #[error("block is not strictly proper: {0}")]
    ImproperBlock(String),
    #[error("rational degree {0} exceeds the cap of {1}")]
    DegreeOverflow(usize, usize),
    #[error("row sums are nonzero (max |k*1| = {0:e})")]
    NotRelative(f64),
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("rational matrix is singular")]
    Singular,
    #[error("Phi_x is singular")]
    SingularPhiX,
    #[error("Phi_xx is singular")]
    SingularPhiXX,
    #[error("closed-loop affine constraint violated (residual {0:e})")]
    ConstraintViolated(f64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("the long-range measure needs an even ring size")]
    OddNForLongRange,
    #[error("matrix is not circulant")]
    NotCirculant,
    #[error("the pole parameter a must be negative")]
    NonNegativeA,
    #[error("the mean mode is detectable: {0}")]
    ModeZeroDetectable(String),
    #[error("mode {0} of the deflated closed loop is not stable")]
    UnstableNonzeroMode(usize),
    #[error("kernel entry at offset {0:?} is not stable and strictly proper")]
    UnstableKernelEntry(Vec<i64>),
    #[error("closed-loop symbol has a pole at the evaluation point (frequency {0:?})")]
    SymbolPoleClash(Vec<usize>),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
