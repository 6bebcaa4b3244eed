use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),
    #[error("module mismatch: {0}")]
    ModuleMismatch(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid automorphism: {0}")]
    InvalidAutomorphism(String),
    #[error("invalid correspondence: {0}")]
    InvalidCorrespondence(String),
    #[error("not unitary: {0}")]
    NotUnitary(String),
    #[error("homomorphism is not unital: {0}")]
    NotUnital(String),
    #[error("map is not phi-linear (residual {0:.3e})")]
    NotPhiLinear(f64),
    #[error("map is not a phi-isometry (residual {0:.3e})")]
    NotIsometry(f64),
    #[error("map is not right-linear (residual {0:.3e})")]
    NotRightLinear(f64),
    #[error("homomorphism is not injective on the range ideal")]
    NotInjectiveOnRange,
    #[error("no phi-adjoint exists (residual {0:.3e})")]
    NoAdjoint(f64),
    #[error("not a generalized unitary: {0}")]
    NotGeneralizedUnitary(String),
    #[error("generalized unitaries belong to different automorphism classes on the range ideal")]
    IncompatibleClasses,
    #[error("automorphism does not leave the range ideal invariant")]
    RangeNotInvariant,
    #[error("module is not full")]
    NotFull,
    #[error("linear system is underdetermined: spanning set has rank {rank}, need {needed}")]
    Underdetermined { rank: usize, needed: usize },
    #[error("inconsistent linear data (residual {0:.3e})")]
    Inconsistent(f64),
}
