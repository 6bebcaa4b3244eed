//! Scalar abstraction shared by every module.

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real field underlying the complex matrices (f32 or f64).
///
/// Each precision carries its own two-tier tolerance: `check_tol` for
/// algebraic identities evaluated on operator norms, and `rank_tol` as the
/// relative singular-value cutoff used for every rank decision.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    fn check_tol() -> Self;
    fn rank_tol() -> Self;
    /// Singular values below this are treated as an exactly zero matrix.
    fn zero_floor() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn check_tol() -> Self {
        1e-9
    }
    fn rank_tol() -> Self {
        1e-7
    }
    fn zero_floor() -> Self {
        1e-13
    }
}

impl Real for f32 {
    fn check_tol() -> Self {
        2e-3
    }
    fn rank_tol() -> Self {
        1e-3
    }
    fn zero_floor() -> Self {
        1e-5
    }
}

pub type Cx<T> = Complex<T>;
pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

pub(crate) fn cone<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

pub(crate) fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}
