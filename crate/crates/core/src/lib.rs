//! Generalized unitaries on finitely generated Hilbert modules over
//! multi-matrix algebras `B = ⊕ᵢ M_{nᵢ}(ℂ)`.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the aliases
//! at the bottom of this file fix `f64`, and `*32` variants fix `f32`.
//! Block indices are 0-based in the API and 1-based in printed text.

pub mod algebra;
pub mod corr;
pub mod error;
pub mod genmap;
pub mod groups;
pub mod harness;
pub mod hilbmod;
pub mod linalg;
pub mod perm;
pub mod reptheory;
pub mod scalar;

pub use algebra::MultiMatrixAlgebra;
pub use error::{Error, Result};
pub use hilbmod::HilbertModule;
pub use perm::{Perm, PermGroup};
pub use scalar::Real;

use algebra::AlgebraElement;

/// A *-homomorphism between multi-matrix algebras.
pub trait Homomorphism<T: Real> {
    fn source(&self) -> &MultiMatrixAlgebra;
    fn target(&self) -> &MultiMatrixAlgebra;
    fn apply(&self, b: &AlgebraElement<T>) -> error::Result<AlgebraElement<T>>;
}

impl<T: Real> Homomorphism<T> for algebra::Automorphism<T> {
    fn source(&self) -> &MultiMatrixAlgebra {
        self.algebra()
    }

    fn target(&self) -> &MultiMatrixAlgebra {
        self.algebra()
    }

    fn apply(&self, b: &AlgebraElement<T>) -> error::Result<AlgebraElement<T>> {
        algebra::Automorphism::apply(self, b)
    }
}

pub type AlgebraElement64 = algebra::AlgebraElement<f64>;
pub type Automorphism64 = algebra::Automorphism<f64>;
pub type ModuleElement64 = hilbmod::ModuleElement<f64>;
pub type AdjointableOperator64 = hilbmod::AdjointableOperator<f64>;
pub type Correspondence64 = corr::Correspondence<f64>;
pub type UnitalHom64 = corr::UnitalHom<f64>;
pub type RawModuleMap64 = genmap::RawModuleMap<f64>;
pub type GeneralizedUnitary64 = genmap::GeneralizedUnitary<f64>;

pub type AlgebraElement32 = algebra::AlgebraElement<f32>;
pub type Automorphism32 = algebra::Automorphism<f32>;
pub type ModuleElement32 = hilbmod::ModuleElement<f32>;
pub type AdjointableOperator32 = hilbmod::AdjointableOperator<f32>;
pub type Correspondence32 = corr::Correspondence<f32>;
pub type UnitalHom32 = corr::UnitalHom<f32>;
pub type RawModuleMap32 = genmap::RawModuleMap<f32>;
pub type GeneralizedUnitary32 = genmap::GeneralizedUnitary<f32>;
