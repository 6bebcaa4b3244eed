//! Finite-dimensional C*-algebras `⊕ᵢ M_{nᵢ}(ℂ)`, their elements and
//! automorphisms.
//!
//! Every algebra here is unital, so nondegenerate homomorphisms are exactly
//! the unital ones and the multiplier algebra of `B` is `B` itself. In
//! particular quasi-inner automorphisms coincide with inner ones, and an
//! automorphism is inner iff its block permutation is the identity.

use crate::error::{Error, Result};
use crate::linalg::{self, random_unitary};
use crate::perm::Perm;
use crate::scalar::{CMat, CVec, Real};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiMatrixAlgebra {
    blocks: Vec<usize>,
}

impl MultiMatrixAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidAlgebra("at least one block is required".into()));
        }
        if let Some(i) = blocks.iter().position(|&n| n == 0) {
            return Err(Error::InvalidAlgebra(format!("block {} has size 0", i + 1)));
        }
        Ok(MultiMatrixAlgebra { blocks })
    }

    /// The zero algebra (no blocks); only arises as the range ideal of the
    /// zero module.
    pub fn zero() -> Self {
        MultiMatrixAlgebra { blocks: Vec::new() }
    }

    /// `ℂ`, used as the source algebra when a module is read as a correspondence.
    pub fn scalars() -> Self {
        MultiMatrixAlgebra { blocks: vec![1] }
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<usize>) -> Self {
        debug_assert!(blocks.iter().all(|&n| n > 0));
        MultiMatrixAlgebra { blocks }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> usize {
        self.blocks[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Complex dimension `Σ nᵢ²`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    pub fn one<T: Real>(&self) -> AlgebraElement<T> {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| CMat::<T>::identity(n, n)).collect(),
        }
    }

    pub fn zero_element<T: Real>(&self) -> AlgebraElement<T> {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| CMat::<T>::zeros(n, n)).collect(),
        }
    }

    /// Matrix unit `e_{rc}` in block `i`.
    pub fn matrix_unit<T: Real>(&self, i: usize, r: usize, c: usize) -> AlgebraElement<T> {
        let mut e = self.zero_element();
        e.blocks[i] = linalg::matrix_unit(self.blocks[i], self.blocks[i], r, c);
        e
    }

    /// All matrix units, blockwise and row-major within each block; this is
    /// the coordinate basis used by [`AlgebraElement::coords`].
    pub fn matrix_units<T: Real>(&self) -> Vec<AlgebraElement<T>> {
        let mut out = Vec::with_capacity(self.dim());
        for (i, &n) in self.blocks.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    out.push(self.matrix_unit(i, r, c));
                }
            }
        }
        out
    }

    /// Minimal central projection of block `i`.
    pub fn central_projection<T: Real>(&self, i: usize) -> AlgebraElement<T> {
        let mut e = self.zero_element();
        e.blocks[i] = CMat::<T>::identity(self.blocks[i], self.blocks[i]);
        e
    }

    pub fn random_element<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement<T> {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| linalg::gaussian(rng, n, n)).collect(),
        }
    }

    pub fn random_unitary<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement<T> {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| random_unitary(rng, n)).collect(),
        }
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|&n| (n, n)).collect()
    }

    pub fn element_from_coords<T: Real>(&self, v: &CVec<T>) -> AlgebraElement<T> {
        AlgebraElement { algebra: self.clone(), blocks: linalg::unflatten(&self.shapes(), v) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement<T: Real> {
    algebra: MultiMatrixAlgebra,
    blocks: Vec<CMat<T>>,
}

impl<T: Real> AlgebraElement<T> {
    pub fn new(algebra: &MultiMatrixAlgebra, blocks: Vec<CMat<T>>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "expected {} blocks, got {}",
                algebra.num_blocks(),
                blocks.len()
            )));
        }
        for (i, (b, &n)) in blocks.iter().zip(algebra.blocks()).enumerate() {
            if b.shape() != (n, n) {
                return Err(Error::Shape(format!(
                    "block {} must be {n}x{n}, got {}x{}",
                    i + 1,
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(AlgebraElement { algebra: algebra.clone(), blocks })
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMat<T>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat<T> {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMat<T>> {
        self.blocks
    }

    fn same_owner(&self, other: &Self) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch(format!(
                "{:?} vs {:?}",
                self.algebra.blocks(),
                other.algebra.blocks()
            )));
        }
        Ok(())
    }

    /// Blockwise product.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_owner(other)?;
        Ok(self.zip_with(other, |a, b| a * b))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_owner(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_owner(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub(crate) fn zip_with(&self, other: &Self, f: impl Fn(&CMat<T>, &CMat<T>) -> CMat<T>) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, z: crate::scalar::Cx<T>) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b * z).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// C*-norm: the largest operator norm over the blocks.
    pub fn norm(&self) -> T {
        self.blocks.iter().map(linalg::spectral_norm).fold(T::zero(), |a, b| a.max(b))
    }

    /// `‖self − other‖`; infinite when the owners differ.
    pub fn distance(&self, other: &Self) -> T {
        match self.sub(other) {
            Ok(d) => d.norm(),
            Err(_) => T::lit(f64::INFINITY),
        }
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.distance(other) <= T::check_tol()
    }

    pub fn is_unitary(&self) -> bool {
        self.blocks.iter().all(linalg::is_unitary)
    }

    pub fn coords(&self) -> CVec<T> {
        linalg::flatten(&self.blocks)
    }
}

/// Automorphism `φ(b)_{σ(i)} = wᵢ bᵢ wᵢ†` of a multi-matrix algebra.
///
/// Conjugators are stored as given; two automorphisms are equal when they
/// act identically (see [`Automorphism::action_eq`]).
#[derive(Clone, Debug, PartialEq)]
pub struct Automorphism<T: Real> {
    algebra: MultiMatrixAlgebra,
    perm: Perm,
    conjugators: Vec<CMat<T>>,
}

impl<T: Real> Automorphism<T> {
    pub fn new(algebra: &MultiMatrixAlgebra, perm: Perm, conjugators: Vec<CMat<T>>) -> Result<Self> {
        let k = algebra.num_blocks();
        if perm.len() != k {
            return Err(Error::InvalidAutomorphism(format!(
                "permutation has degree {}, algebra has {k} blocks",
                perm.len()
            )));
        }
        let n = algebra.blocks();
        for i in 0..k {
            if n[perm.apply(i)] != n[i] {
                return Err(Error::InvalidAutomorphism(format!(
                    "perm must preserve block sizes: block {} (size {}) maps to block {} (size {})",
                    i + 1,
                    n[i],
                    perm.apply(i) + 1,
                    n[perm.apply(i)]
                )));
            }
        }
        if conjugators.len() != k {
            return Err(Error::InvalidAutomorphism(format!(
                "expected {k} conjugators, got {}",
                conjugators.len()
            )));
        }
        for (i, w) in conjugators.iter().enumerate() {
            if w.shape() != (n[i], n[i]) {
                return Err(Error::InvalidAutomorphism(format!(
                    "conjugator {} must be {}x{}",
                    i + 1,
                    n[i],
                    n[i]
                )));
            }
            if !linalg::is_unitary(w) {
                return Err(Error::NotUnitary(format!("conjugator {}", i + 1)));
            }
        }
        Ok(Automorphism { algebra: algebra.clone(), perm, conjugators })
    }

    pub fn identity(algebra: &MultiMatrixAlgebra) -> Self {
        Self::permutation(algebra, Perm::identity(algebra.num_blocks()))
            .expect("identity preserves block sizes")
    }

    /// Pure block permutation with identity conjugators.
    pub fn permutation(algebra: &MultiMatrixAlgebra, perm: Perm) -> Result<Self> {
        let conj = algebra.blocks().iter().map(|&n| CMat::<T>::identity(n, n)).collect();
        Self::new(algebra, perm, conj)
    }

    /// Inner automorphism `Ad v = v • v*`.
    pub fn inner(v: &AlgebraElement<T>) -> Result<Self> {
        if !v.is_unitary() {
            return Err(Error::NotUnitary("inner automorphism needs a unitary".into()));
        }
        Self::new(v.algebra(), Perm::identity(v.algebra().num_blocks()), v.blocks().to_vec())
    }

    /// Uniform shape-compatible permutation with Haar conjugators.
    pub fn random<R: Rng + ?Sized>(algebra: &MultiMatrixAlgebra, rng: &mut R) -> Self {
        let perms = enumerate_outer_classes(algebra);
        let perm = perms[rng.random_range(0..perms.len())].clone();
        let conj = algebra.blocks().iter().map(|&n| random_unitary(rng, n)).collect();
        Automorphism { algebra: algebra.clone(), perm, conjugators: conj }
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn perm(&self) -> &Perm {
        &self.perm
    }

    pub fn conjugators(&self) -> &[CMat<T>] {
        &self.conjugators
    }

    pub fn apply(&self, b: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
        if b.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch("automorphism applied to a foreign element".into()));
        }
        let mut out = self.algebra.zero_element();
        for (i, w) in self.conjugators.iter().enumerate() {
            out.blocks[self.perm.apply(i)] = w * b.block(i) * w.adjoint();
        }
        Ok(out)
    }

    /// `self ∘ other`: permutation `σ′∘σ`, conjugators `w′_{σ(i)}·wᵢ`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch("composing automorphisms of different algebras".into()));
        }
        let conj = (0..self.algebra.num_blocks())
            .map(|i| &self.conjugators[other.perm.apply(i)] * &other.conjugators[i])
            .collect();
        Ok(Automorphism {
            algebra: self.algebra.clone(),
            perm: self.perm.compose(&other.perm),
            conjugators: conj,
        })
    }

    pub fn inverse(&self) -> Self {
        let inv = self.perm.inverse();
        let conj = (0..self.algebra.num_blocks())
            .map(|j| self.conjugators[inv.apply(j)].adjoint())
            .collect();
        Automorphism { algebra: self.algebra.clone(), perm: inv, conjugators: conj }
    }

    /// Inner iff the block permutation is trivial.
    pub fn is_inner(&self) -> bool {
        self.perm.is_identity()
    }

    /// Largest deviation between the two actions over all matrix units.
    pub fn action_distance(&self, other: &Self) -> T {
        if self.algebra != other.algebra {
            return T::lit(f64::INFINITY);
        }
        self.algebra
            .matrix_units::<T>()
            .iter()
            .map(|e| {
                let a = self.apply(e).expect("same algebra");
                let b = other.apply(e).expect("same algebra");
                a.distance(&b)
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn action_eq(&self, other: &Self) -> bool {
        self.action_distance(other) <= T::check_tol()
    }

    /// Same action, with each conjugator's phase fixed so that its first
    /// nonzero entry is real positive.
    pub fn canonicalized(&self) -> Self {
        Automorphism {
            algebra: self.algebra.clone(),
            perm: self.perm.clone(),
            conjugators: self.conjugators.iter().map(linalg::fix_phase).collect(),
        }
    }
}

/// The block permutations `σ` with `n∘σ = n`; these index `aut(B)/inn(B)`.
pub fn enumerate_outer_classes(algebra: &MultiMatrixAlgebra) -> Vec<Perm> {
    Perm::all(algebra.num_blocks())
        .into_iter()
        .filter(|p| p.preserves(algebra.blocks()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_elem(alg: &MultiMatrixAlgebra, vals: &[f64]) -> AlgebraElement<f64> {
        let blocks = vals.iter().map(|&v| CMat::from_element(1, 1, cx(v, 0.0))).collect();
        AlgebraElement::new(alg, blocks).unwrap()
    }

    #[test]
    fn multiply_examples() {
        let alg = MultiMatrixAlgebra::new(vec![1, 1]).unwrap();
        let a = scalar_elem(&alg, &[2.0, 3.0]);
        let b = scalar_elem(&alg, &[5.0, 7.0]);
        assert_eq!(a.multiply(&b).unwrap(), scalar_elem(&alg, &[10.0, 21.0]));
        assert_eq!(alg.one::<f64>().multiply(&b).unwrap(), b);
    }

    #[test]
    fn product_adjoint_reverses() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alg = MultiMatrixAlgebra::new(vec![2, 3]).unwrap();
        let a = alg.random_element::<f64, _>(&mut rng);
        let b = alg.random_element::<f64, _>(&mut rng);
        let lhs = a.multiply(&b).unwrap().adjoint();
        let rhs = b.adjoint().multiply(&a.adjoint()).unwrap();
        assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn owner_mismatch_is_an_error() {
        let a = MultiMatrixAlgebra::new(vec![1]).unwrap().one::<f64>();
        let b = MultiMatrixAlgebra::new(vec![2]).unwrap().one::<f64>();
        assert!(matches!(a.multiply(&b), Err(Error::AlgebraMismatch(_))));
        let phi = Automorphism::identity(a.algebra());
        assert!(phi.apply(&b).is_err());
    }

    #[test]
    fn invalid_algebras_rejected() {
        assert!(MultiMatrixAlgebra::new(vec![]).is_err());
        assert!(MultiMatrixAlgebra::new(vec![1, 0]).is_err());
    }

    #[test]
    fn flip_permutes_scalars() {
        let alg = MultiMatrixAlgebra::new(vec![1, 1]).unwrap();
        let flip = Automorphism::<f64>::permutation(&alg, Perm::transposition(2, 0, 1)).unwrap();
        let b = scalar_elem(&alg, &[2.0, 3.0]);
        assert_eq!(flip.apply(&b).unwrap(), scalar_elem(&alg, &[3.0, 2.0]));
        assert!(!flip.is_inner());
        assert!(flip.compose(&flip).unwrap().action_eq(&Automorphism::identity(&alg)));
        let id = Automorphism::<f64>::identity(&alg);
        assert_eq!(id.apply(&b).unwrap(), b);
        assert!(id.is_inner());
    }

    #[test]
    fn perm_must_preserve_block_sizes() {
        let alg = MultiMatrixAlgebra::new(vec![1, 2]).unwrap();
        let err = Automorphism::<f64>::permutation(&alg, Perm::transposition(2, 0, 1)).unwrap_err();
        assert!(err.to_string().contains("preserve block sizes"));
    }

    #[test]
    fn random_inner_automorphisms_are_inner() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alg = MultiMatrixAlgebra::new(vec![2, 2, 1]).unwrap();
        let v = alg.random_unitary::<f64, _>(&mut rng);
        let phi = Automorphism::inner(&v).unwrap();
        assert!(phi.is_inner());
        let psi = Automorphism::inner(&alg.random_unitary(&mut rng)).unwrap();
        assert!(phi.compose(&psi).unwrap().is_inner());
    }

    #[test]
    fn outer_classes_examples() {
        let p = |b: Vec<usize>| enumerate_outer_classes(&MultiMatrixAlgebra::new(b).unwrap()).len();
        assert_eq!(p(vec![1, 2]), 1);
        assert_eq!(p(vec![1, 1]), 2);
        assert_eq!(p(vec![3]), 1);
        assert_eq!(p(vec![2, 2, 2]), 6);
        assert_eq!(p(vec![1, 1, 2]), 2);
    }

    #[test]
    fn compose_inverse_is_identity_by_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let alg = MultiMatrixAlgebra::new(vec![2, 1, 2]).unwrap();
        let phi = Automorphism::<f64>::random(&alg, &mut rng);
        let id = Automorphism::identity(&alg);
        assert!(phi.compose(&phi.inverse()).unwrap().action_eq(&id));
        assert!(phi.inverse().compose(&phi).unwrap().action_eq(&id));
    }

    #[test]
    fn canonicalization_keeps_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let alg = MultiMatrixAlgebra::new(vec![3, 3]).unwrap();
        let phi = Automorphism::<f64>::random(&alg, &mut rng);
        let canon = phi.canonicalized();
        assert!(canon.action_eq(&phi));
        for w in canon.conjugators() {
            assert!(w[(0, 0)].im.abs() < 1e-12 && w[(0, 0)].re > 0.0);
        }
        // a global phase on one conjugator does not change the action
        let twisted = Automorphism::new(
            &alg,
            phi.perm().clone(),
            vec![phi.conjugators()[0].map(|z| z * cx(0.0, 1.0)), phi.conjugators()[1].clone()],
        )
        .unwrap();
        assert!(twisted.action_eq(&phi));
        assert!((twisted.canonicalized().conjugators()[0].clone() - canon.conjugators()[0].clone()).norm() < 1e-10);
    }
}
