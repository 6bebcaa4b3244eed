//! Finitely generated right Hilbert modules over multi-matrix algebras.
//!
//! Up to isomorphism such a module is determined by its multiplicity vector
//! `m`: an element is a tuple of `mᵢ×nᵢ` matrices, the right action is
//! `(xb)ᵢ = xᵢbᵢ` and the inner product is `⟨x,y⟩ᵢ = xᵢ†yᵢ`. Blocks with
//! `mᵢ = 0` are kept as `0×nᵢ` matrices so indices always line up with the
//! algebra.

use crate::algebra::{AlgebraElement, MultiMatrixAlgebra};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{CMat, CVec, Cx, Real};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertModule {
    algebra: MultiMatrixAlgebra,
    mults: Vec<usize>,
}

/// The range ideal `B_E` together with its block injection into `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeIdeal {
    pub algebra: MultiMatrixAlgebra,
    /// `embedding[s]` is the block of `B` holding block `s` of `B_E`.
    pub embedding: Vec<usize>,
}

impl RangeIdeal {
    /// Position of block `i` of `B` inside `B_E`, if any.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.embedding.iter().position(|&j| j == i)
    }

    pub fn restrict<T: Real>(&self, b: &AlgebraElement<T>) -> AlgebraElement<T> {
        let blocks = self.embedding.iter().map(|&i| b.block(i).clone()).collect();
        AlgebraElement::new(&self.algebra, blocks).expect("shapes follow the embedding")
    }

    /// Extends by zero outside the ideal.
    pub fn embed<T: Real>(&self, parent: &MultiMatrixAlgebra, b: &AlgebraElement<T>) -> AlgebraElement<T> {
        let mut blocks: Vec<CMat<T>> = parent.blocks().iter().map(|&n| CMat::zeros(n, n)).collect();
        for (s, &i) in self.embedding.iter().enumerate() {
            blocks[i] = b.block(s).clone();
        }
        AlgebraElement::new(parent, blocks).expect("shapes follow the embedding")
    }
}

impl HilbertModule {
    pub fn new(algebra: &MultiMatrixAlgebra, mults: Vec<usize>) -> Result<Self> {
        if mults.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "multiplicity vector has length {}, algebra has {} blocks",
                mults.len(),
                algebra.num_blocks()
            )));
        }
        Ok(HilbertModule { algebra: algebra.clone(), mults })
    }

    /// `B` as a module over itself (`m = n`).
    pub fn algebra_as_module(algebra: &MultiMatrixAlgebra) -> Self {
        HilbertModule { algebra: algebra.clone(), mults: algebra.blocks().to_vec() }
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.mults.len()).filter(|&i| self.mults[i] > 0).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.mults.iter().all(|&m| m == 0)
    }

    /// Complex dimension `Σ mᵢnᵢ`.
    pub fn dim(&self) -> usize {
        self.mults.iter().zip(self.algebra.blocks()).map(|(m, n)| m * n).sum()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.mults.iter().zip(self.algebra.blocks()).map(|(&m, &n)| (m, n)).collect()
    }

    pub fn range_ideal(&self) -> RangeIdeal {
        let support = self.support();
        let blocks = support.iter().map(|&i| self.algebra.block(i)).collect();
        RangeIdeal { algebra: MultiMatrixAlgebra::from_blocks_unchecked(blocks), embedding: support }
    }

    pub fn is_full(&self) -> bool {
        self.mults.iter().all(|&m| m > 0)
    }

    /// A vector with `⟨x,x⟩ = 1` exists iff every block admits an isometry
    /// `ℂ^{nᵢ} → ℂ^{mᵢ}`.
    pub fn has_unit_vector(&self) -> bool {
        self.mults.iter().zip(self.algebra.blocks()).all(|(m, n)| m >= n)
    }

    /// `B^a(E) = ⊕_{i∈S} M_{mᵢ}` as an abstract algebra, indexed by the support.
    pub fn operator_algebra(&self) -> MultiMatrixAlgebra {
        MultiMatrixAlgebra::from_blocks_unchecked(self.support().iter().map(|&i| self.mults[i]).collect())
    }

    pub fn zero_element<T: Real>(&self) -> ModuleElement<T> {
        ModuleElement {
            module: self.clone(),
            blocks: self.shapes().iter().map(|&(m, n)| CMat::zeros(m, n)).collect(),
        }
    }

    /// Matrix units, blockwise and row-major; the coordinate basis.
    pub fn basis<T: Real>(&self) -> Vec<ModuleElement<T>> {
        let mut out = Vec::with_capacity(self.dim());
        for (i, (m, n)) in self.shapes().into_iter().enumerate() {
            for r in 0..m {
                for c in 0..n {
                    let mut x = self.zero_element();
                    x.blocks[i] = linalg::matrix_unit(m, n, r, c);
                    out.push(x);
                }
            }
        }
        out
    }

    pub fn random_element<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> ModuleElement<T> {
        ModuleElement {
            module: self.clone(),
            blocks: self.shapes().iter().map(|&(m, n)| linalg::gaussian(rng, m, n)).collect(),
        }
    }

    pub fn element_from_coords<T: Real>(&self, v: &CVec<T>) -> ModuleElement<T> {
        assert_eq!(v.len(), self.dim(), "coordinate vector length");
        ModuleElement { module: self.clone(), blocks: linalg::unflatten(&self.shapes(), v) }
    }

    pub fn element<T: Real>(&self, blocks: Vec<CMat<T>>) -> Result<ModuleElement<T>> {
        ModuleElement::new(self, blocks)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModuleElement<T: Real> {
    module: HilbertModule,
    blocks: Vec<CMat<T>>,
}

impl<T: Real> ModuleElement<T> {
    pub fn new(module: &HilbertModule, blocks: Vec<CMat<T>>) -> Result<Self> {
        let shapes = module.shapes();
        if blocks.len() != shapes.len() {
            return Err(Error::Shape(format!("expected {} blocks, got {}", shapes.len(), blocks.len())));
        }
        for (i, (b, &(m, n))) in blocks.iter().zip(&shapes).enumerate() {
            if b.shape() != (m, n) {
                return Err(Error::Shape(format!(
                    "block {} must be {m}x{n}, got {}x{}",
                    i + 1,
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(ModuleElement { module: module.clone(), blocks })
    }

    pub fn module(&self) -> &HilbertModule {
        &self.module
    }

    pub fn blocks(&self) -> &[CMat<T>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat<T> {
        &self.blocks[i]
    }

    fn same_owner(&self, other: &Self) -> Result<()> {
        if self.module != other.module {
            return Err(Error::ModuleMismatch(format!(
                "mults {:?} vs {:?}",
                self.module.mults(),
                other.module.mults()
            )));
        }
        Ok(())
    }

    /// `⟨x,y⟩ᵢ = xᵢ†yᵢ`.
    pub fn inner(&self, other: &Self) -> Result<AlgebraElement<T>> {
        self.same_owner(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(x, y)| x.adjoint() * y).collect();
        AlgebraElement::new(self.module.algebra(), blocks)
    }

    pub fn right_mul(&self, b: &AlgebraElement<T>) -> Result<Self> {
        if b.algebra() != self.module.algebra() {
            return Err(Error::AlgebraMismatch("right action by a foreign element".into()));
        }
        Ok(ModuleElement {
            module: self.module.clone(),
            blocks: self.blocks.iter().zip(b.blocks()).map(|(x, b)| x * b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_owner(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_owner(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMat<T>, &CMat<T>) -> CMat<T>) -> Self {
        ModuleElement {
            module: self.module.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, z: Cx<T>) -> Self {
        ModuleElement { module: self.module.clone(), blocks: self.blocks.iter().map(|b| b * z).collect() }
    }

    /// `‖x‖ = ‖⟨x,x⟩‖^{1/2}`, computed as the largest singular value over blocks.
    pub fn norm(&self) -> T {
        self.blocks.iter().map(linalg::spectral_norm).fold(T::zero(), |a, b| a.max(b))
    }

    pub fn distance(&self, other: &Self) -> T {
        match self.sub(other) {
            Ok(d) => d.norm(),
            Err(_) => T::lit(f64::INFINITY),
        }
    }

    pub fn coords(&self) -> CVec<T> {
        linalg::flatten(&self.blocks)
    }
}

/// Right-linear (hence adjointable) map between modules over the same
/// algebra, acting blockwise by left multiplication: `(ax)ᵢ = aᵢxᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointableOperator<T: Real> {
    domain: HilbertModule,
    codomain: HilbertModule,
    blocks: Vec<CMat<T>>,
}

impl<T: Real> AdjointableOperator<T> {
    pub fn new(domain: &HilbertModule, codomain: &HilbertModule, blocks: Vec<CMat<T>>) -> Result<Self> {
        if domain.algebra() != codomain.algebra() {
            return Err(Error::AlgebraMismatch("operator between modules over different algebras".into()));
        }
        if blocks.len() != domain.mults().len() {
            return Err(Error::Shape(format!("expected {} blocks", domain.mults().len())));
        }
        for (i, b) in blocks.iter().enumerate() {
            let want = (codomain.mults()[i], domain.mults()[i]);
            if b.shape() != want {
                return Err(Error::Shape(format!(
                    "operator block {} must be {}x{}",
                    i + 1,
                    want.0,
                    want.1
                )));
            }
        }
        Ok(AdjointableOperator { domain: domain.clone(), codomain: codomain.clone(), blocks })
    }

    pub fn identity(module: &HilbertModule) -> Self {
        let blocks = module.mults().iter().map(|&m| CMat::identity(m, m)).collect();
        AdjointableOperator { domain: module.clone(), codomain: module.clone(), blocks }
    }

    pub fn random<R: Rng + ?Sized>(domain: &HilbertModule, codomain: &HilbertModule, rng: &mut R) -> Self {
        let blocks = domain
            .mults()
            .iter()
            .zip(codomain.mults())
            .map(|(&m, &q)| linalg::gaussian(rng, q, m))
            .collect();
        Self::new(domain, codomain, blocks).expect("random shapes are consistent")
    }

    pub fn random_unitary<R: Rng + ?Sized>(module: &HilbertModule, rng: &mut R) -> Self {
        let blocks = module.mults().iter().map(|&m| linalg::random_unitary(rng, m)).collect();
        AdjointableOperator { domain: module.clone(), codomain: module.clone(), blocks }
    }

    pub fn domain(&self) -> &HilbertModule {
        &self.domain
    }

    pub fn codomain(&self) -> &HilbertModule {
        &self.codomain
    }

    pub fn blocks(&self) -> &[CMat<T>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat<T> {
        &self.blocks[i]
    }

    pub fn apply(&self, x: &ModuleElement<T>) -> Result<ModuleElement<T>> {
        if x.module() != &self.domain {
            return Err(Error::ModuleMismatch("operator applied outside its domain".into()));
        }
        let blocks = self.blocks.iter().zip(x.blocks()).map(|(a, x)| a * x).collect();
        ModuleElement::new(&self.codomain, blocks)
    }

    pub fn adjoint(&self) -> Self {
        AdjointableOperator {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if other.codomain != self.domain {
            return Err(Error::ModuleMismatch("composition of non-matching operators".into()));
        }
        Ok(AdjointableOperator {
            domain: other.domain.clone(),
            codomain: self.codomain.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::ModuleMismatch("difference of operators on different modules".into()));
        }
        Ok(AdjointableOperator {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn norm(&self) -> T {
        self.blocks.iter().map(linalg::spectral_norm).fold(T::zero(), |a, b| a.max(b))
    }

    pub fn distance(&self, other: &Self) -> T {
        match self.sub(other) {
            Ok(d) => d.norm(),
            Err(_) => T::lit(f64::INFINITY),
        }
    }

    pub fn unitarity_residual(&self) -> T {
        self.blocks.iter().map(linalg::unitarity_residual).fold(T::zero(), |a, b| a.max(b))
    }

    /// Each block `aᵢ` satisfies `a*a = aa* = 1` to tolerance.
    pub fn is_unitary(&self) -> bool {
        self.unitarity_residual() <= T::check_tol()
    }

    /// Reads an operator on `E` as an element of `B^a(E) = ⊕_{i∈S} M_{mᵢ}`.
    pub fn to_algebra_element(&self) -> Result<AlgebraElement<T>> {
        if self.domain != self.codomain {
            return Err(Error::ModuleMismatch("not an endomorphism".into()));
        }
        let blocks = self.domain.support().iter().map(|&i| self.blocks[i].clone()).collect();
        AlgebraElement::new(&self.domain.operator_algebra(), blocks)
    }

    pub fn from_algebra_element(module: &HilbertModule, a: &AlgebraElement<T>) -> Result<Self> {
        if a.algebra() != &module.operator_algebra() {
            return Err(Error::AlgebraMismatch("element does not live in B^a(E)".into()));
        }
        let mut blocks: Vec<CMat<T>> = module.mults().iter().map(|&m| CMat::zeros(m, m)).collect();
        for (s, &i) in module.support().iter().enumerate() {
            blocks[i] = a.block(s).clone();
        }
        Self::new(module, module, blocks)
    }
}

/// Rank-one operator `xy*: z ↦ x⟨y,z⟩`, blockwise `xᵢyᵢ†`.
pub fn rank_one<T: Real>(x: &ModuleElement<T>, y: &ModuleElement<T>) -> Result<AdjointableOperator<T>> {
    if x.module().algebra() != y.module().algebra() {
        return Err(Error::AlgebraMismatch("rank-one operator across algebras".into()));
    }
    let blocks = x.blocks().iter().zip(y.blocks()).map(|(a, b)| a * b.adjoint()).collect();
    AdjointableOperator::new(y.module(), x.module(), blocks)
}

/// Decides `E ≅ F`; when true, returns the blockwise-identity unitary.
pub fn modules_isomorphic<T: Real>(
    e: &HilbertModule,
    f: &HilbertModule,
) -> Result<Option<AdjointableOperator<T>>> {
    if e.algebra() != f.algebra() {
        return Err(Error::AlgebraMismatch("modules over different algebras".into()));
    }
    if e.mults() != f.mults() {
        return Ok(None);
    }
    let blocks = e.mults().iter().map(|&m| CMat::identity(m, m)).collect();
    AdjointableOperator::new(e, f, blocks).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alg(b: &[usize]) -> MultiMatrixAlgebra {
        MultiMatrixAlgebra::new(b.to_vec()).unwrap()
    }

    #[test]
    fn orthogonal_columns() {
        let e = HilbertModule::new(&alg(&[1]), vec![2]).unwrap();
        let basis = e.basis::<f64>();
        assert_eq!(basis[0].inner(&basis[1]).unwrap().norm(), 0.0);
        let zero = e.zero_element::<f64>();
        assert_eq!(zero.inner(&basis[0]).unwrap().norm(), 0.0);
    }

    #[test]
    fn inner_product_is_right_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = HilbertModule::new(&alg(&[2, 3]), vec![3, 1]).unwrap();
        let x = e.random_element::<f64, _>(&mut rng);
        let y = e.random_element::<f64, _>(&mut rng);
        let b = e.algebra().random_element(&mut rng);
        let lhs = x.inner(&y.right_mul(&b).unwrap()).unwrap();
        let rhs = x.inner(&y).unwrap().multiply(&b).unwrap();
        assert!(lhs.distance(&rhs) < 1e-12);
        assert!(x.inner(&y).unwrap().adjoint().distance(&y.inner(&x).unwrap()) < 1e-12);
    }

    #[test]
    fn range_ideal_examples() {
        let full = HilbertModule::new(&alg(&[1, 1]), vec![2, 1]).unwrap();
        assert_eq!(full.range_ideal().algebra.blocks(), &[1, 1]);
        assert!(full.is_full());
        let half = HilbertModule::new(&alg(&[1, 1]), vec![1, 0]).unwrap();
        let r = half.range_ideal();
        assert_eq!(r.algebra.blocks(), &[1]);
        assert_eq!(r.embedding, vec![0]);
        let zero = HilbertModule::new(&alg(&[1, 1]), vec![0, 0]).unwrap();
        assert!(zero.is_zero());
        assert!(zero.range_ideal().algebra.is_zero());
    }

    #[test]
    fn unit_vector_examples() {
        let m = HilbertModule::new(&alg(&[1, 2]), vec![2, 1]).unwrap();
        assert!(m.is_full());
        assert!(!m.has_unit_vector());
        let b = HilbertModule::algebra_as_module(&alg(&[1, 2]));
        assert!(b.is_full() && b.has_unit_vector());
        let e = HilbertModule::new(&alg(&[2, 1]), vec![3, 1]).unwrap();
        assert!(e.is_full() && e.has_unit_vector());
    }

    #[test]
    fn isomorphism_examples() {
        let a = alg(&[1, 1]);
        let e = HilbertModule::new(&a, vec![2, 1]).unwrap();
        let f = HilbertModule::new(&a, vec![1, 2]).unwrap();
        assert!(modules_isomorphic::<f64>(&e, &f).unwrap().is_none());
        let w = modules_isomorphic::<f64>(&e, &e).unwrap().unwrap();
        assert!(w.is_unitary());
        let other = HilbertModule::new(&alg(&[2]), vec![1]).unwrap();
        assert!(modules_isomorphic::<f64>(&e, &other).is_err());
    }

    #[test]
    fn rank_one_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = HilbertModule::new(&alg(&[1]), vec![2]).unwrap();
        let x = e.basis::<f64>()[0].clone();
        let p = rank_one(&x, &x).unwrap();
        assert!(p.compose(&p).unwrap().distance(&p) < 1e-15);
        assert_eq!(p.blocks()[0][(0, 0)], cx(1.0, 0.0));
        let zero = rank_one(&x, &e.zero_element()).unwrap();
        assert_eq!(zero.norm(), 0.0);

        let g = HilbertModule::new(&alg(&[2, 3]), vec![2, 2]).unwrap();
        let (x, y, z) = (g.random_element(&mut rng), g.random_element(&mut rng), g.random_element::<f64, _>(&mut rng));
        let lhs = rank_one(&x, &y).unwrap().apply(&z).unwrap();
        let rhs = x.right_mul(&y.inner(&z).unwrap()).unwrap();
        assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn unitary_detection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = HilbertModule::new(&alg(&[2, 1]), vec![3, 2]).unwrap();
        assert!(AdjointableOperator::<f64>::identity(&e).is_unitary());
        assert!(AdjointableOperator::<f64>::random_unitary(&e, &mut rng).is_unitary());
        let g = AdjointableOperator::<f64>::random(&e, &e, &mut rng);
        assert!(g.unitarity_residual() > 1e-3);
        assert!(!g.is_unitary());
    }

    #[test]
    fn norm_matches_inner_product_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let e = HilbertModule::new(&alg(&[2, 2]), vec![1, 3]).unwrap();
        let x = e.random_element::<f64, _>(&mut rng);
        let ip = x.inner(&x).unwrap().norm();
        assert!((x.norm() * x.norm() - ip).abs() < 1e-10);
    }
}
