//! Correspondences between multi-matrix algebras.
//!
//! A correspondence from `A = ⊕M_{aᵢ}` to `C = ⊕M_{p_j}` is classified by a
//! nonnegative integer matrix `μ` (`k×l`): target block `j` carries
//! `rows(j) = Σᵢ μᵢⱼaᵢ` rows, grouped lexicographically by (source block,
//! copy). An element is a tuple of `rows(j)×p_j` matrices and `A` acts on
//! block `j` by `U_j D_j(b) U_j†`, where `D_j(b)` repeats each `bᵢ` along the
//! diagonal `μᵢⱼ` times and `U_j` is an optional unitary twist.

use crate::algebra::{enumerate_outer_classes, AlgebraElement, Automorphism, MultiMatrixAlgebra};
use crate::error::{Error, Result};
use crate::hilbmod::{HilbertModule, ModuleElement};
use crate::linalg;
use crate::perm::{Perm, PermGroup};
use crate::scalar::{cone, CMat, CVec, Real};
use crate::Homomorphism;
use rand::Rng;
use rayon::prelude::*;

pub type MultMatrix = Vec<Vec<usize>>;

pub fn mult_product(a: &MultMatrix, b: &MultMatrix) -> MultMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner, "inner dimensions of multiplicity matrices");
            (0..cols).map(|j| (0..inner).map(|t| row[t] * b[t][j]).sum()).collect()
        })
        .collect()
}

pub fn mult_transpose(a: &MultMatrix, cols: usize) -> MultMatrix {
    (0..cols).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// `P_π` with a one at `(i, π(i))`.
pub fn permutation_matrix(p: &Perm) -> MultMatrix {
    let k = p.len();
    (0..k).map(|i| (0..k).map(|j| usize::from(p.apply(i) == j)).collect()).collect()
}

/// Inverse of [`permutation_matrix`].
pub fn as_permutation(mult: &MultMatrix) -> Option<Perm> {
    let k = mult.len();
    let mut images = Vec::with_capacity(k);
    for row in mult {
        if row.len() != k || row.iter().sum::<usize>() != 1 || row.iter().any(|&x| x > 1) {
            return None;
        }
        images.push(row.iter().position(|&x| x == 1)?);
    }
    Perm::from_images(images).ok()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence<T: Real> {
    source: MultiMatrixAlgebra,
    target: MultiMatrixAlgebra,
    mult: MultMatrix,
    conjugators: Vec<CMat<T>>,
}

impl<T: Real> Correspondence<T> {
    pub fn new(source: &MultiMatrixAlgebra, target: &MultiMatrixAlgebra, mult: MultMatrix) -> Result<Self> {
        let (k, l) = (source.num_blocks(), target.num_blocks());
        if mult.len() != k || mult.iter().any(|r| r.len() != l) {
            return Err(Error::InvalidCorrespondence(format!("multiplicity matrix must be {k}x{l}")));
        }
        let rows: Vec<usize> = (0..l).map(|j| (0..k).map(|i| mult[i][j] * source.block(i)).sum()).collect();
        let conjugators = rows.iter().map(|&r| CMat::identity(r, r)).collect();
        Ok(Correspondence { source: source.clone(), target: target.clone(), mult, conjugators })
    }

    /// Replaces the per-target-block twists.
    pub fn with_conjugators(mut self, conjugators: Vec<CMat<T>>) -> Result<Self> {
        if conjugators.len() != self.target.num_blocks() {
            return Err(Error::InvalidCorrespondence("one conjugator per target block".into()));
        }
        for (j, u) in conjugators.iter().enumerate() {
            let r = self.rows(j);
            if u.shape() != (r, r) {
                return Err(Error::InvalidCorrespondence(format!("conjugator {} must be {r}x{r}", j + 1)));
            }
            if !linalg::is_unitary(u) {
                return Err(Error::NotUnitary(format!("correspondence conjugator {}", j + 1)));
            }
        }
        self.conjugators = conjugators;
        Ok(self)
    }

    pub fn identity(algebra: &MultiMatrixAlgebra) -> Self {
        let k = algebra.num_blocks();
        let mult = (0..k).map(|i| (0..k).map(|j| usize::from(i == j)).collect()).collect();
        Self::new(algebra, algebra, mult).expect("square identity")
    }

    /// A right module viewed as a correspondence from `ℂ`.
    pub fn from_module(module: &HilbertModule) -> Self {
        Self::new(&MultiMatrixAlgebra::scalars(), module.algebra(), vec![module.mults().to_vec()])
            .expect("single row")
    }

    /// `_φB` for an automorphism: `μ = P_σ`, `U_j = w_{σ⁻¹(j)}`.
    pub fn from_automorphism(phi: &Automorphism<T>) -> Self {
        let alg = phi.algebra();
        let inv = phi.perm().inverse();
        let conj = (0..alg.num_blocks()).map(|j| phi.conjugators()[inv.apply(j)].clone()).collect();
        Self::new(alg, alg, permutation_matrix(phi.perm()))
            .and_then(|c| c.with_conjugators(conj))
            .expect("automorphism data is consistent")
    }

    /// Random twists on a given multiplicity matrix.
    pub fn random_twisted<R: Rng + ?Sized>(
        source: &MultiMatrixAlgebra,
        target: &MultiMatrixAlgebra,
        mult: MultMatrix,
        rng: &mut R,
    ) -> Result<Self> {
        let c = Self::new(source, target, mult)?;
        let conj = (0..target.num_blocks()).map(|j| linalg::random_unitary(rng, c.rows(j))).collect();
        c.with_conjugators(conj)
    }

    pub fn source(&self) -> &MultiMatrixAlgebra {
        &self.source
    }

    pub fn target(&self) -> &MultiMatrixAlgebra {
        &self.target
    }

    pub fn mult(&self) -> &MultMatrix {
        &self.mult
    }

    pub fn conjugators(&self) -> &[CMat<T>] {
        &self.conjugators
    }

    pub fn rows(&self, j: usize) -> usize {
        (0..self.source.num_blocks()).map(|i| self.mult[i][j] * self.source.block(i)).sum()
    }

    pub fn right_mults(&self) -> Vec<usize> {
        (0..self.target.num_blocks()).map(|j| self.rows(j)).collect()
    }

    pub fn right_module(&self) -> HilbertModule {
        HilbertModule::new(&self.target, self.right_mults()).expect("one mult per target block")
    }

    /// First row of copy `c` of source block `i` inside target block `j`.
    pub fn row_offset(&self, i: usize, c: usize, j: usize) -> usize {
        (0..i).map(|t| self.mult[t][j] * self.source.block(t)).sum::<usize>() + c * self.source.block(i)
    }

    /// `D_j(b)`, the untwisted block diagonal.
    pub fn diagonal_action(&self, b: &AlgebraElement<T>, j: usize) -> CMat<T> {
        let parts: Vec<CMat<T>> = (0..self.source.num_blocks())
            .flat_map(|i| std::iter::repeat_n(b.block(i).clone(), self.mult[i][j]))
            .collect();
        linalg::block_diag(&parts)
    }

    /// `U_j D_j(b) U_j†`.
    pub fn left_block(&self, b: &AlgebraElement<T>, j: usize) -> CMat<T> {
        let u = &self.conjugators[j];
        u * self.diagonal_action(b, j) * u.adjoint()
    }

    pub fn left_action(&self, b: &AlgebraElement<T>, x: &ModuleElement<T>) -> Result<ModuleElement<T>> {
        if b.algebra() != &self.source {
            return Err(Error::AlgebraMismatch("left action by a foreign element".into()));
        }
        if x.module() != &self.right_module() {
            return Err(Error::ModuleMismatch("element is not in this correspondence".into()));
        }
        let blocks = (0..self.target.num_blocks()).map(|j| self.left_block(b, j) * x.block(j)).collect();
        ModuleElement::new(x.module(), blocks)
    }

    /// `span⟨M,M⟩` is the whole target.
    pub fn is_full(&self) -> bool {
        (0..self.target.num_blocks()).all(|j| self.rows(j) > 0)
    }

    /// Rank of `b ↦ (U_j D_j(b) U_j†)_j` into `⊕ M_{rows(j)}`.
    pub fn left_action_rank(&self) -> usize {
        let cols: Vec<CVec<T>> = self
            .source
            .matrix_units::<T>()
            .iter()
            .map(|e| {
                let blocks: Vec<CMat<T>> = (0..self.target.num_blocks()).map(|j| self.left_block(e, j)).collect();
                linalg::flatten(&blocks)
            })
            .collect();
        let dim: usize = self.right_mults().iter().map(|r| r * r).sum();
        linalg::rank(&linalg::columns(dim, &cols))
    }

    /// Full, and the left action is an isomorphism onto `K(M) = ⊕ M_{rows(j)}`.
    pub fn is_morita(&self) -> bool {
        if !self.is_full() {
            return false;
        }
        let dim_k: usize = self.right_mults().iter().map(|r| r * r).sum();
        dim_k == self.source.dim() && self.left_action_rank() == dim_k
    }

    /// The class of the conjugate correspondence, `μᵀ`.
    pub fn dual(&self) -> Self {
        Self::new(&self.target, &self.source, mult_transpose(&self.mult, self.target.num_blocks()))
            .expect("transposed shape")
    }

    /// The element `1` when every target block is square, i.e. for `_φC`.
    pub fn unit_element(&self) -> Result<ModuleElement<T>> {
        let blocks = (0..self.target.num_blocks())
            .map(|j| {
                let p = self.target.block(j);
                if self.rows(j) == p {
                    Ok(CMat::identity(p, p))
                } else {
                    Err(Error::NotUnital(format!("target block {} is not square", j + 1)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ModuleElement::new(&self.right_module(), blocks)
    }
}

/// Correspondences are isomorphic iff their multiplicity matrices agree.
/// The witness `V_j = U′_j U_j†` intertwines both left actions.
pub fn correspondences_isomorphic<T: Real>(
    m: &Correspondence<T>,
    n: &Correspondence<T>,
) -> Result<Option<Vec<CMat<T>>>> {
    if m.source() != n.source() || m.target() != n.target() {
        return Err(Error::AlgebraMismatch("correspondences between different algebras".into()));
    }
    if m.mult() != n.mult() {
        return Ok(None);
    }
    Ok(Some(m.conjugators().iter().zip(n.conjugators()).map(|(u, v)| v * u.adjoint()).collect()))
}

/// `M ⊙ N` together with the bilinear element map `(x, y) ↦ x⊙y`.
#[derive(Clone, Debug)]
pub struct Tensor<T: Real> {
    left: Correspondence<T>,
    right: Correspondence<T>,
    product: Correspondence<T>,
    // per product block: untwisted stacked row -> normal-form row
    row_maps: Vec<Vec<usize>>,
}

impl<T: Real> Tensor<T> {
    pub fn new(m: &Correspondence<T>, n: &Correspondence<T>) -> Result<Self> {
        if m.target() != n.source() {
            return Err(Error::AlgebraMismatch(format!(
                "cannot tensor: middle algebras {:?} and {:?} differ",
                m.target().blocks(),
                n.source().blocks()
            )));
        }
        let (ka, kb, kc) = (m.source().num_blocks(), m.target().num_blocks(), n.target().num_blocks());
        let mu = m.mult();
        let nu = n.mult();
        let prod = Correspondence::<T>::new(m.source(), n.target(), mult_product(mu, nu))?;
        let mut row_maps = Vec::with_capacity(kc);
        let mut conj = Vec::with_capacity(kc);
        for l in 0..kc {
            let mut map = Vec::with_capacity(prod.rows(l));
            let mut stacked = Vec::new();
            for j in 0..kb {
                for d in 0..nu[j][l] {
                    stacked.push(m.conjugators()[j].clone());
                    for i in 0..ka {
                        let before: usize = (0..j).map(|t| nu[t][l] * mu[i][t]).sum();
                        for c in 0..mu[i][j] {
                            let copy = before + d * mu[i][j] + c;
                            let base = prod.row_offset(i, copy, l);
                            map.extend(base..base + m.source().block(i));
                        }
                    }
                }
            }
            let r = reindexing::<T>(&map);
            conj.push(&r * linalg::block_diag(&stacked) * r.adjoint());
            row_maps.push(map);
        }
        let product = prod.with_conjugators(conj)?;
        Ok(Tensor { left: m.clone(), right: n.clone(), product, row_maps })
    }

    pub fn left(&self) -> &Correspondence<T> {
        &self.left
    }

    pub fn right(&self) -> &Correspondence<T> {
        &self.right
    }

    pub fn product(&self) -> &Correspondence<T> {
        &self.product
    }

    /// `x⊙y` in the normal form of the product.
    pub fn pair(&self, x: &ModuleElement<T>, y: &ModuleElement<T>) -> Result<ModuleElement<T>> {
        if x.module() != &self.left.right_module() || y.module() != &self.right.right_module() {
            return Err(Error::ModuleMismatch("tensor factors are not elements of the correspondences".into()));
        }
        let (kb, kc) = (self.left.target().num_blocks(), self.right.target().num_blocks());
        let mut blocks = Vec::with_capacity(kc);
        for l in 0..kc {
            let y_raw = self.right.conjugators()[l].adjoint() * y.block(l);
            let p = self.right.target().block(l);
            let mut out = CMat::<T>::zeros(self.product.rows(l), p);
            let mut s = 0;
            for j in 0..kb {
                let nj = self.left.target().block(j);
                for d in 0..self.right.mult()[j][l] {
                    let off = self.right.row_offset(j, d, l);
                    let z = x.block(j) * y_raw.rows(off, nj);
                    for r in 0..z.nrows() {
                        out.set_row(self.row_maps[l][s], &z.row(r));
                        s += 1;
                    }
                }
            }
            blocks.push(out);
        }
        ModuleElement::new(&self.product.right_module(), blocks)
    }
}

fn reindexing<T: Real>(map: &[usize]) -> CMat<T> {
    let mut r = CMat::<T>::zeros(map.len(), map.len());
    for (s, &t) in map.iter().enumerate() {
        r[(t, s)] = cone();
    }
    r
}

/// Per target block, the permutation matrix taking `x⊙(y⊙z)` to `(x⊙y)⊙z`.
pub fn associator<T: Real>(
    m: &Correspondence<T>,
    n: &Correspondence<T>,
    p: &Correspondence<T>,
) -> Result<Vec<CMat<T>>> {
    if m.target() != n.source() || n.target() != p.source() {
        return Err(Error::AlgebraMismatch("associator needs composable correspondences".into()));
    }
    let (mu, nu, rho) = (m.mult(), n.mult(), p.mult());
    let a = m.source().blocks();
    let (ka, kb, kc, kd) =
        (a.len(), m.target().num_blocks(), n.target().num_blocks(), p.target().num_blocks());
    let mn = mult_product(mu, nu);
    let np = mult_product(nu, rho);
    let total = mult_product(&mn, rho);
    let mut out = Vec::with_capacity(kd);
    for l in 0..kd {
        let size: usize = (0..ka).map(|i| total[i][l] * a[i]).sum();
        let mut perm = CMat::<T>::zeros(size, size);
        for i in 0..ka {
            let base: usize = (0..i).map(|t| total[t][l] * a[t]).sum();
            for j in 0..kb {
                for k in 0..kc {
                    for e in 0..rho[k][l] {
                        for d in 0..nu[j][k] {
                            for c in 0..mu[i][j] {
                                let c_mn = (0..j).map(|t| mu[i][t] * nu[t][k]).sum::<usize>() + d * mu[i][j] + c;
                                let copy_l = (0..k).map(|t| mn[i][t] * rho[t][l]).sum::<usize>()
                                    + e * mn[i][k]
                                    + c_mn;
                                let d2 = (0..k).map(|t| nu[j][t] * rho[t][l]).sum::<usize>() + e * nu[j][k] + d;
                                let copy_r =
                                    (0..j).map(|t| mu[i][t] * np[t][l]).sum::<usize>() + d2 * mu[i][j] + c;
                                for r in 0..a[i] {
                                    perm[(base + copy_l * a[i] + r, base + copy_r * a[i] + r)] = cone();
                                }
                            }
                        }
                    }
                }
            }
        }
        out.push(perm);
    }
    Ok(out)
}

/// Unital homomorphism `φ: B → C` stored as the correspondence `_φC`
/// (so `rows(j) = p_j`).
#[derive(Clone, Debug, PartialEq)]
pub struct UnitalHom<T: Real>(Correspondence<T>);

impl<T: Real> UnitalHom<T> {
    pub fn new(corr: Correspondence<T>) -> Result<Self> {
        for j in 0..corr.target().num_blocks() {
            if corr.rows(j) != corr.target().block(j) {
                return Err(Error::NotUnital(format!(
                    "target block {} has size {} but receives {} rows",
                    j + 1,
                    corr.target().block(j),
                    corr.rows(j)
                )));
            }
        }
        Ok(UnitalHom(corr))
    }

    /// Target sizes are read off `μ`; every column must be nonzero.
    pub fn from_mult(source: &MultiMatrixAlgebra, mult: MultMatrix) -> Result<Self> {
        let l = mult.first().map_or(0, Vec::len);
        let sizes: Vec<usize> =
            (0..l).map(|j| (0..source.num_blocks()).map(|i| mult[i][j] * source.block(i)).sum()).collect();
        let target = MultiMatrixAlgebra::new(sizes)?;
        UnitalHom::new(Correspondence::new(source, &target, mult)?)
    }

    pub fn from_automorphism(phi: &Automorphism<T>) -> Self {
        UnitalHom(Correspondence::from_automorphism(phi))
    }

    /// The quotient map killing the blocks not listed in `keep`.
    pub fn quotient(source: &MultiMatrixAlgebra, keep: &[usize]) -> Result<Self> {
        let mult = (0..source.num_blocks())
            .map(|i| keep.iter().map(|&j| usize::from(i == j)).collect())
            .collect();
        Self::from_mult(source, mult)
    }

    /// Random multiplicities in `0..=max_mult` with `l` target blocks, twisted by Haar unitaries.
    pub fn random<R: Rng + ?Sized>(source: &MultiMatrixAlgebra, l: usize, max_mult: usize, rng: &mut R) -> Self {
        let k = source.num_blocks();
        loop {
            let mult: MultMatrix =
                (0..k).map(|_| (0..l).map(|_| rng.random_range(0..=max_mult)).collect()).collect();
            if (0..l).any(|j| (0..k).all(|i| mult[i][j] == 0)) {
                continue;
            }
            let hom = Self::from_mult(source, mult).expect("nonzero columns");
            let conj = (0..l).map(|j| linalg::random_unitary(rng, hom.0.rows(j))).collect();
            return UnitalHom(hom.0.with_conjugators(conj).expect("Haar unitaries"));
        }
    }

    pub fn twisted(self, conjugators: Vec<CMat<T>>) -> Result<Self> {
        Ok(UnitalHom(self.0.with_conjugators(conjugators)?))
    }

    pub fn correspondence(&self) -> &Correspondence<T> {
        &self.0
    }

    pub fn mult(&self) -> &MultMatrix {
        self.0.mult()
    }

    pub fn is_injective(&self) -> bool {
        self.0.mult().iter().all(|row| row.iter().any(|&x| x > 0))
    }

    /// Surjective iff the columns of `μ` are distinct unit vectors.
    pub fn is_surjective(&self) -> bool {
        let mut used = vec![false; self.0.source().num_blocks()];
        for j in 0..self.0.target().num_blocks() {
            let col: Vec<usize> = self.0.mult().iter().map(|r| r[j]).collect();
            if col.iter().sum::<usize>() != 1 {
                return false;
            }
            let i = col.iter().position(|&x| x == 1).expect("sum is one");
            if std::mem::replace(&mut used[i], true) {
                return false;
            }
        }
        true
    }
}

impl<T: Real> Homomorphism<T> for UnitalHom<T> {
    fn source(&self) -> &MultiMatrixAlgebra {
        self.0.source()
    }

    fn target(&self) -> &MultiMatrixAlgebra {
        self.0.target()
    }

    fn apply(&self, b: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
        if b.algebra() != self.0.source() {
            return Err(Error::AlgebraMismatch("homomorphism applied to a foreign element".into()));
        }
        let blocks = (0..self.0.target().num_blocks()).map(|j| self.0.left_block(b, j)).collect();
        AlgebraElement::new(self.0.target(), blocks)
    }
}

/// `E ⊙_φ C` with the canonical map `i_φ(x) = x⊙1`.
#[derive(Clone, Debug)]
pub struct Extension<T: Real> {
    tensor: Tensor<T>,
    unit: ModuleElement<T>,
}

impl<T: Real> Extension<T> {
    pub fn module(&self) -> HilbertModule {
        self.tensor.product().right_module()
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }

    pub fn embed(&self, x: &ModuleElement<T>) -> Result<ModuleElement<T>> {
        self.tensor.pair(x, &self.unit)
    }

    /// `x⊙c` for `c ∈ C` viewed inside `_φC`.
    pub fn pair(&self, x: &ModuleElement<T>, c: &AlgebraElement<T>) -> Result<ModuleElement<T>> {
        let y = ModuleElement::new(&self.tensor.right().right_module(), c.blocks().to_vec())?;
        self.tensor.pair(x, &y)
    }
}

pub fn extend_module<T: Real>(e: &HilbertModule, phi: &UnitalHom<T>) -> Result<Extension<T>> {
    if e.algebra() != phi.correspondence().source() {
        return Err(Error::AlgebraMismatch("module and homomorphism live over different algebras".into()));
    }
    let tensor = Tensor::new(&Correspondence::from_module(e), phi.correspondence())?;
    let unit = phi.correspondence().unit_element()?;
    Ok(Extension { tensor, unit })
}

/// Class of a self-Morita equivalence of `B`, stored as `π` with `μ = P_π`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PicardElement {
    algebra: MultiMatrixAlgebra,
    perm: Perm,
}

impl PicardElement {
    pub fn new(algebra: &MultiMatrixAlgebra, perm: Perm) -> Result<Self> {
        if perm.len() != algebra.num_blocks() {
            return Err(Error::InvalidPermutation("degree differs from the number of blocks".into()));
        }
        Ok(PicardElement { algebra: algebra.clone(), perm })
    }

    pub fn identity(algebra: &MultiMatrixAlgebra) -> Self {
        PicardElement { algebra: algebra.clone(), perm: Perm::identity(algebra.num_blocks()) }
    }

    pub fn of<T: Real>(m: &Correspondence<T>) -> Result<Self> {
        if m.source() != m.target() {
            return Err(Error::AlgebraMismatch("Picard classes need source = target".into()));
        }
        if !m.is_morita() {
            return Err(Error::InvalidCorrespondence("not a Morita equivalence".into()));
        }
        let perm = as_permutation(m.mult())
            .ok_or_else(|| Error::InvalidCorrespondence("Morita multiplicities are not a permutation".into()))?;
        Self::new(m.source(), perm)
    }

    pub fn from_automorphism<T: Real>(phi: &Automorphism<T>) -> Self {
        PicardElement { algebra: phi.algebra().clone(), perm: phi.perm().clone() }
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn perm(&self) -> &Perm {
        &self.perm
    }

    pub fn mult(&self) -> MultMatrix {
        permutation_matrix(&self.perm)
    }

    pub fn correspondence<T: Real>(&self) -> Correspondence<T> {
        Correspondence::new(&self.algebra, &self.algebra, self.mult()).expect("square permutation matrix")
    }

    /// `[M]·[N] = [M ⊙ N]`; since `P_π P_τ = P_{τ∘π}`.
    pub fn tensor(&self, other: &Self) -> Self {
        assert_eq!(self.algebra, other.algebra, "Picard elements of different algebras");
        PicardElement { algebra: self.algebra.clone(), perm: other.perm.compose(&self.perm) }
    }

    pub fn inverse(&self) -> Self {
        PicardElement { algebra: self.algebra.clone(), perm: self.perm.inverse() }
    }
}

/// The opposite group: `g * g′ = g′g`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PicardOp(pub PicardElement);

impl std::ops::Mul for &PicardOp {
    type Output = PicardOp;

    fn mul(self, rhs: &PicardOp) -> PicardOp {
        PicardOp(rhs.0.tensor(&self.0))
    }
}

impl std::ops::Mul for &PicardElement {
    type Output = PicardElement;

    fn mul(self, rhs: &PicardElement) -> PicardElement {
        self.tensor(rhs)
    }
}

/// Every `μ` (from `B` to itself) passing [`Correspondence::is_morita`].
///
/// Candidates are pruned by the necessary conditions `rows(j) ≥ 1` and
/// `Σ rows(j)² = dim B`; each survivor is tested numerically.
pub fn morita_multiplicities(algebra: &MultiMatrixAlgebra) -> Vec<MultMatrix> {
    let n = algebra.blocks();
    let k = n.len();
    let dim = algebra.dim();
    // columns with given row count s
    let mut columns_by_rows: Vec<Vec<Vec<usize>>> = vec![Vec::new(); dim + 1];
    let mut col = vec![0usize; k];
    fn fill(i: usize, n: &[usize], s: usize, max: usize, col: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n.len() {
            if s > 0 {
                out[s].push(col.clone());
            }
            return;
        }
        let mut c = 0;
        while s + c * n[i] <= max {
            col[i] = c;
            fill(i + 1, n, s + c * n[i], max, col, out);
            c += 1;
        }
        col[i] = 0;
    }
    let max_rows = (dim as f64).sqrt().floor() as usize;
    fill(0, n, 0, max_rows, &mut col, &mut columns_by_rows);

    let mut candidates = Vec::new();
    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(k);
    fn search(
        j: usize,
        k: usize,
        budget: usize,
        by_rows: &[Vec<Vec<usize>>],
        chosen: &mut Vec<Vec<usize>>,
        out: &mut Vec<MultMatrix>,
    ) {
        let left = k - j;
        if left == 0 {
            if budget == 0 {
                let mult: MultMatrix = (0..k).map(|i| chosen.iter().map(|c| c[i]).collect()).collect();
                if mult.iter().all(|row| row.iter().any(|&x| x > 0)) {
                    out.push(mult);
                }
            }
            return;
        }
        if budget < left {
            return;
        }
        for (s, cols) in by_rows.iter().enumerate().skip(1) {
            if s * s > budget - (left - 1) {
                break;
            }
            for c in cols {
                chosen.push(c.clone());
                search(j + 1, k, budget - s * s, by_rows, chosen, out);
                chosen.pop();
            }
        }
    }
    search(0, k, dim, &columns_by_rows, &mut chosen, &mut candidates);

    candidates
        .into_par_iter()
        .filter(|mult| {
            Correspondence::<f64>::new(algebra, algebra, mult.clone()).map(|c| c.is_morita()).unwrap_or(false)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardGroup {
    algebra: MultiMatrixAlgebra,
    elements: Vec<PicardElement>,
}

impl PicardGroup {
    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn elements(&self) -> &[PicardElement] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn perm_group(&self) -> PermGroup {
        PermGroup::from_elements(self.algebra.num_blocks(), self.elements.iter().map(|g| g.perm.clone()))
    }
}

/// `Pic(B)` by enumeration of all Morita multiplicity matrices.
pub fn picard_group(algebra: &MultiMatrixAlgebra) -> Result<PicardGroup> {
    let mut elements = morita_multiplicities(algebra)
        .iter()
        .map(|mult| {
            as_permutation(mult)
                .map(|perm| PicardElement { algebra: algebra.clone(), perm })
                .ok_or_else(|| Error::InvalidCorrespondence(format!("non-permutation Morita class {mult:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    elements.sort_by(|a, b| a.perm.cmp(&b.perm));
    Ok(PicardGroup { algebra: algebra.clone(), elements })
}

/// Image of `aut(B)/gin(B)` in the Picard group: the block-size preserving perms.
pub fn aut_image_in_picard(algebra: &MultiMatrixAlgebra) -> PermGroup {
    PermGroup::from_elements(algebra.num_blocks(), enumerate_outer_classes(algebra))
}
