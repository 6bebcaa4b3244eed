//! Representations and automorphisms of `K = B^a(E) = ⊕_{i∈S} M_{mᵢ}`.
//!
//! Blocks of `K` are indexed by the support `S` of `E`, in increasing order,
//! which is also the block order of the range ideal `B_E`.

use crate::algebra::{AlgebraElement, Automorphism};
use crate::corr::{permutation_matrix, Correspondence, MultMatrix, PicardElement, Tensor, UnitalHom};
use crate::error::{Error, Result};
use crate::genmap::{induced_automorphism, GeneralizedUnitary, RawModuleMap};
use crate::hilbmod::{rank_one, AdjointableOperator, HilbertModule, ModuleElement};
use crate::linalg;
use crate::perm::{Perm, PermGroup};
use crate::scalar::{CMat, CVec, Real};
use crate::Homomorphism;

/// `E` regarded as a full module over its range ideal.
pub fn over_range(e: &HilbertModule) -> HilbertModule {
    let range = e.range_ideal();
    let mults = e.support().iter().map(|&i| e.mults()[i]).collect();
    HilbertModule::new(&range.algebra, mults).expect("one mult per support block")
}

pub fn to_range_element<T: Real>(x: &ModuleElement<T>) -> ModuleElement<T> {
    let e = x.module();
    let blocks = e.support().iter().map(|&i| x.block(i).clone()).collect();
    ModuleElement::new(&over_range(e), blocks).expect("support blocks")
}

/// `ϑ_u(a) = uau*`, blockwise `ϑ_u(a)_{σ(i)} = WᵢaᵢWᵢ†`.
pub fn theta_from_gen_unitary<T: Real>(u: &GeneralizedUnitary<T>) -> Result<Automorphism<T>> {
    let e = u.module();
    let support = e.support();
    let pos = |i: usize| support.iter().position(|&j| j == i);
    let images = support
        .iter()
        .map(|&i| pos(u.perm().apply(i)).ok_or_else(|| Error::NotGeneralizedUnitary("support not invariant".into())))
        .collect::<Result<Vec<_>>>()?;
    let conj = support.iter().map(|&i| u.block_unitaries()[i].clone()).collect();
    Automorphism::new(&e.operator_algebra(), Perm::from_images(images)?, conj)
}

/// `ϑ_u` applied to an operator on `E`.
pub fn conjugate_operator<T: Real>(u: &GeneralizedUnitary<T>, a: &AdjointableOperator<T>) -> Result<AdjointableOperator<T>> {
    let theta = theta_from_gen_unitary(u)?;
    let image = theta.apply(&a.to_algebra_element()?)?;
    AdjointableOperator::from_algebra_element(u.module(), &image)
}

/// `E*`, the correspondence from `B_E` to `K` with identity multiplicities;
/// `x*` has blocks `xᵢ†`.
pub fn dual_module<T: Real>(e: &HilbertModule) -> Correspondence<T> {
    let range = e.range_ideal();
    let k = range.algebra.num_blocks();
    let mult = (0..k).map(|i| (0..k).map(|j| usize::from(i == j)).collect()).collect();
    Correspondence::new(&range.algebra, &e.operator_algebra(), mult).expect("square identity")
}

pub fn star<T: Real>(x: &ModuleElement<T>) -> ModuleElement<T> {
    let e = x.module();
    let dual = dual_module::<T>(e);
    let blocks = e.support().iter().map(|&i| x.block(i).adjoint()).collect();
    ModuleElement::new(&dual.right_module(), blocks).expect("adjoint shapes")
}

/// A unital representation `ϑ: B^a(E) → B^a(F)`.
#[derive(Clone, Debug)]
pub struct StrictRep<T: Real> {
    e: HilbertModule,
    f: HilbertModule,
    theta: UnitalHom<T>,
}

impl<T: Real> StrictRep<T> {
    pub fn new(e: &HilbertModule, f: &HilbertModule, theta: UnitalHom<T>) -> Result<Self> {
        if theta.source() != &e.operator_algebra() || theta.target() != &f.operator_algebra() {
            return Err(Error::AlgebraMismatch(format!(
                "representation {:?} -> {:?} does not match B^a(E) = {:?}, B^a(F) = {:?}",
                theta.source().blocks(),
                theta.target().blocks(),
                e.operator_algebra().blocks(),
                f.operator_algebra().blocks()
            )));
        }
        if e.is_zero() {
            return Err(Error::NotFull);
        }
        Ok(StrictRep { e: e.clone(), f: f.clone(), theta })
    }

    /// An automorphism of `B^a(E)`, acting on `E` itself.
    pub fn from_automorphism(e: &HilbertModule, theta: &Automorphism<T>) -> Result<Self> {
        Self::new(e, e, UnitalHom::from_automorphism(theta))
    }

    pub fn e(&self) -> &HilbertModule {
        &self.e
    }

    pub fn f(&self) -> &HilbertModule {
        &self.f
    }

    pub fn theta(&self) -> &UnitalHom<T> {
        &self.theta
    }

    pub fn apply(&self, a: &AdjointableOperator<T>) -> Result<AdjointableOperator<T>> {
        let image = self.theta.apply(&a.to_algebra_element()?)?;
        AdjointableOperator::from_algebra_element(&self.f, &image)
    }

    /// `F` as a correspondence from `K` to `C` through `ϑ`.
    pub fn rep_correspondence(&self) -> Correspondence<T> {
        let k = self.e.operator_algebra().num_blocks();
        let support_f = self.f.support();
        let l = self.f.algebra().num_blocks();
        let mut mult: MultMatrix = vec![vec![0; l]; k];
        let mut conj: Vec<CMat<T>> = self.f.mults().iter().map(|&q| CMat::identity(q, q)).collect();
        for (t, &j) in support_f.iter().enumerate() {
            for (s, row) in mult.iter_mut().enumerate() {
                row[j] = self.theta.mult()[s][t];
            }
            conj[j] = self.theta.correspondence().conjugators()[t].clone();
        }
        Correspondence::new(&self.e.operator_algebra(), self.f.algebra(), mult)
            .and_then(|c| c.with_conjugators(conj))
            .expect("unital representation data")
    }

    /// `F_ϑ = E* ⊙_ϑ F`.
    pub fn multiplicity_correspondence(&self) -> Result<Tensor<T>> {
        Tensor::new(&dual_module(&self.e), &self.rep_correspondence())
    }

    /// The unitary `x⊙(y*⊙z) ↦ ϑ(xy*)z` from `E ⊙ F_ϑ` onto `F`.
    pub fn reconstruction(&self) -> Result<Reconstruction<T>> {
        let f_theta = self.multiplicity_correspondence()?;
        let e_range = over_range(&self.e);
        let outer = Tensor::new(&Correspondence::from_module(&e_range), f_theta.product())?;
        let product = outer.product().right_module();
        if product != self.f {
            return Err(Error::ModuleMismatch(format!(
                "E ⊙ F_ϑ has multiplicities {:?}, F has {:?}",
                product.mults(),
                self.f.mults()
            )));
        }
        let basis_e = self.e.basis::<T>();
        let column_basis = first_column_basis::<T>(&self.e);
        let basis_f = self.f.basis::<T>();
        let mut inputs: Vec<CVec<T>> = Vec::new();
        let mut outputs: Vec<CVec<T>> = Vec::new();
        for x in &column_basis {
            for y in &basis_e {
                let xy = self.apply(&rank_one(x, y)?)?;
                let ys = star(y);
                for z in &basis_f {
                    let w = f_theta.pair(&ys, z)?;
                    inputs.push(outer.pair(&to_range_element(x), &w)?.coords());
                    outputs.push(xy.apply(z)?.coords());
                }
            }
        }
        let dim = self.f.dim();
        let (m, fit) = linalg::fit_linear(&linalg::columns(dim, &inputs), &linalg::columns(dim, &outputs))?;
        if fit > T::check_tol() {
            return Err(Error::Inconsistent(fit.as_f64()));
        }
        let unitary = RawModuleMap::new(&product, &self.f, m)?;
        Ok(Reconstruction { rep: self.clone(), outer, unitary })
    }
}

/// The unitary of the reconstruction together with the tensor it lives on.
#[derive(Clone, Debug)]
pub struct Reconstruction<T: Real> {
    rep: StrictRep<T>,
    outer: Tensor<T>,
    unitary: RawModuleMap<T>,
}

impl<T: Real> Reconstruction<T> {
    pub fn unitary(&self) -> &RawModuleMap<T> {
        &self.unitary
    }

    /// `E ⊙ F_ϑ`.
    pub fn tensor(&self) -> &Tensor<T> {
        &self.outer
    }

    /// Max of the isometry defect `‖⟨ux,uy⟩ − ⟨x,y⟩‖` over basis pairs and
    /// the rank deficit indicator (`∞` when `u` is not onto).
    pub fn unitarity_residual(&self) -> Result<T> {
        let id = Automorphism::identity(self.rep.f.algebra());
        let res = crate::genmap::phi_isometry_residual(&self.unitary, &id)?;
        if self.unitary.rank() != self.rep.f.dim() {
            return Ok(T::lit(f64::INFINITY));
        }
        Ok(res)
    }

    /// `a⊙id` on `E ⊙ F_ϑ`, fitted from `x⊙w ↦ (ax)⊙w`.
    pub fn amplify(&self, a: &AdjointableOperator<T>) -> Result<RawModuleMap<T>> {
        let module = self.outer.product().right_module();
        let f_theta = self.outer.right();
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for x in self.rep.e.basis::<T>() {
            let ax = a.apply(&x)?;
            for w in f_theta.right_module().basis::<T>() {
                inputs.push(self.outer.pair(&to_range_element(&x), &w)?.coords());
                outputs.push(self.outer.pair(&to_range_element(&ax), &w)?.coords());
            }
        }
        let (m, fit) = linalg::fit_linear(
            &linalg::columns(module.dim(), &inputs),
            &linalg::columns(module.dim(), &outputs),
        )?;
        if fit > T::check_tol() {
            return Err(Error::Inconsistent(fit.as_f64()));
        }
        RawModuleMap::new(&module, &module, m)
    }

    /// `max ‖ϑ(a) − u(a⊙id)u*‖` over the matrix units of `B^a(E)`.
    pub fn intertwining_residual(&self) -> Result<T> {
        let e = &self.rep.e;
        let k = e.operator_algebra();
        let u = self.unitary.matrix();
        let mut worst = T::zero();
        for unit in k.matrix_units::<T>() {
            let a = AdjointableOperator::from_algebra_element(e, &unit)?;
            let lhs = RawModuleMap::from_operator(&self.rep.apply(&a)?);
            let amp = self.amplify(&a)?;
            let rhs = RawModuleMap::new(&self.rep.f, &self.rep.f, u * amp.matrix() * u.adjoint())?;
            worst = worst.max(lhs.distance(&rhs));
        }
        Ok(worst)
    }
}

/// `E_ϑ` for an automorphism `ϑ` of `B^a(E)`, as a correspondence over `B_E`.
pub fn e_theta<T: Real>(e: &HilbertModule, theta: &Automorphism<T>) -> Result<Correspondence<T>> {
    let rep = StrictRep::from_automorphism(e, theta)?;
    let t = rep.multiplicity_correspondence()?;
    restrict_to_support(e, t.product())
}

/// Drops the (empty) target blocks outside the support.
pub fn restrict_to_support<T: Real>(e: &HilbertModule, c: &Correspondence<T>) -> Result<Correspondence<T>> {
    let support = e.support();
    let range = e.range_ideal();
    if c.target() != e.algebra() {
        return Err(Error::AlgebraMismatch("correspondence does not land in the module's algebra".into()));
    }
    for j in 0..e.algebra().num_blocks() {
        if !support.contains(&j) && c.rows(j) > 0 {
            return Err(Error::RangeNotInvariant);
        }
    }
    let mult = c.mult().iter().map(|row| support.iter().map(|&j| row[j]).collect()).collect();
    let conj = support.iter().map(|&j| c.conjugators()[j].clone()).collect();
    Correspondence::new(c.source(), &range.algebra, mult)?.with_conjugators(conj)
}

/// The class `[E_ϑ] ∈ Pic(B_E)`.
pub fn straut_class<T: Real>(e: &HilbertModule, theta: &Automorphism<T>) -> Result<PicardElement> {
    PicardElement::of(&e_theta(e, theta)?)
}

/// `{τ : m∘τ = m}` on the support, i.e. the image of
/// `straut(B^a(E))/inn(B^a(E))` in `Pic(B_E)`.
pub fn straut_image_in_picard(e: &HilbertModule) -> PermGroup {
    let k = e.operator_algebra();
    PermGroup::from_elements(k.num_blocks(), crate::algebra::enumerate_outer_classes(&k))
}

/// `x*⊙y ↦ ⟨ux,y⟩` from `E_{ϑ_u}` to `_φ(B_E)`, with its checks.
#[derive(Clone, Debug)]
pub struct PairingIsomorphism<T: Real> {
    pub source: Correspondence<T>,
    pub target: Correspondence<T>,
    pub map: RawModuleMap<T>,
    pub isometry_residual: T,
    pub left_linearity_residual: T,
    pub surjective: bool,
}

impl<T: Real> PairingIsomorphism<T> {
    pub fn is_bilinear_unitary(&self) -> bool {
        self.surjective
            && self.isometry_residual <= T::check_tol()
            && self.left_linearity_residual <= T::check_tol()
    }
}

pub fn pairing_isomorphism<T: Real>(u: &GeneralizedUnitary<T>) -> Result<PairingIsomorphism<T>> {
    let e = u.module();
    let theta = theta_from_gen_unitary(u)?;
    let rep = StrictRep::from_automorphism(e, &theta)?;
    let tensor = rep.multiplicity_correspondence()?;
    let source = restrict_to_support(e, tensor.product())?;
    let phi_e = induced_automorphism(&u.to_raw())?;
    let target = Correspondence::from_automorphism(&phi_e);

    let src_mod = source.right_module();
    let tgt_mod = target.right_module();
    let support = e.support();
    let restrict = |z: &ModuleElement<T>| -> ModuleElement<T> {
        let blocks = support.iter().map(|&j| z.block(j).clone()).collect();
        ModuleElement::new(&src_mod, blocks).expect("support blocks")
    };
    let range = e.range_ideal();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let basis = e.basis::<T>();
    for x in &basis {
        let ux = u.apply(x)?;
        for y in &basis {
            inputs.push(restrict(&tensor.pair(&star(x), y)?).coords());
            let ip = range.restrict(&ux.inner(y)?);
            outputs.push(ModuleElement::new(&tgt_mod, ip.into_blocks())?.coords());
        }
    }
    let (m, fit) =
        linalg::fit_linear(&linalg::columns(src_mod.dim(), &inputs), &linalg::columns(tgt_mod.dim(), &outputs))?;
    if fit > T::check_tol() {
        return Err(Error::Inconsistent(fit.as_f64()));
    }
    let map = RawModuleMap::new(&src_mod, &tgt_mod, m)?;

    let id = Automorphism::identity(&range.algebra);
    let isometry_residual = crate::genmap::phi_isometry_residual(&map, &id)?;
    let mut left = T::zero();
    for b in range.algebra.matrix_units::<T>() {
        for xi in src_mod.basis::<T>() {
            let lhs = map.apply(&source.left_action(&b, &xi)?)?;
            let rhs = target.left_action(&b, &map.apply(&xi)?)?;
            left = left.max(lhs.distance(&rhs));
        }
    }
    let surjective = map.rank() == tgt_mod.dim();
    Ok(PairingIsomorphism { source, target, map, isometry_residual, left_linearity_residual: left, surjective })
}

/// The Picard class of `E_{ϑ_u}` and of `_φ(B_E)`; they must coincide.
pub fn pairing_classes<T: Real>(u: &GeneralizedUnitary<T>) -> Result<(PicardElement, PicardElement)> {
    let p = pairing_isomorphism(u)?;
    Ok((PicardElement::of(&p.source)?, PicardElement::of(&p.target)?))
}

/// Which target block the central projection of source block `s` acts on.
pub fn central_support<T: Real>(c: &Correspondence<T>, s: usize) -> Vec<usize> {
    let p: AlgebraElement<T> = c.source().central_projection(s);
    (0..c.target().num_blocks())
        .filter(|&j| linalg::spectral_norm(&c.left_block(&p, j)) > T::check_tol())
        .collect()
}

/// Multiplicity matrix `P_τ` expected for `E_ϑ` when `ϑ` has perm `τ`.
pub fn expected_class_matrix(tau: &Perm) -> MultMatrix {
    permutation_matrix(tau)
}

/// Basis vectors supported in the first column of their block; together
/// with the right action they generate `E`.
fn first_column_basis<T: Real>(e: &HilbertModule) -> Vec<ModuleElement<T>> {
    let mut out = Vec::new();
    for (i, (m, n)) in e.shapes().into_iter().enumerate() {
        for r in 0..m {
            let mut blocks: Vec<CMat<T>> = e.shapes().iter().map(|&(mm, nn)| CMat::zeros(mm, nn)).collect();
            blocks[i] = linalg::matrix_unit(m, n, r, 0);
            out.push(ModuleElement::new(e, blocks).expect("shape"));
        }
    }
    out
}
