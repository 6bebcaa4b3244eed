//! The group `Φ_E` of automorphism classes admitting a unitary on `E`, its
//! place inside the Picard group of the range ideal, and sections with their
//! cocycles.
//!
//! Groups are materialized through their finite permutation skeleton on the
//! support; the continuous (inner) parts are sampled where a statement needs
//! them.

use crate::algebra::{AlgebraElement, Automorphism};
use crate::corr::{picard_group, PicardElement};
use crate::error::{Error, Result};
use crate::genmap::{
    exists_phi_unitary, induced_automorphism, linking_algebra, quasi_inner_unitary, unitary_quotient_witness,
    GeneralizedUnitary,
};
use crate::hilbmod::{AdjointableOperator, HilbertModule};
use crate::linalg;
use crate::perm::{Perm, PermGroup};
use crate::reptheory::{conjugate_operator, straut_class, straut_image_in_picard, theta_from_gen_unitary};
use crate::scalar::{CMat, Real};
use rand::Rng;

/// Extends a permutation of the support by the identity elsewhere.
pub fn extend_perm(e: &HilbertModule, tau: &Perm) -> Perm {
    let support = e.support();
    let mut images: Vec<usize> = (0..e.algebra().num_blocks()).collect();
    for (s, &i) in support.iter().enumerate() {
        images[i] = support[tau.apply(s)];
    }
    Perm::from_images(images).expect("support is permuted within itself")
}

/// `σ` restricted to the support, if the support is invariant.
pub fn restrict_perm(e: &HilbertModule, sigma: &Perm) -> Option<Perm> {
    let support = e.support();
    let images = support
        .iter()
        .map(|&i| support.iter().position(|&j| j == sigma.apply(i)))
        .collect::<Option<Vec<_>>>()?;
    Perm::from_images(images).ok()
}

/// Extends an automorphism of `B_E` to `B`, acting trivially off the support.
pub fn extend_automorphism<T: Real>(e: &HilbertModule, phi_e: &Automorphism<T>) -> Result<Automorphism<T>> {
    let range = e.range_ideal();
    if phi_e.algebra() != &range.algebra {
        return Err(Error::AlgebraMismatch("not an automorphism of the range ideal".into()));
    }
    let support = e.support();
    let mut conj: Vec<CMat<T>> = e.algebra().blocks().iter().map(|&n| CMat::identity(n, n)).collect();
    for (s, &i) in support.iter().enumerate() {
        conj[i] = phi_e.conjugators()[s].clone();
    }
    Automorphism::new(e.algebra(), extend_perm(e, phi_e.perm()), conj)
}

/// The automorphism of the linking algebra with corners `φ`, `u`, `ϑ_u`:
/// permutation `σ`, conjugators `diag(wᵢ, Wᵢ)`.
pub fn extend_to_linking<T: Real>(u: &GeneralizedUnitary<T>) -> Result<Automorphism<T>> {
    let e = u.module();
    let conj = (0..e.algebra().num_blocks())
        .map(|i| {
            let w = &u.phi().conjugators()[i];
            let big = &u.block_unitaries()[i];
            linalg::block_diag(&[w.clone(), big.clone()])
        })
        .collect();
    Automorphism::new(&linking_algebra(e), u.perm().clone(), conj)
}

#[derive(Clone, Debug)]
pub struct Extendability<T: Real> {
    pub extension: Automorphism<T>,
    pub linking: Option<Automorphism<T>>,
}

impl<T: Real> Extendability<T> {
    pub fn in_phi_e(&self) -> bool {
        self.linking.is_some()
    }
}

/// An automorphism of `B_E` lies in `Φ_E` iff it extends to `B` and the
/// extension extends further to the linking algebra.
pub fn extendability<T: Real>(e: &HilbertModule, phi_e: &Automorphism<T>) -> Result<Extendability<T>> {
    let extension = extend_automorphism(e, phi_e)?;
    let linking = match exists_phi_unitary(e, &extension)?.witness() {
        Some(u) => Some(extend_to_linking(u)?),
        None => None,
    };
    Ok(Extendability { extension, linking })
}

/// `Φ_E` through its skeleton `{τ on S : n∘τ = n, m∘τ = m}`, each element
/// carrying the normal-form witness of its pure permutation.
#[derive(Clone, Debug)]
pub struct PhiE<T: Real> {
    module: HilbertModule,
    skeleton: PermGroup,
    witnesses: Vec<GeneralizedUnitary<T>>,
}

pub fn compute_phi_e<T: Real>(e: &HilbertModule) -> Result<PhiE<T>> {
    let support = e.support();
    let n: Vec<usize> = support.iter().map(|&i| e.algebra().block(i)).collect();
    let m: Vec<usize> = support.iter().map(|&i| e.mults()[i]).collect();
    let perms: Vec<Perm> =
        Perm::all(support.len()).into_iter().filter(|p| p.preserves(&n) && p.preserves(&m)).collect();
    let skeleton = PermGroup::from_elements(support.len(), perms);
    let witnesses = skeleton
        .elements()
        .iter()
        .map(|tau| {
            let phi = Automorphism::permutation(e.algebra(), extend_perm(e, tau))?;
            exists_phi_unitary(e, &phi)?
                .witness()
                .cloned()
                .ok_or_else(|| Error::NotGeneralizedUnitary(format!("no unitary for {tau}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhiE { module: e.clone(), skeleton, witnesses })
}

impl<T: Real> PhiE<T> {
    pub fn module(&self) -> &HilbertModule {
        &self.module
    }

    pub fn skeleton(&self) -> &PermGroup {
        &self.skeleton
    }

    pub fn order(&self) -> usize {
        self.skeleton.order()
    }

    pub fn witness(&self, tau: &Perm) -> Option<&GeneralizedUnitary<T>> {
        let idx = self.skeleton.elements().iter().position(|p| p == tau)?;
        Some(&self.witnesses[idx])
    }

    /// A random representative of the class over `τ`: the permutation
    /// twisted by Haar conjugators, with a random witness.
    pub fn random_element<R: Rng + ?Sized>(&self, tau: &Perm, rng: &mut R) -> Result<GeneralizedUnitary<T>> {
        let e = &self.module;
        let conj = e.algebra().blocks().iter().map(|&n| linalg::random_unitary(rng, n)).collect();
        let phi = Automorphism::new(e.algebra(), extend_perm(e, tau), conj)?;
        GeneralizedUnitary::random(e, phi, rng)
    }
}

/// Everything the inclusion chain needs, with each verdict exact on
/// permutations.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionChain {
    pub phi_e: PermGroup,
    /// Classes with trivial Picard class, computed through `E_{ϑ_u}`.
    pub kernel: PermGroup,
    /// Classes inner on `B_E`, computed through the induced automorphism.
    pub gin_intersection: PermGroup,
    /// Image of `Φ_E` in `Pic(B_E)`.
    pub quotient: PermGroup,
    pub straut: PermGroup,
    pub picard: PermGroup,
    pub kernel_is_normal: bool,
    /// The Picard class via `E_{ϑ_u}` and via `_φ(B_E)` agree for every sample.
    pub routes_agree: bool,
}

impl InclusionChain {
    pub fn kernel_matches(&self) -> bool {
        self.kernel == self.gin_intersection
    }

    pub fn first_inclusion(&self) -> bool {
        self.quotient.is_subset_of(&self.straut)
    }

    pub fn second_inclusion(&self) -> bool {
        self.straut.is_subset_of(&self.picard)
    }

    pub fn inclusions_hold(&self) -> bool {
        self.kernel_matches()
            && self.kernel_is_normal
            && self.routes_agree
            && self.first_inclusion()
            && self.second_inclusion()
            && self.quotient.is_group()
    }
}

/// Runs the chain `Φ_E/(Φ_E ∩ gin(B_E)) ⊂ straut/inn ⊂ Pic(B_E)` on `E`.
///
/// Every skeleton element is sampled twice: once as the canonical witness
/// and once twisted by random conjugators; an extra random inner class is
/// added so the kernel is exercised on non-trivial data.
pub fn inclusion_chain<T: Real, R: Rng + ?Sized>(e: &HilbertModule, rng: &mut R) -> Result<InclusionChain> {
    let phi_e = compute_phi_e::<T>(e)?;
    let degree = e.support().len();
    let range = e.range_ideal();
    if e.is_zero() {
        let trivial = PermGroup::trivial(0);
        return Ok(InclusionChain {
            phi_e: trivial.clone(),
            kernel: trivial.clone(),
            gin_intersection: trivial.clone(),
            quotient: trivial.clone(),
            straut: trivial.clone(),
            picard: trivial,
            kernel_is_normal: true,
            routes_agree: true,
        });
    }
    let mut samples: Vec<(Perm, GeneralizedUnitary<T>)> = Vec::new();
    for tau in phi_e.skeleton().elements() {
        samples.push((tau.clone(), phi_e.witness(tau).expect("skeleton element").clone()));
        samples.push((tau.clone(), phi_e.random_element(tau, rng)?));
    }
    let v = e.algebra().random_unitary::<T, _>(rng);
    samples.push((Perm::identity(degree), quasi_inner_unitary(e, &v)?));

    let mut kernel = Vec::new();
    let mut gin = Vec::new();
    let mut image = Vec::new();
    let mut routes_agree = true;
    for (tau, u) in &samples {
        let theta = theta_from_gen_unitary(u)?;
        let class = straut_class(e, &theta)?;
        let induced = induced_automorphism(&u.to_raw())?;
        let aut_class = PicardElement::from_automorphism(&induced);
        routes_agree &= class == aut_class && class.perm() == tau;
        if class.perm().is_identity() {
            kernel.push(tau.clone());
        }
        if induced.is_inner() {
            gin.push(tau.clone());
        }
        image.push(class.perm().clone());
    }
    let kernel = PermGroup::from_elements(degree, kernel);
    let gin_intersection = PermGroup::from_elements(degree, gin);
    let kernel_is_normal = kernel.is_normal_in(phi_e.skeleton());
    Ok(InclusionChain {
        phi_e: phi_e.skeleton().clone(),
        kernel,
        gin_intersection,
        quotient: PermGroup::from_elements(degree, image),
        straut: straut_image_in_picard(e),
        picard: picard_group(&range.algebra)?.perm_group(),
        kernel_is_normal,
        routes_agree,
    })
}

/// Image of `v ↦ u_v` in `Φ_E` for a full module: only trivial-perm classes.
pub fn gin_image<T: Real>(e: &HilbertModule, samples: &[AlgebraElement<T>]) -> Result<PermGroup> {
    if !e.is_full() {
        return Err(Error::NotFull);
    }
    let degree = e.support().len();
    let perms = samples
        .iter()
        .map(|v| {
            let u = quasi_inner_unitary(e, v)?;
            Ok(induced_automorphism(&u.to_raw())?.perm().clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut group = PermGroup::from_elements(degree, perms);
    if group.order() == 0 {
        group = PermGroup::trivial(degree);
    }
    Ok(group)
}

/// A choice `τ ↦ γ(τ)` of unitaries over the skeleton of `Φ_E`.
#[derive(Clone, Debug)]
pub struct Section<T: Real> {
    skeleton: PermGroup,
    elements: Vec<GeneralizedUnitary<T>>,
}

/// `γ(τ)` = the pure permutation with `W = 1`; an exact homomorphism.
///
/// The existence of such a splitting is a property of this finite-dimensional
/// model. Whether `Φ_E → U^gen(E)` splits for general Hilbert modules is open,
/// and nothing here decides it.
pub fn canonical_section<T: Real>(phi_e: &PhiE<T>) -> Section<T> {
    Section { skeleton: phi_e.skeleton.clone(), elements: phi_e.witnesses.clone() }
}

impl<T: Real> Section<T> {
    pub fn skeleton(&self) -> &PermGroup {
        &self.skeleton
    }

    pub fn get(&self, tau: &Perm) -> Option<&GeneralizedUnitary<T>> {
        let idx = self.skeleton.elements().iter().position(|p| p == tau)?;
        Some(&self.elements[idx])
    }

    /// A new section `τ ↦ f(τ, γ(τ))`.
    pub fn map(&self, mut f: impl FnMut(&Perm, &GeneralizedUnitary<T>) -> Result<GeneralizedUnitary<T>>) -> Result<Self> {
        let elements = self
            .skeleton
            .elements()
            .iter()
            .zip(&self.elements)
            .map(|(p, g)| f(p, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Section { skeleton: self.skeleton.clone(), elements })
    }

    /// `max ‖γ(τ₁)γ(τ₂) − γ(τ₁τ₂)‖` over all pairs.
    pub fn homomorphism_defect(&self) -> Result<T> {
        let mut worst = T::zero();
        for a in self.skeleton.elements() {
            for b in self.skeleton.elements() {
                let lhs = self.get(a).expect("member").compose(self.get(b).expect("member"))?;
                let rhs = self.get(&a.compose(b)).expect("closed");
                worst = worst.max(lhs.to_raw().distance(&rhs.to_raw()));
            }
        }
        Ok(worst)
    }

    pub fn is_homomorphism(&self) -> Result<bool> {
        Ok(self.homomorphism_defect()? <= T::check_tol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CocycleReport {
    pub homomorphism: bool,
    pub cocycle: bool,
    pub homomorphism_defect: f64,
    pub cocycle_defect: f64,
}

impl CocycleReport {
    pub fn agree(&self) -> bool {
        self.homomorphism == self.cocycle
    }
}

/// Compares a second section `γ′` with a homomorphic `γ`:
/// `v(τ) = γ′(τ)γ(τ)*`, `α_τ = γ(τ) • γ(τ)*`, and the identity
/// `v(τ₁)α_{τ₁}(v(τ₂)) = v(τ₁τ₂)`.
pub fn check_cocycle<T: Real>(gamma: &Section<T>, gamma2: &Section<T>) -> Result<CocycleReport> {
    if gamma.skeleton != gamma2.skeleton {
        return Err(Error::IncompatibleClasses);
    }
    let elems = gamma.skeleton.elements();
    let v: Vec<AdjointableOperator<T>> = elems
        .iter()
        .map(|p| unitary_quotient_witness(gamma2.get(p).expect("member"), gamma.get(p).expect("member")))
        .collect::<Result<_>>()?;
    let idx = |p: &Perm| elems.iter().position(|q| q == p).expect("closed");
    let mut worst = T::zero();
    for (i, a) in elems.iter().enumerate() {
        for (j, b) in elems.iter().enumerate() {
            let moved = conjugate_operator(gamma.get(a).expect("member"), &v[j])?;
            let lhs = v[i].compose(&moved)?;
            worst = worst.max(lhs.distance(&v[idx(&a.compose(b))]));
        }
    }
    let hom = gamma2.homomorphism_defect()?;
    Ok(CocycleReport {
        homomorphism: hom <= T::check_tol(),
        cocycle: worst <= T::check_tol(),
        homomorphism_defect: hom.as_f64(),
        cocycle_defect: worst.as_f64(),
    })
}

/// Splits a generalized unitary as `w · u_v · γ(τ)` with `w` ordinary,
/// `u_v` quasi-inner and `γ(τ)` the canonical section element.
pub fn decompose<T: Real>(
    phi_e: &PhiE<T>,
    u: &GeneralizedUnitary<T>,
) -> Result<(AdjointableOperator<T>, AlgebraElement<T>, Perm)> {
    let e = phi_e.module();
    let tau = restrict_perm(e, u.perm()).ok_or(Error::RangeNotInvariant)?;
    let gamma = phi_e.witness(&tau).ok_or(Error::IncompatibleClasses)?;
    // Ad v ∘ τ = φ: v_{σ(i)} = wᵢ
    let sigma = u.perm();
    let mut blocks = vec![CMat::<T>::zeros(0, 0); e.algebra().num_blocks()];
    for i in 0..blocks.len() {
        blocks[sigma.apply(i)] = u.phi().conjugators()[i].clone();
    }
    let v = AlgebraElement::new(e.algebra(), blocks)?;
    let base = quasi_inner_unitary(e, &v)?.compose(gamma)?;
    let w = unitary_quotient_witness(u, &base)?;
    Ok((w, v, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MultiMatrixAlgebra;
    use crate::genmap::LinkingHom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn module(b: &[usize], m: &[usize]) -> HilbertModule {
        HilbertModule::new(&MultiMatrixAlgebra::new(b.to_vec()).unwrap(), m.to_vec()).unwrap()
    }

    #[test]
    fn phi_e_examples() {
        assert_eq!(compute_phi_e::<f64>(&module(&[1, 1], &[2, 1])).unwrap().order(), 1);
        let b = module(&[1, 1, 2], &[1, 1, 2]);
        assert_eq!(compute_phi_e::<f64>(&b).unwrap().order(), 2);
        let g = compute_phi_e::<f64>(&module(&[1, 1], &[3, 3])).unwrap();
        assert!(g.skeleton().contains(&Perm::from_images(vec![1, 0]).unwrap()));
    }

    #[test]
    fn inclusion_chain_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let r = inclusion_chain::<f64, _>(&module(&[1, 1], &[2, 1]), &mut rng).unwrap();
        assert!(r.inclusions_hold());
        assert_eq!((r.quotient.order(), r.straut.order(), r.picard.order()), (1, 1, 2));

        let r = inclusion_chain::<f64, _>(&module(&[1, 2], &[1, 1]), &mut rng).unwrap();
        assert!(r.inclusions_hold());
        assert_eq!((r.quotient.order(), r.straut.order(), r.picard.order()), (1, 2, 2));

        let r = inclusion_chain::<f64, _>(&module(&[2, 2], &[2, 2]), &mut rng).unwrap();
        assert!(r.inclusions_hold());
        assert_eq!((r.quotient.order(), r.straut.order(), r.picard.order()), (2, 2, 2));

        let r = inclusion_chain::<f64, _>(&module(&[1, 1], &[0, 0]), &mut rng).unwrap();
        assert!(r.inclusions_hold());
    }

    #[test]
    fn extension_examples() {
        let e = module(&[1, 2, 2], &[2, 0, 1]);
        let range = e.range_ideal();
        let id = Automorphism::<f64>::identity(&range.algebra);
        assert!(extend_automorphism(&e, &id).unwrap().action_eq(&Automorphism::identity(e.algebra())));
        assert!(extendability(&e, &id).unwrap().in_phi_e());

        let e = module(&[1, 1], &[3, 3]);
        let flip = Automorphism::<f64>::permutation(&e.range_ideal().algebra, Perm::from_images(vec![1, 0]).unwrap())
            .unwrap();
        let p = extendability(&e, &flip).unwrap();
        let lin = p.linking.unwrap();
        let u = exists_phi_unitary(&e, &p.extension).unwrap().witness().unwrap().clone();
        let lh = LinkingHom::new(&u.to_raw(), u.phi()).unwrap();
        for unit in linking_algebra(&e).matrix_units::<f64>() {
            assert!(lin.apply(&unit).unwrap().distance(&lh.apply(&unit).unwrap()) < 1e-10);
        }

        let e = module(&[1, 1], &[2, 1]);
        let flip = Automorphism::<f64>::permutation(e.algebra(), Perm::from_images(vec![1, 0]).unwrap()).unwrap();
        assert!(!extendability(&e, &flip).unwrap().in_phi_e());
    }

    #[test]
    fn gin_image_is_trivial_perm_and_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let e = module(&[1, 1, 2], &[2, 2, 1]);
        let vs: Vec<_> = (0..4).map(|_| e.algebra().random_unitary::<f64, _>(&mut rng)).collect();
        let g = gin_image(&e, &vs).unwrap();
        assert_eq!(g.order(), 1);
        let phi = compute_phi_e::<f64>(&e).unwrap();
        assert!(g.is_normal_in(phi.skeleton()));
        assert!(matches!(gin_image(&module(&[1, 1], &[1, 0]), &vs[..0]), Err(Error::NotFull)));
    }

    #[test]
    fn cocycle_variants() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let e = module(&[1, 1, 1], &[2, 2, 2]);
        let phi_e = compute_phi_e::<f64>(&e).unwrap();
        let gamma = canonical_section(&phi_e);
        assert!(gamma.is_homomorphism().unwrap());
        let same = check_cocycle(&gamma, &gamma).unwrap();
        assert!(same.homomorphism && same.cocycle);

        let w = AdjointableOperator::random_unitary(&e, &mut rng);
        let conj = gamma.map(|_, g| g.left_mul(&w)?.compose(&GeneralizedUnitary::identity(&e).left_mul(&w.adjoint())?)).unwrap();
        let r = check_cocycle(&gamma, &conj).unwrap();
        assert!(r.agree() && r.homomorphism);

        let constant = gamma.map(|_, g| g.left_mul(&w)).unwrap();
        let r = check_cocycle(&gamma, &constant).unwrap();
        assert!(r.agree() && !r.homomorphism);
    }

    #[test]
    fn decomposition_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let e = module(&[2, 2, 1], &[1, 1, 3]);
        let phi_e = compute_phi_e::<f64>(&e).unwrap();
        for tau in phi_e.skeleton().elements() {
            let u = phi_e.random_element(tau, &mut rng).unwrap();
            let (w, v, t) = decompose(&phi_e, &u).unwrap();
            assert_eq!(&t, tau);
            let rebuilt = quasi_inner_unitary(&e, &v).unwrap().compose(phi_e.witness(tau).unwrap()).unwrap().left_mul(&w).unwrap();
            assert!(rebuilt.to_raw().distance(&u.to_raw()) < 1e-9);
        }
    }
}
