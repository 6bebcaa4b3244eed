//! Property tests over random shapes and seeds.

use genunitary::algebra::{Automorphism, MultiMatrixAlgebra};
use genunitary::corr::{Correspondence, PicardElement, Tensor};
use genunitary::genmap::{
    check_phi_isometry, check_phi_linear, check_phi_unitary, exists_phi_unitary, quasi_inner_unitary,
    GeneralizedUnitary,
};
use genunitary::groups::{canonical_section, compute_phi_e, decompose, inclusion_chain};
use genunitary::hilbmod::{AdjointableOperator, HilbertModule};
use genunitary::reptheory::{straut_class, theta_from_gen_unitary, StrictRep};
use genunitary::{Perm, Real};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn shape(max_blocks: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..=max_blocks).prop_flat_map(|k| (prop::collection::vec(1usize..=3, k), prop::collection::vec(0usize..=3, k)))
}

fn full_shape(max_blocks: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..=max_blocks).prop_flat_map(|k| (prop::collection::vec(1usize..=3, k), prop::collection::vec(1usize..=3, k)))
}

fn module(blocks: &[usize], mults: &[usize]) -> HilbertModule {
    HilbertModule::new(&MultiMatrixAlgebra::new(blocks.to_vec()).unwrap(), mults.to_vec()).unwrap()
}

/// A random φ-unitary, with φ drawn among the permutations that admit one.
fn random_unitary(e: &HilbertModule, rng: &mut ChaCha8Rng) -> GeneralizedUnitary<f64> {
    loop {
        let phi = Automorphism::random(e.algebra(), rng);
        if e.mults().iter().enumerate().all(|(i, &m)| e.mults()[phi.perm().apply(i)] == m) {
            return GeneralizedUnitary::random(e, phi, rng).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn automorphisms_are_isometric_star_homomorphisms((blocks, _) in shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = MultiMatrixAlgebra::new(blocks).unwrap();
        let phi = Automorphism::<f64>::random(&b, &mut rng);
        let x = b.random_element::<f64, _>(&mut rng);
        let y = b.random_element::<f64, _>(&mut rng);
        let lhs = phi.apply(&x.multiply(&y).unwrap()).unwrap();
        let rhs = phi.apply(&x).unwrap().multiply(&phi.apply(&y).unwrap()).unwrap();
        prop_assert!(lhs.distance(&rhs) <= TOL);
        prop_assert!(phi.apply(&x.adjoint()).unwrap().distance(&phi.apply(&x).unwrap().adjoint()) <= TOL);
        prop_assert!((phi.apply(&x).unwrap().norm() - x.norm()).abs() <= TOL);
        prop_assert!(phi.compose(&phi.inverse()).unwrap().action_eq(&Automorphism::identity(&b)));
    }

    #[test]
    fn inner_automorphisms_compose_to_inner((blocks, _) in shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = MultiMatrixAlgebra::new(blocks).unwrap();
        let v = Automorphism::inner(&b.random_unitary::<f64, _>(&mut rng)).unwrap();
        let w = Automorphism::inner(&b.random_unitary::<f64, _>(&mut rng)).unwrap();
        prop_assert!(v.compose(&w).unwrap().is_inner());
        let phi = Automorphism::<f64>::random(&b, &mut rng);
        let conj = phi.compose(&v).unwrap().compose(&phi.inverse()).unwrap();
        prop_assert!(conj.is_inner());
    }

    #[test]
    fn inner_product_axioms((blocks, mults) in shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let x = e.random_element::<f64, _>(&mut rng);
        let y = e.random_element::<f64, _>(&mut rng);
        let b = e.algebra().random_element::<f64, _>(&mut rng);
        let xy = x.inner(&y).unwrap();
        prop_assert!(xy.norm() <= x.norm() * y.norm() + TOL);
        prop_assert!(xy.adjoint().distance(&y.inner(&x).unwrap()) <= TOL);
        prop_assert!(x.inner(&y.right_mul(&b).unwrap()).unwrap().distance(&xy.multiply(&b).unwrap()) <= TOL);
        let a = AdjointableOperator::<f64>::random(&e, &e, &mut rng);
        let lhs = a.apply(&x).unwrap().inner(&y).unwrap();
        let rhs = x.inner(&a.adjoint().apply(&y).unwrap()).unwrap();
        prop_assert!(lhs.distance(&rhs) <= TOL);
    }

    #[test]
    fn tensor_is_associative_on_multiplicities(
        a in prop::collection::vec(1usize..=2, 1..=2),
        b in prop::collection::vec(1usize..=2, 1..=2),
        c in prop::collection::vec(1usize..=2, 1..=2),
        d in prop::collection::vec(1usize..=2, 1..=2),
        seed: u64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let algs: Vec<MultiMatrixAlgebra> = [a, b, c, d].into_iter().map(|v| MultiMatrixAlgebra::new(v).unwrap()).collect();
        let corr = |s: &MultiMatrixAlgebra, t: &MultiMatrixAlgebra, rng: &mut ChaCha8Rng| {
            let mu = (0..s.num_blocks()).map(|_| (0..t.num_blocks()).map(|_| rng.random_range(0..=2)).collect()).collect();
            Correspondence::<f64>::new(s, t, mu).unwrap()
        };
        let m = corr(&algs[0], &algs[1], &mut rng);
        let n = corr(&algs[1], &algs[2], &mut rng);
        let p = corr(&algs[2], &algs[3], &mut rng);
        let left = Tensor::new(Tensor::new(&m, &n).unwrap().product(), &p).unwrap();
        let right = Tensor::new(&m, Tensor::new(&n, &p).unwrap().product()).unwrap();
        prop_assert_eq!(left.product().mult(), right.product().mult());
    }

    #[test]
    fn tensor_inner_product_compatibility((blocks, mults) in full_shape(2), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let phi = Automorphism::<f64>::random(e.algebra(), &mut rng);
        let m = Correspondence::from_module(&e);
        let n = Correspondence::from_automorphism(&phi);
        let t = Tensor::new(&m, &n).unwrap();
        let (x, x2) = (m.right_module().random_element(&mut rng), m.right_module().random_element(&mut rng));
        let (y, y2) = (n.right_module().random_element(&mut rng), n.right_module().random_element(&mut rng));
        let lhs = t.pair(&x, &y).unwrap().inner(&t.pair(&x2, &y2).unwrap()).unwrap();
        let rhs = y.inner(&n.left_action(&x.inner(&x2).unwrap(), &y2).unwrap()).unwrap();
        prop_assert!(lhs.distance(&rhs) <= TOL);
    }

    #[test]
    fn picard_classes_form_a_group(blocks in prop::collection::vec(1usize..=3, 1..=4), i: u8, j: u8) {
        let b = MultiMatrixAlgebra::new(blocks).unwrap();
        let all = Perm::all(b.num_blocks());
        let p = PicardElement::new(&b, all[i as usize % all.len()].clone()).unwrap();
        let q = PicardElement::new(&b, all[j as usize % all.len()].clone()).unwrap();
        prop_assert_eq!(p.tensor(&p.inverse()), PicardElement::identity(&b));
        prop_assert_eq!(p.tensor(&q).tensor(&p), p.tensor(&q.tensor(&p)));
        let product = Tensor::new(&p.correspondence::<f64>(), &q.correspondence::<f64>()).unwrap();
        prop_assert_eq!(PicardElement::of(product.product()).unwrap(), p.tensor(&q));
    }

    #[test]
    fn unitaries_are_isometric_linear_and_compose((blocks, mults) in shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let u1 = random_unitary(&e, &mut rng);
        let u2 = random_unitary(&e, &mut rng);
        prop_assert!(check_phi_isometry(&u1.to_raw(), u1.phi()).unwrap());
        prop_assert!(check_phi_linear(&u1.to_raw(), u1.phi()).unwrap());
        let u = u1.compose(&u2).unwrap();
        prop_assert!(check_phi_unitary(&u.to_raw(), &u1.phi().compose(u2.phi()).unwrap()).unwrap());
        let back = u1.compose(&u1.inverse()).unwrap();
        prop_assert!(back.to_raw().distance(&genunitary::genmap::RawModuleMap::identity(&e)) <= TOL);
    }

    #[test]
    fn existence_matches_the_multiplicity_criterion((blocks, mults) in shape(4), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let phi = Automorphism::<f64>::random(e.algebra(), &mut rng);
        let invariant = (0..mults.len()).all(|i| mults[phi.perm().apply(i)] == mults[i]);
        let verdict = exists_phi_unitary(&e, &phi).unwrap();
        prop_assert_eq!(verdict.exists(), invariant);
        if let Some(u) = verdict.witness() {
            prop_assert!(check_phi_unitary(&u.to_raw(), &phi).unwrap());
        }
    }

    #[test]
    fn quasi_inner_unitaries_are_homomorphic((blocks, mults) in shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let v = e.algebra().random_unitary::<f64, _>(&mut rng);
        let w = e.algebra().random_unitary::<f64, _>(&mut rng);
        let uv = quasi_inner_unitary(&e, &v).unwrap();
        prop_assert!(check_phi_unitary(&uv.to_raw(), &Automorphism::inner(&v).unwrap()).unwrap());
        let uvw = quasi_inner_unitary(&e, &v.multiply(&w).unwrap()).unwrap();
        let prod = uv.compose(&quasi_inner_unitary(&e, &w).unwrap()).unwrap();
        prop_assert!(uvw.to_raw().distance(&prod.to_raw()) <= TOL);
    }

    #[test]
    fn reconstruction_of_automorphic_representations((blocks, mults) in full_shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let theta = Automorphism::<f64>::random(&e.operator_algebra(), &mut rng);
        let r = StrictRep::from_automorphism(&e, &theta).unwrap().reconstruction().unwrap();
        prop_assert!(r.unitarity_residual().unwrap() <= TOL);
        prop_assert!(r.intertwining_residual().unwrap() <= TOL);
    }

    #[test]
    fn class_map_is_contravariant((blocks, mults) in full_shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let u1 = random_unitary(&e, &mut rng);
        let u2 = random_unitary(&e, &mut rng);
        let class = |u: &GeneralizedUnitary<f64>| straut_class(&e, &theta_from_gen_unitary(u).unwrap()).unwrap();
        prop_assert_eq!(class(&u1.compose(&u2).unwrap()), class(&u2).tensor(&class(&u1)));
    }

    #[test]
    fn section_and_decomposition((blocks, mults) in shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let phi_e = compute_phi_e::<f64>(&e).unwrap();
        prop_assert!(canonical_section(&phi_e).is_homomorphism().unwrap());
        let tau = phi_e.skeleton().elements()[rng.random_range(0..phi_e.order())].clone();
        let u = phi_e.random_element(&tau, &mut rng).unwrap();
        let (w, v, t) = decompose(&phi_e, &u).unwrap();
        prop_assert_eq!(&t, &tau);
        let gamma = phi_e.witness(&t).unwrap();
        let rebuilt = quasi_inner_unitary(&e, &v).unwrap().compose(gamma).unwrap().left_mul(&w).unwrap();
        prop_assert!(rebuilt.to_raw().distance(&u.to_raw()) <= TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn inclusion_chain_holds((blocks, mults) in shape(4), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = inclusion_chain::<f64, _>(&module(&blocks, &mults), &mut rng).unwrap();
        prop_assert!(r.inclusions_hold(), "{:?}", r);
    }

    #[test]
    fn single_precision_automorphisms((blocks, _) in shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = MultiMatrixAlgebra::new(blocks).unwrap();
        let phi = Automorphism::<f32>::random(&b, &mut rng);
        let x = b.random_element::<f32, _>(&mut rng);
        let y = b.random_element::<f32, _>(&mut rng);
        let lhs = phi.apply(&x.multiply(&y).unwrap()).unwrap();
        let rhs = phi.apply(&x).unwrap().multiply(&phi.apply(&y).unwrap()).unwrap();
        prop_assert!(lhs.distance(&rhs) <= f32::check_tol());
    }

    #[test]
    fn single_precision_unitaries((blocks, mults) in shape(3), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = module(&blocks, &mults);
        let phi = Automorphism::<f32>::random(e.algebra(), &mut rng);
        if let Some(u) = exists_phi_unitary(&e, &phi).unwrap().witness() {
            let u = GeneralizedUnitary::random(&e, u.phi().clone(), &mut rng).unwrap();
            prop_assert!(check_phi_unitary(&u.to_raw(), &phi).unwrap());
        }
    }
}
