use super::generate::{random_gen_unitary, Instance};
use super::oracles::{module_map_norm, phi_linear_basis, search_phi_unitary};
use super::{Residual, Verdict, TOL};
use crate::algebra::{enumerate_outer_classes, AlgebraElement, Automorphism, MultiMatrixAlgebra};
use crate::corr::{
    associator, correspondences_isomorphic, permutation_matrix, picard_group, Correspondence, PicardElement, Tensor,
    UnitalHom,
};
use crate::error::Result;
use crate::genmap::{
    automorphisms_agree_on, check_phi_isometry, check_phi_linear, check_phi_unitary, exists_phi_unitary, factorize,
    induced_automorphism, phi_adjoint, phi_linear_residual, quasi_inner_unitary, GeneralizedUnitary, Obstruction,
    RawModuleMap, UnitaryExistence,
};
use crate::groups::{canonical_section, check_cocycle, compute_phi_e, decompose, inclusion_chain};
use crate::hilbmod::{modules_isomorphic, AdjointableOperator, HilbertModule};
use crate::linalg;
use crate::perm::{Perm, PermGroup};
use crate::reptheory::{
    e_theta, pairing_classes, pairing_isomorphism, straut_class, straut_image_in_picard, theta_from_gen_unitary,
};
use crate::scalar::CMat;
use crate::Homomorphism;
use nalgebra::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub residuals: Vec<Residual>,
    pub message: Option<String>,
}

impl Outcome {
    fn judge(ok: bool, residuals: &[(&str, f64)]) -> Result<Self> {
        Ok(Outcome {
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            residuals: residuals.iter().map(|&(n, v)| Residual { name: n.to_string(), value: v }).collect(),
            message: None,
        })
    }

    fn within(residuals: &[(&str, f64)]) -> Result<Self> {
        Self::judge(residuals.iter().all(|&(_, v)| v <= TOL), residuals)
    }

    fn skip(reason: &str) -> Result<Self> {
        Ok(Outcome { verdict: Verdict::Skip(reason.to_string()), residuals: Vec::new(), message: None })
    }

    fn with_message(mut self, msg: String) -> Self {
        self.message = Some(msg);
        self
    }
}

pub struct Check {
    pub id: &'static str,
    /// Invariant ids (see `coverage::INVARIANTS`) this check exercises.
    pub covers: &'static [&'static str],
    pub run: fn(&Instance, &mut ChaCha8Rng) -> Result<Outcome>,
}

pub fn registry() -> Vec<Check> {
    macro_rules! check {
        ($id:literal, $f:ident) => {
            Check { id: $id, covers: &[$id], run: $f }
        };
        ($id:literal, $f:ident, [$($c:literal),*]) => {
            Check { id: $id, covers: &[$id, $($c),*], run: $f }
        };
    }
    vec![
        check!("algebra.hom_laws", algebra_hom_laws),
        check!("algebra.action_equality", algebra_action_equality),
        check!("algebra.outer_classes_closed", algebra_outer_classes_closed),
        check!("algebra.inner_kernel", algebra_inner_kernel),
        check!("hilbmod.cauchy_schwarz", hilbmod_cauchy_schwarz),
        check!("hilbmod.adjointable", hilbmod_adjointable),
        check!("hilbmod.range_span", hilbmod_range_span),
        check!("hilbmod.isomorphism_oracle", hilbmod_isomorphism_oracle),
        check!("corr.tensor_associative", corr_tensor_associative),
        check!("corr.inner_product_compat", corr_inner_product_compat),
        check!("corr.morita_inverse", corr_morita_inverse),
        check!("corr.contravariance", corr_contravariance),
        check!("genmap.isometry_implies_linear", genmap_isometry_implies_linear),
        check!("genmap.adjoint_implies_linear", genmap_adjoint_implies_linear),
        check!("genmap.composition_grading", genmap_composition_grading),
        check!("genmap.phi_e_group", genmap_phi_e_group),
        check!("genmap.uniqueness", genmap_uniqueness),
        check!("genmap.existence_oracle", genmap_existence_oracle),
        check!("genmap.existence_witness", genmap_existence_witness),
        check!("genmap.factorization", genmap_factorization),
        check!("genmap.quasi_inner", genmap_quasi_inner),
        check!("reptheory.conjugacy_classes", reptheory_conjugacy_classes),
        check!("reptheory.reconstruction", reptheory_reconstruction),
        check!("reptheory.class_associativity", reptheory_class_associativity),
        check!("reptheory.class_injectivity", reptheory_class_injectivity),
        check!("reptheory.pairing", reptheory_pairing, ["groups.routes_consistency"]),
        check!("groups.inclusion_chain", groups_inclusion_chain, ["groups.normality"]),
        check!("groups.normality", groups_normality),
        check!("groups.class_map_contravariant", groups_class_map_contravariant),
        check!("groups.routes_consistency", groups_routes_consistency),
        check!("groups.semidirect", groups_semidirect),
        check!("groups.cocycle", groups_cocycle),
        check!("golden.examples", golden_examples),
    ]
}

fn b(inst: &Instance) -> &MultiMatrixAlgebra {
    inst.algebra()
}

fn algebra_hom_laws(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let phi = &inst.phi;
    let (mut mult, mut star, mut iso) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..3 {
        let x = b(inst).random_element::<f64, _>(rng);
        let y = b(inst).random_element::<f64, _>(rng);
        let lhs = phi.apply(&x.multiply(&y)?)?;
        mult = mult.max(lhs.distance(&phi.apply(&x)?.multiply(&phi.apply(&y)?)?));
        star = star.max(phi.apply(&x.adjoint())?.distance(&phi.apply(&x)?.adjoint()));
        iso = iso.max((phi.apply(&x)?.norm() - x.norm()).abs());
    }
    Outcome::within(&[("multiplicative", mult), ("star", star), ("isometric", iso)])
}

fn algebra_action_equality(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let phi = &inst.phi;
    let phased: Vec<CMat<f64>> =
        phi.conjugators().iter().map(|w| w * linalg::random_phase::<f64, _>(rng)).collect();
    let twin = Automorphism::new(b(inst), phi.perm().clone(), phased)?;
    let mut ok = twin.action_eq(phi) && phi.canonicalized().action_eq(phi);
    for p in enumerate_outer_classes(b(inst)) {
        if &p != phi.perm() {
            let other = Automorphism::new(b(inst), p, phi.conjugators().to_vec())?;
            ok &= !other.action_eq(phi);
        }
    }
    let random = Automorphism::<f64>::random(b(inst), rng);
    if random.action_eq(phi) {
        ok &= random.perm() == phi.perm();
    }
    Outcome::judge(ok, &[("phase_twin_distance", twin.action_distance(phi))])
}

fn algebra_outer_classes_closed(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let classes = enumerate_outer_classes(b(inst));
    let all_preserve = classes.iter().all(|p| p.preserves(b(inst).blocks()));
    let group = PermGroup::from_elements(b(inst).num_blocks(), classes);
    Outcome::judge(all_preserve && group.is_group(), &[])
}

fn algebra_inner_kernel(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let v1 = Automorphism::inner(&b(inst).random_unitary::<f64, _>(rng))?;
    let v2 = Automorphism::inner(&b(inst).random_unitary::<f64, _>(rng))?;
    let both = v1.compose(&v2)?;
    let sandwiched = v1.compose(&inst.phi)?.compose(&v2)?;
    let ok = v1.is_inner() && both.is_inner() && sandwiched.is_inner() == inst.phi.is_inner();
    Outcome::judge(ok, &[])
}

fn hilbmod_cauchy_schwarz(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    if inst.module.is_zero() {
        return Outcome::skip("zero module");
    }
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..4 {
        let x = inst.module.random_element::<f64, _>(rng);
        let y = inst.module.random_element::<f64, _>(rng);
        excess = excess.max(x.inner(&y)?.norm() - x.norm() * y.norm());
    }
    Outcome::judge(excess <= TOL, &[("excess", excess)])
}

fn hilbmod_adjointable(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let a = AdjointableOperator::<f64>::random(e, e, rng);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let x = e.random_element(rng);
        let y = e.random_element(rng);
        worst = worst.max(a.apply(&x)?.inner(&y)?.distance(&x.inner(&a.adjoint().apply(&y)?)?));
    }
    Outcome::within(&[("adjoint", worst)])
}

fn hilbmod_range_span(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let basis = e.basis::<f64>();
    let cols = basis
        .iter()
        .flat_map(|x| basis.iter().map(move |y| x.inner(y).map(|b| b.coords())))
        .collect::<Result<Vec<_>>>()?;
    let rank = linalg::rank(&linalg::columns(b(inst).dim(), &cols));
    let expected: usize = e.support().iter().map(|&i| b(inst).block(i).pow(2)).sum();
    Outcome::judge(rank == expected && expected == e.range_ideal().algebra.dim(), &[])
        .map(|o| o.with_message(format!("span rank {rank}, expected {expected}")))
}

/// Compares `modules_isomorphic` with an isometry search on small modules
/// over the first two blocks of the instance algebra.
fn hilbmod_isomorphism_oracle(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let dims: Vec<usize> = b(inst).blocks().iter().take(2).copied().collect();
    let alg = MultiMatrixAlgebra::new(dims.clone())?;
    let mut mults: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![0usize; dims.len()];
    loop {
        if cur.iter().zip(&dims).map(|(m, n)| m * n).sum::<usize>() <= 6 {
            mults.push(cur.clone());
        }
        let Some(i) = (0..cur.len()).find(|&i| cur[i] < 3) else { break };
        cur[i] += 1;
        cur[..i].iter_mut().for_each(|c| *c = 0);
    }
    let modules: Vec<HilbertModule> =
        mults.into_iter().map(|m| HilbertModule::new(&alg, m)).collect::<Result<_>>()?;
    let id = Automorphism::<f64>::identity(&alg);
    let mut disagreements = 0;
    for _ in 0..3 {
        let e = &modules[rng.random_range(0..modules.len())];
        let same_dim: Vec<&HilbertModule> = modules.iter().filter(|f| f.dim() == e.dim()).collect();
        let f = same_dim[rng.random_range(0..same_dim.len())];
        let decided = modules_isomorphic::<f64>(e, f)?.is_some();
        let searched = search_phi_unitary(e, f, &id, 4, rng)?.found;
        disagreements += usize::from(decided != searched);
    }
    let iso = |x: &HilbertModule, y: &HilbertModule| modules_isomorphic::<f64>(x, y).map(|o| o.is_some());
    let mut relation = true;
    for _ in 0..4 {
        let x = &modules[rng.random_range(0..modules.len())];
        let y = &modules[rng.random_range(0..modules.len())];
        let z = &modules[rng.random_range(0..modules.len())];
        relation &= iso(x, x)?;
        relation &= iso(x, y)? == iso(y, x)?;
        if iso(x, y)? && iso(y, z)? {
            relation &= iso(x, z)?;
        }
    }
    Outcome::judge(disagreements == 0 && relation, &[("disagreements", disagreements as f64)])
}

fn small_hom(inst: &Instance, rng: &mut ChaCha8Rng) -> UnitalHom<f64> {
    UnitalHom::random(b(inst), rng.random_range(1..=2), 1, rng)
}

fn corr_tensor_associative(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    if inst.module.is_zero() {
        return Outcome::skip("zero module");
    }
    let m = Correspondence::from_module(&inst.module);
    let n = Correspondence::from_automorphism(&inst.phi);
    let p = small_hom(inst, rng).correspondence().clone();
    let mn = Tensor::new(&m, &n)?;
    let np = Tensor::new(&n, &p)?;
    let left = Tensor::new(mn.product(), &p)?;
    let right = Tensor::new(&m, np.product())?;
    let exact = left.product().mult() == right.product().mult();
    let assoc = associator(&m, &n, &p)?;
    let x = m.right_module().random_element(rng);
    let y = n.right_module().random_element(rng);
    let z = p.right_module().random_element::<f64, _>(rng);
    let lx = left.pair(&mn.pair(&x, &y)?, &z)?;
    let rx = right.pair(&x, &np.pair(&y, &z)?)?;
    let mut worst = 0.0f64;
    for (l, a) in assoc.iter().enumerate() {
        worst = worst.max((a * rx.block(l) - lx.block(l)).norm());
    }
    Outcome::judge(exact && worst <= TOL, &[("elements", worst)])
}

fn corr_inner_product_compat(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    if inst.module.is_zero() {
        return Outcome::skip("zero module");
    }
    let m = Correspondence::from_module(&inst.module);
    let mut worst = 0.0f64;
    for n in [Correspondence::from_automorphism(&inst.phi), small_hom(inst, rng).correspondence().clone()] {
        let t = Tensor::new(&m, &n)?;
        let (x, x2) = (m.right_module().random_element(rng), m.right_module().random_element(rng));
        let (y, y2) = (n.right_module().random_element(rng), n.right_module().random_element::<f64, _>(rng));
        let lhs = t.pair(&x, &y)?.inner(&t.pair(&x2, &y2)?)?;
        let rhs = y.inner(&n.left_action(&x.inner(&x2)?, &y2)?)?;
        worst = worst.max(lhs.distance(&rhs));
    }
    Outcome::within(&[("inner_product", worst)])
}

fn corr_morita_inverse(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let id = permutation_matrix(&Perm::identity(b(inst).num_blocks()));
    let mut ok = true;
    for p in picard_group(b(inst))?.elements() {
        let c = p.correspondence::<f64>();
        ok &= c.is_morita();
        ok &= Tensor::new(&c, &c.dual())?.product().mult() == &id;
        ok &= Tensor::new(&c.dual(), &c)?.product().mult() == &id;
    }
    Outcome::judge(ok, &[])
}

fn corr_contravariance(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let phi = &inst.phi;
    let psi = Automorphism::<f64>::random(b(inst), rng);
    let direct = Correspondence::from_automorphism(&psi.compose(phi)?);
    let tensor = Tensor::new(&Correspondence::from_automorphism(phi), &Correspondence::from_automorphism(&psi))?;
    let Some(v) = correspondences_isomorphic(&direct, tensor.product())? else {
        return Outcome::judge(false, &[]);
    };
    let mut worst = 0.0f64;
    for unit in b(inst).matrix_units::<f64>() {
        for (j, vj) in v.iter().enumerate() {
            let moved = vj * direct.left_block(&unit, j) * vj.adjoint();
            worst = worst.max((moved - tensor.product().left_block(&unit, j)).norm());
        }
    }
    Outcome::within(&[("left_action", worst)])
}

fn genmap_isometry_implies_linear(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let u = &inst.unitary;
    let raw = u.to_raw();
    let w = AdjointableOperator::<f64>::random_unitary(e, rng);
    let doubled = RawModuleMap::new(e, e, raw.matrix() * Complex::new(2.0, 0.0))?;
    let noise = RawModuleMap::new(e, e, linalg::gaussian(rng, e.dim(), e.dim()))?;
    let candidates = [raw.clone(), RawModuleMap::from_operator(&w).compose(&raw)?, doubled, noise];
    let mut ok = check_phi_isometry(&raw, u.phi())?;
    for a in &candidates {
        if check_phi_isometry(a, u.phi())? {
            ok &= check_phi_linear(a, u.phi())?;
        }
    }
    Outcome::judge(ok, &[])
}

fn genmap_adjoint_implies_linear(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let u = &inst.unitary;
    let w = AdjointableOperator::<f64>::random(e, e, rng);
    let a = RawModuleMap::from_operator(&w).compose(&u.to_raw())?;
    let adj = phi_adjoint(&a, u.phi())?;
    let basis = e.basis::<f64>();
    let mut relation = 0.0f64;
    for x in &basis {
        for y in &basis {
            let lhs = a.apply(x)?.inner(y)?;
            let rhs = u.phi().apply(&x.inner(&adj.apply(y)?)?)?;
            relation = relation.max(lhs.distance(&rhs));
        }
    }
    let linear = phi_linear_residual(&a, u.phi())?;
    Outcome::within(&[("adjoint_relation", relation), ("phi_linear", linear)])
}

fn genmap_composition_grading(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let u1 = &inst.unitary;
    let u2 = random_gen_unitary(e, rng)?;
    let w1 = RawModuleMap::from_operator(&AdjointableOperator::<f64>::random(e, e, rng));
    let w2 = RawModuleMap::from_operator(&AdjointableOperator::<f64>::random(e, e, rng));
    let a1 = w1.compose(&u1.to_raw())?;
    let a2 = w2.compose(&u2.to_raw())?;
    let res = phi_linear_residual(&a1.compose(&a2)?, &u1.phi().compose(u2.phi())?)?;
    Outcome::within(&[("graded_linearity", res)])
}

fn genmap_phi_e_group(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let u1 = &inst.unitary;
    let u2 = random_gen_unitary(e, rng)?;
    let prod = u1.phi().compose(u2.phi())?;
    let inv = u1.phi().inverse();
    let ok = exists_phi_unitary(e, &prod)?.exists()
        && exists_phi_unitary(e, &inv)?.exists()
        && check_phi_unitary(&u1.compose(&u2)?.to_raw(), &prod)?
        && check_phi_unitary(&u1.inverse().to_raw(), &inv)?;
    Outcome::judge(ok, &[])
}

fn genmap_uniqueness(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let u = &inst.unitary;
    let raw = u.to_raw();
    let support = e.support();
    // v trivial on the support: same class; v random: generally not
    let blocks: Vec<CMat<f64>> = b(inst)
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, &n)| if support.contains(&i) { CMat::identity(n, n) } else { linalg::random_unitary(rng, n) })
        .collect();
    let off = Automorphism::inner(&AlgebraElement::new(b(inst), blocks)?)?;
    let random = Automorphism::inner(&b(inst).random_unitary::<f64, _>(rng))?;
    let mut ok = check_phi_unitary(&raw, u.phi())?;
    let same = u.phi().compose(&off)?;
    ok &= check_phi_unitary(&raw, &same)?;
    for alt in [same, u.phi().compose(&random)?] {
        if check_phi_unitary(&raw, &alt)? {
            ok &= automorphisms_agree_on(e, u.phi(), &alt);
        }
    }
    Outcome::judge(ok, &[])
}

/// Total dimension bound under which the brute-force sweep is run.
pub const ORACLE_DIM: usize = 5;

fn genmap_existence_oracle(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.dim() > ORACLE_DIM {
        return Outcome::skip("Σ mᵢnᵢ above the oracle bound");
    }
    let mut disagreements = 0;
    let mut worst_found = 0.0f64;
    for p in enumerate_outer_classes(b(inst)) {
        let conj = b(inst).blocks().iter().map(|&n| linalg::random_unitary(rng, n)).collect();
        let phi = Automorphism::new(b(inst), p, conj)?;
        let decided = exists_phi_unitary(e, &phi)?.exists();
        let search = search_phi_unitary(e, e, &phi, 8, rng)?;
        if search.found {
            worst_found = worst_found.max(search.residual);
        }
        disagreements += usize::from(decided != search.found);
    }
    Outcome::judge(disagreements == 0, &[("disagreements", disagreements as f64), ("search_residual", worst_found)])
}

fn genmap_existence_witness(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let m = e.mults();
    let sigma = inst.phi.perm();
    let ok = match exists_phi_unitary(e, &inst.phi)? {
        UnitaryExistence::Witness(u) => check_phi_unitary(&u.to_raw(), &inst.phi)?,
        UnitaryExistence::Obstructed(Obstruction::SupportNotInvariant { block }) => {
            m[block] > 0 && m[sigma.apply(block)] == 0
        }
        UnitaryExistence::Obstructed(Obstruction::MultMismatch { blocks: (i, j) }) => {
            j == sigma.apply(i) && m[i] != m[j]
        }
    };
    Outcome::judge(ok, &[])
}

/// Product of `dim E · dim F` above which the dense constraint system for
/// φ-linear maps is not built.
const FACTOR_LIMIT: usize = 144;

fn genmap_factorization(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let phi = if rng.random_bool(0.5) {
        UnitalHom::from_automorphism(&inst.phi)
    } else {
        let k = b(inst).num_blocks();
        let mut keep: Vec<usize> = (0..k).filter(|_| rng.random_bool(0.6)).collect();
        if keep.is_empty() {
            keep.push(rng.random_range(0..k));
        }
        UnitalHom::quotient(b(inst), &keep)?
    };
    let c = phi.target().clone();
    let f = HilbertModule::new(&c, (0..c.num_blocks()).map(|_| rng.random_range(1..=2)).collect())?;
    if e.dim() * f.dim() > FACTOR_LIMIT {
        return Outcome::skip("too large for the dense φ-linear constraint system");
    }
    let basis = phi_linear_basis(e, &f, &phi)?;
    let mut a = CMat::<f64>::zeros(f.dim(), e.dim());
    for n in &basis {
        a += n * Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    let a = RawModuleMap::new(e, &f, a)?;
    let (cm, a_prime) = factorize(&a, &phi)?;
    let factor = a_prime.compose(&cm.map)?.distance(&a);
    let norm_a = module_map_norm(&a, 6, rng);
    let norm_ap = module_map_norm(&a_prime, 6, rng);
    Outcome::judge(
        factor <= TOL && norm_ap <= norm_a + TOL,
        &[("factorization", factor), ("norm_a", norm_a), ("norm_a_prime", norm_ap)],
    )
}

fn genmap_quasi_inner(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let v1 = b(inst).random_unitary::<f64, _>(rng);
    let v2 = b(inst).random_unitary::<f64, _>(rng);
    let u1 = quasi_inner_unitary(e, &v1)?;
    let u2 = quasi_inner_unitary(e, &v2)?;
    let unitary = check_phi_unitary(&u1.to_raw(), &Automorphism::inner(&v1)?)?;
    let x = e.random_element::<f64, _>(rng);
    let formula = u1.apply(&x)?.distance(&x.right_mul(&v1.adjoint())?);
    let hom = quasi_inner_unitary(e, &v1.multiply(&v2)?)?.to_raw().distance(&u1.compose(&u2)?.to_raw());
    let mut injective = true;
    let mut message = None;
    if e.is_full() {
        let id = GeneralizedUnitary::identity(e).to_raw();
        injective = u1.to_raw().distance(&u2.to_raw()) > TOL && u1.to_raw().distance(&id) > TOL;
    } else {
        message = Some("module not full: injectivity not asserted".to_string());
    }
    let out = Outcome::judge(
        unitary && injective && formula <= TOL && hom <= TOL,
        &[("formula", formula), ("homomorphism", hom)],
    )?;
    Ok(match message {
        Some(m) => out.with_message(m),
        None => out,
    })
}

fn random_k_automorphism(e: &HilbertModule, rng: &mut ChaCha8Rng) -> Automorphism<f64> {
    Automorphism::random(&e.operator_algebra(), rng)
}

fn reptheory_conjugacy_classes(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let k = e.operator_algebra();
    let t1 = random_k_automorphism(e, rng);
    let w = Automorphism::inner(&k.random_unitary::<f64, _>(rng))?;
    let mut ok = true;
    for t2 in [w.compose(&t1)?, random_k_automorphism(e, rng)] {
        let iso = correspondences_isomorphic(&e_theta(e, &t1)?, &e_theta(e, &t2)?)?.is_some();
        let inner = t2.compose(&t1.inverse())?.is_inner();
        ok &= iso == inner;
    }
    Outcome::judge(ok, &[])
}

fn reptheory_reconstruction(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let Some(rep) = &inst.rep else {
        return Outcome::skip("zero module");
    };
    let rec = rep.reconstruction()?;
    Outcome::within(&[("unitarity", rec.unitarity_residual()?), ("intertwining", rec.intertwining_residual()?)])
}

fn reptheory_class_associativity(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let t: Vec<_> = (0..3).map(|_| random_k_automorphism(e, rng)).collect();
    let c: Vec<PicardElement> = t.iter().map(|x| straut_class(e, x)).collect::<Result<_>>()?;
    let left = straut_class(e, &t[0].compose(&t[1])?.compose(&t[2])?)?;
    let right = straut_class(e, &t[0].compose(&t[1].compose(&t[2])?)?)?;
    let l2 = c[2].tensor(&c[1]).tensor(&c[0]);
    let r2 = c[2].tensor(&c[1].tensor(&c[0]));
    Outcome::judge(left == right && l2 == r2 && left == l2, &[])
}

fn reptheory_class_injectivity(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let inner = Automorphism::inner(&e.operator_algebra().random_unitary::<f64, _>(rng))?;
    let mut ok = straut_class(e, &inner)?.perm().is_identity();
    for t in [inner, random_k_automorphism(e, rng)] {
        if straut_class(e, &t)?.perm().is_identity() {
            ok &= t.is_inner();
        }
    }
    Outcome::judge(ok, &[])
}

fn reptheory_pairing(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
    if inst.module.is_zero() {
        return Outcome::skip("zero module");
    }
    let p = pairing_isomorphism(&inst.unitary)?;
    let (via_straut, via_aut) = pairing_classes(&inst.unitary)?;
    Outcome::judge(
        p.is_bilinear_unitary() && via_straut == via_aut,
        &[("isometry", p.isometry_residual), ("left_linearity", p.left_linearity_residual)],
    )
}

fn groups_inclusion_chain(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let r = inclusion_chain::<f64, _>(&inst.module, rng)?;
    let msg = format!(
        "|Φ_E| = {}, kernel {}, quotient {}, straut {}, Pic {}",
        r.phi_e.order(),
        r.kernel.order(),
        r.quotient.order(),
        r.straut.order(),
        r.picard.order()
    );
    Ok(Outcome::judge(r.inclusions_hold(), &[])?.with_message(msg))
}

fn groups_normality(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let gamma = &inst.unitary;
    let g = quasi_inner_unitary(e, &b(inst).random_unitary::<f64, _>(rng))?;
    let conj = gamma.compose(&g)?.compose(&gamma.inverse())?;
    let ok = induced_automorphism(&conj.to_raw())?.perm().is_identity();
    let report = inclusion_chain::<f64, _>(e, rng)?;
    Outcome::judge(ok && report.kernel.is_normal_in(&report.phi_e), &[])
}

fn class_of(e: &HilbertModule, u: &GeneralizedUnitary<f64>) -> Result<PicardElement> {
    straut_class(e, &theta_from_gen_unitary(u)?)
}

fn groups_class_map_contravariant(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let u1 = &inst.unitary;
    let u2 = random_gen_unitary(e, rng)?;
    let lhs = class_of(e, &u1.compose(&u2)?)?;
    let rhs = class_of(e, &u2)?.tensor(&class_of(e, u1)?);
    Outcome::judge(lhs == rhs, &[])
}

fn groups_routes_consistency(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    if e.is_zero() {
        return Outcome::skip("zero module");
    }
    let u = &inst.unitary;
    let via_straut = class_of(e, u)?;
    let via_aut = PicardElement::from_automorphism(&induced_automorphism(&u.to_raw())?);
    Outcome::judge(via_straut == via_aut && straut_image_in_picard(e).contains(via_straut.perm()), &[])
}

fn groups_semidirect(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let phi_e = compute_phi_e::<f64>(e)?;
    let u = &inst.unitary;
    let (w, v, tau) = decompose(&phi_e, u)?;
    let base = quasi_inner_unitary(e, &v)?.compose(phi_e.witness(&tau).expect("member"))?;
    let rebuilt = base.left_mul(&w)?.to_raw().distance(&u.to_raw());
    let ordinary = w.unitarity_residual();
    // v₁γ₁ · v₂γ₂ = v₁α₁(v₂) · γ₁₂ on the canonical section
    let elems = phi_e.skeleton().elements();
    let t1 = &elems[rng.random_range(0..elems.len())];
    let t2 = &elems[rng.random_range(0..elems.len())];
    let (g1, g2) = (phi_e.witness(t1).expect("member"), phi_e.witness(t2).expect("member"));
    let v1 = AdjointableOperator::<f64>::random_unitary(e, rng);
    let v2 = AdjointableOperator::<f64>::random_unitary(e, rng);
    let lhs = g1.left_mul(&v1)?.compose(&g2.left_mul(&v2)?)?;
    let moved = crate::reptheory::conjugate_operator(g1, &v2)?;
    let rhs = phi_e.witness(&t1.compose(t2)).expect("closed").left_mul(&v1.compose(&moved)?)?;
    let product = lhs.to_raw().distance(&rhs.to_raw());
    Outcome::within(&[("reconstruction", rebuilt), ("ordinary", ordinary), ("product_rule", product)])
}

fn groups_cocycle(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let phi_e = compute_phi_e::<f64>(e)?;
    let gamma = canonical_section(&phi_e);
    let w = AdjointableOperator::<f64>::random_unitary(e, rng);
    let id = GeneralizedUnitary::identity(e);
    let sign_op = |p: &Perm| {
        let s = Complex::new(p.sign() as f64, 0.0);
        AdjointableOperator::new(e, e, e.mults().iter().map(|&m| CMat::identity(m, m) * s).collect())
    };
    let variants = [
        gamma.clone(),
        gamma.map(|_, g| g.left_mul(&w)?.compose(&id.left_mul(&w.adjoint())?))?,
        gamma.map(|_, g| g.left_mul(&w))?,
        gamma.map(|p, g| g.left_mul(&sign_op(p)?))?,
        gamma.map(|_, g| g.left_mul(&AdjointableOperator::random_unitary(e, rng)))?,
    ];
    let mut mismatches = 0;
    let mut worst_agree = 0.0f64;
    for g2 in &variants {
        let r = check_cocycle(&gamma, g2)?;
        mismatches += usize::from(!r.agree());
        if r.homomorphism {
            worst_agree = worst_agree.max(r.cocycle_defect);
        }
    }
    Outcome::judge(mismatches == 0, &[("mismatches", mismatches as f64), ("cocycle_defect", worst_agree)])
}

/// The three fixed examples with their exact expected answers.
fn golden_examples(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let e = &inst.module;
    let flip = Perm::from_images(vec![1, 0])?;
    match inst.descriptor.label.as_str() {
        "golden:flip_mult_mismatch" => {
            let phi = Automorphism::permutation(b(inst), flip)?;
            let cert = match exists_phi_unitary::<f64>(e, &phi)? {
                UnitaryExistence::Obstructed(o) => o.to_string(),
                UnitaryExistence::Witness(_) => String::new(),
            };
            let t = Tensor::new(&Correspondence::from_module(e), &Correspondence::from_automorphism(&phi))?;
            let mults = t.product().right_mults();
            Outcome::judge(cert == "m mismatch at blocks (1, 2)" && mults == vec![1, 2], &[])
        }
        "golden:flip_off_support" => {
            let phi = Automorphism::permutation(b(inst), flip)?;
            let cert = match exists_phi_unitary::<f64>(e, &phi)? {
                UnitaryExistence::Obstructed(o) => o.to_string(),
                UnitaryExistence::Witness(_) => String::new(),
            };
            Outcome::judge(cert == "support not invariant", &[])
        }
        "golden:morita_without_unit_vector" => {
            let pic = picard_group(b(inst))?;
            let aut = crate::corr::aut_image_in_picard(b(inst));
            let m = PicardElement::new(b(inst), flip)?.correspondence::<f64>();
            let em = Tensor::new(&Correspondence::from_module(e), &m)?.product().right_module();
            let as_b = HilbertModule::algebra_as_module(b(inst));
            let ok = pic.order() == 2
                && aut.order() == 1
                && !m.right_module().has_unit_vector()
                && modules_isomorphic::<f64>(&em, &as_b)?.is_some()
                && modules_isomorphic::<f64>(&em, e)?.is_none();
            Outcome::judge(ok, &[])
        }
        _ => Outcome::skip("not a golden instance"),
    }
}
