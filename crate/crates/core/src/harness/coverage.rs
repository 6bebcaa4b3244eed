//! The invariants the registry must cover, one entry per stated property.

pub struct Invariant {
    pub module: &'static str,
    pub id: &'static str,
    pub statement: &'static str,
}

const fn inv(module: &'static str, id: &'static str, statement: &'static str) -> Invariant {
    Invariant { module, id, statement }
}

pub const INVARIANTS: &[Invariant] = &[
    inv("algebra", "algebra.hom_laws", "automorphisms are multiplicative, *-preserving and isometric"),
    inv("algebra", "algebra.action_equality", "equal action forces equal perm; conjugators agree up to phases"),
    inv("algebra", "algebra.outer_classes_closed", "outer classes are closed under composition and inverse"),
    inv("algebra", "algebra.inner_kernel", "inner automorphisms compose to inner automorphisms"),
    inv("hilbmod", "hilbmod.cauchy_schwarz", "‖⟨x,y⟩‖ ≤ ‖x‖‖y‖"),
    inv("hilbmod", "hilbmod.adjointable", "⟨ax,y⟩ = ⟨x,a*y⟩"),
    inv("hilbmod", "hilbmod.range_span", "inner products span an ideal of dimension Σ_{i∈S} nᵢ²"),
    inv("hilbmod", "hilbmod.isomorphism_oracle", "module isomorphism is an equivalence matching brute force"),
    inv("corr", "corr.tensor_associative", "tensor is associative on multiplicities and elements"),
    inv("corr", "corr.inner_product_compat", "⟨x⊙y, x′⊙y′⟩ = ⟨y, ⟨x,x′⟩y′⟩"),
    inv("corr", "corr.morita_inverse", "M ⊙ M* and M* ⊙ M are trivial for Morita equivalences"),
    inv("corr", "corr.contravariance", "the correspondence of ψ∘φ is the tensor of φ then ψ"),
    inv("genmap", "genmap.isometry_implies_linear", "every φ-isometry is φ-linear"),
    inv("genmap", "genmap.adjoint_implies_linear", "every φ-adjointable map is φ-linear"),
    inv("genmap", "genmap.composition_grading", "φ₁-linear ∘ φ₂-linear is (φ₁∘φ₂)-linear"),
    inv("genmap", "genmap.phi_e_group", "classes with unitaries are closed under product and inverse"),
    inv("genmap", "genmap.uniqueness", "a unitary determines its automorphism on B_E"),
    inv("genmap", "genmap.existence_oracle", "the existence decision matches brute-force search"),
    inv("reptheory", "reptheory.conjugacy_classes", "E_ϑ₁ ≅ E_ϑ₂ iff ϑ₂ = wϑ₁(•)w*"),
    inv("reptheory", "reptheory.reconstruction", "ϑ(a) = u(a⊙id)u* with u unitary"),
    inv("reptheory", "reptheory.class_associativity", "iterated class identifications associate"),
    inv("reptheory", "reptheory.class_injectivity", "trivial class implies inner"),
    inv("groups", "groups.normality", "Φ_E ∩ gin(B_E) is normal in Φ_E"),
    inv("groups", "groups.class_map_contravariant", "class(φ₁∘φ₂) = class(φ₂)⊛class(φ₁)"),
    inv("groups", "groups.routes_consistency", "Picard class via aut(B_E) equals the class via straut"),
    inv("groups", "groups.semidirect", "generalized unitaries split as ordinary times section"),
];
