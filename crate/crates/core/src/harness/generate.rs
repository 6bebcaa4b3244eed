//! Deterministic random instances.

use crate::algebra::{Automorphism, MultiMatrixAlgebra};
use crate::corr::UnitalHom;
use crate::error::{Error, Result};
use crate::genmap::GeneralizedUnitary;
use crate::groups::{compute_phi_e, extend_perm};
use crate::hilbmod::HilbertModule;
use crate::linalg;
use crate::perm::Perm;
use crate::reptheory::StrictRep;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub seed: u64,
    pub max_blocks: usize,
    pub max_block_dim: usize,
    pub max_mult: usize,
    pub count: usize,
}

impl InstanceSpec {
    pub const MAX_BLOCKS: usize = 5;
    pub const MAX_BLOCK_DIM: usize = 3;
    pub const MAX_MULT: usize = 3;

    /// Bounds `k ≤ 4`, block dims `≤ 3`, mults `≤ 3`.
    pub fn new(seed: u64, count: usize) -> Self {
        InstanceSpec { seed, max_blocks: 4, max_block_dim: 3, max_mult: 3, count }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, max: usize| Err(Error::Shape(format!("{field} must lie in 1..={max}")));
        if self.max_blocks == 0 || self.max_blocks > Self::MAX_BLOCKS {
            return bad("max_blocks", Self::MAX_BLOCKS);
        }
        if self.max_block_dim == 0 || self.max_block_dim > Self::MAX_BLOCK_DIM {
            return bad("max_block_dim", Self::MAX_BLOCK_DIM);
        }
        if self.max_mult == 0 || self.max_mult > Self::MAX_MULT {
            return bad("max_mult", Self::MAX_MULT);
        }
        Ok(())
    }
}

/// The shape data an instance is rebuilt from; also what reports print.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub label: String,
    pub seed: u64,
    pub blocks: Vec<usize>,
    pub mults: Vec<usize>,
    /// 1-based images of the sampled automorphism's permutation.
    pub perm: Vec<usize>,
}

/// One `(B, E, φ, u, ϑ)` tuple.
///
/// `phi` is a uniform shape-compatible automorphism of `B` and need not
/// admit a unitary on `E`; `unitary` is a random element of `U^gen(E)` over
/// a uniform class of `Φ_E`; `rep` is a random unital representation of
/// `B^a(E)` on a small module `F` (absent for `E = 0`).
#[derive(Clone, Debug)]
pub struct Instance {
    pub descriptor: InstanceDescriptor,
    pub module: HilbertModule,
    pub phi: Automorphism<f64>,
    pub unitary: GeneralizedUnitary<f64>,
    pub rep: Option<StrictRep<f64>>,
}

impl Instance {
    /// Samples everything but the shape from `seed`. `perm`, when given,
    /// fixes the permutation of `φ` (conjugators stay random).
    pub fn build(label: &str, seed: u64, blocks: &[usize], mults: &[usize], perm: Option<Perm>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let algebra = MultiMatrixAlgebra::new(blocks.to_vec())?;
        let module = HilbertModule::new(&algebra, mults.to_vec())?;
        let phi = match perm {
            Some(p) => {
                let conj = blocks.iter().map(|&n| linalg::random_unitary(&mut rng, n)).collect();
                Automorphism::new(&algebra, p, conj)?
            }
            None => Automorphism::random(&algebra, &mut rng),
        };
        let unitary = random_gen_unitary(&module, &mut rng)?;
        let rep = if module.is_zero() { None } else { Some(random_rep(&module, &mut rng)?) };
        let descriptor = InstanceDescriptor {
            label: label.to_string(),
            seed,
            blocks: blocks.to_vec(),
            mults: mults.to_vec(),
            perm: phi.perm().one_based(),
        };
        Ok(Instance { descriptor, module, phi, unitary, rep })
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        self.module.algebra()
    }

    pub fn is_golden(&self) -> bool {
        self.descriptor.label.starts_with("golden:")
    }
}

/// A Haar-twisted unitary over a uniformly chosen class of `Φ_E`.
pub fn random_gen_unitary<R: Rng + ?Sized>(e: &HilbertModule, rng: &mut R) -> Result<GeneralizedUnitary<f64>> {
    let phi_e = compute_phi_e::<f64>(e)?;
    let elems = phi_e.skeleton().elements();
    let tau = &elems[rng.random_range(0..elems.len())];
    let conj = e.algebra().blocks().iter().map(|&n| linalg::random_unitary(rng, n)).collect();
    let phi = Automorphism::new(e.algebra(), extend_perm(e, tau), conj)?;
    GeneralizedUnitary::random(e, phi, rng)
}

/// A unital `ϑ: B^a(E) → B^a(F)` with `F` over `l ≤ 2` blocks of size `≤ 2`
/// and multiplicities `μ ≤ 2`, twisted by Haar unitaries.
pub fn random_rep<R: Rng + ?Sized>(e: &HilbertModule, rng: &mut R) -> Result<StrictRep<f64>> {
    let k = e.operator_algebra();
    let l = rng.random_range(1..=2);
    let theta = UnitalHom::<f64>::random(&k, l, 2, rng);
    let c_blocks: Vec<usize> = (0..l).map(|_| rng.random_range(1..=2)).collect();
    let c = MultiMatrixAlgebra::new(c_blocks)?;
    let f_mults = (0..l).map(|j| theta.correspondence().rows(j)).collect();
    let f = HilbertModule::new(&c, f_mults)?;
    StrictRep::new(e, &f, theta)
}

/// Samples a shape within the bounds: `k ≥ 1` blocks, dims `≥ 1`, mults `≥ 0`.
pub fn random_shape<R: Rng + ?Sized>(spec: &InstanceSpec, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let k = rng.random_range(1..=spec.max_blocks);
    let blocks = (0..k).map(|_| rng.random_range(1..=spec.max_block_dim)).collect();
    let mults = (0..k).map(|_| rng.random_range(0..=spec.max_mult)).collect();
    (blocks, mults)
}

/// The fixed instances every run includes.
pub fn golden_instances() -> Vec<Instance> {
    let flip = Perm::from_images(vec![1, 0]).expect("transposition");
    vec![
        Instance::build("golden:flip_mult_mismatch", 25, &[1, 1], &[2, 1], Some(flip.clone())),
        Instance::build("golden:flip_off_support", 33, &[1, 1], &[1, 0], Some(flip)),
        Instance::build("golden:morita_without_unit_vector", 2, &[1, 2], &[2, 1], Some(Perm::identity(2))),
    ]
    .into_iter()
    .map(|r| r.expect("golden data is valid"))
    .collect()
}

/// `spec.count` instances, a deterministic function of `spec.seed`.
pub fn generate(spec: &InstanceSpec) -> Result<Vec<Instance>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|idx| {
            let (blocks, mults) = random_shape(spec, &mut rng);
            let seed = rng.next_u64();
            Instance::build(&format!("seed {} #{idx}", spec.seed), seed, &blocks, &mults, None)
        })
        .collect()
}
