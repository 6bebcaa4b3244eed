//! Brute-force references used to cross-check the structural deciders.
//!
//! Neither oracle knows the multiplicity criterion or the block structure of
//! module maps: both work on raw coordinate matrices only.

use crate::algebra::{AlgebraElement, MultiMatrixAlgebra};
use crate::error::Result;
use crate::genmap::RawModuleMap;
use crate::hilbmod::{HilbertModule, ModuleElement};
use crate::linalg;
use crate::scalar::{CMat, CVec, Cx};
use crate::Homomorphism;
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

/// Matrix units generating `B` as an algebra: `e₀₀` and the off-diagonal
/// neighbours in every block.
fn generators(b: &MultiMatrixAlgebra) -> Vec<AlgebraElement<f64>> {
    let mut out = Vec::new();
    for (i, &n) in b.blocks().iter().enumerate() {
        out.push(b.matrix_unit(i, 0, 0));
        for r in 0..n.saturating_sub(1) {
            out.push(b.matrix_unit(i, r, r + 1));
            out.push(b.matrix_unit(i, r + 1, r));
        }
    }
    out
}

/// `c ↦ coords(f·c)` as a matrix on the coordinates of `F`.
fn right_mul_matrix(f: &HilbertModule, c: &AlgebraElement<f64>) -> Result<CMat<f64>> {
    let cols = f.basis::<f64>().iter().map(|y| Ok(y.right_mul(c)?.coords())).collect::<Result<Vec<_>>>()?;
    Ok(linalg::columns(f.dim(), &cols))
}

/// Orthonormal basis of the space of φ-linear maps `E → F`, as coordinate
/// matrices, from the linear constraints `A·[xb] = R_{φ(b)}·A·[x]`.
pub fn phi_linear_basis<H: Homomorphism<f64> + ?Sized>(
    e: &HilbertModule,
    f: &HilbertModule,
    phi: &H,
) -> Result<Vec<CMat<f64>>> {
    let (de, df) = (e.dim(), f.dim());
    if de == 0 || df == 0 {
        return Ok(vec![CMat::zeros(df, de)]);
    }
    let gens = generators(phi.source());
    let basis = e.basis::<f64>();
    let mut rows: Vec<CMat<f64>> = Vec::new();
    for b in &gens {
        let r = right_mul_matrix(f, &phi.apply(b)?)?;
        for (p, x) in basis.iter().enumerate() {
            let u = x.right_mul(b)?.coords();
            // unknown vec(A), column-major: index c·df + r
            let mut block = CMat::<f64>::zeros(df, de * df);
            for c in 0..de {
                for row in 0..df {
                    block[(row, c * df + row)] += u[c];
                }
            }
            for row in 0..df {
                for s in 0..df {
                    block[(row, p * df + s)] -= r[(row, s)];
                }
            }
            rows.push(block);
        }
    }
    let total: usize = rows.iter().map(|b| b.nrows()).sum();
    let mut system = CMat::<f64>::zeros(total, de * df);
    let mut at = 0;
    for b in rows {
        system.view_mut((at, 0), (b.nrows(), b.ncols())).copy_from(&b);
        at += b.nrows();
    }
    let null = linalg::nullspace(&system);
    Ok((0..null.ncols())
        .map(|k| CMat::from_column_slice(df, de, null.column(k).as_slice()))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchVerdict {
    pub found: bool,
    /// Max-abs isometry residual at the best point reached.
    pub residual: f64,
}

/// Residual threshold below which the search declares a solution.
pub const SEARCH_THRESHOLD: f64 = 1e-7;

/// Looks for a surjective φ-isometry `E → F` inside the φ-linear maps by
/// Levenberg–Marquardt on `⟨Ax,Ay⟩ − φ(⟨x,y⟩)` over basis pairs, with random
/// restarts.
pub fn search_phi_unitary<H: Homomorphism<f64> + ?Sized, R: Rng + ?Sized>(
    e: &HilbertModule,
    f: &HilbertModule,
    phi: &H,
    restarts: usize,
    rng: &mut R,
) -> Result<SearchVerdict> {
    if e.dim() != f.dim() {
        return Ok(SearchVerdict { found: false, residual: f64::INFINITY });
    }
    if e.dim() == 0 {
        return Ok(SearchVerdict { found: true, residual: 0.0 });
    }
    let maps = phi_linear_basis(e, f, phi)?;
    let basis = e.basis::<f64>();
    let pairs: Vec<(usize, usize)> =
        (0..basis.len()).flat_map(|p| (p..basis.len()).map(move |q| (p, q))).collect();
    let target: Vec<CVec<f64>> = pairs
        .iter()
        .map(|&(p, q)| Ok(phi.apply(&basis[p].inner(&basis[q])?)?.coords()))
        .collect::<Result<_>>()?;
    let r = maps.len();
    let images: Vec<Vec<ModuleElement<f64>>> = maps
        .iter()
        .map(|a| (0..basis.len()).map(|p| f.element_from_coords(&a.column(p).into_owned())).collect())
        .collect();
    // h[k][l][pair] = ⟨N_k x_p, N_l x_q⟩
    let mut h = vec![vec![Vec::with_capacity(pairs.len()); r]; r];
    for k in 0..r {
        for l in 0..r {
            for &(p, q) in &pairs {
                h[k][l].push(images[k][p].inner(&images[l][q])?.coords());
            }
        }
    }
    let problem = Problem { h, target };
    if r == 0 {
        let best = problem.residual(&[]).amax();
        return Ok(SearchVerdict { found: best < SEARCH_THRESHOLD, residual: best });
    }
    let mut best = f64::INFINITY;
    for _ in 0..restarts.max(1) {
        let start: Vec<Cx<f64>> = (0..r).map(|_| Complex::new(gauss(rng), gauss(rng))).collect();
        best = best.min(problem.minimize(start));
        if best < SEARCH_THRESHOLD {
            break;
        }
    }
    Ok(SearchVerdict { found: best < SEARCH_THRESHOLD, residual: best })
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(rand_distr::StandardNormal)
}

struct Problem {
    h: Vec<Vec<Vec<CVec<f64>>>>,
    target: Vec<CVec<f64>>,
}

impl Problem {
    /// Real residual vector `[Re r; Im r]`.
    fn residual(&self, t: &[Cx<f64>]) -> DVector<f64> {
        let r = t.len();
        let mut out = Vec::new();
        for (pi, tgt) in self.target.iter().enumerate() {
            let mut v = -tgt.clone();
            for k in 0..r {
                for l in 0..r {
                    v += &self.h[k][l][pi] * (t[k].conj() * t[l]);
                }
            }
            out.extend(v.iter().map(|z| z.re));
            out.extend(v.iter().map(|z| z.im));
        }
        DVector::from_vec(out)
    }

    fn jacobian(&self, t: &[Cx<f64>]) -> DMatrix<f64> {
        let r = t.len();
        let rows: usize = self.target.iter().map(|v| 2 * v.len()).sum();
        let mut jac = DMatrix::<f64>::zeros(rows, 2 * r);
        let mut at = 0;
        for (pi, tgt) in self.target.iter().enumerate() {
            let d = tgt.len();
            for j in 0..r {
                let mut g = CVec::<f64>::zeros(d);
                let mut hh = CVec::<f64>::zeros(d);
                for l in 0..r {
                    g += &self.h[j][l][pi] * t[l];
                    hh += &self.h[l][j][pi] * t[l].conj();
                }
                let d_re = &g + &hh;
                let d_im = (&hh - &g) * Complex::new(0.0, 1.0);
                for s in 0..d {
                    jac[(at + s, 2 * j)] = d_re[s].re;
                    jac[(at + d + s, 2 * j)] = d_re[s].im;
                    jac[(at + s, 2 * j + 1)] = d_im[s].re;
                    jac[(at + d + s, 2 * j + 1)] = d_im[s].im;
                }
            }
            at += 2 * d;
        }
        jac
    }

    /// Levenberg–Marquardt from `t`; returns the final max-abs residual.
    fn minimize(&self, mut t: Vec<Cx<f64>>) -> f64 {
        let mut res = self.residual(&t);
        let mut cost = res.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..400 {
            if res.amax() < 1e-13 || lambda > 1e12 {
                break;
            }
            let jac = self.jacobian(&t);
            let jt = jac.transpose();
            let mut normal = &jt * &jac;
            let grad = &jt * &res;
            for d in 0..normal.nrows() {
                normal[(d, d)] += lambda * (1.0 + normal[(d, d)]);
            }
            let Some(step) = normal.lu().solve(&(-grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<Cx<f64>> =
                t.iter().enumerate().map(|(j, z)| z + Complex::new(step[2 * j], step[2 * j + 1])).collect();
            let trial_res = self.residual(&trial);
            let trial_cost = trial_res.norm_squared();
            if trial_cost < cost {
                let gain = cost - trial_cost;
                t = trial;
                res = trial_res;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                if gain < 1e-30 {
                    break;
                }
            } else {
                lambda *= 4.0;
            }
        }
        res.amax()
    }
}

/// Lower estimate of `‖a‖ = sup_{‖x‖≤1} ‖ax‖` by alternating ascent: fix the
/// top singular pair of the largest output block, then maximize the linear
/// functional over the product of operator-norm balls (polar parts).
pub fn module_map_norm<R: Rng + ?Sized>(a: &RawModuleMap<f64>, restarts: usize, rng: &mut R) -> f64 {
    let e = a.domain();
    let f = a.codomain();
    if e.dim() == 0 || f.dim() == 0 {
        return 0.0;
    }
    let shapes = e.shapes();
    let polarize = |v: &CVec<f64>| -> CVec<f64> {
        let blocks = linalg::unflatten(&shapes, v).into_iter().map(|b| polar(&b)).collect::<Vec<_>>();
        linalg::flatten(&blocks)
    };
    let evaluate = |x: &CVec<f64>| -> (f64, usize) {
        let y = f.element_from_coords(&(a.matrix() * x));
        (0..y.blocks().len())
            .map(|l| (linalg::spectral_norm(y.block(l)), l))
            .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
    };
    let mut starts: Vec<CVec<f64>> = Vec::new();
    let svd = a.matrix().clone().svd(false, true);
    if let Some(v_t) = svd.v_t {
        let top = (0..svd.singular_values.len())
            .max_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
            .expect("nonempty");
        starts.push(polarize(&v_t.row(top).adjoint()));
    }
    for _ in 0..restarts {
        let g = DVector::from_fn(e.dim(), |_, _| Complex::new(gauss(rng), gauss(rng)));
        starts.push(polarize(&g));
    }
    let mut best = 0.0f64;
    for mut x in starts {
        let (mut val, _) = evaluate(&x);
        for _ in 0..500 {
            let y = f.element_from_coords(&(a.matrix() * &x));
            let (_, l) = evaluate(&x);
            let svd = y.block(l).clone().svd(true, true);
            let top = (0..svd.singular_values.len())
                .max_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
            let Some(top) = top else { break };
            let eta = svd.u.as_ref().expect("requested").column(top).into_owned();
            let xi = svd.v_t.as_ref().expect("requested").row(top).adjoint();
            // functional y ↦ η†·y_l·ξ on output coordinates
            let mut w_blocks: Vec<CMat<f64>> = f.shapes().iter().map(|&(r, c)| CMat::zeros(r, c)).collect();
            w_blocks[l] = eta.map(|z| z.conj()) * xi.transpose();
            let c = linalg::flatten(&w_blocks);
            let g = a.matrix().transpose() * c;
            let next = polarize(&g.map(|z| z.conj()));
            let (next_val, _) = evaluate(&next);
            if next_val <= val + 1e-15 {
                break;
            }
            x = next;
            val = next_val;
        }
        best = best.max(val);
    }
    best
}

/// `U V†` from the SVD; the maximizer of `Re tr(M† X)` over contractions.
fn polar(m: &CMat<f64>) -> CMat<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

/// One disagreement between the decider and the search.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Disagreement {
    pub blocks: Vec<usize>,
    pub mults: Vec<usize>,
    /// 1-based permutation images.
    pub perm: Vec<usize>,
    pub decided: bool,
    pub searched: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SweepReport {
    pub modules: usize,
    pub cases: usize,
    pub positives: usize,
    pub disagreements: Vec<Disagreement>,
}

/// Every module with `k ≤ max_blocks` blocks of size `≤ 3`, multiplicities
/// `≤ 3` and `Σ mᵢnᵢ ≤ max_dim`, up to reordering blocks by size, against
/// every block-size preserving permutation (with Haar conjugators).
pub fn existence_sweep(max_blocks: usize, max_dim: usize, restarts: usize, seed: u64) -> Result<SweepReport> {
    use crate::algebra::{enumerate_outer_classes, Automorphism};
    use crate::genmap::exists_phi_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rayon::prelude::*;

    // multisets of (nᵢ, mᵢ) pairs as nondecreasing index sequences
    let pairs: Vec<(usize, usize)> = (1..=3).flat_map(|n| (0..=3).map(move |m| (n, m))).collect();
    let mut shapes: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..pairs.len()).map(|i| vec![i]).collect();
    while let Some(seq) = stack.pop() {
        let dim: usize = seq.iter().map(|&i| pairs[i].0 * pairs[i].1).sum();
        if dim > max_dim {
            continue;
        }
        shapes.push((seq.iter().map(|&i| pairs[i].0).collect(), seq.iter().map(|&i| pairs[i].1).collect()));
        if seq.len() < max_blocks {
            let last = *seq.last().expect("nonempty");
            stack.extend((last..pairs.len()).map(|i| [seq.as_slice(), &[i]].concat()));
        }
    }
    shapes.sort();
    shapes.dedup();
    let per_shape: Vec<Result<(usize, usize, Vec<Disagreement>)>> = shapes
        .par_iter()
        .enumerate()
        .map(|(idx, (blocks, mults))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
            let b = MultiMatrixAlgebra::new(blocks.clone())?;
            let e = HilbertModule::new(&b, mults.clone())?;
            let mut cases = 0;
            let mut positives = 0;
            let mut bad = Vec::new();
            for p in enumerate_outer_classes(&b) {
                let conj = blocks.iter().map(|&n| linalg::random_unitary(&mut rng, n)).collect();
                let phi = Automorphism::<f64>::new(&b, p, conj)?;
                let decided = exists_phi_unitary(&e, &phi)?.exists();
                let search = search_phi_unitary(&e, &e, &phi, restarts, &mut rng)?;
                cases += 1;
                positives += usize::from(decided);
                if decided != search.found {
                    bad.push(Disagreement {
                        blocks: blocks.clone(),
                        mults: mults.clone(),
                        perm: phi.perm().one_based(),
                        decided,
                        searched: search.found,
                        residual: search.residual,
                    });
                }
            }
            Ok((cases, positives, bad))
        })
        .collect();
    let mut report = SweepReport { modules: shapes.len(), cases: 0, positives: 0, disagreements: Vec::new() };
    for r in per_shape {
        let (c, p, bad) = r?;
        report.cases += c;
        report.positives += p;
        report.disagreements.extend(bad);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Automorphism;
    use crate::perm::Perm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn module(b: &[usize], m: &[usize]) -> HilbertModule {
        HilbertModule::new(&MultiMatrixAlgebra::new(b.to_vec()).unwrap(), m.to_vec()).unwrap()
    }

    #[test]
    fn linear_space_dimension_matches_operator_count() {
        // right-linear endomorphisms are B^a(E): dimension Σ mᵢ²
        let e = module(&[1, 2], &[2, 1]);
        let id = Automorphism::<f64>::identity(e.algebra());
        assert_eq!(phi_linear_basis(&e, &e, &id).unwrap().len(), 5);
    }

    #[test]
    fn search_finds_and_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let e = module(&[1, 1], &[2, 2]);
        let flip = Automorphism::<f64>::permutation(e.algebra(), Perm::from_images(vec![1, 0]).unwrap()).unwrap();
        assert!(search_phi_unitary(&e, &e, &flip, 6, &mut rng).unwrap().found);
        let e = module(&[1, 1], &[2, 1]);
        let flip = Automorphism::<f64>::permutation(e.algebra(), Perm::from_images(vec![1, 0]).unwrap()).unwrap();
        let v = search_phi_unitary(&e, &e, &flip, 6, &mut rng).unwrap();
        assert!(!v.found && v.residual > 0.1);
    }

    #[test]
    fn norm_of_known_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let e = module(&[2, 1], &[2, 3]);
        assert!((module_map_norm(&RawModuleMap::identity(&e), 4, &mut rng) - 1.0).abs() < 1e-12);
        let scaled = RawModuleMap::new(&e, &e, RawModuleMap::<f64>::identity(&e).matrix() * Complex::new(0.0, 3.0)).unwrap();
        assert!((module_map_norm(&scaled, 4, &mut rng) - 3.0).abs() < 1e-12);
        // x ↦ x e₁₁ has norm 1 but a Euclidean norm bound above 1
        let b = e.algebra().matrix_unit(0, 0, 0);
        let a = RawModuleMap::from_fn(&e, &e, |x| x.right_mul(&b)).unwrap();
        assert!((module_map_norm(&a, 4, &mut rng) - 1.0).abs() < 1e-12);
    }

    /// Why the factorization check only draws surjective φ: for `ℂ → M₂`
    /// the extension can have the larger norm.
    #[test]
    fn factor_norm_grows_for_a_non_surjective_hom() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = MultiMatrixAlgebra::new(vec![1]).unwrap();
        let phi = crate::corr::UnitalHom::<f64>::from_mult(&b, vec![vec![2]]).unwrap();
        let e = module(&[1], &[2]);
        let f = HilbertModule::new(phi.target(), vec![2]).unwrap();
        // a(x) = x₁e₁₁ + x₂e₁₂
        let mut m = CMat::<f64>::zeros(f.dim(), e.dim());
        m[(0, 0)] = Complex::new(1.0, 0.0);
        m[(1, 1)] = Complex::new(1.0, 0.0);
        let a = RawModuleMap::new(&e, &f, m).unwrap();
        let (cm, a_prime) = crate::genmap::factorize(&a, &phi).unwrap();
        assert!(a_prime.compose(&cm.map).unwrap().distance(&a) < 1e-12);
        assert!((module_map_norm(&a, 8, &mut rng) - 1.0).abs() < 1e-9);
        assert!((module_map_norm(&a_prime, 8, &mut rng) - 2f64.sqrt()).abs() < 1e-9);
    }
}
