//! Generalized module maps.
//!
//! Every map here is a plain complex-linear matrix in the coordinates of
//! [`HilbertModule::basis`]. Properties such as φ-linearity are verified on
//! spanning sets, never assumed.

use crate::algebra::{AlgebraElement, Automorphism, MultiMatrixAlgebra};
use crate::corr::{extend_module, Extension, UnitalHom};
use crate::error::{Error, Result};
use crate::hilbmod::{AdjointableOperator, HilbertModule, ModuleElement};
use crate::linalg;
use crate::perm::Perm;
use crate::scalar::{cone, czero, CMat, CVec, Real};
use crate::Homomorphism;
use rand::Rng;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct RawModuleMap<T: Real> {
    domain: HilbertModule,
    codomain: HilbertModule,
    matrix: CMat<T>,
}

impl<T: Real> RawModuleMap<T> {
    pub fn new(domain: &HilbertModule, codomain: &HilbertModule, matrix: CMat<T>) -> Result<Self> {
        if matrix.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::Shape(format!(
                "module map must be {}x{}, got {}x{}",
                codomain.dim(),
                domain.dim(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(RawModuleMap { domain: domain.clone(), codomain: codomain.clone(), matrix })
    }

    /// Tabulates `f` on the coordinate basis.
    pub fn from_fn(
        domain: &HilbertModule,
        codomain: &HilbertModule,
        f: impl Fn(&ModuleElement<T>) -> Result<ModuleElement<T>>,
    ) -> Result<Self> {
        let cols = domain
            .basis::<T>()
            .iter()
            .map(|x| {
                let y = f(x)?;
                if y.module() != codomain {
                    return Err(Error::ModuleMismatch("map leaves its codomain".into()));
                }
                Ok(y.coords())
            })
            .collect::<Result<Vec<CVec<T>>>>()?;
        Self::new(domain, codomain, linalg::columns(codomain.dim(), &cols))
    }

    pub fn identity(module: &HilbertModule) -> Self {
        let d = module.dim();
        RawModuleMap { domain: module.clone(), codomain: module.clone(), matrix: CMat::identity(d, d) }
    }

    pub fn zero(domain: &HilbertModule, codomain: &HilbertModule) -> Self {
        RawModuleMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix: CMat::zeros(codomain.dim(), domain.dim()),
        }
    }

    pub fn from_operator(a: &AdjointableOperator<T>) -> Self {
        Self::from_fn(a.domain(), a.codomain(), |x| a.apply(x)).expect("operators are total")
    }

    pub fn domain(&self) -> &HilbertModule {
        &self.domain
    }

    pub fn codomain(&self) -> &HilbertModule {
        &self.codomain
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn apply(&self, x: &ModuleElement<T>) -> Result<ModuleElement<T>> {
        if x.module() != &self.domain {
            return Err(Error::ModuleMismatch("map applied outside its domain".into()));
        }
        Ok(self.codomain.element_from_coords(&(&self.matrix * x.coords())))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if other.codomain != self.domain {
            return Err(Error::ModuleMismatch("composition of non-matching maps".into()));
        }
        Self::new(&other.domain, &self.codomain, &self.matrix * &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::ModuleMismatch("difference of maps between different modules".into()));
        }
        Self::new(&self.domain, &self.codomain, &self.matrix - &other.matrix)
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.matrix)
    }

    /// Upper bound for the module-map norm `sup_{‖x‖≤1} ‖ax‖`: the Euclidean
    /// norm times `√(Σ min(mᵢ,nᵢ))`, which bounds `‖x‖_F / ‖x‖`.
    pub fn norm_bound(&self) -> T {
        let r: usize = self.domain.shapes().iter().map(|&(m, n)| m.min(n)).sum();
        linalg::spectral_norm(&self.matrix) * T::lit(r as f64).sqrt()
    }

    /// Bound on the module norm of `self − other`.
    pub fn distance(&self, other: &Self) -> T {
        self.sub(other).map(|d| d.norm_bound()).unwrap_or(T::lit(f64::INFINITY))
    }

    /// Reads a right-linear endomorphism-or-map as a blockwise operator;
    /// fails if the map is not right-linear.
    pub fn to_operator(&self) -> Result<AdjointableOperator<T>> {
        if self.domain.algebra() != self.codomain.algebra() {
            return Err(Error::AlgebraMismatch("right-linear maps need a common algebra".into()));
        }
        let id = Automorphism::identity(self.domain.algebra());
        let res = phi_linear_residual(self, &id)?;
        if res > T::check_tol() {
            return Err(Error::NotRightLinear(res.as_f64()));
        }
        let blocks = (0..self.domain.mults().len())
            .map(|i| {
                let (m, q) = (self.domain.mults()[i], self.codomain.mults()[i]);
                let mut a = CMat::<T>::zeros(q, m);
                let n = self.domain.algebra().block(i);
                for r in 0..m {
                    let mut x = self.domain.zero_element::<T>();
                    let mut blocks = x.blocks().to_vec();
                    blocks[i] = linalg::matrix_unit(m, n, r, 0);
                    x = ModuleElement::new(&self.domain, blocks).expect("shape");
                    let y = self.apply(&x).expect("domain");
                    a.set_column(r, &y.block(i).column(0));
                }
                a
            })
            .collect();
        AdjointableOperator::new(&self.domain, &self.codomain, blocks)
    }
}

fn check_hom_fits<T: Real, H: Homomorphism<T> + ?Sized>(a: &RawModuleMap<T>, phi: &H) -> Result<()> {
    if phi.source() != a.domain().algebra() || phi.target() != a.codomain().algebra() {
        return Err(Error::AlgebraMismatch(format!(
            "homomorphism {:?} -> {:?} does not fit a map over {:?} -> {:?}",
            phi.source().blocks(),
            phi.target().blocks(),
            a.domain().algebra().blocks(),
            a.codomain().algebra().blocks()
        )));
    }
    Ok(())
}

/// `max ‖a(xb) − a(x)φ(b)‖` over basis vectors `x` and matrix units `b`.
pub fn phi_linear_residual<T: Real, H: Homomorphism<T> + ?Sized>(a: &RawModuleMap<T>, phi: &H) -> Result<T> {
    check_hom_fits(a, phi)?;
    let mut worst = T::zero();
    let units = phi.source().matrix_units::<T>();
    let images = units.iter().map(|b| phi.apply(b)).collect::<Result<Vec<_>>>()?;
    for x in a.domain().basis::<T>() {
        let ax = a.apply(&x)?;
        for (b, pb) in units.iter().zip(&images) {
            let lhs = a.apply(&x.right_mul(b)?)?;
            let rhs = ax.right_mul(pb)?;
            worst = worst.max(lhs.distance(&rhs));
        }
    }
    Ok(worst)
}

/// `max ‖⟨ax,ay⟩ − φ(⟨x,y⟩)‖` over basis pairs.
pub fn phi_isometry_residual<T: Real, H: Homomorphism<T> + ?Sized>(a: &RawModuleMap<T>, phi: &H) -> Result<T> {
    check_hom_fits(a, phi)?;
    let basis = a.domain().basis::<T>();
    let images = basis.iter().map(|x| a.apply(x)).collect::<Result<Vec<_>>>()?;
    let mut worst = T::zero();
    for (x, ax) in basis.iter().zip(&images) {
        for (y, ay) in basis.iter().zip(&images) {
            let lhs = ax.inner(ay)?;
            let rhs = phi.apply(&x.inner(y)?)?;
            worst = worst.max(lhs.distance(&rhs));
        }
    }
    Ok(worst)
}

pub fn check_phi_linear<T: Real, H: Homomorphism<T> + ?Sized>(a: &RawModuleMap<T>, phi: &H) -> Result<bool> {
    Ok(phi_linear_residual(a, phi)? <= T::check_tol())
}

pub fn check_phi_isometry<T: Real, H: Homomorphism<T> + ?Sized>(a: &RawModuleMap<T>, phi: &H) -> Result<bool> {
    Ok(phi_isometry_residual(a, phi)? <= T::check_tol())
}

/// A surjective φ-isometry.
pub fn check_phi_unitary<T: Real, H: Homomorphism<T> + ?Sized>(a: &RawModuleMap<T>, phi: &H) -> Result<bool> {
    Ok(check_phi_isometry(a, phi)? && a.rank() == a.codomain().dim())
}

/// `i_φ: x ↦ x⊙1` into `E ⊙_φ C`.
#[derive(Clone, Debug)]
pub struct CanonicalMap<T: Real> {
    pub extension: Extension<T>,
    pub map: RawModuleMap<T>,
}

pub fn canonical_map<T: Real>(e: &HilbertModule, phi: &UnitalHom<T>) -> Result<CanonicalMap<T>> {
    let extension = extend_module(e, phi)?;
    let map = RawModuleMap::from_fn(e, &extension.module(), |x| extension.embed(x))?;
    Ok(CanonicalMap { extension, map })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonicalMapProperties {
    pub injective_by_rank: bool,
    /// No zero row of `μ` over the support, i.e. `φ|_{B_E}` injective.
    pub injective_by_criterion: bool,
    pub surjective_by_rank: bool,
    /// `φ(B_E)` is a right ideal of `C`.
    pub surjective_by_ideal: bool,
}

impl CanonicalMapProperties {
    pub fn injective(&self) -> bool {
        self.injective_by_rank
    }

    pub fn surjective(&self) -> bool {
        self.surjective_by_rank
    }

    pub fn consistent(&self) -> bool {
        self.injective_by_rank == self.injective_by_criterion && self.surjective_by_rank == self.surjective_by_ideal
    }
}

pub fn canonical_map_properties<T: Real>(e: &HilbertModule, phi: &UnitalHom<T>) -> Result<CanonicalMapProperties> {
    let cm = canonical_map(e, phi)?;
    let rank = cm.map.rank();
    let support = e.support();
    let injective_by_criterion = support.iter().all(|&i| phi.mult()[i].iter().any(|&x| x > 0));

    let b = e.algebra();
    let c = phi.target();
    let ideal: Vec<AlgebraElement<T>> = b
        .matrix_units::<T>()
        .into_iter()
        .filter(|u| support.iter().any(|&i| u.block(i).iter().any(|z| *z != czero())))
        .map(|u| phi.apply(&u))
        .collect::<Result<_>>()?;
    let c_units = c.matrix_units::<T>();
    let mut spanned: Vec<CVec<T>> = ideal.iter().map(AlgebraElement::coords).collect();
    let base_rank = linalg::rank(&linalg::columns(c.dim(), &spanned));
    for f in &ideal {
        for cu in &c_units {
            spanned.push(f.multiply(cu)?.coords());
        }
    }
    let grown_rank = linalg::rank(&linalg::columns(c.dim(), &spanned));

    Ok(CanonicalMapProperties {
        injective_by_rank: rank == e.dim(),
        injective_by_criterion,
        surjective_by_rank: rank == cm.extension.module().dim(),
        surjective_by_ideal: base_rank == grown_rank,
    })
}

/// The right-linear `a′` on `E ⊙_φ C` with `a = a′ i_φ`, fitted from
/// `x⊙c ↦ (ax)c`.
pub fn factorize<T: Real>(a: &RawModuleMap<T>, phi: &UnitalHom<T>) -> Result<(CanonicalMap<T>, RawModuleMap<T>)> {
    let res = phi_linear_residual(a, phi)?;
    if res > T::check_tol() {
        return Err(Error::NotPhiLinear(res.as_f64()));
    }
    let cm = canonical_map(a.domain(), phi)?;
    let ext = cm.extension.module();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for x in a.domain().basis::<T>() {
        let ax = a.apply(&x)?;
        for c in phi.target().matrix_units::<T>() {
            inputs.push(cm.extension.pair(&x, &c)?.coords());
            outputs.push(ax.right_mul(&c)?.coords());
        }
    }
    let (m, fit) = linalg::fit_linear(
        &linalg::columns(ext.dim(), &inputs),
        &linalg::columns(a.codomain().dim(), &outputs),
    )?;
    if fit > T::check_tol() {
        return Err(Error::Inconsistent(fit.as_f64()));
    }
    let a_prime = RawModuleMap::new(&ext, a.codomain(), m)?;
    Ok((cm, a_prime))
}

/// The φ-adjoint `a*: F → E` with `⟨ax,y⟩ = φ(⟨x,a*y⟩)`.
pub fn phi_adjoint<T: Real, H: Homomorphism<T> + ?Sized>(a: &RawModuleMap<T>, phi: &H) -> Result<RawModuleMap<T>> {
    check_hom_fits(a, phi)?;
    let e = a.domain();
    let f = a.codomain();
    let range = e.range_ideal();
    let ideal_units: Vec<AlgebraElement<T>> = range
        .algebra
        .matrix_units::<T>()
        .iter()
        .map(|u| range.embed(e.algebra(), u))
        .collect();
    let images: Vec<CVec<T>> = ideal_units.iter().map(|u| phi.apply(u).map(|v| v.coords())).collect::<Result<_>>()?;
    if linalg::rank(&linalg::columns(phi.target().dim(), &images)) < range.algebra.dim() {
        return Err(Error::NotInjectiveOnRange);
    }

    let basis_e = e.basis::<T>();
    let basis_f = f.basis::<T>();
    let cdim = phi.target().dim();
    // L z stacks φ(⟨x, z⟩) over basis x; linear in z
    let mut lhs = CMat::<T>::zeros(basis_e.len() * cdim, e.dim());
    for (t, et) in basis_e.iter().enumerate() {
        for (s, x) in basis_e.iter().enumerate() {
            let v = phi.apply(&x.inner(et)?)?.coords();
            lhs.view_mut((s * cdim, t), (cdim, 1)).copy_from(&v);
        }
    }
    let mut rhs = CMat::<T>::zeros(basis_e.len() * cdim, f.dim());
    let ax: Vec<ModuleElement<T>> = basis_e.iter().map(|x| a.apply(x)).collect::<Result<_>>()?;
    for (t, y) in basis_f.iter().enumerate() {
        for (s, axs) in ax.iter().enumerate() {
            let v = axs.inner(y)?.coords();
            rhs.view_mut((s * cdim, t), (cdim, 1)).copy_from(&v);
        }
    }
    let sol = linalg::lstsq(&lhs, &rhs);
    let res = linalg::max_abs(&(&lhs * &sol - &rhs));
    if res > T::check_tol() {
        return Err(Error::NoAdjoint(res.as_f64()));
    }
    RawModuleMap::new(f, e, sol)
}

/// Projection `vv*` onto the range of an adjointable φ-isometry.
pub fn complemented_range<T: Real, H: Homomorphism<T> + ?Sized>(
    v: &RawModuleMap<T>,
    phi: &H,
) -> Result<RawModuleMap<T>> {
    let res = phi_isometry_residual(v, phi)?;
    if res > T::check_tol() {
        return Err(Error::NotIsometry(res.as_f64()));
    }
    let adj = phi_adjoint(v, phi)?;
    v.compose(&adj)
}

/// `L(E) ≅ ⊕ M_{nᵢ+mᵢ}`.
pub fn linking_algebra(e: &HilbertModule) -> MultiMatrixAlgebra {
    MultiMatrixAlgebra::new(e.shapes().iter().map(|&(m, n)| n + m).collect()).expect("nᵢ ≥ 1")
}

/// Blockwise `[[b, y*], [x, a]]`.
pub fn linking_element<T: Real>(
    b: &AlgebraElement<T>,
    x: &ModuleElement<T>,
    y: &ModuleElement<T>,
    a: &AdjointableOperator<T>,
) -> Result<AlgebraElement<T>> {
    let e = x.module();
    if y.module() != e || a.domain() != e || a.codomain() != e || b.algebra() != e.algebra() {
        return Err(Error::ModuleMismatch("linking corners over different modules".into()));
    }
    let blocks = e
        .shapes()
        .iter()
        .enumerate()
        .map(|(i, &(m, n))| {
            let mut z = CMat::<T>::zeros(n + m, n + m);
            z.view_mut((0, 0), (n, n)).copy_from(b.block(i));
            z.view_mut((0, n), (n, m)).copy_from(&y.block(i).adjoint());
            z.view_mut((n, 0), (m, n)).copy_from(x.block(i));
            z.view_mut((n, n), (m, m)).copy_from(a.block(i));
            z
        })
        .collect();
    AlgebraElement::new(&linking_algebra(e), blocks)
}

/// Inverse of [`linking_element`]: `(b, x, y, a)`.
pub type LinkingCorners<T> = (AlgebraElement<T>, ModuleElement<T>, ModuleElement<T>, AdjointableOperator<T>);

pub fn linking_corners<T: Real>(e: &HilbertModule, l: &AlgebraElement<T>) -> Result<LinkingCorners<T>> {
    if l.algebra() != &linking_algebra(e) {
        return Err(Error::AlgebraMismatch("not an element of the linking algebra".into()));
    }
    let shapes = e.shapes();
    let b = shapes.iter().enumerate().map(|(i, &(_, n))| l.block(i).view((0, 0), (n, n)).into_owned()).collect();
    let x = shapes.iter().enumerate().map(|(i, &(m, n))| l.block(i).view((n, 0), (m, n)).into_owned()).collect();
    let y = shapes
        .iter()
        .enumerate()
        .map(|(i, &(m, n))| l.block(i).view((0, n), (n, m)).adjoint())
        .collect();
    let a = shapes.iter().enumerate().map(|(i, &(m, n))| l.block(i).view((n, n), (m, m)).into_owned()).collect();
    Ok((
        AlgebraElement::new(e.algebra(), b)?,
        ModuleElement::new(e, x)?,
        ModuleElement::new(e, y)?,
        AdjointableOperator::new(e, e, a)?,
    ))
}

/// `Φ_v: L(E) → L(F)` for a φ-isometry `v`, with corners `φ`, `v` and
/// `θ_v(a) = vav*` (defined through `θ_v(xy*) = (vx)(vy)*`).
#[derive(Clone, Debug)]
pub struct LinkingHom<T: Real> {
    v: RawModuleMap<T>,
    phi_matrix: CMat<T>,
    // columns: θ_v of the matrix units of B^a(E), as operator coordinates on F
    theta_matrix: CMat<T>,
}

impl<T: Real> LinkingHom<T> {
    pub fn new<H: Homomorphism<T> + ?Sized>(v: &RawModuleMap<T>, phi: &H) -> Result<Self> {
        let res = phi_isometry_residual(v, phi)?;
        if res > T::check_tol() {
            return Err(Error::NotIsometry(res.as_f64()));
        }
        let b_units = phi.source().matrix_units::<T>();
        let cols: Vec<CVec<T>> = b_units.iter().map(|u| phi.apply(u).map(|x| x.coords())).collect::<Result<_>>()?;
        let phi_matrix = linalg::columns(phi.target().dim(), &cols);

        let e = v.domain();
        let f = v.codomain();
        let op_dim: usize = f.mults().iter().map(|q| q * q).sum();
        let mut theta_cols = Vec::new();
        for (i, &(m, n)) in e.shapes().iter().enumerate() {
            for r in 0..m {
                for s in 0..m {
                    let unit = |row: usize| {
                        let mut blocks: Vec<CMat<T>> = e.shapes().iter().map(|&(mm, nn)| CMat::zeros(mm, nn)).collect();
                        blocks[i] = linalg::matrix_unit(m, n, row, 0);
                        ModuleElement::new(e, blocks).expect("shape")
                    };
                    let op = crate::hilbmod::rank_one(&v.apply(&unit(r))?, &v.apply(&unit(s))?)?;
                    theta_cols.push(linalg::flatten(op.blocks()));
                }
            }
        }
        Ok(LinkingHom { v: v.clone(), phi_matrix, theta_matrix: linalg::columns(op_dim, &theta_cols) })
    }

    pub fn theta(&self, a: &AdjointableOperator<T>) -> Result<AdjointableOperator<T>> {
        let e = self.v.domain();
        let f = self.v.codomain();
        if a.domain() != e || a.codomain() != e {
            return Err(Error::ModuleMismatch("θ_v takes operators on the domain".into()));
        }
        let out = &self.theta_matrix * linalg::flatten(a.blocks());
        let shapes: Vec<(usize, usize)> = f.mults().iter().map(|&q| (q, q)).collect();
        AdjointableOperator::new(f, f, linalg::unflatten(&shapes, &out))
    }

    pub fn apply(&self, l: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
        let (b, x, y, a) = linking_corners(self.v.domain(), l)?;
        let f = self.v.codomain();
        let pb = f.algebra().element_from_coords(&(&self.phi_matrix * b.coords()));
        linking_element(&pb, &self.v.apply(&x)?, &self.v.apply(&y)?, &self.theta(&a)?)
    }

    pub fn source(&self) -> MultiMatrixAlgebra {
        linking_algebra(self.v.domain())
    }

    pub fn target(&self) -> MultiMatrixAlgebra {
        linking_algebra(self.v.codomain())
    }
}

/// A φ-unitary on `E` for an automorphism `φ` of `B`:
/// `(ux)_{σ(i)} = Wᵢ xᵢ wᵢ†`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedUnitary<T: Real> {
    module: HilbertModule,
    phi: Automorphism<T>,
    block_unitaries: Vec<CMat<T>>,
}

impl<T: Real> GeneralizedUnitary<T> {
    pub fn new(module: &HilbertModule, phi: Automorphism<T>, block_unitaries: Vec<CMat<T>>) -> Result<Self> {
        if phi.algebra() != module.algebra() {
            return Err(Error::AlgebraMismatch("automorphism of a different algebra".into()));
        }
        let m = module.mults();
        if let Some(i) = (0..m.len()).find(|&i| m[phi.perm().apply(i)] != m[i]) {
            return Err(Error::NotGeneralizedUnitary(format!(
                "m mismatch at blocks ({}, {})",
                i + 1,
                phi.perm().apply(i) + 1
            )));
        }
        if block_unitaries.len() != m.len() {
            return Err(Error::Shape("one block unitary per block".into()));
        }
        for (i, w) in block_unitaries.iter().enumerate() {
            if w.shape() != (m[i], m[i]) || !linalg::is_unitary(w) {
                return Err(Error::NotUnitary(format!("block unitary {}", i + 1)));
            }
        }
        Ok(GeneralizedUnitary { module: module.clone(), phi, block_unitaries })
    }

    /// The normal-form witness `W = 1`.
    pub fn canonical(module: &HilbertModule, phi: Automorphism<T>) -> Result<Self> {
        let w = module.mults().iter().map(|&m| CMat::identity(m, m)).collect();
        Self::new(module, phi, w)
    }

    pub fn identity(module: &HilbertModule) -> Self {
        Self::canonical(module, Automorphism::identity(module.algebra())).expect("identity")
    }

    pub fn random<R: Rng + ?Sized>(module: &HilbertModule, phi: Automorphism<T>, rng: &mut R) -> Result<Self> {
        let w = module.mults().iter().map(|&m| linalg::random_unitary(rng, m)).collect();
        Self::new(module, phi, w)
    }

    pub fn module(&self) -> &HilbertModule {
        &self.module
    }

    pub fn phi(&self) -> &Automorphism<T> {
        &self.phi
    }

    pub fn perm(&self) -> &Perm {
        self.phi.perm()
    }

    pub fn block_unitaries(&self) -> &[CMat<T>] {
        &self.block_unitaries
    }

    pub fn apply(&self, x: &ModuleElement<T>) -> Result<ModuleElement<T>> {
        if x.module() != &self.module {
            return Err(Error::ModuleMismatch("generalized unitary applied to a foreign element".into()));
        }
        let mut blocks = x.blocks().to_vec();
        for i in 0..blocks.len() {
            let w = &self.phi.conjugators()[i];
            blocks[self.perm().apply(i)] = &self.block_unitaries[i] * x.block(i) * w.adjoint();
        }
        ModuleElement::new(&self.module, blocks)
    }

    pub fn to_raw(&self) -> RawModuleMap<T> {
        RawModuleMap::from_fn(&self.module, &self.module, |x| self.apply(x)).expect("total")
    }

    /// `self ∘ other`: a `(φ∘φ′)`-unitary with `W_{σ′(i)}W′ᵢ`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.module != other.module {
            return Err(Error::ModuleMismatch("composition across modules".into()));
        }
        let phi = self.phi.compose(&other.phi)?;
        let w = (0..self.block_unitaries.len())
            .map(|i| &self.block_unitaries[other.perm().apply(i)] * &other.block_unitaries[i])
            .collect();
        Ok(GeneralizedUnitary { module: self.module.clone(), phi, block_unitaries: w })
    }

    pub fn inverse(&self) -> Self {
        let inv = self.perm().inverse();
        let w = (0..self.block_unitaries.len()).map(|j| self.block_unitaries[inv.apply(j)].adjoint()).collect();
        GeneralizedUnitary { module: self.module.clone(), phi: self.phi.inverse(), block_unitaries: w }
    }

    /// `w∘u` for an ordinary unitary `w`.
    pub fn left_mul(&self, w: &AdjointableOperator<T>) -> Result<Self> {
        if w.domain() != &self.module || w.codomain() != &self.module || !w.is_unitary() {
            return Err(Error::NotUnitary("left factor must be a unitary on the same module".into()));
        }
        let blocks = (0..self.block_unitaries.len())
            .map(|i| w.block(self.perm().apply(i)) * &self.block_unitaries[i])
            .collect();
        Ok(GeneralizedUnitary { module: self.module.clone(), phi: self.phi.clone(), block_unitaries: blocks })
    }

    /// Same class on `B_E`: the two automorphisms agree on the range ideal.
    pub fn same_class(&self, other: &Self) -> bool {
        self.module == other.module && automorphisms_agree_on(&self.module, &self.phi, &other.phi)
    }
}

/// `φ = ψ` on `B_E`.
pub fn automorphisms_agree_on<T: Real>(e: &HilbertModule, phi: &Automorphism<T>, psi: &Automorphism<T>) -> bool {
    let range = e.range_ideal();
    range.algebra.matrix_units::<T>().iter().all(|u| {
        let b = range.embed(e.algebra(), u);
        match (phi.apply(&b), psi.apply(&b)) {
            (Ok(x), Ok(y)) => x.distance(&y) <= T::check_tol(),
            _ => false,
        }
    })
}

/// Why no φ-unitary exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Obstruction {
    /// Block `block` lies in the support but `σ(block)` does not.
    SupportNotInvariant { block: usize },
    /// `m_{σ(i)} ≠ mᵢ` for `(i, σ(i)) = blocks`, smallest such `i`.
    MultMismatch { blocks: (usize, usize) },
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obstruction::SupportNotInvariant { .. } => write!(f, "support not invariant"),
            Obstruction::MultMismatch { blocks: (i, j) } => write!(f, "m mismatch at blocks ({}, {})", i + 1, j + 1),
        }
    }
}

#[derive(Clone, Debug)]
pub enum UnitaryExistence<T: Real> {
    Witness(GeneralizedUnitary<T>),
    Obstructed(Obstruction),
}

impl<T: Real> UnitaryExistence<T> {
    pub fn exists(&self) -> bool {
        matches!(self, UnitaryExistence::Witness(_))
    }

    pub fn witness(&self) -> Option<&GeneralizedUnitary<T>> {
        match self {
            UnitaryExistence::Witness(u) => Some(u),
            UnitaryExistence::Obstructed(_) => None,
        }
    }
}

/// A φ-unitary exists iff `m∘σ = m`; support invariance is tested first.
pub fn exists_phi_unitary<T: Real>(e: &HilbertModule, phi: &Automorphism<T>) -> Result<UnitaryExistence<T>> {
    if e.algebra() != phi.algebra() {
        return Err(Error::AlgebraMismatch("automorphism of a different algebra".into()));
    }
    let m = e.mults();
    let sigma = phi.perm();
    if let Some(i) = e.support().into_iter().find(|&i| m[sigma.apply(i)] == 0) {
        return Ok(UnitaryExistence::Obstructed(Obstruction::SupportNotInvariant { block: i }));
    }
    if let Some(i) = (0..m.len()).find(|&i| m[sigma.apply(i)] != m[i]) {
        return Ok(UnitaryExistence::Obstructed(Obstruction::MultMismatch { blocks: (i, sigma.apply(i)) }));
    }
    GeneralizedUnitary::canonical(e, phi.clone()).map(UnitaryExistence::Witness)
}

/// `u_v(x) = xv*`, a unitary for `φ_v = v•v*`.
pub fn quasi_inner_unitary<T: Real>(e: &HilbertModule, v: &AlgebraElement<T>) -> Result<GeneralizedUnitary<T>> {
    if v.algebra() != e.algebra() {
        return Err(Error::AlgebraMismatch("unitary from a different algebra".into()));
    }
    GeneralizedUnitary::canonical(e, Automorphism::inner(v)?)
}

/// Recovers `[φ]_E` (an automorphism of `B_E`) from `⟨ux,uy⟩ = φ(⟨x,y⟩)`.
pub fn induced_automorphism<T: Real>(u: &RawModuleMap<T>) -> Result<Automorphism<T>> {
    let e = u.domain();
    if u.codomain() != e {
        return Err(Error::NotGeneralizedUnitary("not an endomorphism".into()));
    }
    let range = e.range_ideal();
    let basis = e.basis::<T>();
    let images = basis.iter().map(|x| u.apply(x)).collect::<Result<Vec<_>>>()?;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (x, ux) in basis.iter().zip(&images) {
        for (y, uy) in basis.iter().zip(&images) {
            inputs.push(range.restrict(&x.inner(y)?).coords());
            let out = ux.inner(uy)?;
            // outputs must also live in B_E
            let back = range.embed(e.algebra(), &range.restrict(&out));
            if back.distance(&out) > T::check_tol() {
                return Err(Error::NotGeneralizedUnitary("inner products leave the range ideal".into()));
            }
            outputs.push(range.restrict(&out).coords());
        }
    }
    let dim = range.algebra.dim();
    let (lin, res) = linalg::fit_linear(&linalg::columns(dim, &inputs), &linalg::columns(dim, &outputs))?;
    if res > T::check_tol() {
        return Err(Error::NotGeneralizedUnitary(format!("inconsistent inner products (residual {res})")));
    }
    let ra = &range.algebra;
    let psi = |b: &AlgebraElement<T>| ra.element_from_coords(&(&lin * b.coords()));
    let k = ra.num_blocks();
    let mut images = vec![usize::MAX; k];
    let mut conj = Vec::with_capacity(k);
    for s in 0..k {
        let n = ra.block(s);
        let p = psi(&ra.matrix_unit(s, 0, 0));
        let t = (0..k)
            .max_by(|&a, &b| {
                linalg::spectral_norm(p.block(a)).partial_cmp(&linalg::spectral_norm(p.block(b))).expect("finite")
            })
            .expect("nonempty ideal");
        if ra.block(t) != n {
            return Err(Error::NotGeneralizedUnitary("induced map does not preserve block sizes".into()));
        }
        images[s] = t;
        let f = linalg::principal_factor(p.block(t));
        let mut w = CMat::<T>::zeros(n, n);
        for r in 0..n {
            let col = psi(&ra.matrix_unit(s, r, 0)).block(t) * &f;
            w.set_column(r, &col);
        }
        conj.push(w);
    }
    let perm = Perm::from_images(images)
        .map_err(|_| Error::NotGeneralizedUnitary("induced map is not a block permutation".into()))?;
    let aut = Automorphism::new(ra, perm, conj).map_err(|e| Error::NotGeneralizedUnitary(e.to_string()))?;
    for b in ra.matrix_units::<T>() {
        if aut.apply(&b)?.distance(&psi(&b)) > T::check_tol() {
            return Err(Error::NotGeneralizedUnitary("induced map is not an automorphism".into()));
        }
    }
    Ok(aut)
}

/// The ordinary unitary `v∘u*` relating two unitaries of the same class.
pub fn unitary_quotient_witness<T: Real>(
    v: &GeneralizedUnitary<T>,
    u: &GeneralizedUnitary<T>,
) -> Result<AdjointableOperator<T>> {
    if !v.same_class(u) {
        return Err(Error::IncompatibleClasses);
    }
    v.compose(&u.inverse())?.to_raw().to_operator()
}

/// The unit element of `L(E)`, convenient for homomorphism checks.
pub fn linking_unit<T: Real>(e: &HilbertModule) -> AlgebraElement<T> {
    let l = linking_algebra(e);
    let blocks = l.blocks().iter().map(|&s| CMat::from_diagonal_element(s, s, cone())).collect();
    AlgebraElement::new(&l, blocks).expect("identity shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corr::Correspondence;
    use crate::hilbmod::rank_one;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alg(b: &[usize]) -> MultiMatrixAlgebra {
        MultiMatrixAlgebra::new(b.to_vec()).unwrap()
    }

    fn module(b: &[usize], m: &[usize]) -> HilbertModule {
        HilbertModule::new(&alg(b), m.to_vec()).unwrap()
    }

    fn flip<T: Real>(a: &MultiMatrixAlgebra) -> Automorphism<T> {
        Automorphism::permutation(a, Perm::from_images(vec![1, 0]).unwrap()).unwrap()
    }

    #[test]
    fn identity_passes_everything() {
        let e = module(&[1, 2], &[2, 1]);
        let id = RawModuleMap::<f64>::identity(&e);
        let phi = Automorphism::identity(e.algebra());
        assert!(check_phi_linear(&id, &phi).unwrap());
        assert!(check_phi_isometry(&id, &phi).unwrap());
        assert!(check_phi_unitary(&id, &phi).unwrap());
    }

    #[test]
    fn existence_examples() {
        let e = module(&[1, 1], &[2, 1]);
        match exists_phi_unitary::<f64>(&e, &flip(e.algebra())).unwrap() {
            UnitaryExistence::Obstructed(o) => assert_eq!(o.to_string(), "m mismatch at blocks (1, 2)"),
            UnitaryExistence::Witness(_) => panic!("no flip-unitary on this module"),
        }
        let e = module(&[1, 1], &[1, 0]);
        match exists_phi_unitary::<f64>(&e, &flip(e.algebra())).unwrap() {
            UnitaryExistence::Obstructed(o) => assert_eq!(o.to_string(), "support not invariant"),
            UnitaryExistence::Witness(_) => panic!("no flip-unitary on this module"),
        }
        let e = module(&[2, 1], &[3, 1]);
        let w = exists_phi_unitary::<f64>(&e, &Automorphism::identity(e.algebra())).unwrap();
        assert!(w.witness().unwrap().to_raw().distance(&RawModuleMap::identity(&e)) < 1e-14);
    }

    #[test]
    fn generalized_unitary_is_phi_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let e = module(&[2, 2, 1], &[3, 3, 2]);
        for _ in 0..4 {
            let phi = Automorphism::<f64>::random(e.algebra(), &mut rng);
            if exists_phi_unitary(&e, &phi).unwrap().exists() {
                let u = GeneralizedUnitary::random(&e, phi.clone(), &mut rng).unwrap();
                assert!(check_phi_unitary(&u.to_raw(), &phi).unwrap());
                assert!(check_phi_linear(&u.to_raw(), &phi).unwrap());
            }
        }
    }

    #[test]
    fn canonical_map_examples() {
        let e = module(&[1, 1], &[2, 1]);
        let f = UnitalHom::<f64>::from_automorphism(&flip(e.algebra()));
        let cm = canonical_map(&e, &f).unwrap();
        assert_eq!(cm.extension.module().mults(), &[1, 2]);
        assert!(check_phi_isometry(&cm.map, &f).unwrap());
        let p = canonical_map_properties(&e, &f).unwrap();
        assert!(p.consistent() && p.injective() && p.surjective());

        let q = UnitalHom::<f64>::quotient(&alg(&[1, 1]), &[0]).unwrap();
        let p = canonical_map_properties(&e, &q).unwrap();
        assert!(p.consistent() && !p.injective() && p.surjective());

        let emb = UnitalHom::<f64>::from_mult(&MultiMatrixAlgebra::scalars(), vec![vec![2]]).unwrap();
        let e1 = HilbertModule::new(&MultiMatrixAlgebra::scalars(), vec![1]).unwrap();
        let p = canonical_map_properties(&e1, &emb).unwrap();
        assert!(p.consistent() && p.injective() && !p.surjective());
    }

    #[test]
    fn factorization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = module(&[1, 2], &[2, 1]);
        let phi = UnitalHom::<f64>::random(e.algebra(), 2, 2, &mut rng);
        let cm = canonical_map(&e, &phi).unwrap();
        let ext = cm.extension.module();
        let f = HilbertModule::new(phi.target(), vec![2, 3]).unwrap();
        let a2 = AdjointableOperator::random(&ext, &f, &mut rng);
        let a = RawModuleMap::from_operator(&a2).compose(&cm.map).unwrap();
        let (cm2, a_prime) = factorize(&a, &phi).unwrap();
        assert!(a_prime.compose(&cm2.map).unwrap().distance(&a) < 1e-9);
        assert!(a_prime.to_operator().is_ok());

        let (_, self_fact) = factorize(&cm.map, &phi).unwrap();
        assert!(self_fact.distance(&RawModuleMap::identity(&ext)) < 1e-9);
    }

    #[test]
    fn factorize_rejects_nonlinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let e = module(&[2], &[2]);
        let phi = UnitalHom::<f64>::from_automorphism(&Automorphism::identity(e.algebra()));
        let m = linalg::gaussian(&mut rng, e.dim(), e.dim());
        let a = RawModuleMap::new(&e, &e, m).unwrap();
        assert!(matches!(factorize(&a, &phi), Err(Error::NotPhiLinear(_))));
    }

    #[test]
    fn adjoint_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let e = module(&[1, 1], &[2, 2]);
        let phi = flip::<f64>(e.algebra());
        let u = GeneralizedUnitary::random(&e, phi.clone(), &mut rng).unwrap();
        let adj = phi_adjoint(&u.to_raw(), &phi).unwrap();
        assert!(adj.distance(&u.inverse().to_raw()) < 1e-9);
        let zero = RawModuleMap::<f64>::zero(&e, &e);
        assert!(phi_adjoint(&zero, &phi).unwrap().norm_bound() < 1e-12);
    }

    #[test]
    fn complemented_range_examples() {
        let scal = MultiMatrixAlgebra::scalars();
        let e = HilbertModule::new(&scal, vec![1]).unwrap();
        let f = HilbertModule::new(&scal, vec![2]).unwrap();
        let v = RawModuleMap::<f64>::from_fn(&e, &f, |x| {
            ModuleElement::new(&f, vec![CMat::from_column_slice(2, 1, &[x.block(0)[(0, 0)], czero()])])
        })
        .unwrap();
        let id = Automorphism::identity(&scal);
        let p = complemented_range(&v, &id).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(p.compose(&p).unwrap().distance(&p) < 1e-12);
    }

    #[test]
    fn linking_hom_for_flip_canonical_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let e = module(&[1, 1], &[1, 1]);
        let f = UnitalHom::<f64>::from_automorphism(&flip(e.algebra()));
        let cm = canonical_map(&e, &f).unwrap();
        let lh = LinkingHom::new(&cm.map, &f).unwrap();
        let l = lh.source();
        for _ in 0..3 {
            let (x, y) = (l.random_element(&mut rng), l.random_element(&mut rng));
            let lhs = lh.apply(&x.multiply(&y).unwrap()).unwrap();
            let rhs = lh.apply(&x).unwrap().multiply(&lh.apply(&y).unwrap()).unwrap();
            assert!(lhs.distance(&rhs) < 1e-10);
            assert!(lh.apply(&x.adjoint()).unwrap().distance(&lh.apply(&x).unwrap().adjoint()) < 1e-10);
        }
        assert!(lh.apply(&linking_unit(&e)).unwrap().distance(&linking_unit(&cm.extension.module())) < 1e-10);
    }

    #[test]
    fn theta_intertwines() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let e = module(&[2, 1], &[1, 2]);
        let phi = UnitalHom::<f64>::random(e.algebra(), 2, 2, &mut rng);
        let cm = canonical_map(&e, &phi).unwrap();
        let lh = LinkingHom::new(&cm.map, &phi).unwrap();
        let a = AdjointableOperator::random(&e, &e, &mut rng);
        let x = e.random_element(&mut rng);
        let lhs = lh.theta(&a).unwrap().apply(&cm.map.apply(&x).unwrap()).unwrap();
        let rhs = cm.map.apply(&a.apply(&x).unwrap()).unwrap();
        assert!(lhs.distance(&rhs) < 1e-10);
    }

    #[test]
    fn quasi_inner_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let e = module(&[2, 3], &[1, 2]);
        let one = e.algebra().one::<f64>();
        assert!(quasi_inner_unitary(&e, &one).unwrap().to_raw().distance(&RawModuleMap::identity(&e)) < 1e-12);
        let v1 = e.algebra().random_unitary::<f64, _>(&mut rng);
        let v2 = e.algebra().random_unitary::<f64, _>(&mut rng);
        let u1 = quasi_inner_unitary(&e, &v1).unwrap();
        assert!(check_phi_unitary(&u1.to_raw(), u1.phi()).unwrap());
        let u12 = quasi_inner_unitary(&e, &v1.multiply(&v2).unwrap()).unwrap();
        let prod = u1.compose(&quasi_inner_unitary(&e, &v2).unwrap()).unwrap();
        assert!(u12.to_raw().distance(&prod.to_raw()) < 1e-10);
    }

    #[test]
    fn induced_automorphism_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let e = module(&[1, 1], &[1, 1]);
        let w = AdjointableOperator::<f64>::random_unitary(&e, &mut rng);
        let psi = induced_automorphism(&RawModuleMap::from_operator(&w)).unwrap();
        assert!(psi.action_eq(&Automorphism::identity(psi.algebra())));
        let u = exists_phi_unitary::<f64>(&e, &flip(e.algebra())).unwrap();
        let psi = induced_automorphism(&u.witness().unwrap().to_raw()).unwrap();
        assert_eq!(psi.perm(), &Perm::from_images(vec![1, 0]).unwrap());

        let e = module(&[2, 2], &[3, 0]);
        let v = e.algebra().random_unitary::<f64, _>(&mut rng);
        let u = quasi_inner_unitary(&e, &v).unwrap();
        let psi = induced_automorphism(&u.to_raw()).unwrap();
        let range = e.range_ideal();
        let expected = Automorphism::inner(&range.restrict(&v)).unwrap();
        assert!(psi.action_eq(&expected));
    }

    #[test]
    fn quotient_witness_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let e = module(&[1, 1], &[2, 2]);
        let u = GeneralizedUnitary::random(&e, flip::<f64>(e.algebra()), &mut rng).unwrap();
        let w = AdjointableOperator::random_unitary(&e, &mut rng);
        let v = u.left_mul(&w).unwrap();
        let got = unitary_quotient_witness(&v, &u).unwrap();
        assert!(got.distance(&w) < 1e-10);
        assert!(unitary_quotient_witness(&u, &u).unwrap().distance(&AdjointableOperator::identity(&e)) < 1e-10);
        let id = GeneralizedUnitary::identity(&e);
        assert!(matches!(unitary_quotient_witness(&u, &id), Err(Error::IncompatibleClasses)));
    }

    #[test]
    fn twisted_hom_conjugators_reach_the_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let b = alg(&[1, 2]);
        let corr = Correspondence::<f64>::random_twisted(&b, &alg(&[3, 2]), vec![vec![1, 0], vec![1, 1]], &mut rng)
            .unwrap();
        let phi = UnitalHom::new(corr).unwrap();
        let e = HilbertModule::new(&b, vec![1, 1]).unwrap();
        let cm = canonical_map(&e, &phi).unwrap();
        assert!(check_phi_isometry(&cm.map, &phi).unwrap());
        let x = e.random_element(&mut rng);
        let y = e.random_element(&mut rng);
        let lhs = rank_one(&cm.map.apply(&x).unwrap(), &cm.map.apply(&y).unwrap()).unwrap();
        assert_eq!(lhs.domain(), &cm.extension.module());
    }
}
