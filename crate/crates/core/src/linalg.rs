//! Dense complex linear algebra used by the module machinery.

use crate::error::{Error, Result};
use crate::scalar::{cone, cx, czero, CMat, CVec, Real};
use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn singular_values<T: Real>(m: &CMat<T>) -> Vec<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<T> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Largest singular value; zero for empty matrices.
pub fn spectral_norm<T: Real>(m: &CMat<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

/// Numerical rank with cutoff `rank_tol · σ_max`.
pub fn rank<T: Real>(m: &CMat<T>) -> usize {
    let sv = singular_values(m);
    let Some(&smax) = sv.first() else { return 0 };
    if smax <= T::zero_floor() {
        return 0;
    }
    let cut = T::rank_tol() * smax;
    sv.iter().filter(|&&s| s > cut).count()
}

pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// `max(‖m†m − 1‖, ‖mm† − 1‖)`; infinite for non-square input.
pub fn unitarity_residual<T: Real>(m: &CMat<T>) -> T {
    if m.nrows() != m.ncols() {
        return T::lit(f64::INFINITY);
    }
    if m.nrows() == 0 {
        return T::zero();
    }
    let id = CMat::<T>::identity(m.nrows(), m.ncols());
    let a = spectral_norm(&(m.adjoint() * m - &id));
    let b = spectral_norm(&(m * m.adjoint() - &id));
    a.max(b)
}

pub fn is_unitary<T: Real>(m: &CMat<T>) -> bool {
    unitarity_residual(m) <= T::check_tol()
}

pub fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat<T> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        cx(T::lit(re), T::lit(im))
    })
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal pushed into `Q`.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat<T> {
    if n == 0 {
        return CMat::<T>::zeros(0, 0);
    }
    let g = gaussian::<T, R>(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let m = d.modulus();
        let phase = if m > T::zero_floor() { d.unscale(m) } else { cone() };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random unimodular scalar.
pub fn random_phase<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let t: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    cx(T::lit(t.cos()), T::lit(t.sin()))
}

pub fn matrix_unit<T: Real>(rows: usize, cols: usize, r: usize, c: usize) -> CMat<T> {
    let mut m = CMat::<T>::zeros(rows, cols);
    m[(r, c)] = cone();
    m
}

pub fn block_diag<T: Real>(blocks: &[CMat<T>]) -> CMat<T> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::<T>::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Concatenates matrices row-major into one coordinate vector.
pub fn flatten<T: Real>(blocks: &[CMat<T>]) -> CVec<T> {
    let len: usize = blocks.iter().map(|b| b.len()).sum();
    let mut v = CVec::<T>::zeros(len);
    let mut k = 0;
    for b in blocks {
        for r in 0..b.nrows() {
            for c in 0..b.ncols() {
                v[k] = b[(r, c)];
                k += 1;
            }
        }
    }
    v
}

/// Inverse of [`flatten`] for the given block shapes.
pub fn unflatten<T: Real>(shapes: &[(usize, usize)], v: &CVec<T>) -> Vec<CMat<T>> {
    let mut k = 0;
    shapes
        .iter()
        .map(|&(rows, cols)| {
            let m = DMatrix::from_fn(rows, cols, |r, c| v[k + r * cols + c]);
            k += rows * cols;
            m
        })
        .collect()
}

/// Stacks column vectors into a matrix.
pub fn columns<T: Real>(rows: usize, cols: &[CVec<T>]) -> CMat<T> {
    let mut m = CMat::<T>::zeros(rows, cols.len());
    for (j, v) in cols.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Least-squares solution of `a · x = b` through the SVD pseudo-inverse.
pub fn lstsq<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    if a.ncols() == 0 {
        return CMat::<T>::zeros(0, b.ncols());
    }
    if a.nrows() == 0 {
        return CMat::<T>::zeros(a.ncols(), b.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |m, &s| m.max(s));
    let eps = (T::rank_tol() * smax).max(T::zero_floor());
    svd.solve(b, eps).expect("both factors were requested")
}

/// Fits the linear map `A` with `A · inputs = outputs`, where the columns of
/// `inputs` must span the whole domain. Returns the map and the max-abs
/// residual of the fit, which measures well-definedness of the data.
pub fn fit_linear<T: Real>(inputs: &CMat<T>, outputs: &CMat<T>) -> Result<(CMat<T>, T)> {
    assert_eq!(inputs.ncols(), outputs.ncols());
    let dim_in = inputs.nrows();
    let r = rank(inputs);
    if r < dim_in {
        return Err(Error::Underdetermined { rank: r, needed: dim_in });
    }
    // inputs† · A† = outputs†
    let a_adj = lstsq(&inputs.adjoint(), &outputs.adjoint());
    let a = a_adj.adjoint();
    let residual = max_abs(&(&a * inputs - outputs));
    Ok((a, residual))
}

/// Orthonormal basis (as columns) of the null space of `a`.
pub fn nullspace<T: Real>(a: &CMat<T>) -> CMat<T> {
    let n = a.ncols();
    if n == 0 {
        return CMat::<T>::zeros(0, 0);
    }
    let mut padded = a.clone();
    if padded.nrows() < n {
        padded = padded.resize_vertically(n, czero());
    }
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().fold(T::zero(), |m, &s| m.max(s));
    let cut = if smax <= T::zero_floor() { T::zero_floor() } else { T::rank_tol() * smax };
    let idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cut)
        .collect();
    let mut basis = CMat::<T>::zeros(n, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        let row = v_t.row(i).adjoint();
        basis.set_column(j, &row);
    }
    basis
}

/// Multiplies by a unimodular scalar so that the first entry above the
/// tolerance (row-major scan) is real positive.
pub fn fix_phase<T: Real>(m: &CMat<T>) -> CMat<T> {
    let floor = T::check_tol();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            let a = z.modulus();
            if a > floor {
                let phase = z.conj().unscale(a);
                return m.map(|w| w * phase);
            }
        }
    }
    m.clone()
}

/// Unit vector along the principal eigenvector of a Hermitian PSD matrix,
/// scaled by the square root of its eigenvalue.
pub(crate) fn principal_factor<T: Real>(h: &CMat<T>) -> DVector<Complex<T>> {
    let eig = h.clone().symmetric_eigen();
    let (mut best, mut val) = (0, T::lit(f64::NEG_INFINITY));
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if e > val {
            val = e;
            best = i;
        }
    }
    let v = eig.eigenvectors.column(best).into_owned();
    v * cx(val.max(T::zero()).sqrt(), T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 0..5 {
            let u = random_unitary::<f64, _>(&mut rng, n);
            assert!(unitarity_residual(&u) < 1e-12);
        }
    }

    #[test]
    fn rank_and_nullspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gaussian::<f64, _>(&mut rng, 4, 2);
        let b = gaussian::<f64, _>(&mut rng, 2, 5);
        let m = &a * &b;
        assert_eq!(rank(&m), 2);
        let ns = nullspace(&m);
        assert_eq!(ns.ncols(), 3);
        assert!(max_abs(&(&m * &ns)) < 1e-12);
        assert_eq!(rank(&CMat::<f64>::zeros(3, 3)), 0);
    }

    #[test]
    fn fit_linear_recovers_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = gaussian::<f64, _>(&mut rng, 3, 4);
        let z = gaussian::<f64, _>(&mut rng, 4, 9);
        let (fit, res) = fit_linear(&z, &(&a * &z)).unwrap();
        assert!(res < 1e-12);
        assert!(max_abs(&(fit - a)) < 1e-12);
        let thin = gaussian::<f64, _>(&mut rng, 4, 2);
        assert!(matches!(
            fit_linear(&thin, &thin),
            Err(Error::Underdetermined { rank: 2, needed: 4 })
        ));
    }

    #[test]
    fn flatten_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let blocks = vec![gaussian::<f64, _>(&mut rng, 2, 3), gaussian(&mut rng, 0, 2), gaussian(&mut rng, 1, 1)];
        let shapes: Vec<_> = blocks.iter().map(|b| (b.nrows(), b.ncols())).collect();
        let v = flatten(&blocks);
        assert_eq!(v[1], blocks[0][(0, 1)]);
        assert_eq!(unflatten(&shapes, &v), blocks);
    }

    #[test]
    fn f32_precision_works() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary::<f32, _>(&mut rng, 3);
        assert!(is_unitary(&u));
    }
}
