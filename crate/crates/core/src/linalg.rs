//! Complex linear algebra over tensor-product spaces.
//!
//! All composite indices are row-major with subsystem 0 most significant:
//! a basis ket |i_0 i_1 ... i_{n-1}> of subsystems with dimensions
//! (d_0, ..., d_{n-1}) sits at flat index i_0*d_1*...*d_{n-1} + ... + i_{n-1}.
//! Kronecker products follow the same convention, so kron(a, b) acts on
//! (subsystem of a, subsystem of b) in that order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance on Hermiticity deviations accepted by validators and solvers.
pub const HERM_TOL: f64 = 1e-10;

/// Ordered list of subsystem dimensions for a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimSpec {
    dims: Vec<usize>,
}

impl DimSpec {
    /// Builds a dimension list. Every entry must be at least 1 and the list
    /// must be nonempty.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::dim("dimension list is empty"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::dim("subsystem dimension 0"));
        }
        Ok(DimSpec { dims })
    }

    pub fn bipartite(d_a: usize, d_b: usize) -> Result<Self> {
        DimSpec::new(vec![d_a, d_b])
    }

    pub fn single(d: usize) -> Result<Self> {
        DimSpec::new(vec![d])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// Product of all subsystem dimensions.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dim_at(&self, k: usize) -> usize {
        self.dims[k]
    }
}

/// Decomposes a flat index into per-subsystem digits.
fn digits(flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    let mut rem = flat;
    for k in (0..dims.len()).rev() {
        out[k] = rem % dims[k];
        rem /= dims[k];
    }
    out
}

/// Recombines per-subsystem digits into a flat index.
fn flat(digits: &[usize], dims: &[usize]) -> usize {
    let mut out = 0;
    for (d, dim) in digits.iter().zip(dims.iter()) {
        out = out * dim + d;
    }
    out
}

/// Kronecker product with subsystem of `a` most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of a list of factors, folded left to right.
pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    assert!(!factors.is_empty(), "kron_all needs at least one factor");
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        out = kron(&out, f);
    }
    out
}

/// Kronecker product of column vectors.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let (ar, br) = (a.len(), b.len());
    CVector::from_fn(ar * br, |i, _| a[i / br] * b[i % br])
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn trace(m: &CMatrix) -> C64 {
    let mut t = C64::new(0.0, 0.0);
    for i in 0..m.nrows().min(m.ncols()) {
        t += m[(i, i)];
    }
    t
}

/// tr(a * b) without forming the product; requires a.ncols == b.nrows and
/// the result of a*b square.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    assert_eq!(a.ncols(), b.nrows(), "trace_product shape mismatch");
    assert_eq!(a.nrows(), b.ncols(), "trace_product shape mismatch");
    let mut t = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t
}

/// Largest entry magnitude; zero for empty matrices.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest entry magnitude of m - m^dagger.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Errors unless the matrix is square and Hermitian within `HERM_TOL`.
pub fn require_hermitian(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let dev = hermiticity_deviation(m);
    // The negated comparison also rejects NaN entries.
    if !(dev <= HERM_TOL) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Checks that `m` is square with side `dims.total()`.
pub fn require_shape(m: &CMatrix, dims: &DimSpec) -> Result<()> {
    let n = dims.total();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::dim(format!(
            "matrix is {}x{} but dimensions {:?} require {}x{}",
            m.nrows(),
            m.ncols(),
            dims.dims(),
            n,
            n
        )));
    }
    Ok(())
}

fn check_subsystem(dims: &DimSpec, k: usize) -> Result<()> {
    if k >= dims.n_subsystems() {
        return Err(Error::dim(format!(
            "subsystem index {} out of range for {:?}",
            k,
            dims.dims()
        )));
    }
    Ok(())
}

/// Transposes the indices of one subsystem, leaving the rest untouched.
pub fn partial_transpose(m: &CMatrix, dims: &DimSpec, target: usize) -> Result<CMatrix> {
    require_shape(m, dims)?;
    check_subsystem(dims, target)?;
    let n = dims.total();
    let d = dims.dims();
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        let mut rd = digits(r, d);
        for c in 0..n {
            let mut cd = digits(c, d);
            std::mem::swap(&mut rd[target], &mut cd[target]);
            let (rr, cc) = (flat(&rd, d), flat(&cd, d));
            std::mem::swap(&mut rd[target], &mut cd[target]);
            out[(rr, cc)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Traces out every subsystem not listed in `keep`. The kept subsystems stay
/// in their original relative order. `keep` must be strictly increasing and
/// nonempty.
pub fn partial_trace(m: &CMatrix, dims: &DimSpec, keep: &[usize]) -> Result<CMatrix> {
    require_shape(m, dims)?;
    if keep.is_empty() {
        return Err(Error::dim("partial_trace must keep at least one subsystem"));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::dim("keep list must be strictly increasing"));
    }
    check_subsystem(dims, *keep.last().unwrap())?;

    let d = dims.dims();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| d[k]).collect();
    let traced: Vec<usize> = (0..d.len()).filter(|k| !keep.contains(k)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| d[k]).collect();
    let n_keep: usize = kept_dims.iter().product();
    let n_trace: usize = traced_dims.iter().product();

    let mut out = CMatrix::zeros(n_keep, n_keep);
    let mut full_r = vec![0usize; d.len()];
    let mut full_c = vec![0usize; d.len()];
    for a in 0..n_keep {
        let ad = digits(a, &kept_dims);
        for b in 0..n_keep {
            let bd = digits(b, &kept_dims);
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..n_trace {
                let ed = digits(e, &traced_dims);
                for (pos, &k) in keep.iter().enumerate() {
                    full_r[k] = ad[pos];
                    full_c[k] = bd[pos];
                }
                for (pos, &k) in traced.iter().enumerate() {
                    full_r[k] = ed[pos];
                    full_c[k] = ed[pos];
                }
                acc += m[(flat(&full_r, d), flat(&full_c, d))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Reorders subsystems: slot `k` of the output is subsystem `perm[k]` of the
/// input. `perm` must be a permutation of 0..n_subsystems.
pub fn permute_subsystems(m: &CMatrix, dims: &DimSpec, perm: &[usize]) -> Result<CMatrix> {
    require_shape(m, dims)?;
    let n_sub = dims.n_subsystems();
    if perm.len() != n_sub {
        return Err(Error::dim(format!(
            "permutation length {} does not match {} subsystems",
            perm.len(),
            n_sub
        )));
    }
    let mut seen = vec![false; n_sub];
    for &p in perm {
        if p >= n_sub || seen[p] {
            return Err(Error::dim(format!("invalid permutation {:?}", perm)));
        }
        seen[p] = true;
    }

    let d = dims.dims();
    let new_dims: Vec<usize> = perm.iter().map(|&p| d[p]).collect();
    let n = dims.total();
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        let rd = digits(r, d);
        let rn: Vec<usize> = perm.iter().map(|&p| rd[p]).collect();
        let rr = flat(&rn, &new_dims);
        for c in 0..n {
            let cd = digits(c, d);
            let cn: Vec<usize> = perm.iter().map(|&p| cd[p]).collect();
            out[(rr, flat(&cn, &new_dims))] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column k is the eigenvector for values[k]; columns are orthonormal.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Eigenvector column for the eigenvalue at `k` in ascending order.
    pub fn vector(&self, k: usize) -> CVector {
        CVector::from_column_slice(self.vectors.column(k).as_slice())
    }
}

/// Hermitian eigendecomposition. The input is checked against `HERM_TOL`
/// and symmetrised before solving so the solver sees an exactly Hermitian
/// matrix.
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    require_hermitian(m)?;
    let n = m.nrows();
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailed { dim: n })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("eigenvalues of a finite Hermitian matrix are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermEig { values, vectors })
}

/// Schmidt data of a bipartite pure state.
#[derive(Debug, Clone)]
pub struct Schmidt {
    /// Nonnegative coefficients in descending order, length min(d_a, d_b),
    /// zeros included. Squares sum to the squared norm of the input.
    pub coeffs: Vec<f64>,
    /// Orthonormal vectors on side A, aligned with `coeffs`.
    pub a_vecs: Vec<CVector>,
    /// Orthonormal vectors on side B, aligned with `coeffs`.
    pub b_vecs: Vec<CVector>,
}

/// Full Schmidt decomposition psi = sum_k coeffs[k] a_k (x) b_k.
pub fn schmidt_decomposition(psi: &CVector, d_a: usize, d_b: usize) -> Result<Schmidt> {
    if psi.len() != d_a * d_b {
        return Err(Error::dim(format!(
            "vector length {} does not match {}x{}",
            psi.len(),
            d_a,
            d_b
        )));
    }
    let amp = CMatrix::from_fn(d_a, d_b, |i, j| psi[i * d_b + j]);
    let svd = nalgebra::SVD::try_new(amp, true, true, f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailed { dim: d_a.max(d_b) })?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let r = svd.singular_values.len();

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .expect("singular values are finite")
    });

    let mut coeffs = Vec::with_capacity(r);
    let mut a_vecs = Vec::with_capacity(r);
    let mut b_vecs = Vec::with_capacity(r);
    for &k in &order {
        coeffs.push(svd.singular_values[k]);
        a_vecs.push(CVector::from_column_slice(u.column(k).as_slice()));
        b_vecs.push(CVector::from_fn(d_b, |j, _| v_t[(k, j)]));
    }
    Ok(Schmidt {
        coeffs,
        a_vecs,
        b_vecs,
    })
}

/// Schmidt coefficients in descending order with near-zero values (below
/// 1e-12) dropped, so product states report a single coefficient.
pub fn schmidt_coefficients(psi: &CVector, d_a: usize, d_b: usize) -> Result<Vec<f64>> {
    let s = schmidt_decomposition(psi, d_a, d_b)?;
    Ok(s.coeffs.into_iter().filter(|&c| c > 1e-12).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn assert_mat_eq(a: &CMatrix, b: &CMatrix, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let dev = max_abs(&(a - b));
        assert!(dev <= tol, "matrices differ by {dev}");
    }

    fn singlet_projector() -> CMatrix {
        // (|01> - |10>)/sqrt(2) outer product, written out entry by entry.
        let mut m = CMatrix::zeros(4, 4);
        m[(1, 1)] = c(0.5, 0.0);
        m[(2, 2)] = c(0.5, 0.0);
        m[(1, 2)] = c(-0.5, 0.0);
        m[(2, 1)] = c(-0.5, 0.0);
        m
    }

    #[test]
    fn digit_roundtrip() {
        let dims = [2, 3, 4];
        for f in 0..24 {
            assert_eq!(flat(&digits(f, &dims), &dims), f);
        }
        assert_eq!(digits(23, &dims), vec![1, 2, 3]);
        assert_eq!(digits(4, &dims), vec![0, 1, 0]);
    }

    #[test]
    fn kron_matches_hand_values() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k[(0, 0)], c(0.0, 1.0));
        assert_eq!(k[(1, 1)], c(1.0, 0.0));
        assert_eq!(k[(0, 2)], c(0.0, 2.0));
        assert_eq!(k[(3, 3)], c(4.0, 0.0));
        assert_eq!(k[(2, 1)], c(0.0, 0.0));
    }

    #[test]
    fn kron_vec_ordering() {
        let a = CVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let b = CVector::from_vec(vec![c(3.0, 0.0), c(5.0, 0.0), c(7.0, 0.0)]);
        let v = kron_vec(&a, &b);
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], c(3.0, 0.0));
        assert_eq!(v[2], c(7.0, 0.0));
        assert_eq!(v[3], c(6.0, 0.0));
        assert_eq!(v[5], c(14.0, 0.0));
    }

    #[test]
    fn trace_product_agrees_with_explicit_product() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 1.0), c(2.0, -1.0), c(0.5, 0.0), c(-1.0, 2.0)],
        );
        let b = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 1.0), c(1.0, 1.0), c(2.0, 0.0), c(0.0, -3.0)],
        );
        let direct = trace(&(&a * &b));
        let fast = trace_product(&a, &b);
        assert!((direct - fast).norm() < 1e-14);
    }

    #[test]
    fn partial_transpose_singlet_matches_hand_matrix() {
        let dims = DimSpec::bipartite(2, 2).unwrap();
        let pt = partial_transpose(&singlet_projector(), &dims, 1).unwrap();
        // Hand-derived: (1/2)(|01><01| + |10><10| - |00><11| - |11><00|).
        let mut expect = CMatrix::zeros(4, 4);
        expect[(1, 1)] = c(0.5, 0.0);
        expect[(2, 2)] = c(0.5, 0.0);
        expect[(0, 3)] = c(-0.5, 0.0);
        expect[(3, 0)] = c(-0.5, 0.0);
        assert_mat_eq(&pt, &expect, 0.0);
    }

    #[test]
    fn partial_transpose_is_an_involution() {
        let dims = DimSpec::bipartite(2, 3).unwrap();
        let m = CMatrix::from_fn(6, 6, |i, j| c((i * 7 + j) as f64, (i as f64) - (j as f64)));
        for target in 0..2 {
            let back =
                partial_transpose(&partial_transpose(&m, &dims, target).unwrap(), &dims, target)
                    .unwrap();
            assert_mat_eq(&back, &m, 0.0);
        }
    }

    #[test]
    fn partial_transpose_on_products_transposes_one_factor() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.5), c(0.0, 2.0), c(3.0, 0.0), c(1.0, -1.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(2.0, 0.0), c(1.0, 1.0), c(0.5, 0.0)]);
        let dims = DimSpec::bipartite(2, 2).unwrap();
        let pt = partial_transpose(&kron(&a, &b), &dims, 1).unwrap();
        assert_mat_eq(&pt, &kron(&a, &b.transpose()), 1e-15);
        let pt0 = partial_transpose(&kron(&a, &b), &dims, 0).unwrap();
        assert_mat_eq(&pt0, &kron(&a.transpose(), &b), 1e-15);
    }

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]);
        let b = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.5, 0.0),
                c(0.0, 0.1),
                c(0.0, 0.0),
                c(0.0, -0.1),
                c(0.3, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.2, 0.0),
            ],
        );
        let dims = DimSpec::bipartite(2, 3).unwrap();
        let m = kron(&a, &b);
        // tr(b) = tr(a) = 1, so each reduction returns the other factor.
        assert_mat_eq(&partial_trace(&m, &dims, &[0]).unwrap(), &a, 1e-14);
        assert_mat_eq(&partial_trace(&m, &dims, &[1]).unwrap(), &b, 1e-14);
        assert_mat_eq(&partial_trace(&m, &dims, &[0, 1]).unwrap(), &m, 0.0);
    }

    #[test]
    fn partial_trace_singlet_is_maximally_mixed() {
        let dims = DimSpec::bipartite(2, 2).unwrap();
        let red = partial_trace(&singlet_projector(), &dims, &[0]).unwrap();
        assert_mat_eq(&red, &identity(2).scale(0.5), 1e-15);
    }

    #[test]
    fn partial_trace_preserves_total_trace() {
        let dims = DimSpec::new(vec![2, 2, 3]).unwrap();
        let m = CMatrix::from_fn(12, 12, |i, j| c((i + 2 * j) as f64, (i as f64) * 0.1));
        let red = partial_trace(&m, &dims, &[1]).unwrap();
        assert!((trace(&red) - trace(&m)).norm() < 1e-10);
    }

    #[test]
    fn permutation_swaps_kron_factors() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0), c(4.0, 0.0)]);
        let b = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(2.0, 0.0),
                c(0.0, 3.0),
                c(5.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 1.0),
                c(6.0, 0.0),
            ],
        );
        let dims = DimSpec::bipartite(2, 3).unwrap();
        let swapped = permute_subsystems(&kron(&a, &b), &dims, &[1, 0]).unwrap();
        assert_mat_eq(&swapped, &kron(&b, &a), 0.0);
    }

    #[test]
    fn permutation_composes() {
        let dims = DimSpec::new(vec![2, 3, 2]).unwrap();
        let m = CMatrix::from_fn(12, 12, |i, j| c((3 * i + j) as f64, (j as f64) * 0.5));
        let p1 = permute_subsystems(&m, &dims, &[2, 0, 1]).unwrap();
        let dims_p = DimSpec::new(vec![2, 2, 3]).unwrap();
        let p2 = permute_subsystems(&p1, &dims_p, &[1, 2, 0]).unwrap();
        assert_mat_eq(&p2, &m, 0.0);
    }

    #[test]
    fn herm_eig_of_pauli_x() {
        let sx = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let eig = herm_eig(&sx).unwrap();
        assert_close(eig.values[0], -1.0, 1e-12);
        assert_close(eig.values[1], 1.0, 1e-12);
        for k in 0..2 {
            let v = eig.vector(k);
            let resid = &sx * &v - v.scale(eig.values[k]);
            assert!(resid.norm() < 1e-12);
        }
    }

    #[test]
    fn herm_eig_singlet_partial_transpose_spectrum() {
        let dims = DimSpec::bipartite(2, 2).unwrap();
        let pt = partial_transpose(&singlet_projector(), &dims, 1).unwrap();
        let eig = herm_eig(&pt).unwrap();
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (v, e) in eig.values.iter().zip(expect.iter()) {
            assert_close(*v, *e, 1e-12);
        }
        // The negative eigenvector is (|00> + |11>)/sqrt(2) up to phase.
        let v = eig.vector(0);
        let overlap = (v[0].conj() * c(1.0, 0.0) + v[3].conj() * c(1.0, 0.0)).norm();
        assert_close(overlap, 2.0_f64.sqrt(), 1e-10);
    }

    #[test]
    fn herm_eig_reconstructs_random_hermitian() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x51ab);
        for _ in 0..20 {
            let n = 2 + (rng.random::<u32>() % 5) as usize;
            let raw = CMatrix::from_fn(n, n, |_, _| {
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let h = (&raw + raw.adjoint()).scale(0.5);
            let eig = herm_eig(&h).unwrap();
            let mut rebuilt = CMatrix::zeros(n, n);
            for k in 0..n {
                let v = eig.vector(k);
                rebuilt += (&v * v.adjoint()).scale(eig.values[k]);
            }
            let scale = max_abs(&h).max(1.0);
            assert!(max_abs(&(&rebuilt - &h)) <= 1e-9 * scale);
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1] + 1e-14);
            }
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn schmidt_of_product_state() {
        let psi = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let s = schmidt_coefficients(&psi, 2, 2).unwrap();
        assert_eq!(s.len(), 1);
        assert_close(s[0], 1.0, 1e-12);
    }

    #[test]
    fn schmidt_of_tilted_state() {
        let (p, q) = (0.8_f64, 0.2_f64);
        let psi = CVector::from_vec(vec![
            c(p.sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, q.sqrt()),
        ]);
        let s = schmidt_coefficients(&psi, 2, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_close(s[0], p.sqrt(), 1e-12);
        assert_close(s[1], q.sqrt(), 1e-12);
    }

    #[test]
    fn schmidt_decomposition_reconstructs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for &(da, db) in &[(2, 2), (2, 3), (3, 2), (3, 4)] {
            let mut v = CVector::from_fn(da * db, |_, _| {
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let n = v.norm();
            v /= c(n, 0.0);
            let s = schmidt_decomposition(&v, da, db).unwrap();
            assert_eq!(s.coeffs.len(), da.min(db));
            let mut rebuilt = CVector::zeros(da * db);
            for (k, &sc) in s.coeffs.iter().enumerate() {
                rebuilt += kron_vec(&s.a_vecs[k], &s.b_vecs[k]).scale(sc);
            }
            assert!((rebuilt - &v).norm() < 1e-10);
            let sq: f64 = s.coeffs.iter().map(|x| x * x).sum();
            assert_close(sq, 1.0, 1e-10);
        }
    }

    #[test]
    fn maximally_entangled_schmidt_is_flat() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVector::from_vec(vec![c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)]);
        let s = schmidt_coefficients(&psi, 2, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_close(s[0], r, 1e-12);
        assert_close(s[1], r, 1e-12);
    }

    #[test]
    fn dimspec_rejects_bad_input() {
        assert!(DimSpec::new(vec![]).is_err());
        assert!(DimSpec::new(vec![2, 0]).is_err());
        assert!(matches!(
            partial_transpose(&identity(3), &DimSpec::bipartite(2, 2).unwrap(), 1),
            Err(Error::BadDimension(_))
        ));
        assert!(matches!(
            partial_transpose(&identity(4), &DimSpec::bipartite(2, 2).unwrap(), 2),
            Err(Error::BadDimension(_))
        ));
    }
}
