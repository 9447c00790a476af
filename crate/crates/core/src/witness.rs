//! Witness construction and decomposition over input-state bases.
//!
//! From a bipartite state with a negative partial transpose this module
//! extracts the eigenvector witness W = (|phi><phi|)^{T_B}, augments it with
//! the rank-one correction operator X = |phi><psi| that turns the linear
//! witness into a strictly stronger nonlinear functional, and expands all
//! three Hermitian pieces over product bases of input states so the same
//! functional can be evaluated from measured probabilities alone.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, kron, max_abs, partial_transpose, require_hermitian, schmidt_coefficients,
    schmidt_decomposition, trace_product, CMatrix, CVector, DimSpec,
};
use crate::state::{DensityMatrix, PureState};

/// Threshold below which the most negative partial-transpose eigenvalue is
/// treated as nonnegative, rejecting the witness construction.
pub const NPT_TOL: f64 = 1e-9;
/// Largest acceptable condition number of an input-basis gram matrix.
pub const GRAM_CONDITION_LIMIT: f64 = 1e6;
/// Largest acceptable reconstruction residual in a decomposition.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Dense grid of real expansion coefficients indexed by (input s on side A,
/// input t on side B), stored row-major in s.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffGrid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CoeffGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for a {}x{} grid",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(CoeffGrid { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CoeffGrid {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.data[s * self.cols + t]
    }

    pub fn set(&mut self, s: usize, t: usize, v: f64) {
        self.data[s * self.cols + t] = v;
    }

    /// Sum of all coefficients.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Iterator over (s, t, coefficient).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k / cols, k % cols, v))
    }
}

/// Orthonormal Hermitian basis of the d x d operator space under the
/// trace inner product: scaled identity-completion diagonals plus the
/// symmetric and antisymmetric off-diagonal pairs.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    let rt = std::f64::consts::FRAC_1_SQRT_2;
    // Identity, then traceless diagonals.
    let mut id = CMatrix::zeros(d, d);
    for j in 0..d {
        id[(j, j)] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    out.push(id);
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = C64::new(norm, 0.0);
        }
        m[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        out.push(m);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut x = CMatrix::zeros(d, d);
            x[(j, k)] = C64::new(rt, 0.0);
            x[(k, j)] = C64::new(rt, 0.0);
            out.push(x);
            let mut y = CMatrix::zeros(d, d);
            y[(j, k)] = C64::new(0.0, -rt);
            y[(k, j)] = C64::new(0.0, rt);
            out.push(y);
        }
    }
    out
}

/// Tomographically complete family of d^2 pure input states: the basis
/// projectors |j><j|, then (|j>+|k>)/sqrt2 projectors for j < k, then
/// (|j>+i|k>)/sqrt2 projectors for j < k, each block in lexicographic order.
pub fn standard_basis(d: usize) -> Vec<DensityMatrix> {
    let dims = DimSpec::single(d).unwrap();
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut v = CVector::zeros(d);
        v[j] = C64::new(1.0, 0.0);
        out.push(DensityMatrix::from_pure(&PureState::new_unchecked(
            v,
            dims.clone(),
        )));
    }
    let rt = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            let mut v = CVector::zeros(d);
            v[j] = C64::new(rt, 0.0);
            v[k] = C64::new(rt, 0.0);
            out.push(DensityMatrix::from_pure(&PureState::new_unchecked(
                v,
                dims.clone(),
            )));
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut v = CVector::zeros(d);
            v[j] = C64::new(rt, 0.0);
            v[k] = C64::new(0.0, rt);
            out.push(DensityMatrix::from_pure(&PureState::new_unchecked(
                v,
                dims.clone(),
            )));
        }
    }
    out
}

/// Input-state bases for both sides together with their gram conditioning.
///
/// Each side must hold exactly d^2 states spanning the operator space, so the
/// transfer matrix from expansion coefficients to operators is square and
/// invertible.
#[derive(Debug, Clone)]
pub struct InputBasis {
    side_a: Vec<DensityMatrix>,
    side_b: Vec<DensityMatrix>,
    d_a: usize,
    d_b: usize,
    gram_condition: f64,
}

fn gram_condition_of(states: &[DensityMatrix]) -> Result<f64> {
    let n = states.len();
    let mut gram = CMatrix::zeros(n, n);
    for s in 0..n {
        for t in s..n {
            let v = trace_product(states[s].mat(), states[t].mat());
            gram[(s, t)] = C64::new(v.re, 0.0);
            gram[(t, s)] = C64::new(v.re, 0.0);
        }
    }
    let eig = herm_eig(&gram)?;
    let (min, max) = (eig.min(), eig.max());
    if min <= max * 1e-12 {
        return Err(Error::IllConditioned {
            condition: f64::INFINITY,
        });
    }
    Ok(max / min)
}

impl InputBasis {
    pub fn new(side_a: Vec<DensityMatrix>, side_b: Vec<DensityMatrix>) -> Result<Self> {
        if side_a.is_empty() || side_b.is_empty() {
            return Err(Error::dim("input basis sides must be nonempty"));
        }
        let d_a = side_a[0].dim_total();
        let d_b = side_b[0].dim_total();
        if side_a.iter().any(|s| s.dim_total() != d_a)
            || side_b.iter().any(|s| s.dim_total() != d_b)
        {
            return Err(Error::dim("mixed dimensions within one basis side"));
        }
        if side_a.len() != d_a * d_a {
            return Err(Error::dim(format!(
                "side A needs {} states for dimension {}, got {}",
                d_a * d_a,
                d_a,
                side_a.len()
            )));
        }
        if side_b.len() != d_b * d_b {
            return Err(Error::dim(format!(
                "side B needs {} states for dimension {}, got {}",
                d_b * d_b,
                d_b,
                side_b.len()
            )));
        }
        let cond = gram_condition_of(&side_a)?.max(gram_condition_of(&side_b)?);
        Ok(InputBasis {
            side_a,
            side_b,
            d_a,
            d_b,
            gram_condition: cond,
        })
    }

    /// The standard tomographic bases on both sides.
    pub fn standard(d_a: usize, d_b: usize) -> Result<Self> {
        InputBasis::new(standard_basis(d_a), standard_basis(d_b))
    }

    pub fn side_a(&self) -> &[DensityMatrix] {
        &self.side_a
    }

    pub fn side_b(&self) -> &[DensityMatrix] {
        &self.side_b
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }
}

/// Transfer matrix T[m, s] = tr(G_m tau_s^T) from grid coefficients on one
/// side to coordinates in the orthonormal Hermitian basis {G_m}.
fn transfer_matrix(herm: &[CMatrix], states: &[DensityMatrix]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(herm.len(), states.len(), |m, s| {
        trace_product(&herm[m], &states[s].mat().transpose()).re
    })
}

/// Expands a Hermitian operator H on A (x) B as sum_st c_st
/// tau_s^T (x) omega_t^T over the given input bases.
///
/// The expansion is exact for spanning bases; a reconstruction residual
/// above `RESIDUAL_TOL` or a gram condition above `GRAM_CONDITION_LIMIT`
/// is reported as an error rather than silently accepted.
pub fn decompose(h: &CMatrix, basis: &InputBasis) -> Result<CoeffGrid> {
    require_hermitian(h)?;
    let (da, db) = (basis.d_a(), basis.d_b());
    let n = da * db;
    if h.nrows() != n {
        return Err(Error::dim(format!(
            "operator is {}x{} but the bases act on a {}x{} space",
            h.nrows(),
            h.ncols(),
            n,
            n
        )));
    }
    if basis.gram_condition() > GRAM_CONDITION_LIMIT {
        return Err(Error::IllConditioned {
            condition: basis.gram_condition(),
        });
    }

    let herm_a = hermitian_basis(da);
    let herm_b = hermitian_basis(db);
    // Coordinates of H in the orthonormal product basis are real because H
    // and every G_m (x) F_n are Hermitian.
    let v = nalgebra::DMatrix::from_fn(da * da, db * db, |m, nn| {
        trace_product(&kron(&herm_a[m], &herm_b[nn]), h).re
    });

    let ta = transfer_matrix(&herm_a, basis.side_a());
    let tb = transfer_matrix(&herm_b, basis.side_b());
    // V = TA * C * TB^T, solved by two triangular passes.
    let lu_a = ta.lu();
    let x = lu_a
        .solve(&v)
        .ok_or(Error::IllConditioned {
            condition: basis.gram_condition(),
        })?;
    let lu_b = tb.lu();
    let ct = lu_b
        .solve(&x.transpose())
        .ok_or(Error::IllConditioned {
            condition: basis.gram_condition(),
        })?;
    let c = ct.transpose();

    let grid = CoeffGrid::new(
        da * da,
        db * db,
        c.row_iter()
            .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
            .collect(),
    )?;

    let rebuilt = reconstruct(&grid, basis);
    let residual = max_abs(&(&rebuilt - h));
    if residual > RESIDUAL_TOL {
        return Err(Error::ResidualTooLarge { residual });
    }
    Ok(grid)
}

/// Evaluates sum_st c_st tau_s^T (x) omega_t^T.
pub fn reconstruct(grid: &CoeffGrid, basis: &InputBasis) -> CMatrix {
    let n = basis.d_a() * basis.d_b();
    let mut acc = CMatrix::zeros(n, n);
    for (s, t, c) in grid.iter() {
        if c == 0.0 {
            continue;
        }
        acc += kron(
            &basis.side_a()[s].mat().transpose(),
            &basis.side_b()[t].mat().transpose(),
        )
        .scale(c);
    }
    acc
}

/// Extracts the eigenvector witness of a state with negative partial
/// transpose: W = (|phi><phi|)^{T_B} for the most negative eigenvector phi
/// of rho^{T_B}. Ties in a degenerate bottom eigenvalue resolve to the
/// first column the solver produces, with the global phase canonicalised.
pub fn witness_from_npt(rho: &DensityMatrix) -> Result<(CMatrix, PureState)> {
    if rho.dims().n_subsystems() != 2 {
        return Err(Error::dim("witness construction needs a bipartite state"));
    }
    let pt = rho.partial_transpose(1)?;
    let eig = herm_eig(&pt)?;
    if eig.min() >= -NPT_TOL {
        return Err(Error::NotNpt { min_eig: eig.min() });
    }
    let phi = PureState::new_unchecked(eig.vector(0), rho.dims().clone()).canonical_phase();
    let w = partial_transpose(&phi.projector(), rho.dims(), 1)?;
    Ok((w, phi))
}

/// How the reference state psi of the correction operator is chosen.
#[derive(Debug, Clone)]
pub enum PsiChoice {
    /// Maximally entangled state in the Schmidt basis of phi, giving the
    /// strongest admissible correction weight 1/s = min(d_A, d_B).
    Default,
    /// Product of the top Schmidt pair of phi, giving s = 1.
    Product,
    /// Caller-supplied state on the same space.
    Custom(PureState),
}

/// Hermitian pieces of the nonlinear correction for X = |phi><psi|.
#[derive(Debug, Clone)]
pub struct NonlinearParts {
    /// X itself (not partially transposed).
    pub x: CMatrix,
    /// Hermitian part of X^{T_B}.
    pub h1: CMatrix,
    /// Anti-Hermitian part of X^{T_B} divided by i.
    pub h2: CMatrix,
    /// Square of the largest Schmidt coefficient of psi.
    pub s_x: f64,
}

/// Builds the correction operator X = |phi><psi| and its Hermitian split
/// H1 = (X^{T_B} + h.c.)/2, H2 = (X^{T_B} - h.c.)/(2i).
pub fn build_nonlinear(phi: &PureState, psi: &PureState) -> Result<NonlinearParts> {
    if phi.dims() != psi.dims() {
        return Err(Error::dim("phi and psi live on different spaces"));
    }
    if phi.dims().n_subsystems() != 2 {
        return Err(Error::dim("nonlinear parts need bipartite states"));
    }
    let d = phi.dims().dims();
    let coeffs = schmidt_coefficients(psi.vec(), d[0], d[1])?;
    let s_x = coeffs[0] * coeffs[0];
    let x = phi.vec() * psi.vec().adjoint();
    let x_pt = partial_transpose(&x, phi.dims(), 1)?;
    let x_pt_dag = x_pt.adjoint();
    let h1 = (&x_pt + &x_pt_dag).scale(0.5);
    let h2 = ((&x_pt - &x_pt_dag) * C64::new(0.0, -0.5)).map(|z| z);
    Ok(NonlinearParts { x, h1, h2, s_x })
}

/// tr(W rho); the imaginary part must vanish for Hermitian inputs and is
/// checked before being dropped.
pub fn linear_value(w: &CMatrix, rho: &DensityMatrix) -> Result<f64> {
    if w.nrows() != rho.dim_total() || w.ncols() != rho.dim_total() {
        return Err(Error::dim("witness and state dimensions differ"));
    }
    let v = trace_product(w, rho.mat());
    if v.im.abs() > 1e-8 {
        return Err(Error::NotHermitian { deviation: v.im.abs() });
    }
    Ok(v.re)
}

/// Everything needed to evaluate the nonlinear witness both at the operator
/// level and from protocol probability tables.
#[derive(Debug, Clone)]
pub struct WitnessBundle {
    pub w: CMatrix,
    pub phi: PureState,
    pub psi: PureState,
    pub parts: NonlinearParts,
    /// Expansion of W over the input bases.
    pub alpha: CoeffGrid,
    /// Expansion of H1.
    pub beta: CoeffGrid,
    /// Expansion of H2.
    pub gamma: CoeffGrid,
    pub d_a: usize,
    pub d_b: usize,
}

impl WitnessBundle {
    /// Rebuilds a bundle from its portable parts: the two pure states and
    /// the three coefficient grids. W and the correction operators are
    /// derived, so imported bundles satisfy the same identities as built
    /// ones.
    pub fn from_components(
        phi: PureState,
        psi: PureState,
        alpha: CoeffGrid,
        beta: CoeffGrid,
        gamma: CoeffGrid,
    ) -> Result<Self> {
        if phi.dims().n_subsystems() != 2 {
            return Err(Error::dim("bundles need bipartite states"));
        }
        let d = phi.dims().dims();
        let (d_a, d_b) = (d[0], d[1]);
        for grid in [&alpha, &beta, &gamma] {
            if grid.rows() != d_a * d_a || grid.cols() != d_b * d_b {
                return Err(Error::ShapeMismatch(format!(
                    "{}x{} grid for a {d_a}x{d_b} bundle",
                    grid.rows(),
                    grid.cols()
                )));
            }
        }
        let parts = build_nonlinear(&phi, &psi)?;
        let w = partial_transpose(&phi.projector(), phi.dims(), 1)?;
        Ok(WitnessBundle {
            w,
            phi,
            psi,
            parts,
            alpha,
            beta,
            gamma,
            d_a,
            d_b,
        })
    }

    /// Normalisation constant K = s(X) d_A d_B of the nonlinear term.
    pub fn k(&self) -> f64 {
        self.parts.s_x * (self.d_a * self.d_b) as f64
    }

    pub fn s_x(&self) -> f64 {
        self.parts.s_x
    }

    /// Coefficient sums (sum alpha, sum beta, sum gamma) entering the
    /// detection-corruption offsets.
    pub fn coeff_sums(&self) -> [f64; 3] {
        [self.alpha.sum(), self.beta.sum(), self.gamma.sum()]
    }

    /// Operator-level nonlinear witness value
    /// tr(W rho) - (tr(H1 rho)^2 + tr(H2 rho)^2) / s_x.
    pub fn nonlinear_value(&self, rho: &DensityMatrix) -> Result<f64> {
        let w = linear_value(&self.w, rho)?;
        let b = linear_value(&self.parts.h1, rho)?;
        let g = linear_value(&self.parts.h2, rho)?;
        Ok(w - (b * b + g * g) / self.parts.s_x)
    }

    pub fn linear(&self, rho: &DensityMatrix) -> Result<f64> {
        linear_value(&self.w, rho)
    }
}

fn default_psi(phi: &PureState) -> Result<PureState> {
    let d = phi.dims().dims();
    let (da, db) = (d[0], d[1]);
    let m = da.min(db);
    let schmidt = schmidt_decomposition(phi.vec(), da, db)?;
    let amp = C64::new(1.0 / (m as f64).sqrt(), 0.0);
    let mut v = CVector::zeros(da * db);
    for k in 0..m {
        v += crate::linalg::kron_vec(&schmidt.a_vecs[k], &schmidt.b_vecs[k]).map(|z| z * amp);
    }
    Ok(PureState::new_unchecked(v, phi.dims().clone()).canonical_phase())
}

fn product_psi(phi: &PureState) -> Result<PureState> {
    let d = phi.dims().dims();
    let schmidt = schmidt_decomposition(phi.vec(), d[0], d[1])?;
    let v = crate::linalg::kron_vec(&schmidt.a_vecs[0], &schmidt.b_vecs[0]);
    Ok(PureState::new_unchecked(v, phi.dims().clone()).canonical_phase())
}

/// Builds the full witness bundle for an NPT state: the linear witness, the
/// nonlinear correction for the chosen psi, and the three coefficient grids
/// over the given input bases.
pub fn make_bundle(
    rho_tilde: &DensityMatrix,
    psi_choice: &PsiChoice,
    basis: &InputBasis,
) -> Result<WitnessBundle> {
    let d = rho_tilde.dims().dims();
    if d.len() != 2 {
        return Err(Error::dim("bundles need bipartite states"));
    }
    if d[0] != basis.d_a() || d[1] != basis.d_b() {
        return Err(Error::dim(format!(
            "state dimensions {:?} do not match basis dimensions ({}, {})",
            d,
            basis.d_a(),
            basis.d_b()
        )));
    }
    let (w, phi) = witness_from_npt(rho_tilde)?;
    let psi = match psi_choice {
        PsiChoice::Default => default_psi(&phi)?,
        PsiChoice::Product => product_psi(&phi)?,
        PsiChoice::Custom(p) => {
            if p.dims() != phi.dims() {
                return Err(Error::dim("custom psi has wrong dimensions"));
            }
            p.clone()
        }
    };
    let parts = build_nonlinear(&phi, &psi)?;
    let alpha = decompose(&w, basis)?;
    let beta = decompose(&parts.h1, basis)?;
    let gamma = decompose(&parts.h2, basis)?;
    Ok(WitnessBundle {
        w,
        phi,
        psi,
        parts,
        alpha,
        beta,
        gamma,
        d_a: d[0],
        d_b: d[1],
    })
}
