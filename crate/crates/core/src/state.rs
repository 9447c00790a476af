//! Validated quantum state and measurement-effect types.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, herm_eig, hermiticity_deviation, identity, kron, max_abs, require_hermitian,
    require_shape, trace, CMatrix, CVector, DimSpec,
};

/// Tolerance on trace-one and norm-one constraints.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues above this (negative) floor count as nonnegative.
pub const PSD_TOL: f64 = -1e-10;

fn require_psd(m: &CMatrix) -> Result<f64> {
    let eig = herm_eig(m)?;
    let min = eig.min();
    if min < PSD_TOL {
        return Err(Error::NotPositive { min_eig: min });
    }
    Ok(min)
}

/// Density matrix on a tensor-product space: Hermitian, unit trace,
/// positive semidefinite within the module tolerances.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMatrix,
    dims: DimSpec,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix, dims: DimSpec) -> Result<Self> {
        require_shape(&mat, &dims)?;
        require_hermitian(&mat)?;
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace: tr.re });
        }
        require_psd(&mat)?;
        Ok(DensityMatrix { mat, dims })
    }

    /// Skips validation; callers must guarantee the invariants structurally.
    pub(crate) fn new_unchecked(mat: CMatrix, dims: DimSpec) -> Self {
        DensityMatrix { mat, dims }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.vec();
        DensityMatrix::new_unchecked(v * v.adjoint(), psi.dims().clone())
    }

    pub fn maximally_mixed(dims: DimSpec) -> Self {
        let n = dims.total();
        DensityMatrix::new_unchecked(identity(n).scale(1.0 / n as f64), dims)
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &DimSpec {
        &self.dims
    }

    pub fn dim_total(&self) -> usize {
        self.dims.total()
    }

    /// Partial transpose as a raw matrix; the result is Hermitian but may
    /// have negative eigenvalues.
    pub fn partial_transpose(&self, target: usize) -> Result<CMatrix> {
        linalg::partial_transpose(&self.mat, &self.dims, target)
    }

    /// Smallest eigenvalue of the partial transpose over `target`.
    pub fn min_pt_eigenvalue(&self, target: usize) -> Result<f64> {
        Ok(herm_eig(&self.partial_transpose(target)?)?.min())
    }
}

/// Normalised pure state vector.
#[derive(Debug, Clone)]
pub struct PureState {
    vec: CVector,
    dims: DimSpec,
}

impl PureState {
    pub fn new(vec: CVector, dims: DimSpec) -> Result<Self> {
        if vec.len() != dims.total() {
            return Err(Error::dim(format!(
                "vector length {} does not match dimensions {:?}",
                vec.len(),
                dims.dims()
            )));
        }
        let norm = vec.norm();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadNorm { norm });
        }
        Ok(PureState { vec, dims })
    }

    pub(crate) fn new_unchecked(vec: CVector, dims: DimSpec) -> Self {
        PureState { vec, dims }
    }

    pub fn vec(&self) -> &CVector {
        &self.vec
    }

    pub fn dims(&self) -> &DimSpec {
        &self.dims
    }

    /// Global phase fixed so the largest-magnitude amplitude is real and
    /// positive. The first index attaining the maximum decides ties, which
    /// makes the representative deterministic.
    pub fn canonical_phase(&self) -> PureState {
        let mut best = 0;
        let mut best_mag = self.vec[0].norm();
        for (k, z) in self.vec.iter().enumerate().skip(1) {
            if z.norm() > best_mag {
                best_mag = z.norm();
                best = k;
            }
        }
        if best_mag == 0.0 {
            return self.clone();
        }
        let phase = self.vec[best] / C64::new(best_mag, 0.0);
        PureState {
            vec: self.vec.scale_complex(phase.conj()),
            dims: self.dims.clone(),
        }
    }

    pub fn projector(&self) -> CMatrix {
        &self.vec * self.vec.adjoint()
    }
}

trait ScaleComplex {
    fn scale_complex(&self, z: C64) -> CVector;
}

impl ScaleComplex for CVector {
    fn scale_complex(&self, z: C64) -> CVector {
        CVector::from_fn(self.len(), |i, _| self[i] * z)
    }
}

/// POVM effect: Hermitian with spectrum inside [0, 1] within tolerance.
#[derive(Debug, Clone)]
pub struct PovmEffect {
    mat: CMatrix,
    dims: DimSpec,
}

impl PovmEffect {
    pub fn new(mat: CMatrix, dims: DimSpec) -> Result<Self> {
        require_shape(&mat, &dims)?;
        require_hermitian(&mat)?;
        let eig = herm_eig(&mat)?;
        if eig.min() < PSD_TOL {
            return Err(Error::NotAnEffect(format!(
                "min eigenvalue {:.3e}",
                eig.min()
            )));
        }
        if eig.max() > 1.0 - PSD_TOL {
            return Err(Error::NotAnEffect(format!(
                "max eigenvalue {:.12} exceeds 1",
                eig.max()
            )));
        }
        Ok(PovmEffect { mat, dims })
    }

    pub(crate) fn new_unchecked(mat: CMatrix, dims: DimSpec) -> Self {
        PovmEffect { mat, dims }
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &DimSpec {
        &self.dims
    }

    pub fn dim_total(&self) -> usize {
        self.dims.total()
    }

    /// The complementary effect I - E of the dichotomic pair.
    pub fn complement(&self) -> PovmEffect {
        let n = self.dims.total();
        PovmEffect::new_unchecked(identity(n) - &self.mat, self.dims.clone())
    }
}

/// Convex mixture of product states sum_i p_i sigma_A^i (x) sigma_B^i.
#[derive(Debug, Clone)]
pub struct SeparableEnsemble {
    weights: Vec<f64>,
    pairs: Vec<(DensityMatrix, DensityMatrix)>,
}

impl SeparableEnsemble {
    pub fn new(weights: Vec<f64>, pairs: Vec<(DensityMatrix, DensityMatrix)>) -> Result<Self> {
        if weights.is_empty() || weights.len() != pairs.len() {
            return Err(Error::BadWeights(format!(
                "{} weights for {} product terms",
                weights.len(),
                pairs.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::BadWeights("negative or non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadWeights(format!("weights sum to {sum}")));
        }
        let (da, db) = (pairs[0].0.dim_total(), pairs[0].1.dim_total());
        for (a, b) in &pairs {
            if a.dim_total() != da || b.dim_total() != db {
                return Err(Error::dim("inconsistent factor dimensions in ensemble"));
            }
        }
        Ok(SeparableEnsemble { weights, pairs })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pairs(&self) -> &[(DensityMatrix, DensityMatrix)] {
        &self.pairs
    }

    pub fn dim_a(&self) -> usize {
        self.pairs[0].0.dim_total()
    }

    pub fn dim_b(&self) -> usize {
        self.pairs[0].1.dim_total()
    }

    /// The mixed separable state described by the ensemble.
    pub fn assemble(&self) -> DensityMatrix {
        let n = self.dim_a() * self.dim_b();
        let mut acc = CMatrix::zeros(n, n);
        for (w, (a, b)) in self.weights.iter().zip(self.pairs.iter()) {
            acc += kron(a.mat(), b.mat()).scale(*w);
        }
        let dims = DimSpec::bipartite(self.dim_a(), self.dim_b()).unwrap();
        DensityMatrix::new_unchecked(acc, dims)
    }
}

/// |phi_d+> = (1/sqrt d) sum_i |ii> on a d (x) d space.
pub fn maximally_entangled_vec(d: usize) -> PureState {
    let mut v = CVector::zeros(d * d);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    PureState::new_unchecked(v, DimSpec::bipartite(d, d).unwrap())
}

/// The two-qubit singlet (|01> - |10>)/sqrt 2.
pub fn singlet_vec() -> PureState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let v = CVector::from_vec(vec![
        C64::new(0.0, 0.0),
        C64::new(r, 0.0),
        C64::new(-r, 0.0),
        C64::new(0.0, 0.0),
    ]);
    PureState::new_unchecked(v, DimSpec::bipartite(2, 2).unwrap())
}

fn parse_f64(tok: &str, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::BadParameter(format!("{what}: cannot parse `{tok}` as a number")))
}

fn parse_dim(tok: &str, what: &str) -> Result<usize> {
    let d: usize = tok
        .parse()
        .map_err(|_| Error::BadParameter(format!("{what}: cannot parse `{tok}` as a dimension")))?;
    if d < 2 {
        return Err(Error::BadParameter(format!("{what}: dimension must be >= 2")));
    }
    Ok(d)
}

fn require_unit_interval(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter(format!("{what}: {p} not in [0, 1]")));
    }
    Ok(())
}

/// Builds one of the named state families from a whitespace-separated spec:
///
/// - `singlet`
/// - `bell_phi_plus`
/// - `werner P` for the mixture P * singlet + (1-P) * I/4
/// - `maximally_mixed D` for I/D^2 on a D (x) D space
/// - `isotropic P D` for P * |phi_D+><phi_D+| + (1-P) * I/D^2
pub fn named_state(spec: &str) -> Result<DensityMatrix> {
    let toks: Vec<&str> = spec.split_whitespace().collect();
    if toks.is_empty() {
        return Err(Error::UnknownName(spec.to_string()));
    }
    let expect_args = |n: usize| -> Result<()> {
        if toks.len() != n + 1 {
            return Err(Error::BadParameter(format!(
                "`{}` expects {} parameter(s), got {}",
                toks[0],
                n,
                toks.len() - 1
            )));
        }
        Ok(())
    };
    match toks[0] {
        "singlet" => {
            expect_args(0)?;
            Ok(DensityMatrix::from_pure(&singlet_vec()))
        }
        "bell_phi_plus" => {
            expect_args(0)?;
            Ok(DensityMatrix::from_pure(&maximally_entangled_vec(2)))
        }
        "werner" => {
            expect_args(1)?;
            let p = parse_f64(toks[1], "werner")?;
            require_unit_interval(p, "werner")?;
            let dims = DimSpec::bipartite(2, 2).unwrap();
            let singlet = DensityMatrix::from_pure(&singlet_vec());
            let mat = singlet.mat().scale(p) + identity(4).scale((1.0 - p) / 4.0);
            Ok(DensityMatrix::new_unchecked(mat, dims))
        }
        "maximally_mixed" => {
            expect_args(1)?;
            let d = parse_dim(toks[1], "maximally_mixed")?;
            Ok(DensityMatrix::maximally_mixed(
                DimSpec::bipartite(d, d).unwrap(),
            ))
        }
        "isotropic" => {
            expect_args(2)?;
            let p = parse_f64(toks[1], "isotropic")?;
            require_unit_interval(p, "isotropic")?;
            let d = parse_dim(toks[2], "isotropic")?;
            let me = DensityMatrix::from_pure(&maximally_entangled_vec(d));
            let mat = me.mat().scale(p) + identity(d * d).scale((1.0 - p) / ((d * d) as f64));
            Ok(DensityMatrix::new_unchecked(
                mat,
                DimSpec::bipartite(d, d).unwrap(),
            ))
        }
        other => Err(Error::UnknownName(other.to_string())),
    }
}

/// Consistency guard used by paths that assemble matrices arithmetically:
/// re-validates an allegedly physical density matrix.
pub fn validate_density(mat: &CMatrix, dims: &DimSpec) -> Result<DensityMatrix> {
    DensityMatrix::new(mat.clone(), dims.clone())
}

/// Hermiticity deviation convenience re-export for diagnostics.
pub fn herm_dev(m: &CMatrix) -> f64 {
    hermiticity_deviation(m)
}

/// Largest magnitude entry convenience re-export for diagnostics.
pub fn entry_sup(m: &CMatrix) -> f64 {
    max_abs(m)
}
