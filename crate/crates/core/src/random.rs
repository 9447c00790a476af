//! Seeded random generation of states, effects, and ensembles.
//!
//! Every sampler takes an explicit generator. Substreams derived from a
//! master seed and an index path keep parallel sweeps reproducible without
//! sharing generator state across loop iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{CMatrix, CVector, DimSpec};
use crate::state::{DensityMatrix, PovmEffect, PureState, SeparableEnsemble};

/// splitmix64 finaliser; the standard 64-bit avalanche mix.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for the given index path under a master seed.
/// Equal (seed, lanes) pairs always produce the same stream.
pub fn substream(master: u64, lanes: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, lanes))
}

/// The seed value behind `substream`, for callers that forward seeds
/// instead of generators.
pub fn derive_seed(master: u64, lanes: &[u64]) -> u64 {
    let mut h = mix(master);
    for &lane in lanes {
        h = mix(h ^ mix(lane));
    }
    h
}

fn complex_normal(rng: &mut impl Rng) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    num_complex::Complex64::new(re, im)
}

/// Square matrix of independent complex standard normals.
pub fn ginibre(d: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| complex_normal(rng))
}

/// Density matrix G G^dagger / tr(G G^dagger) for Ginibre G, which samples
/// the Hilbert-Schmidt measure.
pub fn random_density(dims: &DimSpec, rng: &mut impl Rng) -> DensityMatrix {
    let d = dims.total();
    let g = ginibre(d, rng);
    let gram = &g * g.adjoint();
    let tr = crate::linalg::trace(&gram).re;
    DensityMatrix::new_unchecked(gram.scale(1.0 / tr), dims.clone())
}

/// Haar-distributed pure state.
pub fn random_pure(dims: &DimSpec, rng: &mut impl Rng) -> PureState {
    let d = dims.total();
    let mut v = CVector::from_fn(d, |_, _| complex_normal(rng));
    let n = v.norm();
    v /= num_complex::Complex64::new(n, 0.0);
    PureState::new_unchecked(v, dims.clone())
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the phase
/// convention that makes the factorisation unique.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(d, rng);
    let qr = nalgebra::QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let diag = r[(k, k)];
        let mag = diag.norm();
        if mag > 0.0 {
            let phase = diag / num_complex::Complex64::new(mag, 0.0);
            for i in 0..d {
                q[(i, k)] *= phase;
            }
        }
    }
    q
}

/// Uniform point on the probability simplex with `k` coordinates.
pub fn random_simplex(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(k >= 1);
    let mut w: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        })
        .collect();
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}

/// Random separable ensemble with `k` product terms and simplex weights.
pub fn random_separable(
    d_a: usize,
    d_b: usize,
    k: usize,
    rng: &mut impl Rng,
) -> Result<SeparableEnsemble> {
    let da = DimSpec::single(d_a)?;
    let db = DimSpec::single(d_b)?;
    let weights = random_simplex(k, rng);
    let pairs = (0..k)
        .map(|_| (random_density(&da, rng), random_density(&db, rng)))
        .collect();
    SeparableEnsemble::new(weights, pairs)
}

/// Random dichotomic POVM effect: a PSD matrix rescaled so the top of its
/// spectrum lands strictly inside (0, 1).
pub fn random_dichotomic_effect(dims: &DimSpec, rng: &mut impl Rng) -> PovmEffect {
    let d = dims.total();
    let g = ginibre(d, rng);
    let gram = &g * g.adjoint();
    let top = crate::linalg::herm_eig(&gram)
        .expect("gram matrices are Hermitian")
        .max();
    let u: f64 = rng.random();
    let scale = 1.0 / (top * (1.0 + 1e-6 + u));
    PovmEffect::new_unchecked(gram.scale(scale), dims.clone())
}
