//! Noise channels on the quantum inputs: Kraus-form CPTP maps, their
//! adjoints, separability-preservation probes, and robustness comparison
//! of the linear and nonlinear witness functionals.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, identity, kron, max_abs, partial_transpose, permute_subsystems, trace, CMatrix,
    DimSpec, C64,
};
use crate::protocol::{
    distribution_from_global, mdi_linear_value, mdi_nonlinear_value, ProbabilityTable, Provenance,
};
use crate::random::random_separable;
use crate::state::{DensityMatrix, PovmEffect};
use crate::witness::{InputBasis, WitnessBundle};

/// Completeness tolerance for sum K^dag K = I.
pub const CHANNEL_TOL: f64 = 1e-10;

/// Negativity threshold shared by the misdetection flags and the PPT probe.
pub const NEG_TOL: f64 = 1e-9;

/// A CPTP map in Kraus form.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    kraus: Vec<CMatrix>,
    dim: usize,
    label: String,
}

impl KrausChannel {
    /// Validates squareness, equal dimensions, and trace preservation.
    pub fn new(kraus: Vec<CMatrix>, label: impl Into<String>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::dim("channel needs at least one Kraus operator"));
        }
        let dim = kraus[0].nrows();
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::dim(format!(
                    "Kraus operators must all be {dim}x{dim}"
                )));
            }
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let deviation = max_abs(&(&sum - identity(dim)));
        if deviation > CHANNEL_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(KrausChannel {
            kraus,
            dim,
            label: label.into(),
        })
    }

    pub fn identity(d: usize) -> Self {
        KrausChannel {
            kraus: vec![identity(d)],
            dim: d,
            label: format!("identity({d})"),
        }
    }

    /// rho -> (1 - p) rho + p I/d, assembled from the d^2 Weyl unitaries
    /// X^a Z^b scaled by sqrt(p)/d plus a sqrt(1 - p) identity term.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::dim("depolarizing channel needs d >= 2"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadParameter(format!(
                "depolarizing strength {p} not in [0, 1]"
            )));
        }
        let mut kraus = Vec::with_capacity(d * d + 1);
        if p < 1.0 {
            kraus.push(identity(d).scale((1.0 - p).sqrt()));
        }
        if p > 0.0 {
            let w = p.sqrt() / d as f64;
            for a in 0..d {
                for b in 0..d {
                    kraus.push(weyl(d, a, b).scale(w));
                }
            }
        }
        KrausChannel::new(kraus, format!("depolarizing({d}, {p})"))
    }

    /// Qubit amplitude damping with decay probability gamma.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::BadParameter(format!(
                "damping strength {gamma} not in [0, 1]"
            )));
        }
        let zero = C64::new(0.0, 0.0);
        let k0 = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                zero,
                zero,
                C64::new((1.0 - gamma).sqrt(), 0.0),
            ],
        );
        let k1 = CMatrix::from_row_slice(2, 2, &[zero, C64::new(gamma.sqrt(), 0.0), zero, zero]);
        KrausChannel::new(vec![k0, k1], format!("amplitude_damping({gamma})"))
    }

    /// Tensor product of two channels acting on adjacent factors.
    pub fn local_pair(a: &KrausChannel, b: &KrausChannel) -> Result<Self> {
        let mut kraus = Vec::with_capacity(a.kraus.len() * b.kraus.len());
        for ka in &a.kraus {
            for kb in &b.kraus {
                kraus.push(kron(ka, kb));
            }
        }
        KrausChannel::new(kraus, format!("{} (x) {}", a.label, b.label))
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Weyl unitary X^a Z^b on dimension d: |j> -> omega^(j b) |j + a mod d>.
fn weyl(d: usize, a: usize, b: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    let step = 2.0 * std::f64::consts::PI / d as f64;
    for j in 0..d {
        let phase = (step * (j * b) as f64).rem_euclid(2.0 * std::f64::consts::PI);
        m[((j + a) % d, j)] = Complex64::from_polar(1.0, phase);
    }
    m
}

/// Schroedinger action sum_k K M K^dag.
pub fn apply_channel(m: &CMatrix, ch: &KrausChannel) -> Result<CMatrix> {
    if m.nrows() != ch.dim || m.ncols() != ch.dim {
        return Err(Error::dim(format!(
            "operator is {}x{}, channel expects {}",
            m.nrows(),
            m.ncols(),
            ch.dim
        )));
    }
    let mut out = CMatrix::zeros(ch.dim, ch.dim);
    for k in &ch.kraus {
        out += k * m * k.adjoint();
    }
    Ok(out)
}

/// Heisenberg dual of a channel: M -> sum_k K^dag M K. Unital rather than
/// trace preserving, so it is not itself a `KrausChannel`.
#[derive(Debug, Clone)]
pub struct AdjointChannel {
    kraus: Vec<CMatrix>,
    dim: usize,
    label: String,
}

impl AdjointChannel {
    pub fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::dim(format!(
                "operator is {}x{}, adjoint channel expects {}",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k.adjoint() * m * k;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

pub fn adjoint_channel(ch: &KrausChannel) -> AdjointChannel {
    AdjointChannel {
        kraus: ch.kraus.clone(),
        dim: ch.dim,
        label: format!("adjoint of {}", ch.label),
    }
}

/// Applies a channel to a subset of tensor factors, adjacency not required.
/// `targets` must be strictly increasing and their dimensions must multiply
/// to the channel dimension; the channel sees the targets in that order.
pub fn apply_on_subsystems(
    m: &CMatrix,
    dims: &DimSpec,
    targets: &[usize],
    ch: &KrausChannel,
) -> Result<CMatrix> {
    let n = dims.n_subsystems();
    if targets.is_empty() || targets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::dim("targets must be strictly increasing"));
    }
    if targets[targets.len() - 1] >= n {
        return Err(Error::dim("target subsystem out of range"));
    }
    let target_dim: usize = targets.iter().map(|&t| dims.dim_at(t)).product();
    if target_dim != ch.dim {
        return Err(Error::dim(format!(
            "target dimensions multiply to {target_dim}, channel expects {}",
            ch.dim
        )));
    }

    // Bring the targets to the front, act there, then undo the permutation.
    let rest: Vec<usize> = (0..n).filter(|k| !targets.contains(k)).collect();
    let forward: Vec<usize> = targets.iter().chain(rest.iter()).copied().collect();
    let fronted = permute_subsystems(m, dims, &forward)?;
    let permuted_dims = DimSpec::new(forward.iter().map(|&k| dims.dim_at(k)).collect())?;

    let rest_dim: usize = rest.iter().map(|&k| dims.dim_at(k)).product();
    let rest_id = identity(rest_dim);
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for k in &ch.kraus {
        let big = kron(k, &rest_id);
        out += &big * &fronted * big.adjoint();
    }

    let mut inverse = vec![0; n];
    for (pos, &orig) in forward.iter().enumerate() {
        inverse[orig] = pos;
    }
    permute_subsystems(&out, &permuted_dims, &inverse)
}

/// Runs the full protocol with every input pair (and the maximally mixed
/// pair) passed through `input_noise` before distribution to the parties.
/// Identity noise reproduces the ideal table; the output is marked
/// measured because the device statistics no longer describe the intended
/// inputs.
pub fn noisy_table(
    rho: &DensityMatrix,
    basis: &InputBasis,
    a1: &PovmEffect,
    b1: &PovmEffect,
    input_noise: &KrausChannel,
) -> Result<ProbabilityTable> {
    let d = rho.dims().dims();
    if d.len() != 2 {
        return Err(Error::dim("protocol needs a bipartite shared state"));
    }
    let (da, db) = (d[0], d[1]);
    if input_noise.dim != da * db {
        return Err(Error::dim(format!(
            "input noise acts on dimension {}, inputs have {}",
            input_noise.dim,
            da * db
        )));
    }

    // kron(chi, rho) carries ordering (A_in, B_in, A, B); the protocol
    // convention is (A_in, A, B, B_in).
    let stacked = DimSpec::new(vec![da, db, da, db])?;
    let to_protocol = [0usize, 2, 3, 1];
    let full = DimSpec::new(vec![da, da, db, db])?;
    let run = |tau: &DensityMatrix, omega: &DensityMatrix| -> Result<[f64; 4]> {
        let chi = apply_channel(&kron(tau.mat(), omega.mat()), input_noise)?;
        let global = permute_subsystems(&kron(&chi, rho.mat()), &stacked, &to_protocol)?;
        distribution_from_global(&global, &full, a1, b1)
    };

    let mut cells = Vec::with_capacity(basis.side_a().len() * basis.side_b().len());
    for tau in basis.side_a() {
        for omega in basis.side_b() {
            cells.push(run(tau, omega)?);
        }
    }
    let mixed_a = DensityMatrix::maximally_mixed(DimSpec::single(da)?);
    let mixed_b = DensityMatrix::maximally_mixed(DimSpec::single(db)?);
    let mm = run(&mixed_a, &mixed_b)?;
    ProbabilityTable::new(da, db, cells, mm, Provenance::Measured)
}

/// Parses a channel description.
///
/// Blank lines and `#` comments are skipped. The first significant line
/// selects the form:
///
/// ```text
/// identity D
/// depolarizing D P
/// amplitude_damping GAMMA
/// local_pair            (followed by two one-line simple channels)
/// kraus N D             (followed by N blocks of D*D lines "re im")
/// ```
pub fn parse_channel_spec(text: &str) -> Result<KrausChannel> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut cursor = 0usize;
    let ch = parse_one_channel(&lines, &mut cursor, true)?;
    if cursor != lines.len() {
        let (no, _) = lines[cursor];
        return Err(Error::parse(no, "trailing content after channel"));
    }
    Ok(ch)
}

fn parse_one_channel(
    lines: &[(usize, &str)],
    cursor: &mut usize,
    allow_composite: bool,
) -> Result<KrausChannel> {
    let Some(&(no, line)) = lines.get(*cursor) else {
        return Err(Error::parse(0, "missing channel line"));
    };
    *cursor += 1;
    let mut parts = line.split_whitespace();
    let name = parts.next().unwrap();
    let args: Vec<&str> = parts.collect();
    let want = |n: usize| -> Result<()> {
        if args.len() != n {
            return Err(Error::parse(
                no,
                format!("`{name}` takes {n} parameter(s), got {}", args.len()),
            ));
        }
        Ok(())
    };
    let int = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::parse(no, format!("bad integer `{s}`")))
    };
    let real = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::parse(no, format!("bad number `{s}`")))
    };
    match name {
        "identity" => {
            want(1)?;
            Ok(KrausChannel::identity(int(args[0])?))
        }
        "depolarizing" => {
            want(2)?;
            KrausChannel::depolarizing(int(args[0])?, real(args[1])?)
        }
        "amplitude_damping" => {
            want(1)?;
            KrausChannel::amplitude_damping(real(args[0])?)
        }
        "local_pair" if allow_composite => {
            want(0)?;
            let a = parse_one_channel(lines, cursor, false)?;
            let b = parse_one_channel(lines, cursor, false)?;
            KrausChannel::local_pair(&a, &b)
        }
        "kraus" => {
            want(2)?;
            let n = int(args[0])?;
            let d = int(args[1])?;
            if n == 0 || d == 0 {
                return Err(Error::parse(no, "kraus block needs n >= 1, d >= 1"));
            }
            let mut ops = Vec::with_capacity(n);
            for _ in 0..n {
                let mut m = CMatrix::zeros(d, d);
                for idx in 0..d * d {
                    let Some(&(eno, entry)) = lines.get(*cursor) else {
                        return Err(Error::parse(no, "kraus block ends early"));
                    };
                    *cursor += 1;
                    let nums: Vec<&str> = entry.split_whitespace().collect();
                    if nums.len() != 2 {
                        return Err(Error::parse(eno, "expected `re im`"));
                    }
                    let re: f64 = nums[0]
                        .parse()
                        .map_err(|_| Error::parse(eno, format!("bad number `{}`", nums[0])))?;
                    let im: f64 = nums[1]
                        .parse()
                        .map_err(|_| Error::parse(eno, format!("bad number `{}`", nums[1])))?;
                    m[(idx / d, idx % d)] = C64::new(re, im);
                }
                ops.push(m);
            }
            KrausChannel::new(ops, format!("kraus({n}, {d})"))
        }
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreservationStatus {
    Preserves,
    Violated,
    Inconclusive,
}

impl PreservationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PreservationStatus::Preserves => "preserves",
            PreservationStatus::Violated => "violated",
            PreservationStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of the separability-preservation probe.
#[derive(Debug, Clone)]
pub struct PreservationReport {
    pub status: PreservationStatus,
    pub samples_tested: usize,
    /// Input and output of the first violation found.
    pub counterexample: Option<(CMatrix, CMatrix)>,
}

/// Feeds random separable positive operators (random ensembles scaled by a
/// random positive factor) through the channel's adjoint and checks the
/// outputs for positivity under partial transposition.
///
/// An NPT output is a violation at any dimension. A clean pass is reported
/// as `preserves` only where PPT and separability coincide, the 2x2 and
/// 2x3 splits; elsewhere it is `inconclusive`.
pub fn preservation_probe(
    ch: &KrausChannel,
    d_a: usize,
    d_b: usize,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<PreservationReport> {
    if d_a * d_b != ch.dim {
        return Err(Error::dim(format!(
            "probe split {d_a}x{d_b} does not match channel dimension {}",
            ch.dim
        )));
    }
    let adjoint = adjoint_channel(ch);
    let dims = DimSpec::bipartite(d_a, d_b)?;
    let ppt_decidable = d_a * d_b <= 6;
    for trial in 0..n_samples {
        let terms = 1 + trial % 3;
        let ensemble = random_separable(d_a, d_b, terms, rng)?;
        let scale = 0.1 + 1.9 * rng.random::<f64>();
        let input = ensemble.assemble().mat().scale(scale);
        let output = adjoint.apply(&input)?;
        let pt = partial_transpose(&output, &dims, 1)?;
        let min_eig = herm_eig(&pt)?.values[0];
        let norm = trace(&output).re.max(1.0);
        if min_eig < -NEG_TOL * norm {
            return Ok(PreservationReport {
                status: PreservationStatus::Violated,
                samples_tested: trial + 1,
                counterexample: Some((input, output)),
            });
        }
    }
    Ok(PreservationReport {
        status: if ppt_decidable {
            PreservationStatus::Preserves
        } else {
            PreservationStatus::Inconclusive
        },
        samples_tested: n_samples,
        counterexample: None,
    })
}

/// One channel's entry in the robustness comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRecord {
    pub label: String,
    pub i_value: Option<f64>,
    pub n_value: Option<f64>,
    /// Value below -1e-9, the witness claims entanglement.
    pub i_misdetects: bool,
    pub n_misdetects: bool,
    pub error: Option<String>,
}

/// Evaluates the linear and nonlinear functionals on the noisy table of
/// every channel. Per-channel failures (typically a degenerate nonlinear
/// denominator) are recorded in the row, not raised.
pub fn compare_ew_new(
    rho: &DensityMatrix,
    basis: &InputBasis,
    a1: &PovmEffect,
    b1: &PovmEffect,
    channels: &[KrausChannel],
    bundle: &WitnessBundle,
) -> Vec<ComparisonRecord> {
    channels
        .iter()
        .map(|ch| {
            let table = match noisy_table(rho, basis, a1, b1, ch) {
                Ok(t) => t,
                Err(e) => {
                    return ComparisonRecord {
                        label: ch.label.clone(),
                        i_value: None,
                        n_value: None,
                        i_misdetects: false,
                        n_misdetects: false,
                        error: Some(e.to_string()),
                    }
                }
            };
            let i_value = mdi_linear_value(&table, &bundle.alpha).ok();
            let (n_value, error) = match mdi_nonlinear_value(&table, bundle) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ComparisonRecord {
                label: ch.label.clone(),
                i_value,
                n_value,
                i_misdetects: i_value.is_some_and(|v| v < -NEG_TOL),
                n_misdetects: n_value.is_some_and(|v| v < -NEG_TOL),
                error,
            }
        })
        .collect()
}
