//! Four-party detection protocol: joint outcome distributions and the
//! probability tables the witness functionals are evaluated on.
//!
//! Global ordering is (input A, system A, system B, input B). Alice's joint
//! effect acts on the first two slots, Bob's on the last two, so the pair
//! effect is kron(A1, B1) without any permutation. Callers hand effects on
//! their natural two-subsystem spaces; this module owns the bookkeeping.

use crate::error::{Error, Result};
use crate::linalg::{identity, kron, partial_trace, trace_product, CMatrix, DimSpec};
use crate::state::{DensityMatrix, PovmEffect, PureState, SeparableEnsemble};
use crate::witness::{CoeffGrid, InputBasis, WitnessBundle};

/// Denominators at or below this magnitude are refused.
pub const DENOM_TOL: f64 = 1e-12;
/// Probability entries may stray this far outside [0, 1].
pub const PROB_TOL: f64 = 1e-10;
/// Four-outcome rows must sum to 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Which party's effect an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Where a table's numbers came from. Ideal tables hold exact Born-rule
/// values, measured tables hold event frequencies, corrupted tables hold
/// analytically transformed values that may leave [0, 1] when the ideal
/// distribution could not physically supply the removed events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Ideal,
    Measured,
    Corrupted,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Ideal => "ideal",
            Provenance::Measured => "measured",
            Provenance::Corrupted => "corrupted",
        }
    }
}

/// Full four-outcome distributions for every input pair (s, t) plus the
/// maximally mixed input pair, stored s-major.
#[derive(Debug, Clone)]
pub struct ProbabilityTable {
    d_a: usize,
    d_b: usize,
    n_a: usize,
    n_b: usize,
    cells: Vec<[f64; 4]>,
    mm: [f64; 4],
    provenance: Provenance,
}

fn check_row(row: &[f64; 4], label: &str, provenance: Provenance) -> Result<()> {
    for &p in row {
        if !p.is_finite() {
            return Err(Error::BadProbability(format!("{label}: non-finite entry")));
        }
        if provenance != Provenance::Corrupted && !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
            return Err(Error::BadProbability(format!(
                "{label}: entry {p} outside [0, 1]"
            )));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::BadProbability(format!(
            "{label}: outcomes sum to {sum}"
        )));
    }
    Ok(())
}

impl ProbabilityTable {
    pub fn new(
        d_a: usize,
        d_b: usize,
        cells: Vec<[f64; 4]>,
        mm: [f64; 4],
        provenance: Provenance,
    ) -> Result<Self> {
        if d_a < 2 || d_b < 2 {
            return Err(Error::dim("tables need qudit dimensions of at least 2"));
        }
        let (n_a, n_b) = (d_a * d_a, d_b * d_b);
        if cells.len() != n_a * n_b {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for {}x{} input pairs",
                cells.len(),
                n_a,
                n_b
            )));
        }
        for (k, row) in cells.iter().enumerate() {
            check_row(row, &format!("pair ({}, {})", k / n_b, k % n_b), provenance)?;
        }
        check_row(&mm, "maximally mixed pair", provenance)?;
        Ok(ProbabilityTable {
            d_a,
            d_b,
            n_a,
            n_b,
            cells,
            mm,
            provenance,
        })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    /// Number of side-A inputs (d_a squared).
    pub fn n_a(&self) -> usize {
        self.n_a
    }

    /// Number of side-B inputs (d_b squared).
    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Four-outcome distribution (p00, p01, p10, p11) for input pair (s, t).
    pub fn dist(&self, s: usize, t: usize) -> &[f64; 4] {
        &self.cells[s * self.n_b + t]
    }

    pub fn p11(&self, s: usize, t: usize) -> f64 {
        self.dist(s, t)[3]
    }

    pub fn mm_dist(&self) -> &[f64; 4] {
        &self.mm
    }

    /// Both-click probability for the maximally mixed input pair.
    pub fn p11_mm(&self) -> f64 {
        self.mm[3]
    }

    pub fn cells(&self) -> &[[f64; 4]] {
        &self.cells
    }
}

/// Projector onto the maximally entangled state of a d (x) d pair, the
/// canonical both-click effect.
pub fn max_entangled_effect(d: usize) -> PovmEffect {
    let me = crate::state::maximally_entangled_vec(d);
    PovmEffect::new_unchecked(me.projector(), DimSpec::bipartite(d, d).unwrap())
}

fn check_effect_dims(rho: &DensityMatrix, a1: &PovmEffect, b1: &PovmEffect) -> Result<(usize, usize)> {
    let d = rho.dims().dims();
    if d.len() != 2 {
        return Err(Error::dim("protocol needs a bipartite shared state"));
    }
    let (da, db) = (d[0], d[1]);
    if a1.dim_total() != da * da {
        return Err(Error::dim(format!(
            "side-A effect dimension {} != {}",
            a1.dim_total(),
            da * da
        )));
    }
    if b1.dim_total() != db * db {
        return Err(Error::dim(format!(
            "side-B effect dimension {} != {}",
            b1.dim_total(),
            db * db
        )));
    }
    Ok((da, db))
}

/// Born-rule outcome distribution (p00, p01, p10, p11) for one run of the
/// protocol with inputs tau (Alice) and omega (Bob).
pub fn joint_distribution(
    rho: &DensityMatrix,
    tau: &DensityMatrix,
    omega: &DensityMatrix,
    a1: &PovmEffect,
    b1: &PovmEffect,
) -> Result<[f64; 4]> {
    let (da, db) = check_effect_dims(rho, a1, b1)?;
    if tau.dim_total() != da || omega.dim_total() != db {
        return Err(Error::dim("input state dimensions do not match the shared state"));
    }

    // (A_in, A, B, B_in) = kron(tau, rho, omega) under the fixed ordering.
    let state = kron(&kron(tau.mat(), rho.mat()), omega.mat());
    let full = DimSpec::new(vec![da, da, db, db]).unwrap();
    distribution_from_global(&state, &full, a1, b1)
}

/// Outcome distribution given the already assembled four-party state in
/// the (A_in, A, B, B_in) ordering.
pub(crate) fn distribution_from_global(
    state: &CMatrix,
    full: &DimSpec,
    a1: &PovmEffect,
    b1: &PovmEffect,
) -> Result<[f64; 4]> {
    // Alice's marginal lives on the first two slots, Bob's on the last two.
    let red_a = partial_trace(state, full, &[0, 1])?;
    let red_b = partial_trace(state, full, &[2, 3])?;

    let p11 = trace_product(&kron(a1.mat(), b1.mat()), state).re;
    let pa = trace_product(a1.mat(), &red_a).re;
    let pb = trace_product(b1.mat(), &red_b).re;
    Ok([1.0 - pa - pb + p11, pb - p11, pa - p11, p11])
}

/// Runs the protocol over every input pair of the basis plus the maximally
/// mixed pair, producing an ideal table.
pub fn build_table(
    rho: &DensityMatrix,
    basis: &InputBasis,
    a1: &PovmEffect,
    b1: &PovmEffect,
) -> Result<ProbabilityTable> {
    let (da, db) = check_effect_dims(rho, a1, b1)?;
    if basis.d_a() != da || basis.d_b() != db {
        return Err(Error::dim(format!(
            "basis dimensions ({}, {}) do not match the state ({}, {})",
            basis.d_a(),
            basis.d_b(),
            da,
            db
        )));
    }
    let mut cells = Vec::with_capacity(basis.side_a().len() * basis.side_b().len());
    for tau in basis.side_a() {
        for omega in basis.side_b() {
            cells.push(joint_distribution(rho, tau, omega, a1, b1)?);
        }
    }
    let mixed_a = DensityMatrix::maximally_mixed(DimSpec::single(da).unwrap());
    let mixed_b = DensityMatrix::maximally_mixed(DimSpec::single(db).unwrap());
    let mm = joint_distribution(rho, &mixed_a, &mixed_b, a1, b1)?;
    ProbabilityTable::new(da, db, cells, mm, Provenance::Ideal)
}

fn check_grid(table: &ProbabilityTable, grid: &CoeffGrid) -> Result<()> {
    if grid.rows() != table.n_a() || grid.cols() != table.n_b() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} grid against a {}x{} table",
            grid.rows(),
            grid.cols(),
            table.n_a(),
            table.n_b()
        )));
    }
    Ok(())
}

/// Linear witness functional sum_st c_st P11(s, t) for any coefficient grid.
pub fn mdi_linear_value(table: &ProbabilityTable, grid: &CoeffGrid) -> Result<f64> {
    check_grid(table, grid)?;
    let mut acc = 0.0;
    for (s, t, c) in grid.iter() {
        acc += c * table.p11(s, t);
    }
    Ok(acc)
}

/// Nonlinear witness functional evaluated from probabilities alone:
/// the alpha sum minus the quadratic correction normalised by
/// K * P11(maximally mixed pair).
pub fn mdi_nonlinear_value(table: &ProbabilityTable, bundle: &WitnessBundle) -> Result<f64> {
    if bundle.d_a != table.d_a() || bundle.d_b != table.d_b() {
        return Err(Error::dim(format!(
            "bundle dimensions ({}, {}) do not match table ({}, {})",
            bundle.d_a,
            bundle.d_b,
            table.d_a(),
            table.d_b()
        )));
    }
    let ia = mdi_linear_value(table, &bundle.alpha)?;
    let ib = mdi_linear_value(table, &bundle.beta)?;
    let ig = mdi_linear_value(table, &bundle.gamma)?;
    let denom = bundle.k() * table.p11_mm();
    if denom <= DENOM_TOL {
        return Err(Error::DegenerateDenominator {
            context: "K * p11(mm)",
            value: denom,
        });
    }
    Ok(ia - (ib * ib + ig * ig) / denom)
}

/// Contraction of a joint effect with the local system-state factor,
/// transposed: the operator on the input space whose pairing with tau_s
/// reproduces the party's click probability,
/// (tr_sys[E (I (x) sigma)])^T for side A with ordering (input, system),
/// (tr_sys[E (sigma (x) I)])^T for side B with ordering (system, input).
pub fn effective_effect(
    e: &PovmEffect,
    sigma: &DensityMatrix,
    side: Side,
) -> Result<CMatrix> {
    let ed = e.dims().dims();
    if ed.len() != 2 {
        return Err(Error::dim("effects act on (input, system) pairs"));
    }
    let d_sys = sigma.dim_total();
    let (input_slot, sys_slot) = match side {
        Side::A => (0usize, 1usize),
        Side::B => (1usize, 0usize),
    };
    if ed[sys_slot] != d_sys {
        return Err(Error::dim(format!(
            "system factor {} does not match effect subsystem {}",
            d_sys, ed[sys_slot]
        )));
    }
    let d_in = ed[input_slot];
    let lifted = match side {
        Side::A => kron(&identity(d_in), sigma.mat()),
        Side::B => kron(sigma.mat(), &identity(d_in)),
    };
    let contracted = partial_trace(
        &(e.mat() * lifted),
        &DimSpec::bipartite(ed[0], ed[1]).unwrap(),
        &[input_slot],
    )?;
    Ok(contracted.transpose())
}

/// Two independent evaluations of the same separable-state functional:
/// `n_direct` from the probability table of the assembled state, and the
/// reduced form `t_q * f_of_q` through the effective-effect state Q.
#[derive(Debug, Clone)]
pub struct ReductionCheck {
    /// Trace of the unnormalised effective-effect mixture.
    pub t_q: f64,
    /// Normalised effective-effect state, absent when t_q is degenerate.
    pub q: Option<DensityMatrix>,
    /// Operator-level nonlinear value on Q, absent when t_q is degenerate.
    pub f_of_q: Option<f64>,
    /// Table-level nonlinear value on the assembled state.
    pub n_direct: f64,
    /// |n_direct - t_q * f_of_q|, absent when degenerate.
    pub deviation: Option<f64>,
}

/// Builds Q = (sum_i p_i A1^i (x) B1^i) / T_Q from the ensemble's effective
/// effects and compares T_Q * F(Q) against the table evaluation on the
/// assembled state. The two agree identically in exact arithmetic.
pub fn reduction_check(
    ensemble: &SeparableEnsemble,
    a1: &PovmEffect,
    b1: &PovmEffect,
    bundle: &WitnessBundle,
    basis: &InputBasis,
) -> Result<ReductionCheck> {
    let sigma = ensemble.assemble();
    let table = build_table(&sigma, basis, a1, b1)?;
    let n_direct = mdi_nonlinear_value(&table, bundle)?;

    let (da, db) = (ensemble.dim_a(), ensemble.dim_b());
    let mut g = CMatrix::zeros(da * db, da * db);
    for (w, (sa, sb)) in ensemble.weights().iter().zip(ensemble.pairs()) {
        let ea = effective_effect(a1, sa, Side::A)?;
        let eb = effective_effect(b1, sb, Side::B)?;
        g += kron(&ea, &eb).scale(*w);
    }
    let t_q = crate::linalg::trace(&g).re;
    if t_q <= DENOM_TOL {
        return Ok(ReductionCheck {
            t_q,
            q: None,
            f_of_q: None,
            n_direct,
            deviation: None,
        });
    }
    let q = DensityMatrix::new(
        g.scale(1.0 / t_q),
        DimSpec::bipartite(da, db).unwrap(),
    )?;
    let f = bundle.nonlinear_value(&q)?;
    Ok(ReductionCheck {
        t_q,
        q: Some(q),
        f_of_q: Some(f),
        n_direct,
        deviation: Some((n_direct - t_q * f).abs()),
    })
}

/// Ideal table of a pure state, convenience for scenario code.
pub fn build_table_pure(
    psi: &PureState,
    basis: &InputBasis,
    a1: &PovmEffect,
    b1: &PovmEffect,
) -> Result<ProbabilityTable> {
    build_table(&DensityMatrix::from_pure(psi), basis, a1, b1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::random::{
        random_density, random_dichotomic_effect, random_separable, substream,
    };
    use crate::state::named_state;
    use crate::witness::{make_bundle, PsiChoice};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn singlet_setup() -> (DensityMatrix, InputBasis, PovmEffect, PovmEffect, WitnessBundle) {
        let rho = named_state("singlet").unwrap();
        let basis = InputBasis::standard(2, 2).unwrap();
        let bundle = make_bundle(&rho, &PsiChoice::Default, &basis).unwrap();
        (rho, basis, max_entangled_effect(2), max_entangled_effect(2), bundle)
    }

    #[test]
    fn joint_distribution_is_a_distribution() {
        let mut rng = substream(101, &[]);
        let dims = DimSpec::bipartite(2, 3).unwrap();
        let da = DimSpec::single(2).unwrap();
        let db = DimSpec::single(3).unwrap();
        let ea = DimSpec::bipartite(2, 2).unwrap();
        let eb = DimSpec::bipartite(3, 3).unwrap();
        for _ in 0..10 {
            let rho = random_density(&dims, &mut rng);
            let tau = random_density(&da, &mut rng);
            let omega = random_density(&db, &mut rng);
            let a1 = random_dichotomic_effect(&ea, &mut rng);
            let b1 = random_dichotomic_effect(&eb, &mut rng);
            let d = joint_distribution(&rho, &tau, &omega, &a1, &b1).unwrap();
            let sum: f64 = d.iter().sum();
            assert_close(sum, 1.0, 1e-12);
            for &p in &d {
                assert!(p > -1e-12 && p < 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn both_click_probability_closed_form_for_entangled_effects() {
        // With maximally entangled effects the both-click probability is
        // tr(rho (tau^T (x) omega^T)) / (d_a d_b).
        let mut rng = substream(103, &[1]);
        let dims = DimSpec::bipartite(2, 2).unwrap();
        let single = DimSpec::single(2).unwrap();
        let a1 = max_entangled_effect(2);
        let b1 = max_entangled_effect(2);
        for _ in 0..10 {
            let rho = random_density(&dims, &mut rng);
            let tau = random_density(&single, &mut rng);
            let omega = random_density(&single, &mut rng);
            let d = joint_distribution(&rho, &tau, &omega, &a1, &b1).unwrap();
            let expect = trace_product(
                rho.mat(),
                &kron(&tau.mat().transpose(), &omega.mat().transpose()),
            )
            .re / 4.0;
            assert_close(d[3], expect, 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_pair_probability_is_inverse_square() {
        let (rho, basis, a1, b1, _) = singlet_setup();
        let table = build_table(&rho, &basis, &a1, &b1).unwrap();
        assert_close(table.p11_mm(), 1.0 / 16.0, 1e-12);

        // Any state gives the same maximally mixed value for these effects.
        let mut rng = substream(105, &[]);
        let dims = DimSpec::bipartite(2, 2).unwrap();
        let other = random_density(&dims, &mut rng);
        let t2 = build_table(&other, &basis, &a1, &b1).unwrap();
        assert_close(t2.p11_mm(), 1.0 / 16.0, 1e-12);

        let basis23 = InputBasis::standard(2, 3).unwrap();
        let rho23 = random_density(&DimSpec::bipartite(2, 3).unwrap(), &mut rng);
        let t23 = build_table(&rho23, &basis23, &max_entangled_effect(2), &max_entangled_effect(3))
            .unwrap();
        assert_close(t23.p11_mm(), 1.0 / 36.0, 1e-12);
    }

    #[test]
    fn linear_functional_anchor_values() {
        let (rho, basis, a1, b1, bundle) = singlet_setup();
        let table = build_table(&rho, &basis, &a1, &b1).unwrap();
        let ia = mdi_linear_value(&table, &bundle.alpha).unwrap();
        assert_close(ia, -0.125, 1e-12);

        // |00><00| is separable; the same functional scores +1/8.
        let mut product = CMatrix::zeros(4, 4);
        product[(0, 0)] = num_complex::Complex64::new(1.0, 0.0);
        let rho00 =
            DensityMatrix::new(product, DimSpec::bipartite(2, 2).unwrap()).unwrap();
        let t00 = build_table(&rho00, &basis, &a1, &b1).unwrap();
        assert_close(mdi_linear_value(&t00, &bundle.alpha).unwrap(), 0.125, 1e-12);
    }

    #[test]
    fn nonlinear_functional_matches_operator_route() {
        let (rho, basis, a1, b1, bundle) = singlet_setup();
        let table = build_table(&rho, &basis, &a1, &b1).unwrap();
        let n = mdi_nonlinear_value(&table, &bundle).unwrap();
        assert_close(n, -0.25, 1e-12);
        assert_close(n, bundle.nonlinear_value(&rho).unwrap() / 4.0, 1e-12);

        let mut rng = substream(107, &[]);
        let dims = DimSpec::bipartite(2, 2).unwrap();
        for _ in 0..20 {
            let state = random_density(&dims, &mut rng);
            let t = build_table(&state, &basis, &a1, &b1).unwrap();
            let via_table = mdi_nonlinear_value(&t, &bundle).unwrap();
            let via_ops = bundle.nonlinear_value(&state).unwrap() / 4.0;
            assert_close(via_table, via_ops, 1e-10);
            let lin = mdi_linear_value(&t, &bundle.alpha).unwrap();
            assert!(via_table <= lin + 1e-12);
        }
    }

    #[test]
    fn degenerate_mm_denominator_is_an_error() {
        let (_, _, _, _, bundle) = singlet_setup();
        let cells = vec![[0.25, 0.25, 0.25, 0.25]; 16];
        let table = ProbabilityTable::new(
            2,
            2,
            cells,
            [0.5, 0.5, 0.0, 0.0],
            Provenance::Ideal,
        )
        .unwrap();
        assert!(matches!(
            mdi_nonlinear_value(&table, &bundle),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn effective_effect_closed_forms() {
        let mut rng = substream(109, &[7]);
        let single = DimSpec::single(2).unwrap();
        let sigma = random_density(&single, &mut rng);

        // Identity effect contracts to tr(sigma) I = I.
        let id_effect = PovmEffect::new(identity(4), DimSpec::bipartite(2, 2).unwrap()).unwrap();
        for side in [Side::A, Side::B] {
            let r = effective_effect(&id_effect, &sigma, side).unwrap();
            assert!(max_abs(&(&r - identity(2))) < 1e-12);
        }

        // Maximally entangled projector contracts to sigma / d.
        let me = max_entangled_effect(2);
        for side in [Side::A, Side::B] {
            let r = effective_effect(&me, &sigma, side).unwrap();
            assert!(max_abs(&(&r - sigma.mat().scale(0.5))) < 1e-12);
        }
    }

    #[test]
    fn effective_effect_is_psd_for_random_inputs() {
        let mut rng = substream(111, &[]);
        let single = DimSpec::single(2).unwrap();
        let pair = DimSpec::bipartite(2, 2).unwrap();
        for _ in 0..20 {
            let sigma = random_density(&single, &mut rng);
            let e = random_dichotomic_effect(&pair, &mut rng);
            for side in [Side::A, Side::B] {
                let r = effective_effect(&e, &sigma, side).unwrap();
                let eig = crate::linalg::herm_eig(&r).unwrap();
                assert!(eig.min() > -1e-10);
                assert!(eig.max() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn reduction_identity_with_entangled_effects_gives_q_equal_sigma() {
        // For maximally entangled effects each effective effect is sigma/d,
        // so Q = sigma exactly and T_Q = 1/(d_a d_b).
        let (_, basis, a1, b1, bundle) = singlet_setup();
        let mut rng = substream(113, &[]);
        let ens = random_separable(2, 2, 3, &mut rng).unwrap();
        let check = reduction_check(&ens, &a1, &b1, &bundle, &basis).unwrap();
        assert_close(check.t_q, 0.25, 1e-12);
        let q = check.q.expect("nondegenerate");
        let sigma = ens.assemble();
        assert!(max_abs(&(q.mat() - sigma.mat())) < 1e-12);
        assert!(check.deviation.unwrap() <= 1e-10);
    }

    #[test]
    fn reduction_identity_holds_for_random_effects() {
        let (_, basis, _, _, bundle) = singlet_setup();
        let pair = DimSpec::bipartite(2, 2).unwrap();
        let mut rng = substream(115, &[]);
        for trial in 0..10 {
            let ens = random_separable(2, 2, 1 + trial % 4, &mut rng).unwrap();
            let a1 = random_dichotomic_effect(&pair, &mut rng);
            let b1 = random_dichotomic_effect(&pair, &mut rng);
            let check = reduction_check(&ens, &a1, &b1, &bundle, &basis).unwrap();
            assert!(check.t_q >= 0.0);
            let dev = check.deviation.expect("nondegenerate");
            assert!(dev <= 1e-8, "reduction deviation {dev}");
            // Separable states keep the nonlinear functional nonnegative.
            assert!(check.n_direct > -1e-9);
        }
    }
}
