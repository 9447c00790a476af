//! Detection-loophole modelling: lost and additional events, corrupted
//! probability tables, corrected certification bounds, and event-level
//! Monte Carlo.
//!
//! The three efficiency cases share one affine law. With
//! S = eta_minus + 1/eta_plus and C = 1/(S - 1), a measured probability is
//! P_m = C * (P_i + (S - 2)/4). Lost events alone give C = 1/eta_minus and
//! additional events alone give C = eta_plus; both are exact
//! specialisations, so only the general formula is implemented.
//!
//! The affine law is an idealisation that ignores count feasibility: when
//! an outcome's ideal probability is below (S - 2)/-4 the transform dips
//! under zero, meaning the model removed events that were never there.
//! Corrupted tables therefore skip the [0, 1] range validation, and the
//! certification denominators are guarded instead.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::protocol::{
    mdi_linear_value, mdi_nonlinear_value, ProbabilityTable, Provenance, DENOM_TOL,
};
use crate::random::substream;
use crate::witness::WitnessBundle;

/// Which corruption mechanisms a model enables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficiencyCase {
    LostOnly,
    AdditionalOnly,
    General,
}

impl EfficiencyCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            EfficiencyCase::LostOnly => "lost_only",
            EfficiencyCase::AdditionalOnly => "additional_only",
            EfficiencyCase::General => "general",
        }
    }
}

/// Detector efficiencies plus the ideal per-pair event count.
///
/// eta_minus = (Nbar - E_minus)/Nbar is the lost-event efficiency and
/// eta_plus = Nbar/(Nbar + E_plus) the additional-event efficiency, both in
/// (0, 1]. The contraction factor C = (eta_minus + 1/eta_plus - 1)^-1 is
/// positive throughout that range; it exceeds 1 whenever losses dominate
/// (for pure loss C = 1/eta_minus).
#[derive(Debug, Clone, Copy)]
pub struct EfficiencyModel {
    eta_plus: f64,
    eta_minus: f64,
    nbar: u64,
    case: EfficiencyCase,
}

fn check_eta(eta: f64, name: &str) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::BadEfficiency(format!("{name} = {eta} not in (0, 1]")));
    }
    Ok(())
}

impl EfficiencyModel {
    /// Only lost events; eta_plus is pinned to exactly 1.
    pub fn lost_only(eta_minus: f64, nbar: u64) -> Result<Self> {
        check_eta(eta_minus, "eta_minus")?;
        Self::build(1.0, eta_minus, nbar, EfficiencyCase::LostOnly)
    }

    /// Only additional events; eta_minus is pinned to exactly 1.
    pub fn additional_only(eta_plus: f64, nbar: u64) -> Result<Self> {
        check_eta(eta_plus, "eta_plus")?;
        Self::build(eta_plus, 1.0, nbar, EfficiencyCase::AdditionalOnly)
    }

    pub fn general(eta_plus: f64, eta_minus: f64, nbar: u64) -> Result<Self> {
        check_eta(eta_plus, "eta_plus")?;
        check_eta(eta_minus, "eta_minus")?;
        Self::build(eta_plus, eta_minus, nbar, EfficiencyCase::General)
    }

    fn build(eta_plus: f64, eta_minus: f64, nbar: u64, case: EfficiencyCase) -> Result<Self> {
        if nbar == 0 {
            return Err(Error::BadParameter("nbar must be positive".into()));
        }
        Ok(EfficiencyModel {
            eta_plus,
            eta_minus,
            nbar,
            case,
        })
    }

    pub fn eta_plus(&self) -> f64 {
        self.eta_plus
    }

    pub fn eta_minus(&self) -> f64 {
        self.eta_minus
    }

    pub fn nbar(&self) -> u64 {
        self.nbar
    }

    pub fn case(&self) -> EfficiencyCase {
        self.case
    }

    /// Contraction factor C = (eta_minus + 1/eta_plus - 1)^-1, in (0, inf).
    pub fn c(&self) -> f64 {
        1.0 / (self.eta_minus + 1.0 / self.eta_plus - 1.0)
    }

    /// True when the model corrupts nothing.
    pub fn is_ideal(&self) -> bool {
        self.eta_plus == 1.0 && self.eta_minus == 1.0
    }

    /// Lost events per input pair, E_minus = round((1 - eta_minus) Nbar).
    pub fn lost_events(&self) -> u64 {
        ((1.0 - self.eta_minus) * self.nbar as f64).round() as u64
    }

    /// Additional events per input pair,
    /// E_plus = round(Nbar (1 - eta_plus)/eta_plus).
    pub fn additional_events(&self) -> u64 {
        (self.nbar as f64 * (1.0 - self.eta_plus) / self.eta_plus).round() as u64
    }
}

/// The affine corruption P_m = C (P_i + (S - 2)/4) with
/// S = eta_minus + 1/eta_plus. The uniform value 1/4 is a fixed point.
pub fn corrupt_probability(p_ideal: f64, model: &EfficiencyModel) -> f64 {
    let s = model.eta_minus + 1.0 / model.eta_plus;
    (p_ideal + (s - 2.0) / 4.0) / (s - 1.0)
}

/// Applies the corruption to every outcome of every input pair and to the
/// maximally mixed row. Requires an ideal table; per-row normalisation is
/// preserved by the affine law.
pub fn corrupt_table(table: &ProbabilityTable, model: &EfficiencyModel) -> Result<ProbabilityTable> {
    if table.provenance() != Provenance::Ideal {
        return Err(Error::WrongProvenance {
            expected: "ideal",
            got: table.provenance().as_str(),
        });
    }
    let map = |row: &[f64; 4]| -> [f64; 4] {
        [
            corrupt_probability(row[0], model),
            corrupt_probability(row[1], model),
            corrupt_probability(row[2], model),
            corrupt_probability(row[3], model),
        ]
    };
    let cells = table.cells().iter().map(map).collect();
    ProbabilityTable::new(
        table.d_a(),
        table.d_b(),
        cells,
        map(table.mm_dist()),
        Provenance::Corrupted,
    )
}

/// Additive terms picked up by each witness sum under corruption, all
/// instances of (sum of coefficients)/4 * (1 - C).
#[derive(Debug, Clone, Copy)]
pub struct CorruptionOffsets {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
}

/// Offsets for the three coefficient grids of a bundle: a corrupted sum
/// satisfies (I_c)_m = C (I_c)_i + offset_c.
pub fn corruption_offsets(coeff_sums: &[f64; 3], model: &EfficiencyModel) -> CorruptionOffsets {
    let c = model.c();
    let factor = (1.0 - c) / 4.0;
    CorruptionOffsets {
        alpha: factor * coeff_sums[0],
        beta: factor * coeff_sums[1],
        gamma: factor * coeff_sums[2],
        c,
    }
}

fn require_measured(table: &ProbabilityTable) -> Result<()> {
    if table.provenance() == Provenance::Ideal {
        return Err(Error::WrongProvenance {
            expected: "corrupted or measured",
            got: "ideal",
        });
    }
    Ok(())
}

/// Loophole-corrected certification threshold. The measured nonlinear value
/// must fall strictly below this bound to certify entanglement; the bound
/// is constructed so that (N)_m - bound = C * (N)_i, making the verdict
/// equivalent to the sign of the uncorrupted value.
///
/// Both denominators must be positive: the first equals K C (P11^mm)_i and
/// fails only for degenerate effect choices, while the second K (P11^mm)_m
/// fails when losses are severe enough that the affine model pushed the
/// measured both-click probability for mixed inputs to zero or below.
pub fn certification_bound(
    table: &ProbabilityTable,
    bundle: &WitnessBundle,
    model: &EfficiencyModel,
) -> Result<f64> {
    require_measured(table)?;
    let ib = mdi_linear_value(table, &bundle.beta)?;
    let ig = mdi_linear_value(table, &bundle.gamma)?;
    let offs = corruption_offsets(&bundle.coeff_sums(), model);
    let k = bundle.k();
    let pmm = table.p11_mm();

    let d1 = k * (pmm - (1.0 - offs.c) / 4.0);
    if d1 <= DENOM_TOL {
        return Err(Error::DegenerateDenominator {
            context: "K * (p11(mm) - (1 - C)/4)",
            value: d1,
        });
    }
    let d2 = k * pmm;
    if d2 <= DENOM_TOL {
        return Err(Error::DegenerateDenominator {
            context: "K * p11(mm) on the measured table",
            value: d2,
        });
    }
    let num1 = (ib - offs.beta).powi(2) + (ig - offs.gamma).powi(2);
    let num2 = ib * ib + ig * ig;
    Ok(num1 / d1 - num2 / d2 + offs.alpha)
}

/// Outcome of a loophole-corrected certification.
#[derive(Debug, Clone, Copy)]
pub struct Verdict {
    pub n_measured: f64,
    pub bound_rhs: f64,
    pub certified: bool,
    /// bound_rhs - n_measured; positive iff certified.
    pub margin: f64,
}

/// Evaluates the measured nonlinear value against the corrected bound.
pub fn certify(
    table: &ProbabilityTable,
    bundle: &WitnessBundle,
    model: &EfficiencyModel,
) -> Result<Verdict> {
    require_measured(table)?;
    let n_measured = mdi_nonlinear_value(table, bundle)?;
    let bound_rhs = certification_bound(table, bundle, model)?;
    Ok(Verdict {
        n_measured,
        bound_rhs,
        certified: n_measured < bound_rhs,
        margin: bound_rhs - n_measured,
    })
}

/// Event bookkeeping for one input pair of a simulated run.
#[derive(Debug, Clone, Copy)]
pub struct EventCounts {
    /// Multinomial draw of the ideal distribution.
    pub ideal: [u64; 4],
    /// Additional events credited to each outcome.
    pub eps_plus: [u64; 4],
    /// Lost events removed from each outcome.
    pub eps_minus: [u64; 4],
    /// ideal + eps_plus - eps_minus.
    pub counts: [u64; 4],
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn multinomial(n: u64, dist: &[f64; 4], rng: &mut impl Rng) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut remaining = n;
    let mut mass = 1.0_f64;
    for i in 0..3 {
        if remaining == 0 || mass <= 0.0 {
            break;
        }
        let p = (dist[i] / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, p)
            .expect("clamped probability is valid")
            .sample(rng);
        out[i] = draw;
        remaining -= draw;
        mass -= dist[i];
    }
    out[3] = remaining;
    out
}

/// Splits `total` into four shares: an even floor plus a remainder spread
/// over distinct outcomes chosen by the generator.
fn quarter_split(total: u64, rng: &mut impl Rng) -> [u64; 4] {
    let base = total / 4;
    let rem = (total % 4) as usize;
    let mut shares = [base; 4];
    let mut slots = [0usize, 1, 2, 3];
    for k in 0..rem {
        let j = rng.random_range(k..4);
        slots.swap(k, j);
        shares[slots[k]] += 1;
    }
    shares
}

/// Draws one input pair's worth of events: a multinomial sample of the
/// ideal distribution, minus uniformly spread lost events, plus uniformly
/// spread additional events. Returns the bookkeeping and the measured
/// frequency estimate counts/total.
///
/// Remainders of the per-outcome quarters go to generator-chosen outcomes.
/// If a removal share exceeds an outcome's available count, only the
/// remainder assignment is redrawn; after 100 infeasible assignments the
/// draw fails.
pub fn simulate_events(
    ideal_dist: &[f64; 4],
    model: &EfficiencyModel,
    rng: &mut impl Rng,
) -> Result<(EventCounts, [f64; 4])> {
    let sum: f64 = ideal_dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || ideal_dist.iter().any(|&p| !(-1e-12..=1.0 + 1e-9).contains(&p)) {
        return Err(Error::BadProbability(format!(
            "event simulation needs a normalised distribution, got {ideal_dist:?}"
        )));
    }
    let clamped = [
        ideal_dist[0].max(0.0),
        ideal_dist[1].max(0.0),
        ideal_dist[2].max(0.0),
        ideal_dist[3].max(0.0),
    ];
    let ideal = multinomial(model.nbar(), &clamped, rng);

    let e_minus = model.lost_events();
    let e_plus = model.additional_events();

    let mut eps_minus = [0u64; 4];
    if e_minus > 0 {
        let mut feasible = false;
        for _ in 0..100 {
            let candidate = quarter_split(e_minus, rng);
            if candidate.iter().zip(ideal.iter()).all(|(r, n)| r <= n) {
                eps_minus = candidate;
                feasible = true;
                break;
            }
        }
        if !feasible {
            return Err(Error::InfeasibleRemoval(format!(
                "cannot remove {e_minus} events from counts {ideal:?}"
            )));
        }
    }
    let eps_plus = if e_plus > 0 {
        quarter_split(e_plus, rng)
    } else {
        [0; 4]
    };

    let mut counts = [0u64; 4];
    for i in 0..4 {
        counts[i] = ideal[i] + eps_plus[i] - eps_minus[i];
    }
    let events = EventCounts {
        ideal,
        eps_plus,
        eps_minus,
        counts,
    };
    let total = events.total();
    if total == 0 {
        return Err(Error::InfeasibleRemoval(
            "no events remain after removals".into(),
        ));
    }
    let measured = [
        counts[0] as f64 / total as f64,
        counts[1] as f64 / total as f64,
        counts[2] as f64 / total as f64,
        counts[3] as f64 / total as f64,
    ];
    Ok((events, measured))
}

/// Simulates every row of an ideal table at the model's event count.
/// Each input pair consumes its own substream of `seed`, so row order
/// never affects the outcome; the maximally mixed row uses the
/// out-of-range lane (n_a, n_b).
pub fn simulate_table(
    table: &ProbabilityTable,
    model: &EfficiencyModel,
    seed: u64,
) -> Result<ProbabilityTable> {
    if table.provenance() != Provenance::Ideal {
        return Err(Error::WrongProvenance {
            expected: "ideal",
            got: table.provenance().as_str(),
        });
    }
    let (n_a, n_b) = (table.n_a(), table.n_b());
    let mut cells = Vec::with_capacity(n_a * n_b);
    for s in 0..n_a {
        for t in 0..n_b {
            let mut rng = substream(seed, &[s as u64, t as u64]);
            let (_, measured) = simulate_events(table.dist(s, t), model, &mut rng)?;
            cells.push(measured);
        }
    }
    let mut rng = substream(seed, &[n_a as u64, n_b as u64]);
    let (_, mm) = simulate_events(table.mm_dist(), model, &mut rng)?;
    ProbabilityTable::new(table.d_a(), table.d_b(), cells, mm, Provenance::Measured)
}

/// How tables are produced during the efficiency-threshold search.
#[derive(Debug, Clone, Copy)]
pub enum CountMode {
    /// Analytic corruption of exact probabilities.
    Exact,
    /// Event-level simulation; each efficiency value derives its table
    /// seed from this master seed and the efficiency bit pattern.
    MonteCarlo { seed: u64 },
}

/// Which efficiency the threshold search varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VaryEta {
    Plus,
    Minus,
}

/// Result of the threshold search.
#[derive(Debug, Clone, Copy)]
pub struct CriticalEfficiency {
    /// Smallest efficiency that still certifies (to 1e-4), or the smallest
    /// certified grid point when the scan was not monotone.
    pub eta: f64,
    pub non_monotone: bool,
}

const ETA_FLOOR: f64 = 1e-4;
const GRID_POINTS: usize = 32;
const BISECTION_TOL: f64 = 1e-4;

/// Finds the smallest varied efficiency at which certification still
/// succeeds, holding the other efficiency fixed. Evaluation errors
/// (degenerate denominators, infeasible removals) count as not certified.
/// A certification pattern that is not a clean suffix of the grid is
/// reported with the `non_monotone` flag instead of bisecting.
pub fn critical_efficiency(
    ideal: &ProbabilityTable,
    bundle: &WitnessBundle,
    vary: VaryEta,
    fixed_eta: f64,
    nbar: u64,
    mode: CountMode,
) -> Result<CriticalEfficiency> {
    check_eta(fixed_eta, "fixed efficiency")?;
    let evaluate = |eta: f64| -> bool {
        let model = match vary {
            VaryEta::Plus => EfficiencyModel::general(eta, fixed_eta, nbar),
            VaryEta::Minus => EfficiencyModel::general(fixed_eta, eta, nbar),
        };
        let Ok(model) = model else { return false };
        let table = match mode {
            CountMode::Exact => corrupt_table(ideal, &model),
            CountMode::MonteCarlo { seed } => {
                simulate_table(ideal, &model, crate::random::derive_seed(seed, &[eta.to_bits()]))
            }
        };
        let Ok(table) = table else { return false };
        certify(&table, bundle, &model).map_or(false, |v| v.certified)
    };

    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|k| ETA_FLOOR + (1.0 - ETA_FLOOR) * k as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let flags: Vec<bool> = grid.iter().map(|&e| evaluate(e)).collect();

    if !flags[GRID_POINTS - 1] {
        return Err(Error::NeverCertified);
    }
    let first_certified = flags.iter().position(|&f| f).unwrap();
    let suffix_clean = flags[first_certified..].iter().all(|&f| f);
    if !suffix_clean {
        return Ok(CriticalEfficiency {
            eta: grid[first_certified],
            non_monotone: true,
        });
    }
    if first_certified == 0 {
        return Ok(CriticalEfficiency {
            eta: ETA_FLOOR,
            non_monotone: false,
        });
    }

    let (mut lo, mut hi) = (grid[first_certified - 1], grid[first_certified]);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if evaluate(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalEfficiency {
        eta: hi,
        non_monotone: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DimSpec;
    use crate::protocol::{build_table, max_entangled_effect};
    use crate::random::{random_density, random_dichotomic_effect, random_separable};
    use crate::state::named_state;
    use crate::witness::{make_bundle, CoeffGrid, InputBasis, PsiChoice};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn singlet_table_and_bundle() -> (ProbabilityTable, WitnessBundle) {
        let rho = named_state("singlet").unwrap();
        let basis = InputBasis::standard(2, 2).unwrap();
        let bundle = make_bundle(&rho, &PsiChoice::Default, &basis).unwrap();
        let table = build_table(
            &rho,
            &basis,
            &max_entangled_effect(2),
            &max_entangled_effect(2),
        )
        .unwrap();
        (table, bundle)
    }

    #[test]
    fn corruption_identity_and_fixed_point() {
        let ideal = EfficiencyModel::general(1.0, 1.0, 100).unwrap();
        for &p in &[0.0, 0.3, 1.0] {
            assert_close(corrupt_probability(p, &ideal), p, 1e-15);
        }
        for &(ep, em) in &[(1.0, 0.6), (0.7, 1.0), (0.8, 0.9), (0.5, 0.5)] {
            let model = EfficiencyModel::general(ep, em, 100).unwrap();
            assert_close(corrupt_probability(0.25, &model), 0.25, 1e-14);
        }
    }

    #[test]
    fn lost_only_spot_value() {
        // eta_minus = 0.8, P = 0.5: 0.5/0.8 - 0.2/3.2 = 0.5625.
        let model = EfficiencyModel::lost_only(0.8, 1000).unwrap();
        assert_close(corrupt_probability(0.5, &model), 0.5625, 1e-15);
    }

    #[test]
    fn general_formula_specialises_exactly() {
        // 1e-15 absolute holds wherever the transform stays order one; at
        // extreme eta the value leaves [0, 1] and only a few-ulp relative
        // agreement with the rearranged closed form is representable.
        let ps = [0.0, 0.1, 0.25, 0.5, 0.99, 1.0];
        for k in 1..=20 {
            let eta = k as f64 / 20.0;
            let lost = EfficiencyModel::lost_only(eta, 100).unwrap();
            let add = EfficiencyModel::additional_only(eta, 100).unwrap();
            for &p in &ps {
                // Pure loss: P/eta - (1 - eta)/(4 eta).
                let expect_lost = p / eta - (1.0 - eta) / (4.0 * eta);
                assert_close(
                    corrupt_probability(p, &lost),
                    expect_lost,
                    1e-15 + 4e-15 * expect_lost.abs(),
                );
                // Pure addition: eta (P + (1 - eta)/(4 eta)).
                let expect_add = eta * (p + (1.0 - eta) / (4.0 * eta));
                assert_close(corrupt_probability(p, &add), expect_add, 1e-15);
            }
        }
    }

    #[test]
    fn contraction_factor_cases() {
        let lost = EfficiencyModel::lost_only(0.8, 10).unwrap();
        assert_close(lost.c(), 1.25, 1e-14);
        let add = EfficiencyModel::additional_only(0.8, 10).unwrap();
        assert_close(add.c(), 0.8, 1e-14);
        let gen = EfficiencyModel::general(0.9, 0.9, 10).unwrap();
        assert!(gen.c() > 0.0);
        assert!(EfficiencyModel::general(0.0, 1.0, 10).is_err());
        assert!(EfficiencyModel::general(1.1, 1.0, 10).is_err());
        assert!(EfficiencyModel::general(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn corrupt_table_linearity_for_all_grids() {
        let (table, bundle) = singlet_table_and_bundle();
        for &(ep, em) in &[(1.0, 0.85), (0.9, 1.0), (0.9, 0.9)] {
            let model = EfficiencyModel::general(ep, em, 100).unwrap();
            let corrupted = corrupt_table(&table, &model).unwrap();
            assert_eq!(corrupted.provenance(), Provenance::Corrupted);
            let offs = corruption_offsets(&bundle.coeff_sums(), &model);
            for (grid, off) in [
                (&bundle.alpha, offs.alpha),
                (&bundle.beta, offs.beta),
                (&bundle.gamma, offs.gamma),
            ] {
                let ideal_v = mdi_linear_value(&table, grid).unwrap();
                let measured_v = mdi_linear_value(&corrupted, grid).unwrap();
                assert_close(measured_v, offs.c * ideal_v + off, 1e-12);
            }
        }
        // Corrupting twice is refused.
        let model = EfficiencyModel::lost_only(0.9, 100).unwrap();
        let corrupted = corrupt_table(&table, &model).unwrap();
        assert!(matches!(
            corrupt_table(&corrupted, &model),
            Err(Error::WrongProvenance { .. })
        ));
    }

    #[test]
    fn offsets_match_case_formulas() {
        let sums = [0.7, -0.3, 0.1];
        // Fully ideal: no offsets.
        let ideal = EfficiencyModel::lost_only(1.0, 10).unwrap();
        let offs = corruption_offsets(&sums, &ideal);
        assert_close(offs.alpha, 0.0, 1e-15);
        assert_close(offs.beta, 0.0, 1e-15);
        // Lost events: (eta - 1)/(4 eta) sum.
        let lost = EfficiencyModel::lost_only(0.8, 10).unwrap();
        let offs = corruption_offsets(&sums, &lost);
        for (o, s) in [(offs.alpha, sums[0]), (offs.beta, sums[1]), (offs.gamma, sums[2])] {
            assert_close(o, (0.8 - 1.0) / (4.0 * 0.8) * s, 1e-15);
        }
        // Additional events: (1 - eta)/4 sum.
        let add = EfficiencyModel::additional_only(0.6, 10).unwrap();
        let offs = corruption_offsets(&sums, &add);
        assert_close(offs.alpha, (1.0 - 0.6) / 4.0 * sums[0], 1e-15);
        // Zero sums give zero offsets for any model.
        let gen = EfficiencyModel::general(0.7, 0.7, 10).unwrap();
        let offs = corruption_offsets(&[0.0; 3], &gen);
        assert_close(offs.alpha.abs() + offs.beta.abs() + offs.gamma.abs(), 0.0, 0.0);
    }

    #[test]
    fn bound_vanishes_at_unit_efficiency() {
        let (table, bundle) = singlet_table_and_bundle();
        let model = EfficiencyModel::general(1.0, 1.0, 100).unwrap();
        let corrupted = corrupt_table(&table, &model).unwrap();
        let rhs = certification_bound(&corrupted, &bundle, &model).unwrap();
        assert_close(rhs, 0.0, 1e-12);
    }

    #[test]
    fn bound_reduces_to_offset_when_quadratic_grids_vanish() {
        let (table, mut bundle) = singlet_table_and_bundle();
        bundle.beta = CoeffGrid::zeros(4, 4);
        bundle.gamma = CoeffGrid::zeros(4, 4);
        for &(ep, em) in &[(1.0, 0.85), (0.9, 1.0), (0.92, 0.95)] {
            let model = EfficiencyModel::general(ep, em, 100).unwrap();
            let corrupted = corrupt_table(&table, &model).unwrap();
            let offs = corruption_offsets(&bundle.coeff_sums(), &model);
            let rhs = certification_bound(&corrupted, &bundle, &model).unwrap();
            assert_close(rhs, offs.alpha, 1e-12);
        }
    }

    #[test]
    fn lost_only_bound_matches_published_closed_form() {
        let (table, bundle) = singlet_table_and_bundle();
        for &eta in &[0.8, 0.85, 0.9, 0.95, 1.0] {
            let model = EfficiencyModel::lost_only(eta, 100).unwrap();
            let corrupted = corrupt_table(&table, &model).unwrap();
            let rhs = certification_bound(&corrupted, &bundle, &model).unwrap();

            // Independent evaluation of the pure-loss bound: the quadratic
            // correction carries prefactor eta/(K (eta P_mm + (1-eta)/4))
            // and offsets (eta - 1)/(4 eta) sum_c.
            let ib = mdi_linear_value(&corrupted, &bundle.beta).unwrap();
            let ig = mdi_linear_value(&corrupted, &bundle.gamma).unwrap();
            let sums = bundle.coeff_sums();
            let p_c = |s: f64| (eta - 1.0) / (4.0 * eta) * s;
            let k = bundle.k();
            let pmm = corrupted.p11_mm();
            let expect = ((ib - p_c(sums[1])).powi(2) + (ig - p_c(sums[2])).powi(2)) * eta
                / (k * (eta * pmm + (1.0 - eta) / 4.0))
                - (ib * ib + ig * ig) / (k * pmm)
                + p_c(sums[0]);
            assert_close(rhs, expect, 1e-12);
        }
    }

    #[test]
    fn sign_preservation_identity() {
        // (N)_m - bound = C (N)_i for random states, effects, and models.
        let basis = InputBasis::standard(2, 2).unwrap();
        let singlet = named_state("singlet").unwrap();
        let bundle = make_bundle(&singlet, &PsiChoice::Default, &basis).unwrap();
        let dims = DimSpec::bipartite(2, 2).unwrap();
        let pair = DimSpec::bipartite(2, 2).unwrap();
        let mut rng = crate::random::substream(211, &[]);
        for trial in 0..30u64 {
            let rho = random_density(&dims, &mut rng);
            let a1 = random_dichotomic_effect(&pair, &mut rng);
            let b1 = random_dichotomic_effect(&pair, &mut rng);
            let table = build_table(&rho, &basis, &a1, &b1).unwrap();
            let eta_a: f64 = 0.85 + 0.15 * rng.random::<f64>();
            let eta_b: f64 = 0.85 + 0.15 * rng.random::<f64>();
            let model = match trial % 3 {
                0 => EfficiencyModel::lost_only(eta_a, 100).unwrap(),
                1 => EfficiencyModel::additional_only(eta_a, 100).unwrap(),
                _ => EfficiencyModel::general(eta_a, eta_b, 100).unwrap(),
            };
            let n_ideal = mdi_nonlinear_value(&table, &bundle).unwrap();
            let corrupted = corrupt_table(&table, &model).unwrap();
            let verdict = certify(&corrupted, &bundle, &model).unwrap();
            let lhs = verdict.n_measured - verdict.bound_rhs;
            assert_close(lhs, model.c() * n_ideal, 1e-10);
        }
    }

    #[test]
    fn singlet_certification_anchor() {
        let (table, bundle) = singlet_table_and_bundle();
        let ideal_model = EfficiencyModel::general(1.0, 1.0, 100).unwrap();
        let corrupted = corrupt_table(&table, &ideal_model).unwrap();
        let verdict = certify(&corrupted, &bundle, &ideal_model).unwrap();
        assert!(verdict.certified);
        // bound = 0 and N = -1/8 - 1/8 = -1/4, so the margin is 1/4.
        assert_close(verdict.margin, 0.25, 1e-12);

        // Moderate pure loss keeps the verdict through the identity.
        let lossy = EfficiencyModel::lost_only(0.8, 100).unwrap();
        let corrupted = corrupt_table(&table, &lossy).unwrap();
        let verdict = certify(&corrupted, &bundle, &lossy).unwrap();
        assert!(verdict.certified);
        assert_close(verdict.margin, 1.25 * 0.25, 1e-10);
    }

    #[test]
    fn severe_loss_breaks_the_measured_denominator() {
        // At eta_minus = 0.5 the corrupted mixed-pair probability is
        // 2/16 - 1/4 < 0; the affine model has left the physical region
        // and the guarded denominator reports it.
        let (table, bundle) = singlet_table_and_bundle();
        let model = EfficiencyModel::lost_only(0.5, 100).unwrap();
        let corrupted = corrupt_table(&table, &model).unwrap();
        assert!(corrupted.p11_mm() < 0.0);
        assert!(matches!(
            certify(&corrupted, &bundle, &model),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn separable_states_never_certify() {
        let basis = InputBasis::standard(2, 2).unwrap();
        let singlet = named_state("singlet").unwrap();
        let bundle = make_bundle(&singlet, &PsiChoice::Default, &basis).unwrap();
        let pair = DimSpec::bipartite(2, 2).unwrap();
        let mut rng = crate::random::substream(223, &[]);
        for trial in 0..20u64 {
            let sigma = random_separable(2, 2, 1 + (trial % 4) as usize, &mut rng)
                .unwrap()
                .assemble();
            let a1 = random_dichotomic_effect(&pair, &mut rng);
            let b1 = random_dichotomic_effect(&pair, &mut rng);
            let table = build_table(&sigma, &basis, &a1, &b1).unwrap();
            let eta: f64 = 0.85 + 0.15 * rng.random::<f64>();
            let model = EfficiencyModel::general(1.0, eta, 100).unwrap();
            let corrupted = corrupt_table(&table, &model).unwrap();
            let verdict = certify(&corrupted, &bundle, &model).unwrap();
            assert!(!verdict.certified, "separable state certified at trial {trial}");
        }
    }

    #[test]
    fn event_simulation_reproduces_analytic_values() {
        let nbar = 1_000_000u64;
        let dist = [0.1, 0.25, 0.15, 0.5];
        let model = EfficiencyModel::lost_only(0.8, nbar).unwrap();
        let mut rng = crate::random::substream(227, &[]);
        let (events, measured) = simulate_events(&dist, &model, &mut rng).unwrap();
        assert_eq!(events.total(), nbar - model.lost_events());
        let total = events.total() as f64;
        for i in 0..4 {
            let expect = corrupt_probability(dist[i], &model);
            let sigma = (nbar as f64 * dist[i] * (1.0 - dist[i])).sqrt() / total;
            assert!(
                (measured[i] - expect).abs() <= 5.0 * sigma + 3.0 / total,
                "outcome {i}: {} vs {expect}",
                measured[i]
            );
        }
    }

    #[test]
    fn uniform_distribution_is_fixed_under_simulation() {
        let nbar = 1_000_000u64;
        let dist = [0.25; 4];
        let model = EfficiencyModel::general(0.9, 0.9, nbar).unwrap();
        let mut rng = crate::random::substream(229, &[]);
        let (_, measured) = simulate_events(&dist, &model, &mut rng).unwrap();
        let sigma = (nbar as f64 * 0.25 * 0.75).sqrt() / nbar as f64;
        for &m in &measured {
            assert!((m - 0.25).abs() <= 5.0 * sigma);
        }
    }

    #[test]
    fn infeasible_removal_is_reported() {
        // Removing 60% of events when one outcome holds 90% of the mass
        // leaves the quarter shares unsatisfiable.
        let dist = [0.9, 0.1, 0.0, 0.0];
        let model = EfficiencyModel::lost_only(0.4, 10_000).unwrap();
        let mut rng = crate::random::substream(233, &[]);
        assert!(matches!(
            simulate_events(&dist, &model, &mut rng),
            Err(Error::InfeasibleRemoval(_))
        ));
    }

    #[test]
    fn simulated_tables_are_reproducible() {
        let (table, bundle) = singlet_table_and_bundle();
        let model = EfficiencyModel::additional_only(0.9, 20_000).unwrap();
        let t1 = simulate_table(&table, &model, 31).unwrap();
        let t2 = simulate_table(&table, &model, 31).unwrap();
        assert_eq!(t1.cells(), t2.cells());
        assert_eq!(t1.mm_dist(), t2.mm_dist());
        assert_eq!(t1.provenance(), Provenance::Measured);
        let n1 = mdi_nonlinear_value(&t1, &bundle).unwrap();
        let n2 = mdi_nonlinear_value(&t2, &bundle).unwrap();
        assert_eq!(n1, n2);
        let t3 = simulate_table(&table, &model, 32).unwrap();
        assert_ne!(t1.cells(), t3.cells());
    }

    #[test]
    fn critical_efficiency_exact_mode_singlet() {
        let (table, bundle) = singlet_table_and_bundle();
        // Additional events never break feasibility and the identity makes
        // certification efficiency-independent, so the search hits the floor.
        let plus = critical_efficiency(&table, &bundle, VaryEta::Plus, 1.0, 100, CountMode::Exact)
            .unwrap();
        assert!(!plus.non_monotone);
        assert_close(plus.eta, 1e-4, 1e-12);

        // Pure loss hits the physical feasibility edge of the mixed-pair
        // probability: P_mm = 1/16 corrupts to zero at eta = 3/4.
        let minus =
            critical_efficiency(&table, &bundle, VaryEta::Minus, 1.0, 100, CountMode::Exact)
                .unwrap();
        assert!(!minus.non_monotone);
        assert_close(minus.eta, 0.75, 2e-4);
    }

    #[test]
    fn critical_efficiency_monte_carlo_reproducible() {
        let basis = InputBasis::standard(2, 2).unwrap();
        let rho = named_state("werner 0.9").unwrap();
        let bundle = make_bundle(&rho, &PsiChoice::Default, &basis).unwrap();
        let table = build_table(
            &rho,
            &basis,
            &max_entangled_effect(2),
            &max_entangled_effect(2),
        )
        .unwrap();
        let mode = CountMode::MonteCarlo { seed: 404 };
        let r1 =
            critical_efficiency(&table, &bundle, VaryEta::Minus, 1.0, 10_000, mode).unwrap();
        let r2 =
            critical_efficiency(&table, &bundle, VaryEta::Minus, 1.0, 10_000, mode).unwrap();
        assert_eq!(r1.eta.to_bits(), r2.eta.to_bits());
        assert_eq!(r1.non_monotone, r2.non_monotone);
        assert!(r1.eta > 0.0 && r1.eta <= 1.0);
    }

    #[test]
    fn never_certified_is_an_error() {
        let basis = InputBasis::standard(2, 2).unwrap();
        let singlet = named_state("singlet").unwrap();
        let bundle = make_bundle(&singlet, &PsiChoice::Default, &basis).unwrap();
        let sigma = named_state("maximally_mixed 2").unwrap();
        let table = build_table(
            &sigma,
            &basis,
            &max_entangled_effect(2),
            &max_entangled_effect(2),
        )
        .unwrap();
        assert!(matches!(
            critical_efficiency(&table, &bundle, VaryEta::Minus, 1.0, 100, CountMode::Exact),
            Err(Error::NeverCertified)
        ));
    }
}
