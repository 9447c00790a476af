//! Searches for shared states the linear witness misses but the
//! nonlinear one catches.
//!
//! Two probe families run at 2x2. The structured family fixes the witness
//! of the singlet, picks the correction reference (|00> - |11>)/sqrt(2),
//! and scans the pure states
//!
//!   chi(t) = sqrt(1 - 2 t^2) |00> + i t |01> + t |10>,
//!
//! whose linear table value (1 - 2 t^2)/8 is never negative while the
//! nonlinear value dips below zero on part of the range. The random
//! family redraws a witness from a random NPT state and probes a random
//! pure state. A final summary row states whether any gap was found, so a
//! negative search is an explicit result rather than an empty file.

use mdinew::linalg::{CVector, DimSpec, C64};
use mdinew::protocol::{build_table, max_entangled_effect, mdi_linear_value, mdi_nonlinear_value};
use mdinew::random::{random_density, random_pure, substream};
use mdinew::state::{named_state, DensityMatrix, PureState};
use mdinew::witness::{make_bundle, InputBasis, PsiChoice};

use crate::config::Config;
use crate::emit::{Field, RunOutput};
use crate::error::{CliError, CliResult};
use crate::scenarios::Scenario;

pub struct NewVsEw;

const T_SQUARED_STEPS: usize = 11;
/// Linear values this far below zero still count as "not detected".
const LINEAR_TOL: f64 = 1e-12;
const NONLINEAR_TOL: f64 = 1e-9;

fn structured_probe(t_sq: f64) -> PureState {
    let t = t_sq.sqrt();
    let a = (1.0 - 2.0 * t_sq).max(0.0).sqrt();
    let mut v = CVector::zeros(4);
    v[0] = C64::new(a, 0.0);
    v[1] = C64::new(0.0, t);
    v[2] = C64::new(t, 0.0);
    PureState::new(v, DimSpec::bipartite(2, 2).unwrap()).unwrap()
}

fn phi_minus() -> PureState {
    let mut v = CVector::zeros(4);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    v[0] = C64::new(r, 0.0);
    v[3] = C64::new(-r, 0.0);
    PureState::new(v, DimSpec::bipartite(2, 2).unwrap()).unwrap()
}

impl Scenario for NewVsEw {
    fn name(&self) -> &'static str {
        "new-vs-ew"
    }

    fn summary(&self) -> &'static str {
        "search for states the nonlinear witness detects but the linear one misses"
    }

    fn check(&self, cfg: &Config) -> CliResult<()> {
        if cfg.usize_or("d_a", 2)? != 2 || cfg.usize_or("d_b", 2)? != 2 {
            return Err(CliError::config("new-vs-ew runs at d_a = d_b = 2"));
        }
        Ok(())
    }

    fn run(&self, cfg: &Config) -> CliResult<RunOutput> {
        let trials = cfg.usize_or("trials", 50)?;
        let seed = cfg.u64_or("seed", 0)?;
        let basis = InputBasis::standard(2, 2)?;
        let e = max_entangled_effect(2);
        let dims = DimSpec::bipartite(2, 2).unwrap();

        let mut records = Vec::new();
        let mut any_gap = false;
        let mut push = |probe: String, t_sq: f64, i: f64, n: f64, trial: u64, seed: u64| -> bool {
            let gap = i >= -LINEAR_TOL && n < -NONLINEAR_TOL;
            records.push(vec![
                Field::Text(probe),
                Field::Real(t_sq),
                Field::Real(i),
                Field::Real(n),
                Field::Bool(gap),
                Field::UInt(seed),
                Field::UInt(trial),
            ]);
            gap
        };

        let singlet = named_state("singlet")?;
        let bundle = make_bundle(&singlet, &PsiChoice::Custom(phi_minus()), &basis)?;
        for k in 0..T_SQUARED_STEPS {
            let t_sq = 0.5 * k as f64 / (T_SQUARED_STEPS - 1) as f64;
            let chi = DensityMatrix::from_pure(&structured_probe(t_sq));
            let table = build_table(&chi, &basis, &e, &e)?;
            let i = mdi_linear_value(&table, &bundle.alpha)?;
            let n = mdi_nonlinear_value(&table, &bundle)?;
            any_gap |= push("structured".to_string(), t_sq, i, n, k as u64, seed);
        }

        for trial in 0..trials {
            let mut rng = substream(seed, &[1, trial as u64]);
            // Redraw until the witness source is NPT; Ginibre states at
            // this size usually are.
            let mut source = random_density(&dims, &mut rng);
            let mut tries = 0;
            while source.min_pt_eigenvalue(1)? > -1e-6 {
                source = random_density(&dims, &mut rng);
                tries += 1;
                if tries > 200 {
                    return Err(CliError::config(
                        "could not draw an NPT witness source".to_string(),
                    ));
                }
            }
            let bundle = make_bundle(&source, &PsiChoice::Default, &basis)?;
            let probe = DensityMatrix::from_pure(&random_pure(&dims, &mut rng));
            let table = build_table(&probe, &basis, &e, &e)?;
            let i = mdi_linear_value(&table, &bundle.alpha)?;
            let n = mdi_nonlinear_value(&table, &bundle)?;
            any_gap |= push("random".to_string(), f64::NAN, i, n, trial as u64, seed);
        }

        let total = records.len() as u64;
        records.push(vec![
            Field::Text("summary".to_string()),
            Field::Real(f64::NAN),
            Field::Real(f64::NAN),
            Field::Real(f64::NAN),
            Field::Bool(any_gap),
            Field::UInt(seed),
            Field::UInt(total),
        ]);
        Ok(RunOutput {
            columns: vec![
                "probe",
                "t_squared",
                "mdi_linear",
                "mdi_nonlinear",
                "gap_found",
                "seed",
                "trial",
            ],
            records,
        })
    }
}
