//! Sweeps detector efficiencies over a grid, corrupting (or simulating)
//! the ideal table at each point and evaluating the corrected
//! certification bound. Exact-count mode is deterministic per grid point;
//! mc mode draws event-level statistics from per-point substreams.
//!
//! Failures inside a grid point (typically the measured mixed-pair
//! denominator collapsing under heavy loss) keep their row: the affected
//! value columns carry NaN, certified is false, and the message goes to
//! stderr.

use mdinew::loophole::{certify, corrupt_table, simulate_table, EfficiencyModel};
use mdinew::protocol::{build_table, mdi_nonlinear_value};
use mdinew::random::{derive_seed, substream};

use crate::config::Config;
use crate::emit::{Field, RunOutput};
use crate::error::CliResult;
use crate::scenarios::{resolve_bundle, EffectSource, Scenario};

pub struct LoopholeSweep;

impl Scenario for LoopholeSweep {
    fn name(&self) -> &'static str {
        "loophole-sweep"
    }

    fn summary(&self) -> &'static str {
        "certification verdicts across a detector-efficiency grid"
    }

    fn run(&self, cfg: &Config) -> CliResult<RunOutput> {
        let (bundle, basis) = resolve_bundle(cfg, "singlet")?;
        let (d_a, d_b) = (basis.d_a(), basis.d_b());
        let rho = super::resolve_state(cfg, "singlet")?;
        let source = EffectSource::from_config(cfg, "max_entangled", d_a, d_b)?;
        let grid_plus = cfg.grid_or("eta_plus", 1.0)?;
        let grid_minus = cfg.grid_or("eta_minus", 1.0)?;
        let trials = cfg.usize_or("trials", 1)?;
        let seed = cfg.u64_or("seed", 0)?;
        let nbar = cfg.u64_or("nbar", 100_000)?;
        let monte_carlo = cfg.str_or("count_mode", "exact") == "mc";

        let mut records = Vec::with_capacity(grid_plus.len() * grid_minus.len() * trials);
        for (i, &eta_p) in grid_plus.iter().enumerate() {
            for (j, &eta_m) in grid_minus.iter().enumerate() {
                let model = EfficiencyModel::general(eta_p, eta_m, nbar)?;
                for trial in 0..trials {
                    let lanes = [i as u64, j as u64, trial as u64];
                    let mut rng = substream(seed, &lanes);
                    let (e_a, e_b) = source.pair(d_a, d_b, &mut rng);
                    let ideal = build_table(&rho, &basis, &e_a, &e_b)?;
                    let n_ideal = mdi_nonlinear_value(&ideal, &bundle)?;

                    let outcome = if monte_carlo {
                        simulate_table(&ideal, &model, derive_seed(seed, &lanes))
                    } else {
                        corrupt_table(&ideal, &model)
                    }
                    .and_then(|table| certify(&table, &bundle, &model));

                    let (n_m, rhs, margin, certified) = match outcome {
                        Ok(v) => (v.n_measured, v.bound_rhs, v.margin, v.certified),
                        Err(e) => {
                            eprintln!(
                                "loophole-sweep: eta_plus={eta_p} eta_minus={eta_m} trial={trial}: {e}"
                            );
                            (f64::NAN, f64::NAN, f64::NAN, false)
                        }
                    };
                    records.push(vec![
                        Field::Real(eta_p),
                        Field::Real(eta_m),
                        Field::Real(model.c()),
                        Field::Real(n_ideal),
                        Field::Real(n_m),
                        Field::Real(rhs),
                        Field::Real(margin),
                        Field::Bool(certified),
                        Field::UInt(seed),
                        Field::UInt(trial as u64),
                    ]);
                }
            }
        }
        Ok(RunOutput {
            columns: vec![
                "eta_plus",
                "eta_minus",
                "C",
                "n_ideal",
                "n_measured",
                "bound_rhs",
                "margin",
                "certified",
                "seed",
                "trial",
            ],
            records,
        })
    }
}
