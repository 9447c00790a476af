//! Fuzzes the separability guarantee: the nonlinear table value must stay
//! nonnegative on separable shared states for arbitrary dichotomic
//! effects, and so must the operator functional evaluated directly.

use mdinew::protocol::{build_table, mdi_nonlinear_value};
use mdinew::random::{random_separable, substream};

use crate::config::Config;
use crate::emit::{Field, RunOutput};
use crate::error::CliResult;
use crate::scenarios::{resolve_bundle, EffectSource, Scenario};

pub struct SeparablePositivity;

/// Effect pairs drawn per state.
const PAIRS_PER_STATE: usize = 10;

impl Scenario for SeparablePositivity {
    fn name(&self) -> &'static str {
        "separable-positivity"
    }

    fn summary(&self) -> &'static str {
        "nonlinear witness values on random separable states stay nonnegative"
    }

    fn run(&self, cfg: &Config) -> CliResult<RunOutput> {
        let (bundle, basis) = resolve_bundle(cfg, "singlet")?;
        let (d_a, d_b) = (basis.d_a(), basis.d_b());
        let trials = cfg.usize_or("trials", 1000)?;
        let seed = cfg.u64_or("seed", 0)?;
        let source = EffectSource::from_config(cfg, "random", d_a, d_b)?;

        let mut records = Vec::with_capacity(trials * PAIRS_PER_STATE);
        for trial in 0..trials {
            let mut rng = substream(seed, &[trial as u64]);
            let sigma = random_separable(d_a, d_b, 1 + trial % 4, &mut rng)?.assemble();
            let operator_value = bundle.nonlinear_value(&sigma)?;
            for pair in 0..PAIRS_PER_STATE {
                let (e_a, e_b) = source.pair(d_a, d_b, &mut rng);
                let table = build_table(&sigma, &basis, &e_a, &e_b)?;
                let table_value = mdi_nonlinear_value(&table, &bundle)?;
                records.push(vec![
                    Field::Real(table_value),
                    Field::Real(operator_value),
                    Field::UInt(pair as u64),
                    Field::UInt(seed),
                    Field::UInt(trial as u64),
                ]);
            }
        }
        Ok(RunOutput {
            columns: vec![
                "mdi_nonlinear",
                "operator_nonlinear",
                "pair",
                "seed",
                "trial",
            ],
            records,
        })
    }
}
