//! With maximally entangled input effects, the protocol quantities reduce
//! to scaled operator traces: the linear table value equals
//! tr(W rho)/(d_A d_B) and the nonlinear one equals the operator
//! functional divided by the same factor. This scenario measures both
//! deviations over random shared states.

use mdinew::linalg::DimSpec;
use mdinew::protocol::{build_table, max_entangled_effect, mdi_linear_value, mdi_nonlinear_value};
use mdinew::random::{random_density, substream};

use crate::config::Config;
use crate::emit::{Field, RunOutput};
use crate::error::CliResult;
use crate::scenarios::{resolve_bundle, Scenario};

pub struct ReductionCheck;

impl Scenario for ReductionCheck {
    fn name(&self) -> &'static str {
        "reduction-check"
    }

    fn summary(&self) -> &'static str {
        "table values vs scaled operator traces under maximally entangled effects"
    }

    fn run(&self, cfg: &Config) -> CliResult<RunOutput> {
        let (bundle, basis) = resolve_bundle(cfg, "singlet")?;
        let (d_a, d_b) = (basis.d_a(), basis.d_b());
        let trials = cfg.usize_or("trials", 100)?;
        let seed = cfg.u64_or("seed", 0)?;
        let scale = (d_a * d_b) as f64;
        let e_a = max_entangled_effect(d_a);
        let e_b = max_entangled_effect(d_b);
        let dims = DimSpec::bipartite(d_a, d_b).unwrap();

        let mut records = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut rng = substream(seed, &[trial as u64]);
            let rho = random_density(&dims, &mut rng);
            let table = build_table(&rho, &basis, &e_a, &e_b)?;
            let linear = mdi_linear_value(&table, &bundle.alpha)?;
            let w_scaled = bundle.linear(&rho)? / scale;
            let nonlinear = mdi_nonlinear_value(&table, &bundle)?;
            let f_scaled = bundle.nonlinear_value(&rho)? / scale;
            records.push(vec![
                Field::Real(linear),
                Field::Real(w_scaled),
                Field::Real((linear - w_scaled).abs()),
                Field::Real(nonlinear),
                Field::Real(f_scaled),
                Field::Real((nonlinear - f_scaled).abs()),
                Field::UInt(seed),
                Field::UInt(trial as u64),
            ]);
        }
        Ok(RunOutput {
            columns: vec![
                "mdi_linear",
                "witness_scaled",
                "dev_linear",
                "mdi_nonlinear",
                "nonlinear_scaled",
                "dev_nonlinear",
                "seed",
                "trial",
            ],
            records,
        })
    }
}
