//! Compares event-level simulation against the analytic corruption
//! formula. Each trial draws a random outcome distribution (smoothed away
//! from the simplex boundary so removals stay feasible), a random
//! efficiency model, and one batch of events; the measured frequencies
//! must sit within five binomial standard deviations of the analytic
//! values, up to the integer-rounding slack of the remainder assignment.

use mdinew::loophole::{corrupt_probability, simulate_events, EfficiencyModel};
use mdinew::random::{random_simplex, substream};
use rand::Rng;

use crate::config::Config;
use crate::emit::{Field, RunOutput};
use crate::error::CliResult;
use crate::scenarios::Scenario;

pub struct McEvents;

impl Scenario for McEvents {
    fn name(&self) -> &'static str {
        "mc-events"
    }

    fn summary(&self) -> &'static str {
        "event-level Monte Carlo against analytic corrupted probabilities"
    }

    fn run(&self, cfg: &Config) -> CliResult<RunOutput> {
        let trials = cfg.usize_or("trials", 200)?;
        let seed = cfg.u64_or("seed", 0)?;
        let nbar = cfg.u64_or("nbar", 1_000_000)?;

        let mut records = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut rng = substream(seed, &[trial as u64]);
            let simplex = random_simplex(4, &mut rng);
            let mut dist = [0.0; 4];
            for i in 0..4 {
                dist[i] = 0.7 * simplex[i] + 0.3 * 0.25;
            }
            let eta_a: f64 = 0.85 + 0.15 * rng.random::<f64>();
            let eta_b: f64 = 0.85 + 0.15 * rng.random::<f64>();
            let model = match trial % 3 {
                0 => EfficiencyModel::lost_only(eta_a, nbar),
                1 => EfficiencyModel::additional_only(eta_a, nbar),
                _ => EfficiencyModel::general(eta_a, eta_b, nbar),
            }?;

            let (events, measured) = simulate_events(&dist, &model, &mut rng)?;
            let total = events.total() as f64;
            let mut max_dev = 0.0_f64;
            let mut max_ratio = 0.0_f64;
            let mut within = true;
            for i in 0..4 {
                let expect = corrupt_probability(dist[i], &model);
                let dev = (measured[i] - expect).abs();
                let sigma = (nbar as f64 * dist[i] * (1.0 - dist[i])).sqrt() / total;
                max_dev = max_dev.max(dev);
                max_ratio = max_ratio.max(dev / sigma);
                // Integer quarters shift each frequency by at most a few
                // counts beyond the binomial spread.
                if dev > 5.0 * sigma + 3.0 / total {
                    within = false;
                }
            }
            records.push(vec![
                Field::Text(model.case().as_str().to_string()),
                Field::Real(model.eta_plus()),
                Field::Real(model.eta_minus()),
                Field::UInt(nbar),
                Field::Real(max_dev),
                Field::Real(max_ratio),
                Field::Bool(within),
                Field::UInt(seed),
                Field::UInt(trial as u64),
            ]);
        }
        Ok(RunOutput {
            columns: vec![
                "case",
                "eta_plus",
                "eta_minus",
                "nbar",
                "max_dev",
                "max_sigma_ratio",
                "within_5_sigma",
                "seed",
                "trial",
            ],
            records,
        })
    }
}
