//! Scenario registry. Each experiment implements [`Scenario`] and is
//! dispatched by name; adding one means adding a file here and a line to
//! [`registry`].

use mdinew::linalg::DimSpec;
use mdinew::noise::{parse_channel_spec, KrausChannel};
use mdinew::protocol::max_entangled_effect;
use mdinew::random::random_dichotomic_effect;
use mdinew::state::{named_state, DensityMatrix, PovmEffect};
use mdinew::witness::{make_bundle, InputBasis, PsiChoice, WitnessBundle};
use rand::Rng;

use crate::config::Config;
use crate::emit::RunOutput;
use crate::error::{CliError, CliResult};

mod loophole_sweep;
mod mc_events;
mod new_vs_ew;
mod noise_sweep;
mod reduction_check;
mod separable_positivity;

pub trait Scenario {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Config validation beyond the shared checks; must not touch files.
    fn check(&self, cfg: &Config) -> CliResult<()> {
        let _ = cfg;
        Ok(())
    }
    fn run(&self, cfg: &Config) -> CliResult<RunOutput>;
}

pub fn registry() -> Vec<Box<dyn Scenario>> {
    vec![
        Box::new(reduction_check::ReductionCheck),
        Box::new(separable_positivity::SeparablePositivity),
        Box::new(loophole_sweep::LoopholeSweep),
        Box::new(mc_events::McEvents),
        Box::new(noise_sweep::NoiseSweep),
        Box::new(new_vs_ew::NewVsEw),
    ]
}

pub fn find(name: &str) -> CliResult<Box<dyn Scenario>> {
    registry()
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| {
            let names: Vec<&str> = registry().iter().map(|s| s.name()).collect();
            CliError::config(format!(
                "unknown scenario `{name}`; available: {}",
                names.join(", ")
            ))
        })
}

/// Validates a config against the shared schema and its scenario.
pub fn validate(cfg: &Config) -> CliResult<()> {
    cfg.validate_common()?;
    find(&cfg.scenario)?.check(cfg)
}

/// Runs the scenario named in the config.
pub fn run(cfg: &Config) -> CliResult<RunOutput> {
    validate(cfg)?;
    find(&cfg.scenario)?.run(cfg)
}

fn read_file(path: &str) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read `{path}`: {e}")))
}

/// Resolves the `state` key: a named family or `file:PATH`.
pub(crate) fn resolve_state(cfg: &Config, default: &str) -> CliResult<DensityMatrix> {
    let spec = cfg.str_or("state", default);
    if let Some(path) = spec.strip_prefix("file:") {
        return mdinew::io::read_density(&read_file(path)?).map_err(CliError::from);
    }
    named_state(&spec).map_err(CliError::from)
}

/// Resolves `psi_choice`: default, product, or `file:PATH` with a pure
/// state in the vector file format.
pub(crate) fn resolve_psi(cfg: &Config) -> CliResult<PsiChoice> {
    let spec = cfg.str_or("psi_choice", "default");
    match spec.as_str() {
        "default" => Ok(PsiChoice::Default),
        "product" => Ok(PsiChoice::Product),
        other => {
            let path = other
                .strip_prefix("file:")
                .ok_or_else(|| CliError::config(format!("bad psi_choice `{other}`")))?;
            let psi = mdinew::io::read_pure(&read_file(path)?)?;
            Ok(PsiChoice::Custom(psi))
        }
    }
}

/// Builds the witness bundle declared by the config over the standard
/// input bases.
pub(crate) fn resolve_bundle(cfg: &Config, default_state: &str) -> CliResult<(WitnessBundle, InputBasis)> {
    let rho = resolve_state(cfg, default_state)?;
    let d = rho.dims().dims();
    if d.len() != 2 {
        return Err(CliError::config("state must be bipartite"));
    }
    let d_a = cfg.usize_or("d_a", 2)?;
    let d_b = cfg.usize_or("d_b", 2)?;
    if d != [d_a, d_b] {
        return Err(CliError::config(format!(
            "state dimensions {d:?} disagree with d_a = {d_a}, d_b = {d_b}"
        )));
    }
    let basis = InputBasis::standard(d_a, d_b)?;
    let bundle = make_bundle(&rho, &resolve_psi(cfg)?, &basis)?;
    Ok((bundle, basis))
}

/// Maximally entangled pure state across possibly unequal factors, the
/// fallback witness source when the configured state is not NPT.
pub(crate) fn me_state(d_a: usize, d_b: usize) -> DensityMatrix {
    let m = d_a.min(d_b);
    let mut v = mdinew::linalg::CVector::zeros(d_a * d_b);
    let amp = mdinew::linalg::C64::new(1.0 / (m as f64).sqrt(), 0.0);
    for k in 0..m {
        v[k * d_b + k] = amp;
    }
    let psi = mdinew::state::PureState::new(v, DimSpec::bipartite(d_a, d_b).unwrap()).unwrap();
    DensityMatrix::from_pure(&psi)
}

/// Bundle for scenarios whose `state` key names the shared table state:
/// the witness comes from that state when it is NPT and from the
/// maximally entangled fallback otherwise.
pub(crate) fn bundle_for_table_state(
    cfg: &Config,
    basis: &InputBasis,
    table_state: Option<&DensityMatrix>,
) -> CliResult<WitnessBundle> {
    let psi = resolve_psi(cfg)?;
    if let Some(s) = table_state {
        match make_bundle(s, &psi, basis) {
            Ok(b) => return Ok(b),
            Err(mdinew::Error::NotNpt { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    make_bundle(&me_state(basis.d_a(), basis.d_b()), &psi, basis).map_err(CliError::from)
}

/// How the `effects` key produces per-trial effect pairs.
pub(crate) enum EffectSource {
    Fixed(PovmEffect, PovmEffect),
    Random,
}

impl EffectSource {
    pub(crate) fn from_config(cfg: &Config, default: &str, d_a: usize, d_b: usize) -> CliResult<Self> {
        let spec = cfg.str_or("effects", default);
        match spec.as_str() {
            "max_entangled" => Ok(EffectSource::Fixed(
                max_entangled_effect(d_a),
                max_entangled_effect(d_b),
            )),
            "random" => Ok(EffectSource::Random),
            other => {
                let paths = other
                    .strip_prefix("file:")
                    .ok_or_else(|| CliError::config(format!("bad effects `{other}`")))?;
                let (pa, pb) = paths.split_once(',').ok_or_else(|| {
                    CliError::config("effects file form is `file:PATH_A,PATH_B`")
                })?;
                let a = mdinew::io::read_effect(&read_file(pa.trim())?)?;
                let b = mdinew::io::read_effect(&read_file(pb.trim())?)?;
                Ok(EffectSource::Fixed(a, b))
            }
        }
    }

    /// Draws or returns the pair for one trial.
    pub(crate) fn pair(&self, d_a: usize, d_b: usize, rng: &mut impl Rng) -> (PovmEffect, PovmEffect) {
        match self {
            EffectSource::Fixed(a, b) => (a.clone(), b.clone()),
            EffectSource::Random => {
                let a = random_dichotomic_effect(&DimSpec::bipartite(d_a, d_a).unwrap(), rng);
                let b = random_dichotomic_effect(&DimSpec::bipartite(d_b, d_b).unwrap(), rng);
                (a, b)
            }
        }
    }
}

/// Resolves the optional `noise` key: `none`, a one-line channel spec, or
/// `file:PATH` for the full multi-line format.
pub(crate) fn resolve_noise(cfg: &Config) -> CliResult<Option<KrausChannel>> {
    let spec = cfg.str_or("noise", "none");
    if spec == "none" {
        return Ok(None);
    }
    let text = match spec.strip_prefix("file:") {
        Some(path) => read_file(path)?,
        None => spec,
    };
    Ok(Some(parse_channel_spec(&text)?))
}
