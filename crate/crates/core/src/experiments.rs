//! The named experiments, resolved to a law (and, where the law comes out
//! of an optimisation, the strength computed on the way).

use serde_json::{json, Value};

use crate::classical::LadderPolicy;
use crate::error::{Error, Result};
use crate::quantum::{
    born_law, cglmp_model, ghz_model, ghz_settings, maximally_entangled, with_detection_efficiency, NamedModel,
    SchmidtState,
};
use crate::scenario::{ProbabilityLaw, SettingDistribution};
use crate::strength::{ladder_experiment, optimize_schmidt, OuterConfig, StrengthResult};

#[derive(Clone, Debug, PartialEq)]
pub enum SchmidtChoice {
    MaximallyEntangled,
    Given(Vec<f64>),
    Optimize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Named {
    Chsh,
    Ghz,
    Cglmp { d: usize, schmidt: SchmidtChoice },
    Ladder { rungs: usize, policy: LadderPolicy },
    /// CHSH with detection efficiency `eta` on both sides.
    Ch { eta: f64 },
}

impl From<NamedModel> for Named {
    fn from(m: NamedModel) -> Self {
        match m {
            NamedModel::Chsh => Named::Chsh,
            NamedModel::Ghz => Named::Ghz,
            NamedModel::Cglmp { d, schmidt } => Named::Cglmp {
                d,
                schmidt: schmidt.map_or(SchmidtChoice::MaximallyEntangled, SchmidtChoice::Given),
            },
            NamedModel::Ladder { rungs, policy } => Named::Ladder { rungs, policy },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub law: ProbabilityLaw,
    /// Strength already computed while preparing the law.
    pub result: Option<StrengthResult>,
    /// Parameters worth reporting (Schmidt coefficients, angles, ...).
    pub details: Value,
}

/// The CHSH law: CGLMP at d = 2 on the maximally entangled state, uniform settings.
pub fn chsh_law() -> Result<ProbabilityLaw> {
    let m = cglmp_model(2, &maximally_entangled(2))?;
    born_law(&m, &SettingDistribution::uniform(m.scenario()))
}

pub fn ghz_law() -> Result<ProbabilityLaw> {
    born_law(&ghz_model()?, &ghz_settings())
}

pub fn prepare(named: &Named, cfg: &OuterConfig) -> Result<Prepared> {
    Ok(match named {
        Named::Chsh => Prepared { law: chsh_law()?, result: None, details: json!({"experiment": "chsh"}) },
        Named::Ghz => Prepared { law: ghz_law()?, result: None, details: json!({"experiment": "ghz"}) },
        Named::Cglmp { d, schmidt } => {
            let (state, result) = match schmidt {
                SchmidtChoice::MaximallyEntangled => (maximally_entangled(*d), None),
                SchmidtChoice::Given(c) => (SchmidtState::new(c.clone())?, None),
                SchmidtChoice::Optimize => {
                    let (s, r) = optimize_schmidt(*d, cfg)?;
                    (s, Some(r))
                }
            };
            let m = cglmp_model(*d, &state)?;
            let law = born_law(&m, &SettingDistribution::uniform(m.scenario()))?;
            Prepared {
                law,
                result,
                details: json!({"experiment": "cglmp", "d": d, "schmidt": state.coefficients()}),
            }
        }
        Named::Ladder { rungs, policy } => {
            let run = ladder_experiment(*rungs, *policy, cfg)?;
            let model = crate::quantum::ladder_model(&run.alice, &run.bob)?;
            let pi = crate::classical::ladder_settings(*rungs, *policy)?;
            Prepared {
                law: born_law(&model, &pi)?,
                details: json!({
                    "experiment": "ladder",
                    "rungs": rungs,
                    "policy": policy,
                    "alice_angles": run.alice,
                    "bob_angles": run.bob,
                }),
                result: Some(run.result),
            }
        }
        Named::Ch { eta } => {
            if !(0.0..=1.0).contains(eta) {
                return Err(Error::InvalidArgument(format!("efficiency {eta} outside [0, 1]")));
            }
            Prepared {
                law: with_detection_efficiency(&chsh_law()?, *eta)?,
                result: None,
                details: json!({"experiment": "ch", "eta": eta}),
            }
        }
    })
}
