//! Bell experiments as statistical tests: classical polytopes, quantum
//! laws, and the Kullback-Leibler strength `sup_q inf_p D(q : p)`.

pub mod classical;
pub mod error;
pub mod experiments;
pub mod quantum;
pub mod scenario;
pub mod strength;
pub mod tensor;

pub use error::{Error, Result};
pub use scenario::{ProbabilityLaw, Scenario, SettingDistribution};
