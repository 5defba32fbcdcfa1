//! Collaborative PAC learning over finite domains.
//!
//! `k` players each hold a distribution over a shared finite domain. The
//! learners here draw from those distributions, keep a per-player sample
//! ledger, and return one classifier that is accurate for every player.
//!
//! - [`collab`]: realizable learners (`R1`, `R2`) with multiplicative weights.
//! - [`agnostic`]: the non-realizable learners and their averaged variants.
//! - [`instances`]: generators with a known optimum.
//! - [`harness`]: seeded trials, sample-count predictions and the baseline.
//!
//! Most of the crate is generic over the scalar used for probability mass:
//! `f64`, `f32` or the exact [`Rational64`]. The learners themselves need a
//! floating type.
//!
//! ```
//! use collabpac::{harness, instances, Preset, RunConfig, Algorithm};
//!
//! let inst = instances::make_hard_instance::<f64>(2, 0.25).unwrap();
//! let cfg = RunConfig { preset: Preset::Desk, ..RunConfig::default() };
//! let stats = harness::run_trials(Algorithm::R1, &inst, &cfg, 3, 7).unwrap();
//! assert_eq!(stats.successes, 3);
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod agnostic;
pub mod collab;
pub mod error;
pub mod harness;
pub mod instances;
pub mod ledger;
pub mod model;
pub mod num;
pub mod oracle;
pub mod report;
pub mod sampling;
pub mod verify;

pub use num_rational::Rational64;

pub use agnostic::{AgnosticConfig, AgnosticPlan, AgnosticRun, AgnosticVariant};
pub use collab::{RealizableAlgorithm, RealizableConfig, RealizablePlan, RealizableRun};
pub use error::{Error, Result};
pub use harness::{Algorithm, RunConfig, SampleBudget, TrialRecord, TrialStats};
pub use instances::{Instance, InstanceKind};
pub use ledger::{Purpose, SampleLedger};
pub use model::{
    exact_error, Atom, Classifier, DiscreteDistribution, Label, LabeledExample, Point, Prediction,
    SampleSet,
};
pub use num::{Real, Scalar};
pub use oracle::{ConceptClass, SampleSizeConfig};
pub use report::{ReportFormat, ReportRow};

pub type Distribution = DiscreteDistribution<f64>;
pub type Distribution32 = DiscreteDistribution<f32>;
pub type ExactDistribution = DiscreteDistribution<Rational64>;
pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type ExactInstance = Instance<Rational64>;

/// Which constant set the learners use.
///
/// `Paper` keeps the published constants. `Desk` shrinks the round counts
/// so that a run finishes in well under a second; the guarantees are then
/// checked empirically, not implied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Paper,
    Desk,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::Config(format!("unknown preset `{s}`"))),
        }
    }
}
