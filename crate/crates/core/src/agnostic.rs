//! Non-realizable collaborative learning with the smooth `(1 + s)` weight
//! update: NR1, NR2 (capped step, majority output) and NR1-AVG, NR2-AVG
//! (uncapped step, uniformly randomized output).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::collab::{mixture_sample, Mixture};
use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::ledger::{Purpose, SampleLedger};
use crate::model::{exact_error, mistakes, Classifier, DiscreteDistribution, Provenance};
use crate::num::{self, ceil_count, Real};
use crate::oracle::{agnostic_sample_size, erm_outcome, SampleSizeConfig};
use crate::Preset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgnosticVariant {
    Nr1,
    Nr2,
    Nr1Avg,
    Nr2Avg,
}

impl AgnosticVariant {
    pub const ALL: [AgnosticVariant; 4] = [
        AgnosticVariant::Nr1,
        AgnosticVariant::Nr2,
        AgnosticVariant::Nr1Avg,
        AgnosticVariant::Nr2Avg,
    ];

    /// Whether the output is the uniformly randomized combiner.
    pub fn is_average(self) -> bool {
        matches!(self, AgnosticVariant::Nr1Avg | AgnosticVariant::Nr2Avg)
    }

    fn default_alpha_divisor(self) -> f64 {
        match self {
            AgnosticVariant::Nr1 => 35.0,
            AgnosticVariant::Nr2 => 40.0,
            AgnosticVariant::Nr1Avg => 12.0,
            AgnosticVariant::Nr2Avg => 15.0,
        }
    }

    fn default_eps_divisor(self) -> f64 {
        match self {
            AgnosticVariant::Nr1 => 60.0,
            AgnosticVariant::Nr2 => 64.0,
            AgnosticVariant::Nr1Avg => 25.0,
            AgnosticVariant::Nr2Avg => 29.0,
        }
    }

    /// `(a, b)` such that the guarantee requires `a·ε/b < α < 1`.
    fn alpha_floor(self) -> (f64, f64) {
        match self {
            AgnosticVariant::Nr1 => (7.0, 6.0),
            AgnosticVariant::Nr2 => (5.0, 4.0),
            AgnosticVariant::Nr1Avg => (24.0, 25.0),
            AgnosticVariant::Nr2Avg => (30.0, 29.0),
        }
    }

    /// Error bound guaranteed for every player: `(2+α)OPT + ε` for the
    /// majority variants, `(1+α)OPT + ε` in expectation for the AVG variants.
    pub fn guarantee(self, opt: f64, eps: f64, alpha: f64) -> f64 {
        if self.is_average() {
            (1.0 + alpha) * opt + eps
        } else {
            (2.0 + alpha) * opt + eps
        }
    }
}

impl fmt::Display for AgnosticVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgnosticVariant::Nr1 => "nr1",
            AgnosticVariant::Nr2 => "nr2",
            AgnosticVariant::Nr1Avg => "nr1-avg",
            AgnosticVariant::Nr2Avg => "nr2-avg",
        })
    }
}

impl FromStr for AgnosticVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "nr1" => Ok(AgnosticVariant::Nr1),
            "nr2" => Ok(AgnosticVariant::Nr2),
            "nr1-avg" => Ok(AgnosticVariant::Nr1Avg),
            "nr2-avg" => Ok(AgnosticVariant::Nr2Avg),
            _ => Err(Error::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Parameters of the non-realizable algorithms.
///
/// `alpha_divisor` and `eps_divisor` override the per-variant defaults for
/// `α′ = α / alpha_divisor` and `ε′ = ε / eps_divisor`. `max_rounds` caps the
/// round count after the multiplier is applied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgnosticConfig {
    pub eps: f64,
    pub delta: f64,
    pub alpha: f64,
    pub alpha_divisor: Option<f64>,
    pub eps_divisor: Option<f64>,
    pub round_multiplier: u32,
    pub max_rounds: Option<usize>,
    pub sample: SampleSizeConfig,
}

/// Round cap of the desk preset.
pub const DESK_MAX_ROUNDS: usize = 1000;

impl AgnosticConfig {
    pub fn paper(eps: f64, delta: f64, alpha: f64) -> Self {
        AgnosticConfig {
            eps,
            delta,
            alpha,
            alpha_divisor: None,
            eps_divisor: None,
            round_multiplier: 2,
            max_rounds: None,
            sample: SampleSizeConfig::default(),
        }
    }

    /// `α′ = α/4`, `ε′ = ε/8` and at most [`DESK_MAX_ROUNDS`] rounds for all
    /// variants. Heuristic: chosen so runs finish quickly, not proven.
    pub fn desk(eps: f64, delta: f64, alpha: f64) -> Self {
        AgnosticConfig {
            alpha_divisor: Some(4.0),
            eps_divisor: Some(8.0),
            max_rounds: Some(DESK_MAX_ROUNDS),
            ..Self::paper(eps, delta, alpha)
        }
    }

    pub fn with_preset(eps: f64, delta: f64, alpha: f64, preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self::paper(eps, delta, alpha),
            Preset::Desk => Self::desk(eps, delta, alpha),
        }
    }

    pub fn validate(&self, variant: AgnosticVariant) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::out_of_range("eps", self.eps, "0 < eps < 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::out_of_range("delta", self.delta, "0 < delta < 1"));
        }
        let (a, b) = variant.alpha_floor();
        if !(self.alpha > a * self.eps / b && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "{variant} requires {a}·eps/{b} < alpha < 1, got alpha = {} with eps = {}",
                self.alpha, self.eps
            )));
        }
        for (name, div) in [
            ("alpha_divisor", self.alpha_divisor),
            ("eps_divisor", self.eps_divisor),
        ] {
            if let Some(v) = div {
                if !(v >= 1.0 && v.is_finite()) {
                    return Err(Error::out_of_range(name, v, ">= 1"));
                }
            }
        }
        if self.round_multiplier == 0 || self.max_rounds == Some(0) {
            return Err(Error::Config("round count must be positive".into()));
        }
        self.sample.validate()
    }

    pub fn plan(&self, variant: AgnosticVariant, k: usize, d: u32) -> Result<AgnosticPlan> {
        self.validate(variant)?;
        if k == 0 {
            return Err(Error::out_of_range("k", 0.0, "k >= 1"));
        }
        let alpha_prime = self.alpha
            / self
                .alpha_divisor
                .unwrap_or(variant.default_alpha_divisor());
        let eps_prime = self.eps / self.eps_divisor.unwrap_or(variant.default_eps_divisor());
        // ln(k) vanishes at k = 1; clamp as the realizable round count does.
        let ln_k = (k.max(2) as f64).ln();
        let ln_4k_delta = (4.0 * k as f64 / self.delta).ln();
        let base = match variant {
            AgnosticVariant::Nr1 => ln_k / alpha_prime.powi(3),
            AgnosticVariant::Nr2 => ln_4k_delta / alpha_prime.powi(3),
            AgnosticVariant::Nr1Avg => ln_k / (eps_prime * alpha_prime * alpha_prime),
            AgnosticVariant::Nr2Avg => ln_4k_delta / (eps_prime * alpha_prime * alpha_prime),
        };
        let uncapped = self.round_multiplier as u64 * ceil_count(base);
        let rounds = match self.max_rounds {
            Some(cap) => uncapped.min(cap as u64),
            None => uncapped,
        }
        .max(1) as usize;
        let delta_prime = self.delta / (4.0 * rounds as f64);
        let learn_size =
            agnostic_sample_size(eps_prime, delta_prime, alpha_prime, d, &self.sample)?;
        let ea = eps_prime * alpha_prime;
        let raw_test = match variant {
            AgnosticVariant::Nr1 | AgnosticVariant::Nr1Avg => {
                3.0 / ea * (k as f64 / delta_prime).ln()
            }
            AgnosticVariant::Nr2 => 6.0 / ea * (std::f64::consts::SQRT_2 / alpha_prime).ln(),
            AgnosticVariant::Nr2Avg => 3.0 / ea * (2.0 / ea).ln(),
        };
        Ok(AgnosticPlan {
            variant,
            k,
            rounds,
            uncapped_rounds: uncapped,
            alpha_prime,
            eps_prime,
            delta_prime,
            learn_size,
            test_size: ceil_count(raw_test).max(1),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgnosticPlan {
    pub variant: AgnosticVariant,
    pub k: usize,
    pub rounds: usize,
    /// Round count before `max_rounds` was applied.
    pub uncapped_rounds: u64,
    pub alpha_prime: f64,
    pub eps_prime: f64,
    pub delta_prime: f64,
    pub learn_size: u64,
    pub test_size: u64,
}

impl AgnosticPlan {
    pub fn total_samples(&self) -> u64 {
        self.rounds as u64 * (self.learn_size + self.k as u64 * self.test_size)
    }
}

/// `min(err_T α′² / ((1 + 3α′) err_S + 3ε′), α′)`.
pub fn smooth_step_capped<F: Real>(err_t: F, err_s: F, alpha_prime: F, eps_prime: F) -> F {
    let three = num::constant::<F>(3.0);
    let raw = err_t * alpha_prime * alpha_prime
        / ((F::one() + three * alpha_prime) * err_s + three * eps_prime);
    raw.min(alpha_prime)
}

/// `err_T ε′ α′ / ((1 + 3α′) err_S + 3ε′)`, never above `α′/3`.
pub fn smooth_step_avg<F: Real>(err_t: F, err_s: F, alpha_prime: F, eps_prime: F) -> F {
    let three = num::constant::<F>(3.0);
    err_t * eps_prime * alpha_prime / ((F::one() + three * alpha_prime) * err_s + three * eps_prime)
}

/// Real-valued player weights, all starting at 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothWeightState<F> {
    weights: Vec<F>,
    round: usize,
}

impl<F: Real> SmoothWeightState<F> {
    pub fn new(k: usize) -> Self {
        SmoothWeightState {
            weights: vec![F::one(); k],
            round: 0,
        }
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn potential(&self) -> F {
        self.weights.iter().fold(F::zero(), |acc, &w| acc + w)
    }

    /// `w_i ← w_i (1 + s_i)`.
    pub fn update(&self, steps: &[F]) -> Result<Self> {
        if steps.len() != self.weights.len() {
            return Err(Error::Config(format!(
                "{} steps for {} players",
                steps.len(),
                self.weights.len()
            )));
        }
        Ok(SmoothWeightState {
            weights: self
                .weights
                .iter()
                .zip(steps)
                .map(|(&w, &s)| w * (F::one() + s))
                .collect(),
            round: self.round + 1,
        })
    }

    pub fn mixture<'a>(&self, players: &'a [DiscreteDistribution<F>]) -> Result<Mixture<'a, F>> {
        let top = self.weights.iter().fold(F::zero(), |m, &w| m.max(w));
        Mixture::new(self.weights.iter().map(|&w| w / top).collect(), players)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgnosticRound<F> {
    pub round: usize,
    pub hypothesis: usize,
    /// `err_{S^{(r)}}(f^{(r)})` on the learning sample.
    pub sample_error: F,
    /// `err_{T_i}(f^{(r)})` for each player.
    pub test_errors: Vec<F>,
    pub steps: Vec<F>,
    /// `err_{D_i}(f^{(r)})` for each player.
    pub player_errors: Vec<F>,
    /// Potential after this round's update.
    pub potential: F,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgnosticTrace<F> {
    pub rounds: Vec<AgnosticRound<F>>,
    pub final_weights: SmoothWeightState<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgnosticRun<F> {
    pub classifier: Classifier,
    pub trace: AgnosticTrace<F>,
    pub ledger: SampleLedger,
    pub plan: AgnosticPlan,
}

pub fn run_agnostic<F: Real, G: Rng + ?Sized>(
    variant: AgnosticVariant,
    instance: &Instance<F>,
    cfg: &AgnosticConfig,
    rng: &mut G,
) -> Result<AgnosticRun<F>> {
    let players = instance.distributions();
    let class = instance.class();
    let plan = cfg.plan(variant, players.len(), class.vc_dim())?;
    let alpha_prime = num::constant::<F>(plan.alpha_prime);
    let eps_prime = num::constant::<F>(plan.eps_prime);
    let step = if variant.is_average() {
        smooth_step_avg::<F>
    } else {
        smooth_step_capped::<F>
    };

    let mut ledger = SampleLedger::new();
    let mut state = SmoothWeightState::<F>::new(players.len());
    let mut rounds = Vec::with_capacity(plan.rounds);
    let mut members = Vec::with_capacity(plan.rounds);

    for r in 1..=plan.rounds {
        let mix = state.mixture(players)?;
        let sample = mixture_sample(&mix, plan.learn_size, r, rng, &mut ledger)?;
        let best = erm_outcome(class, &sample)?;
        let f = class.classifier(best.index);
        let sample_error = num::count::<F>(best.mistakes) / num::count::<F>(plan.learn_size);

        let mut test_errors = Vec::with_capacity(players.len());
        let mut steps = Vec::with_capacity(players.len());
        for (i, dist) in players.iter().enumerate() {
            let t = dist.sample(plan.test_size, rng, Provenance::Player(i));
            ledger.record(i, r, Purpose::Test, plan.test_size);
            let err_t = num::count::<F>(mistakes(&f, &t)?) / num::count::<F>(plan.test_size);
            let s = step(err_t, sample_error, alpha_prime, eps_prime);
            debug_assert!(s >= F::zero() && s <= alpha_prime);
            test_errors.push(err_t);
            steps.push(s);
        }
        let player_errors = players
            .iter()
            .map(|d| exact_error(&f, d))
            .collect::<Result<Vec<F>>>()?;
        state = state.update(&steps)?;
        rounds.push(AgnosticRound {
            round: r,
            hypothesis: best.index,
            sample_error,
            test_errors,
            steps,
            player_errors,
            potential: state.potential(),
        });
        members.push(f);
    }

    let classifier = if variant.is_average() {
        Classifier::uniform_average(members)?
    } else {
        Classifier::majority(members)?
    };
    Ok(AgnosticRun {
        classifier,
        trace: AgnosticTrace {
            rounds,
            final_weights: state,
        },
        ledger,
        plan,
    })
}
