//! Realizable collaborative learning: weighted mixtures, the two screening
//! procedures, the doubling update, and the R1/R2 boosting loops.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::ledger::{Purpose, SampleLedger};
use crate::model::{
    exact_error, mistakes, Classifier, DiscreteDistribution, Provenance, SampleSet,
};
use crate::num::{self, ceil_count, ceil_log2, Real, Scalar};
use crate::oracle::{check_unit, erm_outcome, realizable_sample_size, SampleSizeConfig};
use crate::sampling::multinomial;
use crate::Preset;

/// Players whose screening test accepted the round classifier.
pub type PassSet = BTreeSet<usize>;

/// A weighted combination of the players' distributions.
#[derive(Clone, Debug)]
pub struct Mixture<'a, P> {
    weights: Vec<P>,
    players: &'a [DiscreteDistribution<P>],
}

impl<'a, P: Scalar> Mixture<'a, P> {
    pub fn new(weights: Vec<P>, players: &'a [DiscreteDistribution<P>]) -> Result<Self> {
        if players.is_empty() || weights.is_empty() {
            return Err(Error::Config("mixture needs at least one player".into()));
        }
        if weights.len() != players.len() {
            return Err(Error::Config(format!(
                "{} weights for {} players",
                weights.len(),
                players.len()
            )));
        }
        let domain = players[0].domain_size();
        if let Some(d) = players.iter().find(|d| d.domain_size() != domain) {
            return Err(Error::DomainMismatch {
                expected: domain,
                found: d.domain_size(),
            });
        }
        if weights.iter().any(|w| *w < P::zero()) {
            return Err(Error::Config("mixture weights must be non-negative".into()));
        }
        let mix = Mixture { weights, players };
        if mix.potential() <= P::zero() {
            return Err(Error::Config("mixture weights sum to zero".into()));
        }
        Ok(mix)
    }

    pub fn weights(&self) -> &[P] {
        &self.weights
    }

    pub fn players(&self) -> &'a [DiscreteDistribution<P>] {
        self.players
    }

    pub fn potential(&self) -> P {
        self.weights.iter().fold(P::zero(), |acc, &w| acc + w)
    }

    /// `w_i / Φ` for each player.
    pub fn selection_probabilities(&self) -> Vec<f64> {
        let phi = self.potential();
        self.weights.iter().map(|&w| num::to_f64(w / phi)).collect()
    }

    /// The mixture as a single distribution, `(1/Φ) Σ w_i D_i`.
    pub fn flatten(&self) -> Result<DiscreteDistribution<P>> {
        let phi = self.potential();
        let masses = self.weights.iter().zip(self.players).flat_map(|(&w, d)| {
            d.atoms()
                .iter()
                .map(move |a| (a.point.0, a.label, w * a.mass / phi))
        });
        DiscreteDistribution::from_masses(self.players[0].domain_size(), masses)
    }
}

/// Draws `n` examples from the mixture: each draw picks player `i` with
/// probability `w_i/Φ` and then an example from `D_i`. Every draw is charged
/// to the selected player as a learning sample of `round`.
pub fn mixture_sample<P: Scalar, G: Rng + ?Sized>(
    mix: &Mixture<'_, P>,
    n: u64,
    round: usize,
    rng: &mut G,
    ledger: &mut SampleLedger,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::out_of_range("n", 0.0, "n >= 1"));
    }
    let per_player = multinomial(rng, n, &mix.selection_probabilities());
    let mut sample = SampleSet::empty(mix.players[0].domain_size(), Provenance::Mixture);
    for (i, (&ni, dist)) in per_player.iter().zip(mix.players).enumerate() {
        if ni == 0 {
            continue;
        }
        let part = dist.sample(ni, rng, Provenance::Player(i));
        ledger.record(i, round, Purpose::Learn, ni);
        sample.absorb(&part);
    }
    Ok(sample)
}

/// Player weights of the realizable algorithms, stored as doubling counts so
/// that `w_i = 2^{doublings_i}` stays exact for any number of rounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightState {
    doublings: Vec<u32>,
    round: usize,
}

impl WeightState {
    pub fn new(k: usize) -> Self {
        WeightState {
            doublings: vec![0; k],
            round: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.doublings.len()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn doublings(&self) -> &[u32] {
        &self.doublings
    }

    pub fn weight(&self, i: usize) -> BigUint {
        BigUint::from(1u32) << self.doublings[i]
    }

    pub fn potential(&self) -> BigUint {
        (0..self.k()).map(|i| self.weight(i)).sum()
    }

    /// Weights scaled so the largest is 1; proportional to the true weights.
    pub fn relative_weights<P: Scalar>(&self) -> Vec<P> {
        let top = self.doublings.iter().copied().max().unwrap_or(0);
        self.doublings
            .iter()
            .map(|&e| num::constant(2f64.powi(e as i32 - top as i32)))
            .collect()
    }

    pub fn mixture<'a, P: Scalar>(
        &self,
        players: &'a [DiscreteDistribution<P>],
    ) -> Result<Mixture<'a, P>> {
        Mixture::new(self.relative_weights(), players)
    }
}

/// Doubles the weight of every player outside `pass`.
pub fn update_double(state: &WeightState, pass: &PassSet) -> Result<WeightState> {
    if let Some(&bad) = pass.iter().find(|&&i| i >= state.k()) {
        return Err(Error::out_of_range("player", bad as f64, "index below k"));
    }
    let doublings = state
        .doublings
        .iter()
        .enumerate()
        .map(|(i, &e)| if pass.contains(&i) { e } else { e + 1 })
        .collect();
    Ok(WeightState {
        doublings,
        round: state.round + 1,
    })
}

/// `⌈(a/ε′) ln(k/δ′)⌉` draws per player.
pub fn test_sample_size(k: usize, eps_prime: f64, delta_prime: f64, constant: f64) -> Result<u64> {
    check_unit("eps_prime", eps_prime)?;
    check_unit("delta_prime", delta_prime)?;
    check_positive("test_constant", constant)?;
    Ok(ceil_count(constant / eps_prime * (k as f64 / delta_prime).ln()).max(1))
}

/// `⌈c/ε′⌉` draws per player.
pub fn fast_test_sample_size(eps_prime: f64, constant: f64) -> Result<u64> {
    check_unit("eps_prime", eps_prime)?;
    check_positive("fast_test_constant", constant)?;
    Ok(ceil_count(constant / eps_prime).max(1))
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::out_of_range(name, x, "positive"))
    }
}

/// The acceptance rule `mistakes / n <= 3ε′/4`, inclusive.
pub fn passes_screen(mistakes: u64, n: u64, eps_prime: f64) -> bool {
    (mistakes as f64) <= 0.75 * eps_prime * n as f64 + 1e-9
}

#[allow(clippy::too_many_arguments)]
fn screen<P: Scalar, G: Rng + ?Sized>(
    f: &Classifier,
    players: &[DiscreteDistribution<P>],
    size: u64,
    eps_prime: f64,
    round: usize,
    rng: &mut G,
    ledger: &mut SampleLedger,
) -> Result<PassSet> {
    let mut pass = PassSet::new();
    for (i, dist) in players.iter().enumerate() {
        let sample = dist.sample(size, rng, Provenance::Player(i));
        ledger.record(i, round, Purpose::Test, size);
        if passes_screen(mistakes(f, &sample)?, size, eps_prime) {
            pass.insert(i);
        }
    }
    Ok(pass)
}

/// Screens `f` on `⌈(a/ε′) ln(k/δ′)⌉` fresh draws from every player.
#[allow(clippy::too_many_arguments)]
pub fn test_procedure<P: Scalar, G: Rng + ?Sized>(
    f: &Classifier,
    players: &[DiscreteDistribution<P>],
    eps_prime: f64,
    delta_prime: f64,
    test_constant: f64,
    round: usize,
    rng: &mut G,
    ledger: &mut SampleLedger,
) -> Result<PassSet> {
    let size = test_sample_size(players.len(), eps_prime, delta_prime, test_constant)?;
    screen(f, players, size, eps_prime, round, rng, ledger)
}

/// Screens `f` on `⌈c/ε′⌉` fresh draws from every player. `_delta_prime` is
/// accepted for signature parity with [`test_procedure`] and not used.
#[allow(clippy::too_many_arguments)]
pub fn fast_test_procedure<P: Scalar, G: Rng + ?Sized>(
    f: &Classifier,
    players: &[DiscreteDistribution<P>],
    eps_prime: f64,
    _delta_prime: f64,
    fast_test_constant: f64,
    round: usize,
    rng: &mut G,
    ledger: &mut SampleLedger,
) -> Result<PassSet> {
    let size = fast_test_sample_size(eps_prime, fast_test_constant)?;
    screen(f, players, size, eps_prime, round, rng, ledger)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RealizableAlgorithm {
    R1,
    R2,
}

/// Parameters of R1 and R2. Derived values come from [`RealizableConfig::plan`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizableConfig {
    pub eps: f64,
    pub delta: f64,
    pub test_constant: f64,
    pub fast_test_constant: f64,
    /// The learning sample targets accuracy `ε′ / learn_shrink`.
    pub learn_shrink: f64,
    pub r1_round_multiplier: u32,
    pub r2_round_multiplier: u32,
    pub sample: SampleSizeConfig,
}

impl RealizableConfig {
    pub fn paper(eps: f64, delta: f64) -> Self {
        RealizableConfig {
            eps,
            delta,
            test_constant: 32.0,
            fast_test_constant: 148.0,
            learn_shrink: 16.0,
            r1_round_multiplier: 5,
            r2_round_multiplier: 150,
            sample: SampleSizeConfig::default(),
        }
    }

    /// Same as [`paper`](Self::paper) except R2 runs `10⌈log2(k/δ)⌉` rounds.
    /// This is a heuristic setting for fast runs, not a proven one.
    pub fn desk(eps: f64, delta: f64) -> Self {
        RealizableConfig {
            r2_round_multiplier: 10,
            ..Self::paper(eps, delta)
        }
    }

    pub fn with_preset(eps: f64, delta: f64, preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self::paper(eps, delta),
            Preset::Desk => Self::desk(eps, delta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::out_of_range("eps", self.eps, "0 < eps < 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::out_of_range("delta", self.delta, "0 < delta < 1"));
        }
        check_positive("test_constant", self.test_constant)?;
        check_positive("fast_test_constant", self.fast_test_constant)?;
        check_positive("learn_shrink", self.learn_shrink)?;
        if self.r1_round_multiplier == 0 || self.r2_round_multiplier == 0 {
            return Err(Error::Config("round multipliers must be positive".into()));
        }
        self.sample.validate()
    }

    pub fn plan(&self, alg: RealizableAlgorithm, k: usize, d: u32) -> Result<RealizablePlan> {
        self.validate()?;
        if k == 0 {
            return Err(Error::out_of_range("k", 0.0, "k >= 1"));
        }
        let eps_prime = self.eps / 6.0;
        let (rounds, delta_prime) = match alg {
            RealizableAlgorithm::R1 => {
                let t = self.r1_round_multiplier as u64 * ceil_log2(k.max(2) as f64);
                (t, self.delta / (3.0 * t as f64))
            }
            RealizableAlgorithm::R2 => {
                let t = self.r2_round_multiplier as u64 * ceil_log2(k as f64 / self.delta);
                (t, self.delta / (4.0 * t as f64))
            }
        };
        let learn_size =
            realizable_sample_size(eps_prime / self.learn_shrink, delta_prime, d, &self.sample)?;
        let test_size = match alg {
            RealizableAlgorithm::R1 => {
                test_sample_size(k, eps_prime, delta_prime, self.test_constant)?
            }
            RealizableAlgorithm::R2 => fast_test_sample_size(eps_prime, self.fast_test_constant)?,
        };
        Ok(RealizablePlan {
            algorithm: alg,
            k,
            rounds: rounds as usize,
            eps_prime,
            delta_prime,
            learn_size,
            test_size,
        })
    }
}

/// Round count, derived accuracies and per-round sample sizes of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizablePlan {
    pub algorithm: RealizableAlgorithm,
    pub k: usize,
    pub rounds: usize,
    pub eps_prime: f64,
    pub delta_prime: f64,
    /// Mixture draws per round.
    pub learn_size: u64,
    /// Draws per player per round.
    pub test_size: u64,
}

impl RealizablePlan {
    pub fn total_samples(&self) -> u64 {
        self.rounds as u64 * (self.learn_size + self.k as u64 * self.test_size)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizableRound<F> {
    pub round: usize,
    pub hypothesis: usize,
    /// Mistakes of the round classifier on its own learning sample.
    pub sample_mistakes: u64,
    pub pass_set: PassSet,
    /// `err_{D_i}(f^{(r)})` for each player.
    pub player_errors: Vec<F>,
    /// Doubling counts after this round's update.
    pub doublings: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizableTrace<F> {
    pub rounds: Vec<RealizableRound<F>>,
    pub final_weights: WeightState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizableRun<F> {
    pub classifier: Classifier,
    pub trace: RealizableTrace<F>,
    pub ledger: SampleLedger,
    pub plan: RealizablePlan,
}

pub fn run_r1<F: Real, G: Rng + ?Sized>(
    instance: &Instance<F>,
    cfg: &RealizableConfig,
    rng: &mut G,
) -> Result<RealizableRun<F>> {
    run_realizable(RealizableAlgorithm::R1, instance, cfg, rng)
}

pub fn run_r2<F: Real, G: Rng + ?Sized>(
    instance: &Instance<F>,
    cfg: &RealizableConfig,
    rng: &mut G,
) -> Result<RealizableRun<F>> {
    run_realizable(RealizableAlgorithm::R2, instance, cfg, rng)
}

pub fn run_realizable<F: Real, G: Rng + ?Sized>(
    alg: RealizableAlgorithm,
    instance: &Instance<F>,
    cfg: &RealizableConfig,
    rng: &mut G,
) -> Result<RealizableRun<F>> {
    let players = instance.distributions();
    let class = instance.class();
    let plan = cfg.plan(alg, players.len(), class.vc_dim())?;

    let mut ledger = SampleLedger::new();
    let mut state = WeightState::new(players.len());
    let mut rounds = Vec::with_capacity(plan.rounds);
    let mut members = Vec::with_capacity(plan.rounds);

    for r in 1..=plan.rounds {
        let mix = state.mixture(players)?;
        let sample = mixture_sample(&mix, plan.learn_size, r, rng, &mut ledger)?;
        let best = erm_outcome(class, &sample)?;
        let f = class.classifier(best.index);
        let pass = match alg {
            RealizableAlgorithm::R1 => test_procedure(
                &f,
                players,
                plan.eps_prime,
                plan.delta_prime,
                cfg.test_constant,
                r,
                rng,
                &mut ledger,
            )?,
            RealizableAlgorithm::R2 => fast_test_procedure(
                &f,
                players,
                plan.eps_prime,
                plan.delta_prime,
                cfg.fast_test_constant,
                r,
                rng,
                &mut ledger,
            )?,
        };
        let player_errors = players
            .iter()
            .map(|d| exact_error(&f, d))
            .collect::<Result<Vec<F>>>()?;
        state = update_double(&state, &pass)?;
        rounds.push(RealizableRound {
            round: r,
            hypothesis: best.index,
            sample_mistakes: best.mistakes,
            pass_set: pass,
            player_errors,
            doublings: state.doublings().to_vec(),
        });
        members.push(f);
    }

    Ok(RealizableRun {
        classifier: Classifier::majority(members)?,
        trace: RealizableTrace {
            rounds,
            final_weights: state,
        },
        ledger,
        plan,
    })
}
