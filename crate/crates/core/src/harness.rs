//! Seeded Monte-Carlo trials, the independent-learning baseline, and
//! closed-form sample-count predictions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agnostic::{run_agnostic, AgnosticConfig, AgnosticVariant};
use crate::collab::{run_realizable, RealizableAlgorithm, RealizableConfig};
use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::ledger::{Purpose, SampleLedger};
use crate::model::{exact_error, Classifier, Provenance};
use crate::num::{self, Real};
use crate::oracle::{erm, realizable_sample_size, SampleSizeConfig};
use crate::sampling::seeded_rng;
use crate::Preset;

/// Slack on the success comparison so that a bound like `(2+α)OPT + ε`
/// evaluated in floating point does not reject an error equal to it.
const SUCCESS_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Algorithm {
    R1,
    R2,
    Nr1,
    Nr2,
    Nr1Avg,
    Nr2Avg,
    Naive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::R1,
        Algorithm::R2,
        Algorithm::Nr1,
        Algorithm::Nr2,
        Algorithm::Nr1Avg,
        Algorithm::Nr2Avg,
        Algorithm::Naive,
    ];

    pub fn realizable(self) -> Option<RealizableAlgorithm> {
        match self {
            Algorithm::R1 => Some(RealizableAlgorithm::R1),
            Algorithm::R2 => Some(RealizableAlgorithm::R2),
            _ => None,
        }
    }

    pub fn agnostic(self) -> Option<AgnosticVariant> {
        match self {
            Algorithm::Nr1 => Some(AgnosticVariant::Nr1),
            Algorithm::Nr2 => Some(AgnosticVariant::Nr2),
            Algorithm::Nr1Avg => Some(AgnosticVariant::Nr1Avg),
            Algorithm::Nr2Avg => Some(AgnosticVariant::Nr2Avg),
            _ => None,
        }
    }

    pub fn uses_alpha(self) -> bool {
        self.agnostic().is_some()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::R1 => "r1",
            Algorithm::R2 => "r2",
            Algorithm::Nr1 => "nr1",
            Algorithm::Nr2 => "nr2",
            Algorithm::Nr1Avg => "nr1-avg",
            Algorithm::Nr2Avg => "nr2-avg",
            Algorithm::Naive => "naive",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.as_str().to_string()
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Parameters shared by every algorithm of a trial batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub eps: f64,
    pub delta: f64,
    /// Only read by the non-realizable algorithms.
    pub alpha: f64,
    pub preset: Preset,
    pub sample: SampleSizeConfig,
    /// Overrides the preset's round cap for the non-realizable algorithms.
    pub max_rounds: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps: 0.2,
            delta: 0.1,
            alpha: 0.5,
            preset: Preset::Paper,
            sample: SampleSizeConfig::default(),
            max_rounds: None,
        }
    }
}

impl RunConfig {
    pub fn realizable(&self) -> RealizableConfig {
        RealizableConfig {
            sample: self.sample,
            ..RealizableConfig::with_preset(self.eps, self.delta, self.preset)
        }
    }

    pub fn agnostic(&self) -> AgnosticConfig {
        let mut cfg = AgnosticConfig::with_preset(self.eps, self.delta, self.alpha, self.preset);
        cfg.sample = self.sample;
        if self.max_rounds.is_some() {
            cfg.max_rounds = self.max_rounds;
        }
        cfg
    }

    /// Checks the parameters `alg` depends on, including the alpha range.
    pub fn validate(&self, alg: Algorithm) -> Result<()> {
        if let Some(r) = alg.realizable() {
            self.realizable().plan(r, 1, 1).map(|_| ())
        } else if let Some(v) = alg.agnostic() {
            self.agnostic().validate(v)
        } else {
            if !(self.eps > 0.0 && self.eps < 1.0) {
                return Err(Error::out_of_range("eps", self.eps, "0 < eps < 1"));
            }
            if !(self.delta > 0.0 && self.delta < 1.0) {
                return Err(Error::out_of_range("delta", self.delta, "0 < delta < 1"));
            }
            self.sample.validate()
        }
    }

    /// Error bound a trial must meet for every player.
    pub fn guarantee(&self, alg: Algorithm, opt: f64) -> f64 {
        match alg.agnostic() {
            Some(v) => v.guarantee(opt, self.eps, self.alpha),
            None => self.eps,
        }
    }
}

/// Closed-form sample counts of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub rounds: u64,
    /// Mixture draws per round (for the baseline: per player, single round).
    pub learn_per_round: u64,
    /// Draws per player per round.
    pub test_per_player: u64,
    pub learn_total: u64,
    pub test_total: u64,
    pub total: u64,
}

pub fn sample_budget(alg: Algorithm, cfg: &RunConfig, k: usize, d: u32) -> Result<SampleBudget> {
    let (rounds, learn, test) = if let Some(r) = alg.realizable() {
        let p = cfg.realizable().plan(r, k, d)?;
        (p.rounds as u64, p.learn_size, p.test_size)
    } else if let Some(v) = alg.agnostic() {
        let p = cfg.agnostic().plan(v, k, d)?;
        (p.rounds as u64, p.learn_size, p.test_size)
    } else {
        let m = naive_sample_size(k, d, cfg.eps, cfg.delta, &cfg.sample)?;
        return Ok(SampleBudget {
            rounds: 1,
            learn_per_round: m,
            test_per_player: 0,
            learn_total: k as u64 * m,
            test_total: 0,
            total: k as u64 * m,
        });
    };
    let learn_total = rounds * learn;
    let test_total = rounds * k as u64 * test;
    Ok(SampleBudget {
        rounds,
        learn_per_round: learn,
        test_per_player: test,
        learn_total,
        test_total,
        total: learn_total + test_total,
    })
}

/// Total samples a run of `alg` draws; equals the ledger total of any run.
pub fn predicted_totals(alg: Algorithm, cfg: &RunConfig, k: usize, d: u32) -> Result<u64> {
    sample_budget(alg, cfg, k, d).map(|b| b.total)
}

/// [`predicted_totals`] keyed by algorithm name.
pub fn predicted_totals_by_name(name: &str, cfg: &RunConfig, k: usize, d: u32) -> Result<u64> {
    predicted_totals(name.parse()?, cfg, k, d)
}

/// Per-player sample size of the independent baseline, `m_{ε, δ/k}`.
pub fn naive_sample_size(
    k: usize,
    d: u32,
    eps: f64,
    delta: f64,
    sample: &SampleSizeConfig,
) -> Result<u64> {
    if k == 0 {
        return Err(Error::out_of_range("k", 0.0, "k >= 1"));
    }
    realizable_sample_size(eps, delta / k as f64, d, sample)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveRun {
    /// One ERM classifier per player, trained on that player's data only.
    pub classifiers: Vec<Classifier>,
    pub ledger: SampleLedger,
}

/// Every player learns alone from `m_{ε, δ/k}` of its own examples.
pub fn naive_baseline<F: Real, G: Rng + ?Sized>(
    instance: &Instance<F>,
    eps: f64,
    delta: f64,
    sample: &SampleSizeConfig,
    rng: &mut G,
) -> Result<NaiveRun> {
    let class = instance.class();
    let m = naive_sample_size(instance.k(), class.vc_dim(), eps, delta, sample)?;
    let mut ledger = SampleLedger::new();
    let mut classifiers = Vec::with_capacity(instance.k());
    for (i, dist) in instance.distributions().iter().enumerate() {
        let s = dist.sample(m, rng, Provenance::Player(i));
        ledger.record(i, 1, Purpose::Learn, m);
        classifiers.push(class.classifier(erm(class, &s)?));
    }
    Ok(NaiveRun {
        classifiers,
        ledger,
    })
}

/// Outcome of one seeded trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    /// Largest exact per-player error of the output (expected error for the
    /// randomized combiners, own-classifier error for the baseline).
    pub max_error: f64,
    pub success: bool,
    pub total_samples: u64,
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Runs `alg` once with a generator seeded by `seed` and scores the output by
/// exact error.
pub fn run_once<F: Real>(
    alg: Algorithm,
    instance: &Instance<F>,
    cfg: &RunConfig,
    index: usize,
    seed: u64,
) -> Result<TrialRecord> {
    let mut rng = seeded_rng(seed);
    let players = instance.distributions();
    let (max_error, total_samples) = if let Some(r) = alg.realizable() {
        let run = run_realizable(r, instance, &cfg.realizable(), &mut rng)?;
        let errs = players
            .iter()
            .map(|d| exact_error(&run.classifier, d).map(num::to_f64))
            .collect::<Result<Vec<_>>>()?;
        (max_of(errs), run.ledger.total())
    } else if let Some(v) = alg.agnostic() {
        let run = run_agnostic(v, instance, &cfg.agnostic(), &mut rng)?;
        let errs = players
            .iter()
            .map(|d| exact_error(&run.classifier, d).map(num::to_f64))
            .collect::<Result<Vec<_>>>()?;
        (max_of(errs), run.ledger.total())
    } else {
        let run = naive_baseline(instance, cfg.eps, cfg.delta, &cfg.sample, &mut rng)?;
        let errs = run
            .classifiers
            .iter()
            .zip(players)
            .map(|(f, d)| exact_error(f, d).map(num::to_f64))
            .collect::<Result<Vec<_>>>()?;
        (max_of(errs), run.ledger.total())
    };
    let bound = cfg.guarantee(alg, num::to_f64(instance.opt()));
    Ok(TrialRecord {
        index,
        seed,
        max_error,
        success: max_error <= bound + SUCCESS_SLACK,
        total_samples,
    })
}

/// Aggregate of a seeded trial batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub algorithm: Algorithm,
    pub k: usize,
    pub d: u32,
    pub config: RunConfig,
    pub opt: f64,
    /// Per-player error bound each trial is judged against.
    pub bound: f64,
    pub n_trials: usize,
    pub seed_base: u64,
    pub successes: usize,
    pub predicted_total: u64,
    pub trials: Vec<TrialRecord>,
}

impl TrialStats {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.n_trials as f64
    }

    pub fn mean_max_error(&self) -> f64 {
        self.trials.iter().map(|t| t.max_error).sum::<f64>() / self.n_trials as f64
    }

    pub fn mean_total_samples(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.total_samples as f64)
            .sum::<f64>()
            / self.n_trials as f64
    }

    pub fn max_total_samples(&self) -> u64 {
        self.trials
            .iter()
            .map(|t| t.total_samples)
            .max()
            .unwrap_or(0)
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.trials.iter().map(|t| t.seed).collect()
    }
}

/// Runs `n_trials` trials with seeds `base_seed, base_seed + 1, ...`.
pub fn run_trials<F: Real>(
    alg: Algorithm,
    instance: &Instance<F>,
    cfg: &RunConfig,
    n_trials: usize,
    base_seed: u64,
) -> Result<TrialStats> {
    run_trials_with_jobs(alg, instance, cfg, n_trials, base_seed, 1)
}

/// [`run_trials`] on `jobs` worker threads. Results are merged in trial
/// order, so the output does not depend on `jobs`.
pub fn run_trials_with_jobs<F: Real>(
    alg: Algorithm,
    instance: &Instance<F>,
    cfg: &RunConfig,
    n_trials: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<TrialStats> {
    if n_trials == 0 {
        return Err(Error::out_of_range("n_trials", 0.0, "n_trials >= 1"));
    }
    cfg.validate(alg)?;
    let k = instance.k();
    let d = instance.class().vc_dim();
    let predicted_total = predicted_totals(alg, cfg, k, d)?;
    let one = |i: usize| run_once(alg, instance, cfg, i, base_seed.wrapping_add(i as u64));

    let trials = if jobs <= 1 {
        (0..n_trials).map(one).collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..n_trials)
                .into_par_iter()
                .map(one)
                .collect::<Result<Vec<_>>>()
        })?
    };

    let opt = num::to_f64(instance.opt());
    Ok(TrialStats {
        algorithm: alg,
        k,
        d,
        config: *cfg,
        opt,
        bound: cfg.guarantee(alg, opt),
        n_trials,
        seed_base: base_seed,
        successes: trials.iter().filter(|t| t.success).count(),
        predicted_total,
        trials,
    })
}
