//! Self-check suites run by the `verify` command.

use std::sync::Arc;

use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;

use crate::collab::{fast_test_procedure, test_procedure, Mixture};
use crate::ledger::SampleLedger;
use crate::model::{exact_error, Atom, Classifier, DiscreteDistribution, Label, LabelTable};
use crate::sampling::seeded_rng;
use crate::Result;

/// Repetitions behind each frequency check.
pub const FREQUENCY_REPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        SuiteResult {
            name,
            passed,
            detail,
        }
    }
}

fn random_labels<G: Rng + ?Sized>(rng: &mut G, n: usize) -> LabelTable {
    (0..n)
        .map(|_| Label::from_bool(rng.random_bool(0.5)))
        .collect::<Vec<_>>()
        .into()
}

/// A distribution over `n` points with small integer masses, exact.
fn random_exact<G: Rng + ?Sized>(
    rng: &mut G,
    n: usize,
) -> Result<DiscreteDistribution<Rational64>> {
    let raw: Vec<(usize, Label, i64)> = (0..n)
        .flat_map(|x| [(x, Label::Zero), (x, Label::One)])
        .map(|(x, y)| (x, y, rng.random_range(0..6)))
        .collect();
    let mut total: i64 = raw.iter().map(|r| r.2).sum();
    let mut raw = raw;
    if total == 0 {
        raw[0].2 = 1;
        total = 1;
    }
    DiscreteDistribution::from_masses(
        n,
        raw.into_iter()
            .map(|(x, y, m)| (x, y, Rational64::new(m, total))),
    )
}

fn random_members<G: Rng + ?Sized>(rng: &mut G, n: usize) -> Vec<Classifier> {
    let t = rng.random_range(1..6);
    (0..t)
        .map(|id| Classifier::single(id, random_labels(rng, n)))
        .collect()
}

/// Error under a flattened mixture equals the weighted mean of the
/// per-player errors.
pub fn mixture_identity(seed: u64, cases: usize) -> Result<SuiteResult> {
    let mut rng = seeded_rng(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..6);
        let k = rng.random_range(1..5);
        let players = (0..k)
            .map(|_| random_exact(&mut rng, n))
            .collect::<Result<Vec<_>>>()?;
        let weights: Vec<Rational64> = (0..k)
            .map(|_| Rational64::from_integer(rng.random_range(1..9)))
            .collect();
        let mix = Mixture::new(weights.clone(), &players)?;
        let f = Classifier::single(0, random_labels(&mut rng, n));
        let lhs = exact_error(&f, &mix.flatten()?)?;
        let mut rhs = Rational64::from_integer(0);
        for (w, d) in weights.iter().zip(&players) {
            rhs += *w * exact_error(&f, d)?;
        }
        rhs /= mix.potential();
        if lhs != rhs {
            bad += 1;
        }
    }
    Ok(SuiteResult::new(
        "mixture identity",
        bad == 0,
        format!("{bad} of {cases} cases differ"),
    ))
}

/// `err(majority) <= 2 * mean(err(members))`.
pub fn majority_bound(seed: u64, cases: usize) -> Result<SuiteResult> {
    let mut rng = seeded_rng(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..6);
        let d = random_exact(&mut rng, n)?;
        let members = random_members(&mut rng, n);
        let t = members.len() as i64;
        let mut sum = Rational64::from_integer(0);
        for f in &members {
            sum += exact_error(f, &d)?;
        }
        let maj = Classifier::majority(members)?;
        if exact_error(&maj, &d)? > Rational64::from_integer(2) * sum / t {
            bad += 1;
        }
    }
    Ok(SuiteResult::new(
        "majority bound",
        bad == 0,
        format!("{bad} of {cases} cases violate"),
    ))
}

/// The error of a uniform average is the mean member error.
pub fn average_identity(seed: u64, cases: usize) -> Result<SuiteResult> {
    let mut rng = seeded_rng(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..6);
        let d = random_exact(&mut rng, n)?;
        let members = random_members(&mut rng, n);
        let t = members.len() as i64;
        let mut sum = Rational64::from_integer(0);
        for f in &members {
            sum += exact_error(f, &d)?;
        }
        let avg = Classifier::uniform_average(members)?;
        if exact_error(&avg, &d)? != sum / t {
            bad += 1;
        }
    }
    Ok(SuiteResult::new(
        "average identity",
        bad == 0,
        format!("{bad} of {cases} cases differ"),
    ))
}

/// Two points, all mass labelled one; the classifier says zero on point 1,
/// which carries mass `err`.
pub fn planted(err: f64) -> Result<(Classifier, DiscreteDistribution<f64>)> {
    let d = DiscreteDistribution::new(
        2,
        vec![
            Atom::new(0, Label::One, 1.0 - err),
            Atom::new(1, Label::One, err),
        ],
    )?;
    let f = Classifier::single(0, Arc::from(vec![Label::One, Label::Zero]));
    Ok((f, d))
}

/// `p + 3 sqrt(p(1-p)/n)`.
pub fn frequency_ceiling(p: f64, n: usize) -> f64 {
    p + 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Fraction of `reps` screens (over `k` identical players) that admit a
/// player, for the full test.
pub fn test_inclusion_rate(
    err: f64,
    k: usize,
    eps_prime: f64,
    delta_prime: f64,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    let (f, d) = planted(err)?;
    let players = vec![d; k];
    let mut rng = seeded_rng(seed);
    let mut ledger = SampleLedger::new();
    let mut included = 0usize;
    for _ in 0..reps {
        let pass = test_procedure(
            &f,
            &players,
            eps_prime,
            delta_prime,
            32.0,
            1,
            &mut rng,
            &mut ledger,
        )?;
        included += pass.len();
    }
    Ok(included as f64 / (reps * k) as f64)
}

/// Fraction of `reps` fast screens of one player that admit it.
pub fn fast_test_inclusion_rate(err: f64, eps_prime: f64, reps: usize, seed: u64) -> Result<f64> {
    let (f, d) = planted(err)?;
    let players = [d];
    let mut rng = seeded_rng(seed);
    let mut ledger = SampleLedger::new();
    let mut included = 0usize;
    for _ in 0..reps {
        let pass = fast_test_procedure(
            &f,
            &players,
            eps_prime,
            0.0,
            148.0,
            1,
            &mut rng,
            &mut ledger,
        )?;
        included += pass.len();
    }
    Ok(included as f64 / reps as f64)
}

pub fn test_frequency(seed: u64, reps: usize) -> Result<SuiteResult> {
    let (eps_prime, delta_prime, k) = (0.05, 0.01, 4);
    let rate = test_inclusion_rate(2.0 * eps_prime, k, eps_prime, delta_prime, reps, seed)?;
    let ceiling = frequency_ceiling(delta_prime / k as f64, reps * k);
    Ok(SuiteResult::new(
        "test frequency",
        rate <= ceiling,
        format!("bad-player inclusion {rate:.5} (ceiling {ceiling:.5})"),
    ))
}

pub fn fast_test_frequency(seed: u64, reps: usize) -> Result<SuiteResult> {
    let eps_prime = 0.05;
    let ceiling = frequency_ceiling(0.01, reps);
    let wrong_in = fast_test_inclusion_rate(2.0 * eps_prime, eps_prime, reps, seed)?;
    let wrong_out = 1.0 - fast_test_inclusion_rate(eps_prime / 4.0, eps_prime, reps, seed ^ 1)?;
    Ok(SuiteResult::new(
        "fast test frequency",
        wrong_in <= ceiling && wrong_out <= ceiling,
        format!("admits bad {wrong_in:.5}, rejects good {wrong_out:.5} (ceiling {ceiling:.5})"),
    ))
}

/// Every suite, in a fixed order.
pub fn run_all(seed: u64) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        mixture_identity(seed, 500)?,
        majority_bound(seed, 500)?,
        average_identity(seed, 500)?,
        test_frequency(seed, FREQUENCY_REPS)?,
        fast_test_frequency(seed, FREQUENCY_REPS)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for r in run_all(0).unwrap() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn planted_error_is_exact() {
        let (f, d) = planted(0.1).unwrap();
        assert_eq!(exact_error(&f, &d).unwrap(), 0.1);
    }
}
