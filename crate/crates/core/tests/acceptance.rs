//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! PASS/FAIL line straight to stderr so it shows up without `--nocapture`.

use std::io::Write;
use std::time::Instant;

use collabpac::agnostic::run_agnostic;
use collabpac::collab::{fast_test_procedure, run_realizable, test_procedure, Mixture};
use collabpac::harness::{self, naive_sample_size, predicted_totals, sample_budget};
use collabpac::instances::{make_hard_instance, make_noisy_instance, Instance};
use collabpac::sampling::seeded_rng;
use collabpac::verify::{frequency_ceiling, planted};
use collabpac::{
    exact_error, AgnosticVariant, Algorithm, Classifier, DiscreteDistribution, Label, Preset,
    Purpose, Rational64, RealizableAlgorithm, RunConfig, SampleLedger, SampleSizeConfig,
};
use rand::Rng;

fn report(n: u32, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{tag} criterion {n}: {detail}");
    assert!(pass, "criterion {n}: {detail}");
}

fn random_labels<G: Rng>(rng: &mut G, n: usize) -> Vec<Label> {
    (0..n)
        .map(|_| Label::from_bool(rng.random_bool(0.5)))
        .collect()
}

fn single(id: usize, labels: &[Label]) -> Classifier {
    Classifier::single(id, labels.to_vec().into())
}

fn random_float_dist<G: Rng>(rng: &mut G, n: usize) -> DiscreteDistribution<f64> {
    let raw: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    DiscreteDistribution::from_masses(
        n,
        raw.iter()
            .enumerate()
            .map(|(c, &m)| (c / 2, Label::from_bool(c % 2 == 1), m / total)),
    )
    .unwrap()
}

fn random_exact_dist<G: Rng>(rng: &mut G, n: usize) -> DiscreteDistribution<Rational64> {
    let raw: Vec<i64> = (0..2 * n).map(|_| rng.random_range(1..20)).collect();
    let total: i64 = raw.iter().sum();
    DiscreteDistribution::from_masses(
        n,
        raw.iter().enumerate().map(|(c, &m)| {
            (
                c / 2,
                Label::from_bool(c % 2 == 1),
                Rational64::new(m, total),
            )
        }),
    )
    .unwrap()
}

/// Mass of the cells `labels` gets wrong, summed cell by cell.
fn wrong_mass(labels: &[Label], d: &DiscreteDistribution<f64>) -> f64 {
    d.atoms()
        .iter()
        .filter(|a| labels[a.point.0] != a.label)
        .map(|a| a.mass)
        .sum()
}

#[test]
fn criterion_1_mixture_linearity() {
    let start = Instant::now();
    let mut rng = seeded_rng(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..12);
        let k = rng.random_range(1..9);
        let players: Vec<_> = (0..k).map(|_| random_float_dist(&mut rng, n)).collect();
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..100.0)).collect();
        let labels = random_labels(&mut rng, n);
        let f = single(0, &labels);
        let mix = Mixture::new(weights.clone(), &players).unwrap();
        let lhs: f64 = exact_error(&f, &mix.flatten().unwrap()).unwrap();
        let phi: f64 = weights.iter().sum();
        let rhs: f64 = weights
            .iter()
            .zip(&players)
            .map(|(w, d)| w * wrong_mass(&labels, d))
            .sum::<f64>()
            / phi;
        worst = worst.max((lhs - rhs).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        worst <= 1e-12 && secs < 5.0,
        format!("max deviation {worst:.3e} over 1000 cases in {secs:.2}s"),
    );
}

#[test]
fn criterion_2_majority_bound() {
    let start = Instant::now();
    let mut rng = seeded_rng(2);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..10);
        let d = random_exact_dist(&mut rng, n);
        // Good members start from the per-point better label and flip a few
        // points; the rest are arbitrary.
        let best: Vec<Label> = (0..n)
            .map(|x| {
                let one = d.mass_of(x, Label::One);
                Label::from_bool(one > d.mass_of(x, Label::Zero))
            })
            .collect();
        let t = rng.random_range(1..16usize);
        let good = (3 * t).div_ceil(5);
        let mut members = Vec::with_capacity(t);
        let mut eps_prime = Rational64::from_integer(0);
        for id in 0..t {
            let labels: Vec<Label> = if id < good {
                best.iter()
                    .map(|&l| if rng.random_bool(0.2) { l.flip() } else { l })
                    .collect()
            } else {
                random_labels(&mut rng, n)
            };
            let f = single(id, &labels);
            if id < good {
                eps_prime = eps_prime.max(exact_error(&f, &d).unwrap());
            }
            members.push(f);
        }
        let maj = Classifier::majority(members).unwrap();
        if exact_error(&maj, &d).unwrap() > Rational64::from_integer(6) * eps_prime {
            violations += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        2,
        violations == 0 && secs < 10.0,
        format!("{violations} violations of err(majority) <= 6 eps' in 1000 cases, {secs:.2}s"),
    );
}

#[test]
fn criterion_3_average_identity() {
    let mut rng = seeded_rng(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..12);
        let d = random_float_dist(&mut rng, n);
        let t = rng.random_range(1..12);
        let tables: Vec<Vec<Label>> = (0..t).map(|_| random_labels(&mut rng, n)).collect();
        let mean = tables.iter().map(|l| wrong_mass(l, &d)).sum::<f64>() / t as f64;
        let avg = Classifier::uniform_average(
            tables
                .iter()
                .enumerate()
                .map(|(i, l)| single(i, l))
                .collect(),
        )
        .unwrap();
        let got: f64 = exact_error(&avg, &d).unwrap();
        worst = worst.max((got - mean).abs());
    }
    report(
        3,
        worst <= 1e-12,
        format!("max deviation {worst:.3e} over 1000 cases"),
    );
}

#[test]
fn criterion_4_screen_frequencies() {
    const REPS: usize = 10_000;
    let start = Instant::now();
    let plan = collabpac::RealizableConfig::paper(0.2, 0.1)
        .plan(RealizableAlgorithm::R1, 4, 4)
        .unwrap();
    let (eps_prime, delta_prime, k) = (plan.eps_prime, plan.delta_prime, plan.k);

    // Player 0 holds the planted distribution; the others are learned exactly.
    let (f, bad) = planted(2.0 * eps_prime).unwrap();
    let (_, clean) = planted(0.0).unwrap();
    let mut players = vec![clean; k];
    players[0] = bad;
    let mut rng = seeded_rng(4);
    let mut ledger = SampleLedger::new();
    let mut included = 0;
    for _ in 0..REPS {
        let pass = test_procedure(
            &f,
            &players,
            eps_prime,
            delta_prime,
            32.0,
            1,
            &mut rng,
            &mut ledger,
        )
        .unwrap();
        included += pass.contains(&0) as usize;
    }
    let test_rate = included as f64 / REPS as f64;
    let test_ceiling = frequency_ceiling(delta_prime / k as f64, REPS);

    let fast_rate = |err: f64, seed: u64| {
        let (f, d) = planted(err).unwrap();
        let players = [d];
        let mut rng = seeded_rng(seed);
        let mut ledger = SampleLedger::new();
        (0..REPS)
            .filter(|_| {
                fast_test_procedure(
                    &f,
                    &players,
                    eps_prime,
                    delta_prime,
                    148.0,
                    1,
                    &mut rng,
                    &mut ledger,
                )
                .unwrap()
                .contains(&0)
            })
            .count() as f64
            / REPS as f64
    };
    let admits_bad = fast_rate(2.0 * eps_prime, 5);
    let rejects_good = 1.0 - fast_rate(eps_prime / 4.0, 6);
    let fast_ceiling = frequency_ceiling(0.01, REPS);
    let secs = start.elapsed().as_secs_f64();
    report(
        4,
        test_rate <= test_ceiling
            && admits_bad <= fast_ceiling
            && rejects_good <= fast_ceiling
            && secs < 120.0,
        format!(
            "test admits bad {test_rate:.5} (<= {test_ceiling:.5}); fast test admits bad \
             {admits_bad:.5}, rejects good {rejects_good:.5} (<= {fast_ceiling:.5}); {secs:.1}s"
        ),
    );
}

fn realizable_successes(alg: RealizableAlgorithm, preset: Preset, k: usize) -> usize {
    let inst = make_hard_instance::<f64>(k, 0.25).unwrap();
    let cfg = collabpac::RealizableConfig::with_preset(0.2, 0.1, preset);
    (0..50u64)
        .filter(|&s| {
            let run = run_realizable(alg, &inst, &cfg, &mut seeded_rng(500 + s)).unwrap();
            inst.distributions()
                .iter()
                .map(|d| exact_error::<f64>(&run.classifier, d).unwrap())
                .all(|e| e <= 0.2)
        })
        .count()
}

#[test]
fn criterion_5_realizable_guarantee() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (alg, preset) in [
        (RealizableAlgorithm::R1, Preset::Paper),
        (RealizableAlgorithm::R2, Preset::Desk),
    ] {
        for k in [2, 4] {
            let wins = realizable_successes(alg, preset, k);
            pass &= wins >= 45;
            lines.push(format!("{alg:?}/{preset} k={k}: {wins}/50"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        5,
        pass && secs < 600.0,
        format!("{} ({secs:.1}s)", lines.join(", ")),
    );
}

#[test]
fn criterion_6_agnostic_guarantee() {
    let start = Instant::now();
    let inst = make_noisy_instance::<f64>(4, 4, 0.05, 6).unwrap();
    // Brute-force OPT, independent of the instance's own bookkeeping.
    let opt = (0..inst.class().len())
        .map(|h| {
            let f = inst.class().classifier(h);
            inst.distributions()
                .iter()
                .map(|d| exact_error::<f64>(&f, d).unwrap())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    let mut pass = (opt - 0.05).abs() <= 1e-12;
    let mut lines = vec![format!("opt {opt:.6}")];
    for (variant, bound) in [
        (AgnosticVariant::Nr1, 0.225),
        (AgnosticVariant::Nr2, 0.225),
        (AgnosticVariant::Nr1Avg, 0.175),
        (AgnosticVariant::Nr2Avg, 0.175),
    ] {
        let cfg = collabpac::AgnosticConfig::desk(0.1, 0.1, 0.5);
        let wins = (0..30u64)
            .filter(|&s| {
                let run = run_agnostic(variant, &inst, &cfg, &mut seeded_rng(600 + s)).unwrap();
                inst.distributions()
                    .iter()
                    .all(|d| exact_error::<f64>(&run.classifier, d).unwrap() <= bound)
            })
            .count();
        pass &= wins >= 27;
        lines.push(format!("{variant} {wins}/30 within {bound}"));
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        6,
        pass && secs < 600.0,
        format!("{} ({secs:.1}s)", lines.join(", ")),
    );
}

/// Configurations exercised by criteria 7 and 8.
fn ci_matrix() -> Vec<(Algorithm, RunConfig, Instance<f64>)> {
    let hard = |k| make_hard_instance::<f64>(k, 0.25).unwrap();
    let noisy = |k, s| make_noisy_instance::<f64>(k, 3, 0.05, s).unwrap();
    let desk = RunConfig {
        preset: Preset::Desk,
        ..RunConfig::default()
    };
    let agn_desk = RunConfig {
        eps: 0.1,
        alpha: 0.5,
        ..desk
    };
    let agn_paper_capped = RunConfig {
        preset: Preset::Paper,
        max_rounds: Some(40),
        ..agn_desk
    };
    let big_c = RunConfig {
        sample: SampleSizeConfig {
            c_real: 2.0,
            c_agn: 0.5,
        },
        ..agn_desk
    };
    let mut m = Vec::new();
    for k in [1, 2, 4] {
        m.push((Algorithm::R1, RunConfig::default(), hard(k)));
        m.push((Algorithm::R2, RunConfig::default(), hard(k)));
        m.push((Algorithm::R2, desk, hard(k)));
        m.push((Algorithm::Naive, RunConfig::default(), hard(k)));
    }
    for alg in [
        Algorithm::Nr1,
        Algorithm::Nr2,
        Algorithm::Nr1Avg,
        Algorithm::Nr2Avg,
    ] {
        for (cfg, k) in [(agn_desk, 4), (agn_paper_capped, 3), (big_c, 2)] {
            m.push((alg, cfg, noisy(k, k as u64)));
        }
    }
    m.push((Algorithm::R1, big_c, hard(3)));
    m
}

#[test]
fn criterion_7_ledger_matches_prediction() {
    let mut mismatches = Vec::new();
    let matrix = ci_matrix();
    for (i, (alg, cfg, inst)) in matrix.iter().enumerate() {
        let k = inst.k();
        let d = inst.class().vc_dim();
        let budget = sample_budget(*alg, cfg, k, d).unwrap();
        let mut rng = seeded_rng(700 + i as u64);
        let ledger = if let Some(r) = alg.realizable() {
            run_realizable(r, inst, &cfg.realizable(), &mut rng)
                .unwrap()
                .ledger
        } else if let Some(v) = alg.agnostic() {
            run_agnostic(v, inst, &cfg.agnostic(), &mut rng)
                .unwrap()
                .ledger
        } else {
            harness::naive_baseline(inst, cfg.eps, cfg.delta, &cfg.sample, &mut rng)
                .unwrap()
                .ledger
        };
        let ok = ledger.total() == predicted_totals(*alg, cfg, k, d).unwrap()
            && ledger.purpose_total(Purpose::Learn) == budget.learn_total
            && ledger.purpose_total(Purpose::Test) == budget.test_total;
        if !ok {
            mismatches.push(format!("{alg} k={k}"));
        }
    }
    report(
        7,
        mismatches.is_empty(),
        format!(
            "{} of {} runs match the closed form{}",
            matrix.len() - mismatches.len(),
            matrix.len(),
            if mismatches.is_empty() {
                String::new()
            } else {
                format!("; mismatched: {}", mismatches.join(", "))
            }
        ),
    );
}

#[test]
fn criterion_8_weight_identities() {
    let mut checked = 0;
    let mut failures = Vec::new();
    for (i, (alg, cfg, inst)) in ci_matrix().iter().enumerate() {
        let k = inst.k();
        let mut rng = seeded_rng(800 + i as u64);
        if let Some(r) = alg.realizable() {
            let run = run_realizable(r, inst, &cfg.realizable(), &mut rng).unwrap();
            let mut fails = vec![0u32; k];
            let mut ok = true;
            for round in &run.trace.rounds {
                for (p, f) in fails.iter_mut().enumerate() {
                    *f += !round.pass_set.contains(&p) as u32;
                }
                ok &= round.doublings == fails;
            }
            let w = &run.trace.final_weights;
            for (p, &f) in fails.iter().enumerate() {
                ok &= w.weight(p) == num_bigint::BigUint::from(1u32) << f;
            }
            if !ok {
                failures.push(format!("{alg} k={k}"));
            }
            checked += 1;
        } else if let Some(v) = alg.agnostic() {
            let run = run_agnostic(v, inst, &cfg.agnostic(), &mut rng).unwrap();
            let alpha_prime = run.plan.alpha_prime;
            let mut products = vec![1.0f64; k];
            let mut sums = vec![0.0f64; k];
            let mut ok = true;
            for round in &run.trace.rounds {
                for p in 0..k {
                    products[p] *= 1.0 + round.steps[p];
                    sums[p] += round.steps[p];
                }
                let phi: f64 = products.iter().sum();
                ok &= (round.potential - phi).abs() <= 1e-9 * phi;
            }
            let weights = run.trace.final_weights.weights();
            let phi = run.trace.final_weights.potential();
            for p in 0..k {
                ok &= (weights[p] - products[p]).abs() <= 1e-9 * products[p];
                ok &= sums[p] <= phi.ln() / (1.0 - alpha_prime / 2.0);
            }
            if !ok {
                failures.push(format!("{alg} k={k}"));
            }
            checked += 1;
        }
    }
    report(
        8,
        failures.is_empty(),
        format!(
            "{} of {checked} traces satisfy every identity",
            checked - failures.len()
        ),
    );
}

#[test]
fn criterion_9_complexity_shape() {
    let start = Instant::now();
    let cfg = RunConfig {
        eps: 0.2,
        delta: 0.1,
        ..RunConfig::default()
    };
    let d = 8;
    let mut below_naive = true;
    let mut ratios = Vec::new();
    let mut rows = Vec::new();
    for k in [4usize, 8, 16, 32] {
        let r1 = predicted_totals(Algorithm::R1, &cfg, k, d).unwrap();
        let r2 = predicted_totals(Algorithm::R2, &cfg, k, d).unwrap();
        let naive = k as u64 * naive_sample_size(k, d, cfg.eps, cfg.delta, &cfg.sample).unwrap();
        assert_eq!(
            naive,
            predicted_totals(Algorithm::Naive, &cfg, k, d).unwrap()
        );
        if k >= 8 {
            below_naive &= r1 < naive;
        }
        ratios.push(r1 as f64 / r2 as f64);
        rows.push(format!("k={k} r1={r1} r2={r2} naive={naive}"));
    }
    let nondecreasing = ratios.windows(2).all(|w| w[0] <= w[1]);
    let secs = start.elapsed().as_secs_f64();
    report(
        9,
        below_naive && nondecreasing && secs < 1.0,
        format!(
            "r1 below naive for k >= 8: {below_naive}; r1/r2 nondecreasing: {nondecreasing}; {}",
            rows.join("; ")
        ),
    );
}
