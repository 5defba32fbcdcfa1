//! Synthetic multi-player instances whose errors and OPT are exactly computable.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{exact_error, DiscreteDistribution, Label};
use crate::num::{self, Scalar};
use crate::oracle::{ConceptClass, MAX_CLASS_SIZE};
use crate::sampling::seeded_rng;

/// Default mass placed on the special points is `2 * DEFAULT_EPS_INST`.
pub const DEFAULT_EPS_INST: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Realizable,
    Hard,
    Noisy,
    Custom,
}

impl std::fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InstanceKind::Realizable => "realizable",
            InstanceKind::Hard => "hard",
            InstanceKind::Noisy => "noisy",
            InstanceKind::Custom => "custom",
        })
    }
}

/// `k` player distributions over a shared domain plus a finite class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawInstance<P>",
    bound(
        deserialize = "P: Scalar + Deserialize<'de>",
        serialize = "P: Serialize"
    )
)]
pub struct Instance<P> {
    kind: InstanceKind,
    k: usize,
    domain_size: usize,
    distributions: Vec<DiscreteDistribution<P>>,
    class: ConceptClass,
    target: Option<usize>,
    opt: P,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "P: Scalar + Deserialize<'de>"))]
struct RawInstance<P> {
    kind: InstanceKind,
    k: usize,
    domain_size: usize,
    distributions: Vec<DiscreteDistribution<P>>,
    class: ConceptClass,
    target: Option<usize>,
    opt: P,
}

impl<P: Scalar> TryFrom<RawInstance<P>> for Instance<P> {
    type Error = Error;

    fn try_from(raw: RawInstance<P>) -> Result<Self> {
        if raw.k != raw.distributions.len() {
            return Err(Error::InvalidInstance(format!(
                "k = {} but {} distributions",
                raw.k,
                raw.distributions.len()
            )));
        }
        let inst = Instance::new(raw.kind, raw.distributions, raw.class, raw.target)?;
        if inst.domain_size != raw.domain_size {
            return Err(Error::DomainMismatch {
                expected: raw.domain_size,
                found: inst.domain_size,
            });
        }
        if num::to_f64(inst.opt - raw.opt).abs() > 1e-12 {
            return Err(Error::InvalidInstance(format!(
                "stored opt {:?} differs from recomputed {:?}",
                raw.opt, inst.opt
            )));
        }
        Ok(inst)
    }
}

impl<P: Scalar> Instance<P> {
    /// Validates the shared domain and computes OPT by enumeration.
    pub fn new(
        kind: InstanceKind,
        distributions: Vec<DiscreteDistribution<P>>,
        class: ConceptClass,
        target: Option<usize>,
    ) -> Result<Self> {
        if distributions.is_empty() {
            return Err(Error::InvalidInstance("no players".into()));
        }
        let domain_size = class.domain_size();
        if let Some(d) = distributions
            .iter()
            .find(|d| d.domain_size() != domain_size)
        {
            return Err(Error::DomainMismatch {
                expected: domain_size,
                found: d.domain_size(),
            });
        }
        if let Some(t) = target {
            if t >= class.len() {
                return Err(Error::InvalidInstance(format!(
                    "target {t} outside a class of {} hypotheses",
                    class.len()
                )));
            }
        }
        let opt = opt_over(&class, &distributions)?;
        if let Some(t) = target {
            let target_err = max_player_error(&class, t, &distributions)?;
            if num::to_f64(target_err - opt).abs() > 1e-12 {
                return Err(Error::InvalidInstance(format!(
                    "target error {:?} is not OPT {:?}",
                    target_err, opt
                )));
            }
        }
        Ok(Instance {
            kind,
            k: distributions.len(),
            domain_size,
            distributions,
            class,
            target,
            opt,
        })
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn distributions(&self) -> &[DiscreteDistribution<P>] {
        &self.distributions
    }

    pub fn class(&self) -> &ConceptClass {
        &self.class
    }

    pub fn target(&self) -> Option<usize> {
        self.target
    }

    pub fn opt(&self) -> P {
        self.opt
    }

    pub fn is_realizable(&self) -> bool {
        self.opt == P::zero()
    }
}

impl<P: Scalar + Serialize> Instance<P> {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl<P: Scalar + for<'de> Deserialize<'de>> Instance<P> {
    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn max_player_error<P: Scalar>(
    class: &ConceptClass,
    index: usize,
    distributions: &[DiscreteDistribution<P>],
) -> Result<P> {
    let f = class.classifier(index);
    let mut worst = P::zero();
    for d in distributions {
        let e = exact_error(&f, d)?;
        if e > worst {
            worst = e;
        }
    }
    Ok(worst)
}

/// `min_{f in F} max_i err_{D_i}(f)` by enumeration.
pub fn opt_over<P: Scalar>(
    class: &ConceptClass,
    distributions: &[DiscreteDistribution<P>],
) -> Result<P> {
    if class.len() > MAX_CLASS_SIZE {
        return Err(Error::ClassTooLarge(class.len()));
    }
    let mut best: Option<P> = None;
    for index in 0..class.len() {
        let e = max_player_error(class, index, distributions)?;
        if best.is_none_or(|b| e < b) {
            best = Some(e);
        }
    }
    best.ok_or_else(|| Error::InvalidClass("no hypotheses".into()))
}

/// Recomputes OPT of `instance` from scratch.
pub fn compute_opt<P: Scalar>(instance: &Instance<P>) -> Result<P> {
    opt_over(instance.class(), instance.distributions())
}

fn check_players(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::out_of_range("k", 0.0, "k >= 1"))
    } else {
        Ok(())
    }
}

fn check_eps_inst(eps_inst: f64) -> Result<()> {
    if eps_inst > 0.0 && eps_inst <= 0.5 {
        Ok(())
    } else {
        Err(Error::out_of_range(
            "eps_inst",
            eps_inst,
            "0 < eps_inst <= 0.5",
        ))
    }
}

pub fn make_realizable_instance<P: Scalar>(k: usize, d: u32, seed: u64) -> Result<Instance<P>> {
    make_realizable_instance_with(k, d, DEFAULT_EPS_INST, seed)
}

/// Domain `x_0..x_d`, class [`ConceptClass::cube`]`(d)`, and a random target
/// `f*`. Each player puts `1 - 2ε` on `(x_0, 1)` and splits `2ε` evenly over
/// a random non-empty subset of `x_1..x_d` labeled by `f*`.
pub fn make_realizable_instance_with<P: Scalar>(
    k: usize,
    d: u32,
    eps_inst: f64,
    seed: u64,
) -> Result<Instance<P>> {
    check_players(k)?;
    check_eps_inst(eps_inst)?;
    if d == 0 || d > 16 {
        return Err(Error::out_of_range("d", d as f64, "1 <= d <= 16"));
    }
    let class = ConceptClass::cube(d)?;
    let mut rng = seeded_rng(seed);
    let target = rng.random_range(0..class.len());
    let labels = class.hypotheses()[target].clone();
    let domain = class.domain_size();
    let two_eps: P = num::constant(2.0 * eps_inst);
    let base = P::one() - two_eps;

    let mut distributions = Vec::with_capacity(k);
    for _ in 0..k {
        let mut special: Vec<usize> = (1..domain).filter(|_| rng.random_bool(0.5)).collect();
        if special.is_empty() {
            let mut all: Vec<usize> = (1..domain).collect();
            all.shuffle(&mut rng);
            special.push(all[0]);
        }
        let share = two_eps / num::count(special.len() as u64);
        let masses = std::iter::once((0, Label::One, base))
            .chain(special.iter().map(|&x| (x, labels[x], share)));
        distributions.push(DiscreteDistribution::from_masses(domain, masses)?);
    }
    Instance::new(InstanceKind::Realizable, distributions, class, Some(target))
}

/// `d = k` special points; player `i` puts `1 - 2ε` on `(x_0, 1)` and `2ε` on
/// its private point `x_{i+1}`. The target labels every point 1, which is the
/// last hypothesis of the cube, so ERM ties never land on it by accident.
pub fn make_hard_instance<P: Scalar>(k: usize, eps_inst: f64) -> Result<Instance<P>> {
    if !(1..=16).contains(&k) {
        return Err(Error::out_of_range("k", k as f64, "1 <= k <= 16"));
    }
    check_eps_inst(eps_inst)?;
    let class = ConceptClass::cube(k as u32)?;
    let target = class.len() - 1;
    let labels = class.hypotheses()[target].clone();
    let domain = class.domain_size();
    let two_eps: P = num::constant(2.0 * eps_inst);
    let distributions = (0..k)
        .map(|i| {
            let private = i + 1;
            DiscreteDistribution::from_masses(
                domain,
                [
                    (0, Label::One, P::one() - two_eps),
                    (private, labels[private], two_eps),
                ],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(InstanceKind::Hard, distributions, class, Some(target))
}

/// The realizable instance for `(k, d, seed)` with every atom's label flipped
/// on an `eta` fraction of its mass.
pub fn make_noisy_instance<P: Scalar>(
    k: usize,
    d: u32,
    eta: f64,
    seed: u64,
) -> Result<Instance<P>> {
    make_noisy_instance_with(k, d, eta, DEFAULT_EPS_INST, seed)
}

pub fn make_noisy_instance_with<P: Scalar>(
    k: usize,
    d: u32,
    eta: f64,
    eps_inst: f64,
    seed: u64,
) -> Result<Instance<P>> {
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::out_of_range("eta", eta, "0 <= eta < 0.5"));
    }
    let clean = make_realizable_instance_with::<P>(k, d, eps_inst, seed)?;
    let eta_p: P = num::constant(eta);
    let keep = P::one() - eta_p;
    let distributions = clean
        .distributions()
        .iter()
        .map(|dist| {
            let masses = dist.atoms().iter().flat_map(|a| {
                [
                    (a.point.0, a.label, a.mass * keep),
                    (a.point.0, a.label.flip(), a.mass * eta_p),
                ]
            });
            DiscreteDistribution::from_masses(dist.domain_size(), masses)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(
        InstanceKind::Noisy,
        distributions,
        clean.class().clone(),
        clean.target(),
    )
}
