//! Finite concept classes, exact ERM, and the single-task sample sizes.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Classifier, Label, LabelTable, SampleSet};
use crate::num::ceil_count;

/// Largest class that brute-force ERM and OPT enumeration accept.
pub const MAX_CLASS_SIZE: usize = 1 << 16;

/// An enumerated hypothesis class with a declared VC dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClass")]
pub struct ConceptClass {
    vc_dim: u32,
    hypotheses: Vec<LabelTable>,
}

#[derive(Deserialize)]
struct RawClass {
    vc_dim: u32,
    hypotheses: Vec<LabelTable>,
}

impl TryFrom<RawClass> for ConceptClass {
    type Error = Error;

    fn try_from(raw: RawClass) -> Result<Self> {
        ConceptClass::new(raw.hypotheses, raw.vc_dim)
    }
}

impl ConceptClass {
    pub fn new(hypotheses: Vec<LabelTable>, vc_dim: u32) -> Result<Self> {
        let first = hypotheses
            .first()
            .ok_or_else(|| Error::InvalidClass("no hypotheses".into()))?;
        if vc_dim == 0 {
            return Err(Error::InvalidClass("VC dimension must be positive".into()));
        }
        if hypotheses.len() > MAX_CLASS_SIZE {
            return Err(Error::ClassTooLarge(hypotheses.len()));
        }
        let domain = first.len();
        if domain == 0 {
            return Err(Error::InvalidClass("empty domain".into()));
        }
        let mut seen = HashSet::with_capacity(hypotheses.len());
        for (i, h) in hypotheses.iter().enumerate() {
            if h.len() != domain {
                return Err(Error::DomainMismatch {
                    expected: domain,
                    found: h.len(),
                });
            }
            if !seen.insert(h.clone()) {
                return Err(Error::InvalidClass(format!(
                    "hypothesis {i} is a duplicate"
                )));
            }
        }
        Ok(ConceptClass { vc_dim, hypotheses })
    }

    /// All `2^d` labelings of points `1..=d`, with point 0 always labeled 1.
    /// Hypothesis `h` gives point `j >= 1` the label of bit `j - 1` of `h`.
    pub fn cube(d: u32) -> Result<Self> {
        let size = 1usize
            .checked_shl(d)
            .filter(|&s| s <= MAX_CLASS_SIZE && d > 0)
            .ok_or_else(|| Error::out_of_range("d", d as f64, "1 <= d <= 16"))?;
        let hypotheses = (0..size)
            .map(|h| {
                std::iter::once(Label::One)
                    .chain((0..d).map(|j| Label::from_bool((h >> j) & 1 == 1)))
                    .collect::<LabelTable>()
            })
            .collect();
        Ok(ConceptClass {
            vc_dim: d,
            hypotheses,
        })
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn vc_dim(&self) -> u32 {
        self.vc_dim
    }

    pub fn domain_size(&self) -> usize {
        self.hypotheses[0].len()
    }

    pub fn hypotheses(&self) -> &[LabelTable] {
        &self.hypotheses
    }

    pub fn classifier(&self, index: usize) -> Classifier {
        Classifier::single(index, self.hypotheses[index].clone())
    }
}

/// ERM result: chosen hypothesis and its mistake count on the sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ErmOutcome {
    pub index: usize,
    pub mistakes: u64,
}

/// Exact empirical risk minimizer over a finite class; ties go to the lowest
/// index and an empty sample selects hypothesis 0.
pub fn erm(class: &ConceptClass, sample: &SampleSet) -> Result<usize> {
    erm_outcome(class, sample).map(|o| o.index)
}

pub fn erm_outcome(class: &ConceptClass, sample: &SampleSet) -> Result<ErmOutcome> {
    if sample.domain_size() != class.domain_size() {
        return Err(Error::DomainMismatch {
            expected: class.domain_size(),
            found: sample.domain_size(),
        });
    }
    let mut best = ErmOutcome {
        index: 0,
        mistakes: u64::MAX,
    };
    for (index, h) in class.hypotheses().iter().enumerate() {
        let mistakes = sample.mistakes_of(h);
        if mistakes < best.mistakes {
            best = ErmOutcome { index, mistakes };
            if mistakes == 0 {
                break;
            }
        }
    }
    Ok(best)
}

/// Constant multipliers of the single-task sample-size bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeConfig {
    pub c_real: f64,
    pub c_agn: f64,
}

impl Default for SampleSizeConfig {
    fn default() -> Self {
        SampleSizeConfig {
            c_real: 1.0,
            c_agn: 1.0,
        }
    }
}

impl SampleSizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_real > 0.0 && self.c_real.is_finite()) {
            return Err(Error::out_of_range("c_real", self.c_real, "c_real > 0"));
        }
        if !(self.c_agn > 0.0 && self.c_agn.is_finite()) {
            return Err(Error::out_of_range("c_agn", self.c_agn, "c_agn > 0"));
        }
        Ok(())
    }
}

pub(crate) fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::out_of_range(name, x, "0 < value <= 1"))
    }
}

fn check_dim(d: u32) -> Result<()> {
    if d == 0 {
        Err(Error::out_of_range("d", 0.0, "d >= 1"))
    } else {
        Ok(())
    }
}

/// `max(1, ⌈(C/ε)(d ln(1/ε) + ln(1/δ))⌉)`.
pub fn realizable_sample_size(eps: f64, delta: f64, d: u32, cfg: &SampleSizeConfig) -> Result<u64> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    check_dim(d)?;
    cfg.validate()?;
    let raw = cfg.c_real / eps * (d as f64 * (1.0 / eps).ln() + (1.0 / delta).ln());
    Ok(ceil_count(raw).max(1))
}

/// `max(1, ⌈(C/(εα))(d ln(1/ε) + ln(1/δ))⌉)`.
pub fn agnostic_sample_size(
    eps: f64,
    delta: f64,
    alpha: f64,
    d: u32,
    cfg: &SampleSizeConfig,
) -> Result<u64> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    check_unit("alpha", alpha)?;
    check_dim(d)?;
    cfg.validate()?;
    let raw = cfg.c_agn / (eps * alpha) * (d as f64 * (1.0 / eps).ln() + (1.0 / delta).ln());
    Ok(ceil_count(raw).max(1))
}
