//! Points, labels, finite distributions, classifiers and their errors.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{self, Scalar};
use crate::sampling::multinomial;

/// Tolerance on the total mass of a distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Index of an element of a finite domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub usize);

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A binary label, serialized as `0` or `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Zero,
    One,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
        }
    }

    pub fn from_bool(b: bool) -> Label {
        if b {
            Label::One
        } else {
            Label::Zero
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Label, String> {
        match v {
            0 => Ok(Label::Zero),
            1 => Ok(Label::One),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledExample {
    pub point: Point,
    pub label: Label,
}

/// One probability atom of a [`DiscreteDistribution`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom<P> {
    pub point: Point,
    pub label: Label,
    pub mass: P,
}

impl<P> Atom<P> {
    pub fn new(point: usize, label: Label, mass: P) -> Self {
        Atom {
            point: Point(point),
            label,
            mass,
        }
    }
}

/// A probability mass function over `(point, label)` pairs of a finite domain.
///
/// A point may carry both labels, which is how label noise is expressed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawDistribution<P>",
    bound(
        deserialize = "P: Scalar + Deserialize<'de>",
        serialize = "P: Serialize"
    )
)]
pub struct DiscreteDistribution<P> {
    domain_size: usize,
    atoms: Vec<Atom<P>>,
}

#[derive(Deserialize)]
struct RawDistribution<P> {
    domain_size: usize,
    atoms: Vec<Atom<P>>,
}

impl<P: Scalar> TryFrom<RawDistribution<P>> for DiscreteDistribution<P> {
    type Error = Error;

    fn try_from(raw: RawDistribution<P>) -> Result<Self> {
        DiscreteDistribution::new(raw.domain_size, raw.atoms)
    }
}

impl<P: Scalar> DiscreteDistribution<P> {
    pub fn new(domain_size: usize, atoms: Vec<Atom<P>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut seen = HashSet::with_capacity(atoms.len());
        let mut total = P::zero();
        for atom in &atoms {
            if atom.point.0 >= domain_size {
                return Err(Error::PointOutsideDomain {
                    point: atom.point.0,
                    domain: domain_size,
                });
            }
            if atom.mass < P::zero() {
                return Err(Error::InvalidDistribution(format!(
                    "negative mass {:?} at ({}, {})",
                    atom.mass,
                    atom.point,
                    atom.label.index()
                )));
            }
            if !seen.insert((atom.point, atom.label)) {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate atom ({}, {})",
                    atom.point,
                    atom.label.index()
                )));
            }
            total = total + atom.mass;
        }
        let deviation = num::to_f64(total - P::one()).abs();
        if deviation.is_nan() || deviation > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {:?}",
                total
            )));
        }
        Ok(DiscreteDistribution { domain_size, atoms })
    }

    /// Builds a distribution from possibly repeated `(point, label)` masses,
    /// merging duplicates and dropping zero-mass atoms.
    pub fn from_masses<I>(domain_size: usize, masses: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Label, P)>,
    {
        let mut merged: BTreeMap<(usize, Label), P> = BTreeMap::new();
        for (point, label, mass) in masses {
            let slot = merged.entry((point, label)).or_insert_with(P::zero);
            *slot = *slot + mass;
        }
        let atoms = merged
            .into_iter()
            .filter(|(_, m)| *m != P::zero())
            .map(|((point, label), mass)| Atom::new(point, label, mass))
            .collect();
        Self::new(domain_size, atoms)
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn atoms(&self) -> &[Atom<P>] {
        &self.atoms
    }

    /// Total mass on `point` with `label`.
    pub fn mass_of(&self, point: usize, label: Label) -> P {
        self.atoms
            .iter()
            .filter(|a| a.point.0 == point && a.label == label)
            .fold(P::zero(), |acc, a| acc + a.mass)
    }

    /// Draws `n` independent examples, returned as a count vector.
    pub fn sample<G: Rng + ?Sized>(
        &self,
        n: u64,
        rng: &mut G,
        provenance: Provenance,
    ) -> SampleSet {
        let probabilities: Vec<f64> = self.atoms.iter().map(|a| num::to_f64(a.mass)).collect();
        let drawn = multinomial(rng, n, &probabilities);
        let mut sample = SampleSet::empty(self.domain_size, provenance);
        for (atom, c) in self.atoms.iter().zip(drawn) {
            sample.add(atom.point, atom.label, c);
        }
        sample
    }
}

pub type LabelTable = Arc<[Label]>;

/// A deterministic hypothesis, a majority vote, or a uniformly randomized
/// combination of classifiers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Classifier {
    Single { id: usize, labels: LabelTable },
    Majority(Vec<Classifier>),
    UniformAverage(Vec<Classifier>),
}

/// Output of [`Classifier::evaluate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prediction {
    Label(Label),
    /// Probability that a randomized classifier outputs label 1.
    ProbabilityOfOne(f64),
}

impl Classifier {
    pub fn single(id: usize, labels: LabelTable) -> Self {
        Classifier::Single { id, labels }
    }

    /// Majority vote; ties go to label 0. Members must be deterministic.
    pub fn majority(members: Vec<Classifier>) -> Result<Self> {
        Self::check_members(&members)?;
        if members.iter().any(|m| !m.is_deterministic()) {
            return Err(Error::InvalidClassifier(
                "majority members must be deterministic".into(),
            ));
        }
        Ok(Classifier::Majority(members))
    }

    pub fn uniform_average(members: Vec<Classifier>) -> Result<Self> {
        Self::check_members(&members)?;
        Ok(Classifier::UniformAverage(members))
    }

    fn check_members(members: &[Classifier]) -> Result<()> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidClassifier("empty member list".into()))?;
        let domain = first.domain_size();
        if let Some(bad) = members.iter().find(|m| m.domain_size() != domain) {
            return Err(Error::DomainMismatch {
                expected: domain,
                found: bad.domain_size(),
            });
        }
        Ok(())
    }

    pub fn domain_size(&self) -> usize {
        match self {
            Classifier::Single { labels, .. } => labels.len(),
            Classifier::Majority(m) | Classifier::UniformAverage(m) => m[0].domain_size(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Classifier::UniformAverage(_))
    }

    fn check_point(&self, point: Point) -> Result<()> {
        let domain = self.domain_size();
        if point.0 >= domain {
            return Err(Error::PointOutsideDomain {
                point: point.0,
                domain,
            });
        }
        Ok(())
    }

    // Callers must have validated `point`.
    fn label_unchecked(&self, point: Point) -> Label {
        match self {
            Classifier::Single { labels, .. } => labels[point.0],
            Classifier::Majority(members) => {
                let ones = members
                    .iter()
                    .filter(|m| m.label_unchecked(point) == Label::One)
                    .count();
                Label::from_bool(2 * ones > members.len())
            }
            Classifier::UniformAverage(_) => {
                unreachable!("randomized classifier has no fixed label")
            }
        }
    }

    fn probability_of_one_unchecked<P: Scalar>(&self, point: Point) -> P {
        match self {
            Classifier::UniformAverage(members) => {
                let sum = members.iter().fold(P::zero(), |acc, m| {
                    acc + m.probability_of_one_unchecked::<P>(point)
                });
                sum / num::count(members.len() as u64)
            }
            deterministic => match deterministic.label_unchecked(point) {
                Label::One => P::one(),
                Label::Zero => P::zero(),
            },
        }
    }

    pub fn evaluate(&self, point: Point) -> Result<Prediction> {
        self.check_point(point)?;
        Ok(match self {
            Classifier::UniformAverage(_) => {
                Prediction::ProbabilityOfOne(self.probability_of_one_unchecked::<f64>(point))
            }
            _ => Prediction::Label(self.label_unchecked(point)),
        })
    }

    /// `Pr[label = 1]` at `point` in the scalar type `P`; 0 or 1 for
    /// deterministic classifiers.
    pub fn probability_of_one<P: Scalar>(&self, point: Point) -> Result<P> {
        self.check_point(point)?;
        Ok(self.probability_of_one_unchecked(point))
    }

    /// Labels for every point of the domain. Deterministic variants only.
    pub fn label_table(&self) -> Result<Vec<Label>> {
        if !self.is_deterministic() {
            return Err(Error::UnsupportedVariant);
        }
        Ok((0..self.domain_size())
            .map(|x| self.label_unchecked(Point(x)))
            .collect())
    }

    /// Round classifiers referenced by a combiner, or `self` for a single.
    pub fn members(&self) -> &[Classifier] {
        match self {
            Classifier::Single { .. } => std::slice::from_ref(self),
            Classifier::Majority(m) | Classifier::UniformAverage(m) => m,
        }
    }
}

/// `Pr_{(x,y)~D}[f(x) != y]`, computed exactly over the atoms. For a
/// randomized combiner each atom contributes its mass times the fraction of
/// members that mislabel it.
pub fn exact_error<P: Scalar>(
    classifier: &Classifier,
    dist: &DiscreteDistribution<P>,
) -> Result<P> {
    if classifier.domain_size() != dist.domain_size() {
        return Err(Error::DomainMismatch {
            expected: classifier.domain_size(),
            found: dist.domain_size(),
        });
    }
    if let Classifier::UniformAverage(_) = classifier {
        let mut total = P::zero();
        for atom in dist.atoms() {
            let p_one: P = classifier.probability_of_one_unchecked(atom.point);
            let wrong = match atom.label {
                Label::One => P::one() - p_one,
                Label::Zero => p_one,
            };
            total = total + atom.mass * wrong;
        }
        return Ok(total);
    }
    let table = classifier.label_table()?;
    Ok(dist
        .atoms()
        .iter()
        .filter(|a| table[a.point.0] != a.label)
        .fold(P::zero(), |acc, a| acc + a.mass))
}

/// Where a sample came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Player(usize),
    Mixture,
}

/// A multiset of labeled examples stored as per-`(point, label)` counts.
/// Iteration yields examples in canonical `(point, label)` order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    domain_size: usize,
    counts: Vec<u64>,
    len: u64,
    provenance: Provenance,
}

impl SampleSet {
    pub fn empty(domain_size: usize, provenance: Provenance) -> Self {
        SampleSet {
            domain_size,
            counts: vec![0; 2 * domain_size],
            len: 0,
            provenance,
        }
    }

    pub fn from_examples<I>(domain_size: usize, provenance: Provenance, examples: I) -> Result<Self>
    where
        I: IntoIterator<Item = LabeledExample>,
    {
        let mut s = Self::empty(domain_size, provenance);
        for e in examples {
            if e.point.0 >= domain_size {
                return Err(Error::PointOutsideDomain {
                    point: e.point.0,
                    domain: domain_size,
                });
            }
            s.add(e.point, e.label, 1);
        }
        Ok(s)
    }

    pub(crate) fn add(&mut self, point: Point, label: Label, n: u64) {
        self.counts[2 * point.0 + label.index()] += n;
        self.len += n;
    }

    /// Adds every example of `other` to `self`.
    pub(crate) fn absorb(&mut self, other: &SampleSet) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.len += other.len;
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn count(&self, point: Point, label: Label) -> u64 {
        self.counts[2 * point.0 + label.index()]
    }

    /// Distinct examples with their multiplicities.
    pub fn counts(&self) -> impl Iterator<Item = (LabeledExample, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| {
                let example = LabeledExample {
                    point: Point(j / 2),
                    label: if j % 2 == 0 { Label::Zero } else { Label::One },
                };
                (example, c)
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = LabeledExample> + '_ {
        self.counts()
            .flat_map(|(e, c)| std::iter::repeat_n(e, c as usize))
    }

    /// Number of examples on which the fixed labeling `table` disagrees.
    pub(crate) fn mistakes_of(&self, table: &[Label]) -> u64 {
        table
            .iter()
            .enumerate()
            .map(|(x, l)| self.counts[2 * x + l.flip().index()])
            .sum()
    }
}

/// Number of examples of `sample` mislabeled by a deterministic classifier.
pub fn mistakes(classifier: &Classifier, sample: &SampleSet) -> Result<u64> {
    if classifier.domain_size() != sample.domain_size() {
        return Err(Error::DomainMismatch {
            expected: classifier.domain_size(),
            found: sample.domain_size(),
        });
    }
    match classifier {
        Classifier::UniformAverage(_) => Err(Error::UnsupportedVariant),
        Classifier::Single { labels, .. } => Ok(sample.mistakes_of(labels)),
        majority => Ok(sample.mistakes_of(&majority.label_table()?)),
    }
}

/// Fraction of `sample` mislabeled by a deterministic classifier.
pub fn empirical_error<P: Scalar>(classifier: &Classifier, sample: &SampleSet) -> Result<P> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let wrong = mistakes(classifier, sample)?;
    Ok(num::count::<P>(wrong) / num::count::<P>(sample.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn table(labels: &[u8]) -> LabelTable {
        labels
            .iter()
            .map(|&l| Label::try_from(l).unwrap())
            .collect()
    }

    fn single(labels: &[u8]) -> Classifier {
        Classifier::single(0, table(labels))
    }

    fn two_point_dist() -> DiscreteDistribution<f64> {
        DiscreteDistribution::new(
            2,
            vec![
                Atom::new(0, Label::One, 0.75),
                Atom::new(1, Label::One, 0.25),
            ],
        )
        .unwrap()
    }

    #[test]
    fn majority_of_three() {
        let m = Classifier::majority(vec![single(&[1]), single(&[1]), single(&[0])]).unwrap();
        assert_eq!(m.evaluate(Point(0)).unwrap(), Prediction::Label(Label::One));
    }

    #[test]
    fn majority_tie_goes_to_zero() {
        let m = Classifier::majority(vec![single(&[1]), single(&[0])]).unwrap();
        assert_eq!(
            m.evaluate(Point(0)).unwrap(),
            Prediction::Label(Label::Zero)
        );
    }

    #[test]
    fn uniform_average_of_two() {
        let a = Classifier::uniform_average(vec![single(&[1]), single(&[0])]).unwrap();
        assert_eq!(
            a.evaluate(Point(0)).unwrap(),
            Prediction::ProbabilityOfOne(0.5)
        );
    }

    #[test]
    fn evaluate_outside_domain() {
        let f = single(&[1, 0]);
        assert!(matches!(
            f.evaluate(Point(2)),
            Err(Error::PointOutsideDomain {
                point: 2,
                domain: 2
            })
        ));
    }

    #[test]
    fn combiners_reject_bad_members() {
        assert!(Classifier::majority(vec![]).is_err());
        assert!(Classifier::uniform_average(vec![]).is_err());
        assert!(matches!(
            Classifier::majority(vec![single(&[1]), single(&[1, 0])]),
            Err(Error::DomainMismatch { .. })
        ));
        let avg = Classifier::uniform_average(vec![single(&[1])]).unwrap();
        assert!(Classifier::majority(vec![avg]).is_err());
    }

    #[test]
    fn exact_error_examples() {
        let d = two_point_dist();
        assert_eq!(exact_error(&single(&[1, 1]), &d).unwrap(), 0.0);
        assert_eq!(exact_error(&single(&[1, 0]), &d).unwrap(), 0.25);
    }

    #[test]
    fn exact_error_of_average_is_mean_of_members() {
        // D: x0 -> 1 (0.6), x1 -> 0 (0.4). g mislabels x1 only.
        let d = DiscreteDistribution::new(
            2,
            vec![
                Atom::new(0, Label::One, 0.6),
                Atom::new(1, Label::Zero, 0.4),
            ],
        )
        .unwrap();
        let f = single(&[1, 0]);
        let g = single(&[1, 1]);
        assert_eq!(exact_error(&f, &d).unwrap(), 0.0);
        assert!((exact_error::<f64>(&g, &d).unwrap() - 0.4).abs() < 1e-15);
        let avg = Classifier::uniform_average(vec![f, g]).unwrap();
        // Direct atom-wise enumeration: only (x1, 0) is mislabeled, by half.
        let by_atoms: f64 = 0.6 * 0.0 + 0.4 * 0.5;
        assert!((exact_error::<f64>(&avg, &d).unwrap() - by_atoms).abs() < 1e-15);
        assert!((by_atoms - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exact_error_domain_mismatch() {
        assert!(matches!(
            exact_error(&single(&[1, 1, 1]), &two_point_dist()),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn rational_exact_error() {
        let d = DiscreteDistribution::new(
            3,
            vec![
                Atom::new(0, Label::One, Rational64::new(1, 3)),
                Atom::new(1, Label::Zero, Rational64::new(1, 3)),
                Atom::new(2, Label::One, Rational64::new(1, 3)),
            ],
        )
        .unwrap();
        let f = single(&[1, 1, 0]);
        assert_eq!(exact_error(&f, &d).unwrap(), Rational64::new(2, 3));
        let avg = Classifier::uniform_average(vec![f, single(&[1, 0, 1])]).unwrap();
        assert_eq!(exact_error(&avg, &d).unwrap(), Rational64::new(1, 3));
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::<f64>::new(2, vec![]).is_err());
        assert!(DiscreteDistribution::new(1, vec![Atom::new(0, Label::One, 0.9)]).is_err());
        assert!(DiscreteDistribution::new(1, vec![Atom::new(1, Label::One, 1.0)]).is_err());
        assert!(DiscreteDistribution::new(
            1,
            vec![Atom::new(0, Label::One, 0.5), Atom::new(0, Label::One, 0.5)]
        )
        .is_err());
        assert!(DiscreteDistribution::new(
            1,
            vec![
                Atom::new(0, Label::One, 1.5),
                Atom::new(0, Label::Zero, -0.5)
            ]
        )
        .is_err());
        // Both labels on one point is label noise, and allowed.
        assert!(DiscreteDistribution::new(
            1,
            vec![
                Atom::new(0, Label::One, 0.5),
                Atom::new(0, Label::Zero, 0.5)
            ]
        )
        .is_ok());
    }

    #[test]
    fn distribution_json_is_validated() {
        let ok: DiscreteDistribution<f64> =
            serde_json::from_str(r#"{"domain_size":1,"atoms":[{"point":0,"label":1,"mass":1.0}]}"#)
                .unwrap();
        assert_eq!(ok.atoms().len(), 1);
        let bad = serde_json::from_str::<DiscreteDistribution<f64>>(
            r#"{"domain_size":1,"atoms":[{"point":0,"label":1,"mass":0.5}]}"#,
        );
        assert!(bad.is_err());
        let bad_label = serde_json::from_str::<DiscreteDistribution<f64>>(
            r#"{"domain_size":1,"atoms":[{"point":0,"label":2,"mass":1.0}]}"#,
        );
        assert!(bad_label.is_err());
    }

    fn sample_with(domain: usize, examples: &[(usize, u8)]) -> SampleSet {
        SampleSet::from_examples(
            domain,
            Provenance::Player(0),
            examples.iter().map(|&(p, l)| LabeledExample {
                point: Point(p),
                label: Label::try_from(l).unwrap(),
            }),
        )
        .unwrap()
    }

    #[test]
    fn empirical_error_counts() {
        let s = sample_with(2, &[(0, 1), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(s.len(), 4);
        let f = single(&[1, 0]);
        assert_eq!(empirical_error::<f64>(&f, &s).unwrap(), 0.25);
        let consistent = sample_with(2, &[(0, 1), (1, 0)]);
        assert_eq!(empirical_error::<f64>(&f, &consistent).unwrap(), 0.0);
    }

    #[test]
    fn empirical_error_large_count() {
        let mut s = SampleSet::empty(1, Provenance::Player(0));
        s.add(Point(0), Label::Zero, 233);
        s.add(Point(0), Label::One, 3098 - 233);
        let f = single(&[1]);
        assert_eq!(
            empirical_error::<Rational64>(&f, &s).unwrap(),
            Rational64::new(233, 3098)
        );
        assert_eq!(empirical_error::<f64>(&f, &s).unwrap(), 233.0 / 3098.0);
    }

    #[test]
    fn empirical_error_errors() {
        let f = single(&[1]);
        let empty = SampleSet::empty(1, Provenance::Mixture);
        assert!(matches!(
            empirical_error::<f64>(&f, &empty),
            Err(Error::EmptySample)
        ));
        let avg = Classifier::uniform_average(vec![f.clone()]).unwrap();
        let s = sample_with(1, &[(0, 1)]);
        assert!(matches!(
            empirical_error::<f64>(&avg, &s),
            Err(Error::UnsupportedVariant)
        ));
    }

    #[test]
    fn sample_iteration_is_canonical() {
        let s = sample_with(2, &[(1, 0), (0, 1), (1, 0)]);
        let order: Vec<_> = s.iter().map(|e| (e.point.0, e.label.index())).collect();
        assert_eq!(order, vec![(0, 1), (1, 0), (1, 0)]);
    }
}
