//! Distributions over G^k: grounds, pairwise independence, disguised
//! mixtures, and sampling.
//!
//! Probabilities are exact rationals. Uniform distributions over sets whose
//! size is not a power of two (for instance G₁, of size 3) stay exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use thiserror::Error;

use crate::rng::Rng;
use crate::sign::{all_points, parse_point, point_string, Point, Sign};

pub type Prob = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("tuple {tuple} has length {len}, expected {k}")]
    WrongLength { tuple: String, len: usize, k: usize },
    #[error("tuple {0} has negative probability")]
    NegativeProbability(String),
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(String),
    #[error("cannot build a uniform distribution over an empty set")]
    EmptySupport,
    #[error("components share tuple {0}; grounds must be disjoint")]
    OverlappingGrounds(String),
    #[error("mixture weights sum to {0}, not 1")]
    WeightsNotNormalized(String),
    #[error("mixture weight {0} is not positive")]
    NonPositiveWeight(String),
    #[error("mixture has no components")]
    NoComponents,
    #[error("components have arities {0} and {1}")]
    ArityMismatch(usize, usize),
    #[error("bias {0} is outside (0, 1)")]
    InvalidBias(f64),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// A probability vector over G^k. Only tuples with positive mass are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleDistribution {
    k: usize,
    probs: BTreeMap<Point, Prob>,
}

impl TupleDistribution {
    /// Validates and builds a distribution; repeated tuples are summed and
    /// zero entries dropped.
    pub fn new<I>(k: usize, entries: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (Point, Prob)>,
    {
        let mut probs: BTreeMap<Point, Prob> = BTreeMap::new();
        for (z, p) in entries {
            if z.len() != k {
                return Err(DistError::WrongLength {
                    tuple: point_string(&z),
                    len: z.len(),
                    k,
                });
            }
            if p.is_negative() {
                return Err(DistError::NegativeProbability(point_string(&z)));
            }
            *probs.entry(z).or_insert_with(Prob::zero) += p;
        }
        probs.retain(|_, p| !p.is_zero());
        let total: Prob = probs.values().sum();
        if !total.is_one() {
            return Err(DistError::NotNormalized(total.to_string()));
        }
        Ok(Self { k, probs })
    }

    pub fn point_mass(z: Point) -> Self {
        let k = z.len();
        Self {
            k,
            probs: BTreeMap::from([(z, Prob::one())]),
        }
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn prob(&self, z: &[Sign]) -> Prob {
        self.probs.get(z).cloned().unwrap_or_else(Prob::zero)
    }

    /// Support tuples with their probabilities, in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (&Point, &Prob)> {
        self.probs.iter()
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    /// P[z_i = +1] for 0-based coordinate `i`.
    pub fn marginal_plus(&self, i: usize) -> Prob {
        self.probs
            .iter()
            .filter(|(z, _)| z[i] == Sign::Plus)
            .map(|(_, p)| p)
            .sum()
    }

    /// P[z_i = +1, z_j = +1] for 0-based coordinates.
    pub fn pair_marginal_plus(&self, i: usize, j: usize) -> Prob {
        self.probs
            .iter()
            .filter(|(z, _)| z[i] == Sign::Plus && z[j] == Sign::Plus)
            .map(|(_, p)| p)
            .sum()
    }

    /// Marginal on the given coordinates, in the given order.
    pub fn project(&self, coords: &[usize]) -> TupleDistribution {
        let mut probs: BTreeMap<Point, Prob> = BTreeMap::new();
        for (z, p) in &self.probs {
            let y: Point = coords.iter().map(|&c| z[c]).collect();
            *probs.entry(y).or_insert_with(Prob::zero) += p;
        }
        TupleDistribution {
            k: coords.len(),
            probs,
        }
    }

    /// Independent product: tuples are concatenated.
    pub fn product(&self, other: &TupleDistribution) -> TupleDistribution {
        let mut probs = BTreeMap::new();
        for (a, p) in &self.probs {
            for (b, q) in &other.probs {
                let mut z = a.clone();
                z.extend_from_slice(b);
                probs.insert(z, p * q);
            }
        }
        TupleDistribution {
            k: self.k + other.k,
            probs,
        }
    }

    /// Dump as `<±±±> <num>/<den>` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (z, p) in &self.probs {
            let _ = writeln!(out, "{} {}/{}", point_string(z), p.numer(), p.denom());
        }
        out
    }

    /// Parses the dump format. Blank lines and lines starting with `c` or `#`
    /// are ignored.
    pub fn parse_dump(text: &str) -> Result<Self, DistError> {
        let mut entries = Vec::new();
        let mut k = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('c') || body.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| DistError::Parse {
                line,
                reason: reason.into(),
            };
            let mut fields = body.split_whitespace();
            let (Some(t), Some(p), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(bad("expected `<tuple> <num>/<den>`"));
            };
            let z = parse_point(t).ok_or_else(|| bad("tuple must consist of + and -"))?;
            if *k.get_or_insert(z.len()) != z.len() {
                return Err(bad("tuples have different lengths"));
            }
            entries.push((z, parse_ratio(p).ok_or_else(|| bad("bad probability"))?));
        }
        Self::new(k.unwrap_or(0), entries)
    }
}

/// Parses `num/den` or an integer.
pub fn parse_ratio(text: &str) -> Option<Prob> {
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n: BigInt = n.trim().parse().ok()?;
    let d: BigInt = d.trim().parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

pub fn prob(num: i64, den: i64) -> Prob {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The ground: tuples with positive probability.
pub fn ground(d: &TupleDistribution) -> Vec<Point> {
    d.probs.keys().cloned().collect()
}

/// A failing condition of the pairwise-independence check. Coordinates are
/// 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Single { coord: usize, observed: Prob },
    Pair { i: usize, j: usize, observed: Prob },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseVerdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

/// Checks P[zᵢ = 1] = γ for every coordinate and P[zᵢ = 1, zⱼ = 1] = γ² for
/// every pair, each within `tol`. The comparison is exact in rational
/// arithmetic, so `tol = 0` demands equality.
pub fn check_pairwise_independent(
    d: &TupleDistribution,
    gamma: f64,
    tol: f64,
) -> Result<PairwiseVerdict, DistError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(DistError::InvalidBias(gamma));
    }
    let gamma = BigRational::from_float(gamma).expect("finite");
    let tol = BigRational::from_float(tol.max(0.0)).expect("finite tolerance");
    let gamma_sq = &gamma * &gamma;
    let within = |observed: &Prob, want: &Prob| (observed - want).abs() <= tol;

    for i in 0..d.k {
        let observed = d.marginal_plus(i);
        if !within(&observed, &gamma) {
            return Ok(PairwiseVerdict {
                holds: false,
                witness: Some(Witness::Single {
                    coord: i + 1,
                    observed,
                }),
            });
        }
    }
    for i in 0..d.k {
        for j in i + 1..d.k {
            let observed = d.pair_marginal_plus(i, j);
            if !within(&observed, &gamma_sq) {
                return Ok(PairwiseVerdict {
                    holds: false,
                    witness: Some(Witness::Pair {
                        i: i + 1,
                        j: j + 1,
                        observed,
                    }),
                });
            }
        }
    }
    Ok(PairwiseVerdict {
        holds: true,
        witness: None,
    })
}

/// Weighted components with disjoint grounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisguiseSpec {
    pub components: Vec<(Prob, TupleDistribution)>,
}

impl DisguiseSpec {
    pub fn new(components: Vec<(Prob, TupleDistribution)>) -> Self {
        Self { components }
    }
}

/// φ(z) = Σₗ ψₗ·φₗ(z) for components with pairwise disjoint grounds.
pub fn disguise(spec: &DisguiseSpec) -> Result<TupleDistribution, DistError> {
    let first = spec.components.first().ok_or(DistError::NoComponents)?;
    let k = first.1.k;
    let mut total_weight = Prob::zero();
    let mut owner: BTreeMap<&Point, usize> = BTreeMap::new();
    let mut probs: BTreeMap<Point, Prob> = BTreeMap::new();
    for (l, (w, phi)) in spec.components.iter().enumerate() {
        if !w.is_positive() {
            return Err(DistError::NonPositiveWeight(w.to_string()));
        }
        if phi.k != k {
            return Err(DistError::ArityMismatch(k, phi.k));
        }
        total_weight += w;
        for (z, p) in &phi.probs {
            if owner.insert(z, l).is_some() {
                return Err(DistError::OverlappingGrounds(point_string(z)));
            }
            probs.insert(z.clone(), w * p);
        }
    }
    if !total_weight.is_one() {
        return Err(DistError::WeightsNotNormalized(total_weight.to_string()));
    }
    Ok(TupleDistribution { k, probs })
}

/// Uniform distribution over a nonempty set of equal-length tuples.
pub fn uniform_over(set: &[Point]) -> Result<TupleDistribution, DistError> {
    let first = set.first().ok_or(DistError::EmptySupport)?;
    let mut distinct = set.to_vec();
    distinct.sort();
    distinct.dedup();
    let p = prob(1, distinct.len() as i64);
    TupleDistribution::new(first.len(), distinct.into_iter().map(|z| (z, p.clone())))
}

/// G_m: the triples in G³ with exactly `m` coordinates equal to +1.
pub fn g_m(m: usize) -> Vec<Point> {
    all_points(3)
        .filter(|z| z.iter().filter(|&&s| s == Sign::Plus).count() == m)
        .collect()
}

/// C = G₃ ∪ G₁, the triples with product +1.
pub fn xor_support() -> Vec<Point> {
    let mut c = g_m(3);
    c.extend(g_m(1));
    c.sort();
    c
}

/// Draws tuples from a fixed distribution.
#[derive(Debug, Clone)]
pub struct Sampler {
    points: Vec<Point>,
    index: WeightedIndex<f64>,
}

impl Sampler {
    pub fn new(d: &TupleDistribution) -> Self {
        let points: Vec<Point> = d.probs.keys().cloned().collect();
        let weights: Vec<f64> = d
            .probs
            .values()
            .map(|p| p.to_f64().expect("probability in range"))
            .collect();
        let index = WeightedIndex::new(weights).expect("a distribution has positive total mass");
        Self { points, index }
    }

    pub fn sample(&self, rng: &mut Rng) -> Point {
        self.points[self.index.sample(rng)].clone()
    }

    pub fn sample_ref(&self, rng: &mut Rng) -> &Point {
        &self.points[self.index.sample(rng)]
    }
}

/// One draw from `d`. Build a [`Sampler`] when drawing repeatedly.
pub fn sample(d: &TupleDistribution, rng: &mut Rng) -> Point {
    Sampler::new(d).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn pt(s: &str) -> Point {
        parse_point(s).unwrap()
    }

    #[test]
    fn grounds() {
        let mass = TupleDistribution::point_mass(pt("+++"));
        assert_eq!(ground(&mass), vec![pt("+++")]);
        let c = uniform_over(&xor_support()).unwrap();
        assert_eq!(ground(&c), vec![pt("+++"), pt("+--"), pt("-+-"), pt("--+")]);
        let with_zero = TupleDistribution::new(
            3,
            [(pt("+++"), prob(1, 1)), (pt("---"), prob(0, 1))],
        )
        .unwrap();
        assert_eq!(ground(&with_zero), vec![pt("+++")]);
    }

    #[test]
    fn pairwise_checks() {
        let c = uniform_over(&xor_support()).unwrap();
        assert!(check_pairwise_independent(&c, 0.5, 0.0).unwrap().holds);
        let full = uniform_over(&all_points(3).collect::<Vec<_>>()).unwrap();
        assert!(check_pairwise_independent(&full, 0.5, 0.0).unwrap().holds);
        let mass = TupleDistribution::point_mass(pt("+++"));
        let v = check_pairwise_independent(&mass, 0.5, 0.0).unwrap();
        assert!(!v.holds);
        assert_eq!(
            v.witness,
            Some(Witness::Single {
                coord: 1,
                observed: prob(1, 1)
            })
        );
        assert_eq!(
            check_pairwise_independent(&c, 1.0, 0.0),
            Err(DistError::InvalidBias(1.0))
        );
    }

    #[test]
    fn pair_witness() {
        // z₁ = z₂ always, z₃ free: singles are ½ but P[z₁ = z₂ = 1] = ½.
        let d = uniform_over(&[pt("+++"), pt("++-"), pt("--+"), pt("---")]).unwrap();
        let v = check_pairwise_independent(&d, 0.5, 0.0).unwrap();
        assert_eq!(
            v.witness,
            Some(Witness::Pair {
                i: 1,
                j: 2,
                observed: prob(1, 2)
            })
        );
    }

    #[test]
    fn disguise_orders() {
        let g3 = uniform_over(&g_m(3)).unwrap();
        let g1 = uniform_over(&g_m(1)).unwrap();
        let working = disguise(&DisguiseSpec::new(vec![
            (prob(1, 4), g3.clone()),
            (prob(3, 4), g1.clone()),
        ]))
        .unwrap();
        assert_eq!(working, uniform_over(&xor_support()).unwrap());
        let literal = disguise(&DisguiseSpec::new(vec![(prob(3, 4), g3), (prob(1, 4), g1)])).unwrap();
        assert_eq!(literal.marginal_plus(0), prob(5, 6));
        assert!(!check_pairwise_independent(&literal, 0.5, 0.0).unwrap().holds);
    }

    #[test]
    fn disguise_errors() {
        let a = TupleDistribution::point_mass(pt("+++"));
        let b = uniform_over(&[pt("+++"), pt("---")]).unwrap();
        assert_eq!(
            disguise(&DisguiseSpec::new(vec![(prob(1, 2), a.clone()), (prob(1, 2), b)])),
            Err(DistError::OverlappingGrounds("+++".into()))
        );
        assert!(matches!(
            disguise(&DisguiseSpec::new(vec![(prob(1, 2), a.clone())])),
            Err(DistError::WeightsNotNormalized(_))
        ));
        assert_eq!(disguise(&DisguiseSpec::new(vec![(prob(1, 1), a.clone())])), Ok(a));
        assert_eq!(disguise(&DisguiseSpec::new(vec![])), Err(DistError::NoComponents));
    }

    #[test]
    fn uniform_sets() {
        assert_eq!(
            uniform_over(&[pt("+++")]).unwrap(),
            TupleDistribution::point_mass(pt("+++"))
        );
        let g1 = uniform_over(&g_m(1)).unwrap();
        assert_eq!(g1.support_size(), 3);
        assert!(g1.entries().all(|(_, p)| *p == prob(1, 3)));
        assert_eq!(uniform_over(&[]), Err(DistError::EmptySupport));
    }

    #[test]
    fn validation() {
        assert!(matches!(
            TupleDistribution::new(3, [(pt("++"), prob(1, 1))]),
            Err(DistError::WrongLength { .. })
        ));
        assert!(matches!(
            TupleDistribution::new(1, [(pt("+"), prob(3, 2)), (pt("-"), prob(-1, 2))]),
            Err(DistError::NegativeProbability(_))
        ));
        assert!(matches!(
            TupleDistribution::new(1, [(pt("+"), prob(1, 2))]),
            Err(DistError::NotNormalized(_))
        ));
    }

    #[test]
    fn dump_round_trip() {
        let c = uniform_over(&xor_support()).unwrap();
        let text = c.dump();
        assert_eq!(text, "+++ 1/4\n+-- 1/4\n-+- 1/4\n--+ 1/4\n");
        assert_eq!(TupleDistribution::parse_dump(&text).unwrap(), c);
        assert!(matches!(
            TupleDistribution::parse_dump("+++ 1/2\n++ 1/2\n"),
            Err(DistError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn point_mass_sampling_is_constant() {
        let s = Sampler::new(&TupleDistribution::point_mass(pt("+-+")));
        let mut r = rng::seeded(1);
        for _ in 0..100 {
            assert_eq!(s.sample(&mut r), pt("+-+"));
        }
    }

    #[test]
    fn sampling_frequencies_and_pair_marginals() {
        let c = uniform_over(&xor_support()).unwrap();
        let s = Sampler::new(&c);
        let mut r = rng::seeded(99);
        let n = 100_000;
        let mut counts: BTreeMap<Point, usize> = BTreeMap::new();
        let mut pair = [0usize; 3];
        for _ in 0..n {
            let z = s.sample(&mut r);
            for (slot, (i, j)) in pair.iter_mut().zip([(0, 1), (0, 2), (1, 2)]) {
                if z[i] == Sign::Plus && z[j] == Sign::Plus {
                    *slot += 1;
                }
            }
            *counts.entry(z).or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        for &cnt in counts.values() {
            assert!((cnt as f64 / n as f64 - 0.25).abs() < 0.01);
        }
        for cnt in pair {
            assert!((cnt as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }
}
