//! The test's row distribution μ, its uncorrelated version μ′, η-noise and
//! folding.
//!
//! A row is laid out as `(g, a₁..a_d, b₁..b_d)`: `g` is the column-1 entry
//! and the `(aⱼ, bⱼ)` are the d copies in columns 2 and 3.

use num_traits::{One, Zero};
use rand::Rng as _;

use super::GadgetError;
use crate::distributions::{Prob, Sampler, TupleDistribution};
use crate::rng::{self, Rng};
use crate::sign::{negate, Point, Sign};

/// Hard cap on enumerated distribution sizes.
pub const MAX_SUPPORT: usize = 1_000_000;

/// `(a, b, P[a, b | g])` for one value of `g`.
type Conditional = Vec<(Sign, Sign, Prob)>;

/// Exact row distribution: `g` from φ's first marginal, then d independent
/// draws of `(a, b)` from φ conditioned on the first coordinate being `g`.
pub fn row_distribution(phi: &TupleDistribution, d: usize) -> Result<TupleDistribution, GadgetError> {
    if phi.arity() != 3 {
        return Err(GadgetError::InvalidParams(format!(
            "base distribution must be over G³, got arity {}",
            phi.arity()
        )));
    }
    if d == 0 {
        return Err(GadgetError::InvalidParams("d must be positive".into()));
    }
    let mut groups: Vec<(Sign, Prob, Conditional)> = Vec::new();
    for g in Sign::ALL {
        let rows: Vec<(Sign, Sign, Prob)> = phi
            .entries()
            .filter(|(z, _)| z[0] == g)
            .map(|(z, p)| (z[1], z[2], p.clone()))
            .collect();
        let pg: Prob = rows.iter().map(|r| &r.2).sum();
        if pg.is_zero() {
            continue;
        }
        let cond = rows.into_iter().map(|(a, b, p)| (a, b, p / &pg)).collect();
        groups.push((g, pg, cond));
    }

    let mut total = 0usize;
    for (_, _, cond) in &groups {
        let n = u32::try_from(d)
            .ok()
            .and_then(|d| cond.len().checked_pow(d))
            .unwrap_or(usize::MAX);
        total = total.saturating_add(n);
    }
    if total > MAX_SUPPORT {
        return Err(GadgetError::CapExceeded(format!(
            "row distribution would have {total} entries (cap {MAX_SUPPORT})"
        )));
    }

    let mut entries = Vec::with_capacity(total);
    for (g, pg, cond) in &groups {
        let mut choice = vec![0usize; d];
        loop {
            let mut z = Vec::with_capacity(1 + 2 * d);
            z.push(*g);
            z.extend(choice.iter().map(|&c| cond[c].0));
            z.extend(choice.iter().map(|&c| cond[c].1));
            let p = choice.iter().fold(pg.clone(), |acc, &c| acc * &cond[c].2);
            entries.push((z, p));
            if !advance(&mut choice, cond.len()) {
                break;
            }
        }
    }
    TupleDistribution::new(1 + 2 * d, entries).map_err(GadgetError::from)
}

/// Odometer increment; returns false after the last combination.
pub(crate) fn advance(digits: &mut [usize], base: usize) -> bool {
    for digit in digits.iter_mut().rev() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

/// μ′: column 1 replaced by an independent uniform sign.
pub fn uncorrelate(mu_row: &TupleDistribution) -> TupleDistribution {
    let k = mu_row.arity();
    let rest: Vec<usize> = (1..k).collect();
    let uniform = TupleDistribution::new(
        1,
        Sign::ALL.map(|s| (vec![s], Prob::new(1.into(), 2.into()))),
    )
    .expect("uniform over G");
    uniform.product(&mu_row.project(&rest))
}

fn check_eta(eta: f64) -> Result<(), GadgetError> {
    if (0.0..1.0).contains(&eta) {
        Ok(())
    } else {
        Err(GadgetError::InvalidNoise(eta))
    }
}

/// Exact distribution after independent per-coordinate re-randomization
/// with probability `eta` (each coordinate flips with probability η/2).
pub fn noisy_distribution(dist: &TupleDistribution, eta: f64) -> Result<TupleDistribution, GadgetError> {
    check_eta(eta)?;
    if eta == 0.0 {
        return Ok(dist.clone());
    }
    let flip = Prob::from_float(eta).expect("finite") / Prob::from_integer(2.into());
    let keep = Prob::one() - &flip;
    let k = dist.arity();
    let mut current: Vec<(Point, Prob)> = dist.entries().map(|(z, p)| (z.clone(), p.clone())).collect();
    for i in 0..k {
        let mut next = std::collections::BTreeMap::<Point, Prob>::new();
        for (z, p) in &current {
            *next.entry(z.clone()).or_insert_with(Prob::zero) += p * &keep;
            let mut y = z.clone();
            y[i] = -y[i];
            *next.entry(y).or_insert_with(Prob::zero) += p * &flip;
        }
        if next.len() > MAX_SUPPORT {
            return Err(GadgetError::CapExceeded(format!(
                "noisy distribution exceeds {MAX_SUPPORT} entries"
            )));
        }
        current = next.into_iter().collect();
    }
    TupleDistribution::new(k, current).map_err(GadgetError::from)
}

/// Sampler that re-randomizes each coordinate with probability η.
#[derive(Debug, Clone)]
pub struct NoisySampler {
    base: Sampler,
    eta: f64,
}

impl NoisySampler {
    pub fn new(dist: &TupleDistribution, eta: f64) -> Result<Self, GadgetError> {
        check_eta(eta)?;
        Ok(Self {
            base: Sampler::new(dist),
            eta,
        })
    }

    pub fn sample(&self, rng: &mut Rng) -> Point {
        let mut z = self.base.sample(rng);
        if self.eta > 0.0 {
            for s in z.iter_mut() {
                if rng.random_bool(self.eta) {
                    *s = if rng.random::<bool>() { Sign::Minus } else { Sign::Plus };
                }
            }
        }
        z
    }
}

/// Seeded stream of noisy samples.
#[derive(Debug, Clone)]
pub struct NoisyStream {
    sampler: NoisySampler,
    rng: Rng,
}

impl Iterator for NoisyStream {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        Some(self.sampler.sample(&mut self.rng))
    }
}

pub fn apply_noise(dist: &TupleDistribution, eta: f64, seed: u64) -> Result<NoisyStream, GadgetError> {
    Ok(NoisyStream {
        sampler: NoisySampler::new(dist, eta)?,
        rng: rng::seeded(seed),
    })
}

/// A point of G^m modulo x ~ −x, with the sign relating it to the
/// representative.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FoldedPoint {
    pub rep: Point,
    pub sign: Sign,
}

/// Representative is whichever of `x`, `−x` starts with +1.
pub fn fold(point: &[Sign]) -> FoldedPoint {
    match point.first() {
        Some(Sign::Minus) => FoldedPoint {
            rep: negate(point),
            sign: Sign::Minus,
        },
        _ => FoldedPoint {
            rep: point.to_vec(),
            sign: Sign::Plus,
        },
    }
}
