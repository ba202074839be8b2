//! Exhaustive oracles: exact optimum by enumeration, Fourier identity
//! checks, and best-of-random sampling.

use rayon::prelude::*;
use thiserror::Error;

use crate::fourier::{predicate_fourier, Coeff, MultilinearPoly};
use crate::instances::{evaluate, Assignment, Instance, InstanceError, Predicate3};
use crate::rng;
use crate::sign::{point_from_code, Sign};

/// Largest variable count `brute_force` accepts (2^26 ≈ 6.7·10⁷ states).
pub const MAX_VARS: usize = 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance has {0} variables; brute force is capped at {MAX_VARS}")]
    TooManyVars(usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimum: f64,
    /// Lexicographically smallest optimal assignment (+1 before −1).
    pub assignment: Assignment,
    /// Number of optimal assignments.
    pub count: u64,
}

/// Constraint in flat form: global variable positions, sign bits, mask.
#[derive(Clone, Copy)]
struct Flat {
    pos: [usize; 3],
    sign: [u32; 3],
    mask: u8,
}

trait Acc: Copy + PartialOrd + Send + Sync {
    const ZERO: Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
}

impl Acc for i128 {
    const ZERO: Self = 0;
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
}

impl Acc for f64 {
    const ZERO: Self = 0.0;
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
}

/// Exact integer images of the weights on a common power-of-two scale, if
/// they fit comfortably in i128.
fn integer_weights(weights: &[f64]) -> Option<Vec<i128>> {
    let parts: Vec<(u64, i32)> = weights.iter().map(|&w| decompose(w)).collect();
    let e_min = parts.iter().filter(|p| p.0 != 0).map(|p| p.1).min()?;
    let mut out = Vec::with_capacity(weights.len());
    let mut total: i128 = 0;
    for (m, e) in parts {
        let shift = u32::try_from(e - e_min).ok()?;
        if m != 0 && shift > 60 {
            return None;
        }
        let v = i128::from(m).checked_shl(shift)?;
        total = total.checked_add(v)?;
        out.push(v);
    }
    (total < 1i128 << 120).then_some(out)
}

/// w = m · 2^e with integer m ≥ 0.
fn decompose(w: f64) -> (u64, i32) {
    if w == 0.0 {
        return (0, 0);
    }
    let bits = w.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

struct Search<'a, W> {
    n: usize,
    flats: &'a [Flat],
    weights: &'a [W],
    touching: &'a [Vec<usize>],
}

impl<W: Acc> Search<'_, W> {
    #[inline]
    fn satisfied(&self, f: &Flat, state: u64) -> bool {
        let bit = |p: usize| ((state >> (self.n - 1 - p)) & 1) as u32;
        let idx = ((bit(f.pos[0]) ^ f.sign[0]) << 2)
            | ((bit(f.pos[1]) ^ f.sign[1]) << 1)
            | (bit(f.pos[2]) ^ f.sign[2]);
        (f.mask >> idx) & 1 == 1
    }

    /// Gray-code walk over the low `low` bits with the high bits fixed to
    /// `prefix`. Returns (best value, smallest optimal state, count).
    fn run(&self, prefix: u64, low: usize) -> (W, u64, u64) {
        let mut state = prefix << low;
        let mut sat: Vec<bool> = self.flats.iter().map(|f| self.satisfied(f, state)).collect();
        let mut value = W::ZERO;
        for (s, &w) in sat.iter().zip(self.weights) {
            if *s {
                value = value.add(w);
            }
        }
        let (mut best, mut best_state, mut count) = (value, state, 1u64);
        for k in 1..1u64 << low {
            let bit = k.trailing_zeros() as usize;
            state ^= 1 << bit;
            let var = self.n - 1 - bit;
            for &c in &self.touching[var] {
                let now = self.satisfied(&self.flats[c], state);
                if now != sat[c] {
                    value = if now {
                        value.add(self.weights[c])
                    } else {
                        value.sub(self.weights[c])
                    };
                    sat[c] = now;
                }
            }
            if value > best {
                best = value;
                best_state = state;
                count = 1;
            } else if value == best {
                count += 1;
                best_state = best_state.min(state);
            }
        }
        (best, best_state, count)
    }

    fn solve(&self) -> (u64, u64) {
        let high = self.n.min(6);
        let low = self.n - high;
        let parts: Vec<(W, u64, u64)> = (0..1u64 << high)
            .into_par_iter()
            .map(|prefix| self.run(prefix, low))
            .collect();
        let mut best = parts[0];
        for p in &parts[1..] {
            if p.0 > best.0 {
                best = *p;
            } else if p.0 == best.0 {
                best.1 = best.1.min(p.1);
                best.2 += p.2;
            }
        }
        (best.1, best.2)
    }
}

/// Exact optimum by enumerating all 2^(M+N₂+N₃) assignments.
pub fn brute_force(inst: &Instance) -> Result<OracleResult, OracleError> {
    let sizes = inst.sizes();
    let n = inst.num_vars();
    if n > MAX_VARS {
        return Err(OracleError::TooManyVars(n));
    }
    let offsets = [0, sizes[0], sizes[0] + sizes[1]];
    let flats: Vec<Flat> = inst
        .constraints()
        .iter()
        .map(|c| Flat {
            pos: [0, 1, 2].map(|b| offsets[b] + c.lits[b].index - 1),
            sign: [0, 1, 2].map(|b| c.lits[b].sign.bit()),
            mask: c.pred.mask(),
        })
        .collect();
    let mut touching = vec![Vec::new(); n];
    for (ci, f) in flats.iter().enumerate() {
        for p in f.pos {
            touching[p].push(ci);
        }
    }
    let raw: Vec<f64> = inst.constraints().iter().map(|c| c.weight).collect();
    let (state, count) = match integer_weights(&raw) {
        Some(weights) => Search {
            n,
            flats: &flats,
            weights: &weights,
            touching: &touching,
        }
        .solve(),
        None => Search {
            n,
            flats: &flats,
            weights: &raw,
            touching: &touching,
        }
        .solve(),
    };
    let assignment = Assignment::from_flat(sizes, &point_from_code(state, n));
    let optimum = evaluate(inst, &assignment)?;
    Ok(OracleResult {
        optimum,
        assignment,
        count,
    })
}

/// True iff `poly` equals the predicate's indicator at all 8 points of G³
/// (variables `x1_1`, `x2_1`, `x3_1`).
pub fn poly_matches_predicate(pred: Predicate3, poly: &MultilinearPoly) -> bool {
    (0..8).all(|i| {
        let z = Predicate3::tuple_at(i);
        let want = if pred.accepts(z) { 1 } else { 0 };
        match poly.eval_exact_with(|v| {
            v.block
                .position()
                .filter(|_| v.index == 1)
                .map(|b| z[b])
        }) {
            Ok(value) => value == Coeff::from_integer(want.into()),
            Err(_) => false,
        }
    })
}

/// Checks the Walsh expansion of `pred` against its truth table.
pub fn exhaustive_poly_check(pred: Predicate3) -> bool {
    poly_matches_predicate(pred, &predicate_fourier(pred))
}

/// Best [`evaluate`] value over `trials` uniform assignments. Uses the same
/// stream as `random_baseline` for the same seed.
pub fn best_random(inst: &Instance, trials: usize, seed: u64) -> Result<f64, InstanceError> {
    if trials == 0 {
        return Err(InstanceError::NoTrials);
    }
    let mut rng = rng::seeded(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a = Assignment::uniform(inst.sizes(), &mut rng);
        best = best.max(evaluate(inst, &a)?);
    }
    Ok(best)
}

/// All-(+1) assignment, handy as a reference point.
pub fn all_plus(inst: &Instance) -> Assignment {
    Assignment::constant(inst.sizes(), Sign::Plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{ratio, Monomial};
    use crate::instances::{random_baseline, Constraint, Literal};
    use crate::sign::point_code;
    use rand::Rng as _;

    fn random_instance(seed: u64, sizes: [usize; 3], m: usize, weighted: bool) -> Instance {
        let mut r = rng::seeded(seed);
        let cs = (0..m)
            .map(|_| {
                let lits = [0, 1, 2].map(|b| {
                    Literal::new(
                        r.random_range(1..=sizes[b]),
                        if r.random() { Sign::Minus } else { Sign::Plus },
                    )
                });
                let w = if weighted { r.random_range(0.1..2.0) } else { 1.0 };
                Constraint::new(lits, w, Predicate3::XOR_EVEN)
            })
            .collect();
        Instance::new(sizes, cs).unwrap()
    }

    fn naive(inst: &Instance) -> (f64, u64, u64) {
        let n = inst.num_vars();
        let mut best = f64::NEG_INFINITY;
        let mut state = 0;
        let mut count = 0;
        for c in 0..1u64 << n {
            let a = Assignment::from_flat(inst.sizes(), &point_from_code(c, n));
            let v = evaluate(inst, &a).unwrap();
            if v > best + 1e-12 {
                best = v;
                state = c;
                count = 1;
            } else if (v - best).abs() <= 1e-12 {
                count += 1;
            }
        }
        (best, state, count)
    }

    #[test]
    fn trivial_optima() {
        let lits = [Literal::pos(1); 3];
        let one = Instance::new([1, 1, 1], vec![Constraint::xor(lits)]).unwrap();
        let res = brute_force(&one).unwrap();
        assert_eq!(res.optimum, 1.0);
        assert_eq!(res.count, 4);
        assert_eq!(res.assignment, all_plus(&one));

        let pair = Instance::new(
            [1, 1, 1],
            vec![Constraint::xor(lits), Constraint::new(lits, 1.0, Predicate3::XOR_ODD)],
        )
        .unwrap();
        let res = brute_force(&pair).unwrap();
        assert_eq!(res.optimum, 0.5);
        assert_eq!(res.count, 8);
    }

    #[test]
    fn matches_naive_enumeration() {
        for seed in 0..12 {
            let inst = random_instance(seed, [3, 3, 4], 14, seed % 2 == 0);
            let res = brute_force(&inst).unwrap();
            let (best, state, count) = naive(&inst);
            assert!((res.optimum - best).abs() < 1e-12);
            assert_eq!(point_code(&res.assignment.to_flat()), state);
            assert_eq!(res.count, count);
        }
    }

    #[test]
    fn fallback_float_weights_agree() {
        let mut inst = random_instance(3, [2, 3, 3], 10, true);
        let mut cs = inst.constraints().to_vec();
        cs[0].weight = 1e-30;
        cs[1].weight = 1e30;
        inst = Instance::new(inst.sizes(), cs).unwrap();
        let weights: Vec<f64> = inst.constraints().iter().map(|c| c.weight).collect();
        assert!(integer_weights(&weights).is_none());
        let res = brute_force(&inst).unwrap();
        assert!((res.optimum - naive(&inst).0).abs() < 1e-12);
    }

    #[test]
    fn optimum_dominates_random_and_samples() {
        let inst = random_instance(77, [4, 4, 4], 24, false);
        let res = brute_force(&inst).unwrap();
        assert!(res.optimum >= random_baseline(&inst, 2000, 1).unwrap());
        assert!(best_random(&inst, 10_000, 2).unwrap() <= res.optimum);
        let mut r = rng::seeded(9);
        for _ in 0..1000 {
            let a = Assignment::uniform(inst.sizes(), &mut r);
            assert!(evaluate(&inst, &a).unwrap() <= res.optimum);
        }
    }

    #[test]
    fn best_random_prefix_behaviour() {
        let inst = random_instance(5, [4, 4, 4], 24, false);
        let mut r = rng::seeded(31);
        let first = evaluate(&inst, &Assignment::uniform(inst.sizes(), &mut r)).unwrap();
        assert_eq!(best_random(&inst, 1, 31).unwrap(), first);
        let mut last = 0.0;
        for t in [1, 2, 5, 20, 100] {
            let v = best_random(&inst, t, 31).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn cap_is_enforced() {
        let inst = random_instance(1, [9, 9, 9], 5, false);
        assert_eq!(brute_force(&inst), Err(OracleError::TooManyVars(27)));
    }

    #[test]
    fn poly_checks() {
        assert!(exhaustive_poly_check(Predicate3::XOR_EVEN));
        assert!((0..=255u8).all(|m| exhaustive_poly_check(Predicate3(m))));
        let mut p = predicate_fourier(Predicate3::XOR_EVEN);
        p.add_term(Monomial::one(), ratio(1, 8));
        assert!(!poly_matches_predicate(Predicate3::XOR_EVEN, &p));
    }

    #[test]
    fn decomposition_is_exact() {
        for w in [1.0, 0.25, 0.1, 3.75, 1e-300, f64::MIN_POSITIVE / 4.0] {
            let (m, e) = decompose(w);
            assert_eq!(m as f64 * 2f64.powi(e), w);
        }
    }
}
