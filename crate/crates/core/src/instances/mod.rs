//! Tripartite weighted Max-C instances over G = {+1, −1}.
//!
//! Variables live in three blocks of sizes `(M, N₂, N₃)`. Every constraint
//! touches exactly one variable per block through a signed literal and
//! accepts the triples allowed by its [`Predicate3`]. Literal signs carry
//! folding and negation; the instance has no other notion of either.

mod format;

pub use format::{parse, serialize, serialize_with_comments};

use std::cmp::Ordering;
use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::sign::Sign;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("missing `p mx3` header")]
    MissingHeader,
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: literal {literal} out of range for block {block} of size {size}")]
    LiteralOutOfRange {
        line: usize,
        block: usize,
        literal: i64,
        size: usize,
    },
    #[error("line {line}: negative weight {weight}")]
    NegativeWeight { line: usize, weight: f64 },
    #[error("line {line}: unknown predicate id {id}")]
    UnknownPredicate { line: usize, id: u32 },
    #[error("line {line}: predicate id {id} defined twice")]
    DuplicatePredicate { line: usize, id: u32 },
    #[error("header declares {declared} constraints but {found} were given")]
    ConstraintCount { declared: usize, found: usize },
    #[error("constraint {constraint}: index {index} out of range for block {block} of size {size}")]
    IndexOutOfRange {
        constraint: usize,
        block: usize,
        index: usize,
        size: usize,
    },
    #[error("constraint {constraint}: weight {weight} is negative or not finite")]
    InvalidWeight { constraint: usize, weight: f64 },
    #[error("W must be positive (total weight is {0})")]
    NonPositiveTotalWeight(f64),
    #[error("assignment block {block} has length {found}, expected {expected}")]
    DimensionMismatch {
        block: usize,
        expected: usize,
        found: usize,
    },
    #[error("trials must be at least 1")]
    NoTrials,
}

/// One side of a constraint: a 1-based variable index within a block and a sign.
///
/// The block is implied by the literal's position in [`Constraint::lits`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub index: usize,
    pub sign: Sign,
}

impl Literal {
    pub fn new(index: usize, sign: Sign) -> Self {
        Self { index, sign }
    }

    pub fn pos(index: usize) -> Self {
        Self::new(index, Sign::Plus)
    }

    pub fn neg(index: usize) -> Self {
        Self::new(index, Sign::Minus)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Plus => write!(f, "{}", self.index),
            Sign::Minus => write!(f, "-{}", self.index),
        }
    }
}

/// A set of accepted triples in G³ packed into an 8-bit mask.
///
/// Triple `(z₁, z₂, z₃)` maps to the 3-bit number `b₁b₂b₃` with +1 ↦ 0 and
/// −1 ↦ 1; bit `b₁b₂b₃` of the mask is set iff the triple is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Predicate3(pub u8);

impl Predicate3 {
    /// C = G₃ ∪ G₁: the triples with z₁z₂z₃ = +1.
    pub const XOR_EVEN: Predicate3 = Predicate3(0b0110_1001);
    /// The complement of C: triples with z₁z₂z₃ = −1.
    pub const XOR_ODD: Predicate3 = Predicate3(0b1001_0110);
    pub const ALL: Predicate3 = Predicate3(0xff);

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn tuple_index(z: [Sign; 3]) -> u32 {
        (z[0].bit() << 2) | (z[1].bit() << 1) | z[2].bit()
    }

    pub fn tuple_at(index: u32) -> [Sign; 3] {
        [
            Sign::from_bit(index >> 2),
            Sign::from_bit(index >> 1),
            Sign::from_bit(index),
        ]
    }

    pub fn accepts(self, z: [Sign; 3]) -> bool {
        self.accepts_index(Self::tuple_index(z))
    }

    #[inline]
    pub fn accepts_index(self, index: u32) -> bool {
        (self.0 >> index) & 1 == 1
    }

    pub fn accepted(self) -> impl Iterator<Item = [Sign; 3]> {
        (0..8).filter(move |&i| self.accepts_index(i)).map(Self::tuple_at)
    }

    /// Predicate accepting exactly the given triples.
    pub fn from_tuples<I: IntoIterator<Item = [Sign; 3]>>(tuples: I) -> Self {
        Predicate3(
            tuples
                .into_iter()
                .fold(0u8, |m, z| m | (1 << Self::tuple_index(z))),
        )
    }

    pub fn density(self) -> f64 {
        f64::from(self.0.count_ones()) / 8.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub lits: [Literal; 3],
    pub weight: f64,
    pub pred: Predicate3,
}

impl Constraint {
    pub fn new(lits: [Literal; 3], weight: f64, pred: Predicate3) -> Self {
        Self { lits, weight, pred }
    }

    /// Unit-weight C-constraint (product of the three literals must be +1).
    pub fn xor(lits: [Literal; 3]) -> Self {
        Self::new(lits, 1.0, Predicate3::XOR_EVEN)
    }

    #[inline]
    pub fn is_satisfied(&self, a: &Assignment) -> bool {
        let z = [0, 1, 2].map(|b| self.lits[b].sign * a.blocks[b][self.lits[b].index - 1]);
        self.pred.accepts(z)
    }

    /// Canonical ordering key: indices, then predicate mask, then signs, then weight.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        let key = |c: &Self| {
            (
                c.lits[0].index,
                c.lits[1].index,
                c.lits[2].index,
                c.pred.0,
                c.lits[0].sign,
                c.lits[1].sign,
                c.lits[2].sign,
            )
        };
        key(self)
            .cmp(&key(other))
            .then_with(|| self.weight.total_cmp(&other.weight))
    }
}

/// A validated instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    sizes: [usize; 3],
    constraints: Vec<Constraint>,
    total_weight: f64,
}

impl Instance {
    pub fn new(sizes: [usize; 3], constraints: Vec<Constraint>) -> Result<Self, InstanceError> {
        for (ci, c) in constraints.iter().enumerate() {
            for (b, lit) in c.lits.iter().enumerate() {
                if lit.index == 0 || lit.index > sizes[b] {
                    return Err(InstanceError::IndexOutOfRange {
                        constraint: ci,
                        block: b + 1,
                        index: lit.index,
                        size: sizes[b],
                    });
                }
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(InstanceError::InvalidWeight {
                    constraint: ci,
                    weight: c.weight,
                });
            }
        }
        let total_weight = total_weight(&constraints);
        if !(total_weight > 0.0 && total_weight.is_finite()) {
            return Err(InstanceError::NonPositiveTotalWeight(total_weight));
        }
        Ok(Self {
            sizes,
            constraints,
            total_weight,
        })
    }

    pub fn sizes(&self) -> [usize; 3] {
        self.sizes
    }

    pub fn num_vars(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Same instance with constraints in canonical order.
    pub fn canonicalized(&self) -> Self {
        let mut constraints = self.constraints.clone();
        constraints.sort_by(Constraint::canonical_cmp);
        Self::new(self.sizes, constraints).expect("reordering keeps a valid instance valid")
    }

    /// Same instance with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, InstanceError> {
        let constraints = self
            .constraints
            .iter()
            .map(|c| Constraint {
                weight: c.weight * factor,
                ..*c
            })
            .collect();
        Self::new(self.sizes, constraints)
    }

    pub fn check_assignment(&self, a: &Assignment) -> Result<(), InstanceError> {
        for b in 0..3 {
            if a.blocks[b].len() != self.sizes[b] {
                return Err(InstanceError::DimensionMismatch {
                    block: b + 1,
                    expected: self.sizes[b],
                    found: a.blocks[b].len(),
                });
            }
        }
        Ok(())
    }

    /// True iff every predicate is C or its complement.
    pub fn is_xor(&self) -> bool {
        self.constraints
            .iter()
            .all(|c| c.pred == Predicate3::XOR_EVEN || c.pred == Predicate3::XOR_ODD)
    }
}

fn total_weight(constraints: &[Constraint]) -> f64 {
    constraints.iter().map(|c| c.weight).sum()
}

/// Deterministic ±1 values for every variable, one vector per block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    blocks: [Vec<Sign>; 3],
}

impl Assignment {
    pub fn new(blocks: [Vec<Sign>; 3]) -> Self {
        Self { blocks }
    }

    pub fn constant(sizes: [usize; 3], value: Sign) -> Self {
        Self::new(sizes.map(|n| vec![value; n]))
    }

    pub fn uniform(sizes: [usize; 3], rng: &mut rng::Rng) -> Self {
        Self::new(sizes.map(|n| {
            (0..n)
                .map(|_| if rng.random::<bool>() { Sign::Minus } else { Sign::Plus })
                .collect()
        }))
    }

    /// Splits a flat vector (block 1, then 2, then 3) into blocks.
    pub fn from_flat(sizes: [usize; 3], flat: &[Sign]) -> Self {
        assert_eq!(flat.len(), sizes.iter().sum::<usize>());
        let (b1, rest) = flat.split_at(sizes[0]);
        let (b2, b3) = rest.split_at(sizes[1]);
        Self::new([b1.to_vec(), b2.to_vec(), b3.to_vec()])
    }

    pub fn to_flat(&self) -> Vec<Sign> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn blocks(&self) -> &[Vec<Sign>; 3] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[Sign] {
        &self.blocks[b]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut Vec<Sign> {
        &mut self.blocks[b]
    }

    /// Value of variable `index` (1-based) in block `b` (0-based).
    pub fn get(&self, b: usize, index: usize) -> Option<Sign> {
        index.checked_sub(1).and_then(|i| self.blocks[b].get(i)).copied()
    }
}

/// Satisfied weight fraction of `a` on `inst`.
pub fn evaluate(inst: &Instance, a: &Assignment) -> Result<f64, InstanceError> {
    inst.check_assignment(a)?;
    let satisfied: f64 = inst
        .constraints
        .iter()
        .map(|c| if c.is_satisfied(a) { c.weight } else { 0.0 })
        .sum();
    Ok(satisfied / inst.total_weight)
}

/// Monte Carlo mean of [`evaluate`] over uniformly random assignments.
pub fn random_baseline(inst: &Instance, trials: usize, seed: u64) -> Result<f64, InstanceError> {
    if trials == 0 {
        return Err(InstanceError::NoTrials);
    }
    let mut rng = rng::seeded(seed);
    let mut sum = 0.0;
    for _ in 0..trials {
        let a = Assignment::uniform(inst.sizes, &mut rng);
        sum += evaluate(inst, &a)?;
    }
    Ok(sum / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_xor() -> Instance {
        Instance::new(
            [1, 1, 1],
            vec![Constraint::xor([Literal::pos(1), Literal::pos(1), Literal::pos(1)])],
        )
        .unwrap()
    }

    fn assign(v: [i64; 3]) -> Assignment {
        Assignment::new(v.map(|x| vec![Sign::from_value(x).unwrap()]))
    }

    #[test]
    fn xor_mask_matches_product_rule() {
        for i in 0..8 {
            let z = Predicate3::tuple_at(i);
            let prod = z[0] * z[1] * z[2];
            assert_eq!(Predicate3::XOR_EVEN.accepts(z), prod == Sign::Plus);
            assert_eq!(Predicate3::XOR_ODD.accepts(z), prod == Sign::Minus);
        }
        assert_eq!(Predicate3::XOR_EVEN.density(), 0.5);
    }

    #[test]
    fn single_constraint_values() {
        let inst = single_xor();
        assert_eq!(evaluate(&inst, &assign([1, 1, 1])).unwrap(), 1.0);
        assert_eq!(evaluate(&inst, &assign([1, 1, -1])).unwrap(), 0.0);
    }

    #[test]
    fn contradictory_pair_is_half() {
        let lits = [Literal::pos(1), Literal::pos(1), Literal::pos(1)];
        let inst = Instance::new(
            [1, 1, 1],
            vec![
                Constraint::xor(lits),
                Constraint::new(lits, 1.0, Predicate3::XOR_ODD),
            ],
        )
        .unwrap();
        for bits in 0..8u32 {
            let z = Predicate3::tuple_at(bits);
            let a = Assignment::new(z.map(|s| vec![s]));
            assert_eq!(evaluate(&inst, &a).unwrap(), 0.5);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let inst = single_xor();
        let a = Assignment::new([vec![Sign::Plus], vec![], vec![Sign::Plus]]);
        assert_eq!(
            evaluate(&inst, &a),
            Err(InstanceError::DimensionMismatch {
                block: 2,
                expected: 1,
                found: 0
            })
        );
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            Instance::new([1, 1, 1], vec![]),
            Err(InstanceError::NonPositiveTotalWeight(_))
        ));
        let bad = Constraint::xor([Literal::pos(2), Literal::pos(1), Literal::pos(1)]);
        assert!(matches!(
            Instance::new([1, 1, 1], vec![bad]),
            Err(InstanceError::IndexOutOfRange { block: 1, index: 2, .. })
        ));
        let neg = Constraint::new([Literal::pos(1); 3], -1.0, Predicate3::XOR_EVEN);
        assert!(matches!(
            Instance::new([1, 1, 1], vec![neg]),
            Err(InstanceError::InvalidWeight { .. })
        ));
    }

    #[test]
    fn baseline_of_trivial_and_single_tuple_predicates() {
        let all = Instance::new(
            [2, 2, 2],
            vec![Constraint::new([Literal::pos(1), Literal::neg(2), Literal::pos(2)], 1.0, Predicate3::ALL)],
        )
        .unwrap();
        assert_eq!(random_baseline(&all, 1000, 3).unwrap(), 1.0);

        let one = Instance::new(
            [1, 1, 1],
            vec![Constraint::new(
                [Literal::pos(1); 3],
                1.0,
                Predicate3::from_tuples([[Sign::Plus; 3]]),
            )],
        )
        .unwrap();
        let mean = random_baseline(&one, 100_000, 11).unwrap();
        assert!((mean - 0.125).abs() < 0.01, "{mean}");
        assert_eq!(random_baseline(&one, 0, 1), Err(InstanceError::NoTrials));
    }

    #[test]
    fn baseline_is_seed_deterministic() {
        let inst = single_xor();
        assert_eq!(
            random_baseline(&inst, 500, 42).unwrap(),
            random_baseline(&inst, 500, 42).unwrap()
        );
    }

    fn arb_instance() -> impl Strategy<Value = (Instance, Assignment)> {
        let sizes = [3usize, 2, 4];
        let lit = |n: usize| (1..=n, any::<bool>()).prop_map(|(i, neg)| Literal::new(i, if neg { Sign::Minus } else { Sign::Plus }));
        let constraint = (lit(sizes[0]), lit(sizes[1]), lit(sizes[2]), 1u32..100, any::<u8>())
            .prop_map(|(a, b, c, w, m)| Constraint::new([a, b, c], f64::from(w) / 8.0, Predicate3(m)));
        let signs = |n: usize| proptest::collection::vec(any::<bool>().prop_map(|b| if b { Sign::Minus } else { Sign::Plus }), n);
        (
            proptest::collection::vec(constraint, 1..30),
            signs(sizes[0]),
            signs(sizes[1]),
            signs(sizes[2]),
        )
            .prop_map(move |(cs, a, b, c)| {
                (Instance::new(sizes, cs).unwrap(), Assignment::new([a, b, c]))
            })
    }

    proptest! {
        #[test]
        fn weight_scaling_leaves_value_unchanged((inst, a) in arb_instance(), factor in 0.01f64..100.0) {
            let v = evaluate(&inst, &a).unwrap();
            let w = evaluate(&inst.scaled(factor).unwrap(), &a).unwrap();
            prop_assert!((v - w).abs() <= 1e-12);
        }

        #[test]
        fn literal_and_variable_flip_cancel((inst, a) in arb_instance(), block in 0usize..3, pick in any::<prop::sample::Index>()) {
            let index = pick.index(inst.sizes()[block]) + 1;
            let flipped: Vec<Constraint> = inst
                .constraints()
                .iter()
                .map(|c| {
                    let mut c = *c;
                    if c.lits[block].index == index {
                        c.lits[block].sign = -c.lits[block].sign;
                    }
                    c
                })
                .collect();
            let inst2 = Instance::new(inst.sizes(), flipped).unwrap();
            let mut a2 = a.clone();
            a2.block_mut(block)[index - 1] = -a.block(block)[index - 1];
            prop_assert_eq!(evaluate(&inst, &a).unwrap(), evaluate(&inst2, &a2).unwrap());
        }
    }
}
