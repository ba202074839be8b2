//! Exact Fourier (Walsh) expansions over ±1 variables.
//!
//! Coefficients are exact rationals. Predicate spectra are multiples of 1/8;
//! instance objectives divide by the exact total weight W, so the constant
//! term of an all-C instance is exactly ½ and the remaining coefficients have
//! absolute values summing to at most ½ per degree.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::instances::{Assignment, Instance, Predicate3};
use crate::sign::Sign;

pub type Coeff = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FourierError {
    #[error("variable {0} is not bound by the assignment")]
    UnboundVariable(Var),
}

/// Variable block. `Pair` holds the product variables x⁽²³⁾ introduced by
/// bilinearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    First,
    Second,
    Third,
    Pair,
}

impl Block {
    pub const TRIPARTITE: [Block; 3] = [Block::First, Block::Second, Block::Third];

    pub fn from_position(b: usize) -> Block {
        Self::TRIPARTITE[b]
    }

    /// 0-based position for the three instance blocks.
    pub fn position(self) -> Option<usize> {
        match self {
            Block::First => Some(0),
            Block::Second => Some(1),
            Block::Third => Some(2),
            Block::Pair => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Block::First => "1",
            Block::Second => "2",
            Block::Third => "3",
            Block::Pair => "23",
        }
    }
}

/// A variable: block plus 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub block: Block,
    pub index: usize,
}

impl Var {
    pub fn new(block: Block, index: usize) -> Self {
        Self { block, index }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}_{}", self.block.label(), self.index)
    }
}

/// A product of distinct variables, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<Var>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    /// Builds a monomial; returns `None` if a variable repeats.
    pub fn new(mut vars: Vec<Var>) -> Option<Self> {
        vars.sort();
        if vars.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(Self(vars))
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    /// True iff the variables sit in pairwise distinct blocks.
    pub fn is_one_per_block(&self) -> bool {
        self.0.windows(2).all(|w| w[0].block != w[1].block)
    }

    pub fn var_in(&self, block: Block) -> Option<Var> {
        self.0.iter().copied().find(|v| v.block == block)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(Var::to_string).collect();
        write!(f, "{}", names.join(" "))
    }
}

/// Sparse multilinear polynomial with exact rational coefficients. Zero
/// coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultilinearPoly {
    terms: BTreeMap<Monomial, Coeff>,
}

impl MultilinearPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Coeff) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Coeff)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c·m`, combining like terms and dropping zeros.
    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(Coeff::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> Coeff {
        self.coeff(&Monomial::one())
    }

    /// Degree-2 or degree-3 terms whose variables do not sit one per block of
    /// the tripartite layout, plus any degree-2 terms among instance blocks.
    /// They never arise from XOR-type predicates.
    pub fn mixed_block_terms(&self) -> Vec<&Monomial> {
        self.terms
            .keys()
            .filter(|m| {
                (m.degree() == 2 && m.vars().iter().all(|v| v.block != Block::Pair))
                    || (m.degree() >= 2 && !m.is_one_per_block())
            })
            .collect()
    }

    /// Sum of squared coefficients.
    pub fn squared_norm(&self) -> Coeff {
        self.terms.values().map(|c| c * c).sum()
    }

    pub fn l1_norm(&self) -> Coeff {
        self.terms.values().map(Signed::abs).sum()
    }

    /// Exact evaluation with variable values supplied by `value`.
    pub fn eval_exact_with<F>(&self, value: F) -> Result<Coeff, FourierError>
    where
        F: Fn(Var) -> Option<Sign>,
    {
        let mut total = Coeff::zero();
        for (m, c) in &self.terms {
            let mut sign = Sign::Plus;
            for &v in m.vars() {
                sign = sign * value(v).ok_or(FourierError::UnboundVariable(v))?;
            }
            match sign {
                Sign::Plus => total += c,
                Sign::Minus => total -= c,
            }
        }
        Ok(total)
    }

    /// Floating-point evaluation; for hot loops where exactness is not needed.
    pub fn eval_f64_with<F>(&self, value: F) -> Result<f64, FourierError>
    where
        F: Fn(Var) -> Option<Sign>,
    {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut sign = Sign::Plus;
            for &v in m.vars() {
                sign = sign * value(v).ok_or(FourierError::UnboundVariable(v))?;
            }
            total += sign.as_f64() * to_f64(c);
        }
        Ok(total)
    }

    /// Debug dump: one `coeff num/den : vars` line per term, sorted by monomial.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.terms {
            let _ = write!(out, "coeff {}/{} :", c.numer(), c.denom());
            if m.degree() > 0 {
                let _ = write!(out, " {m}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn to_f64(c: &Coeff) -> f64 {
    c.to_f64().expect("coefficient out of f64 range")
}

pub fn ratio(num: i64, den: i64) -> Coeff {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational value of a finite double.
pub fn exact(x: f64) -> Coeff {
    BigRational::from_float(x).expect("finite weight")
}

/// Assignment lookup for instance blocks.
pub fn lookup(a: &Assignment) -> impl Fn(Var) -> Option<Sign> + '_ {
    move |v| v.block.position().and_then(|b| a.get(b, v.index))
}

fn abstract_var(b: usize) -> Var {
    Var::new(Block::from_position(b), 1)
}

/// Subsets of {0,1,2} as bitmasks, with bit b meaning coordinate b is in S.
fn subset_vars(s: u32) -> impl Iterator<Item = usize> {
    (0..3).filter(move |b| (s >> b) & 1 == 1)
}

/// Walsh coefficients ĉ(S) of a predicate indicator, indexed by subset mask.
fn walsh_coefficients(pred: Predicate3) -> [i64; 8] {
    let mut out = [0i64; 8];
    for (s, slot) in out.iter_mut().enumerate() {
        *slot = pred
            .accepted()
            .map(|z| {
                subset_vars(s as u32)
                    .map(|b| i64::from(z[b].value()))
                    .product::<i64>()
            })
            .sum();
    }
    out
}

/// Fourier expansion of a predicate's indicator over abstract variables
/// y₁, y₂, y₃, represented as `x1_1`, `x2_1`, `x3_1`.
pub fn predicate_fourier(pred: Predicate3) -> MultilinearPoly {
    let walsh = walsh_coefficients(pred);
    MultilinearPoly::from_terms((0..8u32).map(|s| {
        let vars = subset_vars(s).map(abstract_var).collect();
        (
            Monomial::new(vars).expect("distinct blocks"),
            ratio(walsh[s as usize], 8),
        )
    }))
}

/// Full Fourier expansion of an instance's satisfied-weight fraction.
/// Literal signs are absorbed into the coefficients.
pub fn instance_objective(inst: &Instance) -> MultilinearPoly {
    let total: Coeff = inst.constraints().iter().map(|c| exact(c.weight)).sum();
    let mut cache: BTreeMap<u8, [i64; 8]> = BTreeMap::new();
    let mut poly = MultilinearPoly::zero();
    for c in inst.constraints() {
        if c.weight == 0.0 {
            continue;
        }
        let walsh = *cache
            .entry(c.pred.mask())
            .or_insert_with(|| walsh_coefficients(c.pred));
        let w = exact(c.weight) / (&total * BigInt::from(8));
        for s in 0..8u32 {
            let hat = walsh[s as usize];
            if hat == 0 {
                continue;
            }
            let mut sign = Sign::Plus;
            let mut vars = Vec::with_capacity(3);
            for b in subset_vars(s) {
                sign = sign * c.lits[b].sign;
                vars.push(Var::new(Block::from_position(b), c.lits[b].index));
            }
            let coeff = &w * BigInt::from(hat * i64::from(sign.value()));
            poly.add_term(Monomial::new(vars).expect("distinct blocks"), coeff);
        }
    }
    poly
}

/// Keeps exactly the monomials of degree `d`.
pub fn degree_slice(p: &MultilinearPoly, d: usize) -> MultilinearPoly {
    MultilinearPoly::from_terms(
        p.terms()
            .filter(|(m, _)| m.degree() == d)
            .map(|(m, c)| (m.clone(), c.clone())),
    )
}

/// Evaluates `p` at an instance assignment, exactly, then rounds to f64.
pub fn eval_poly(p: &MultilinearPoly, a: &Assignment) -> Result<f64, FourierError> {
    p.eval_exact_with(lookup(a)).map(|c| to_f64(&c))
}

/// Helper for tests and diagnostics: `1` as a coefficient.
pub fn one() -> Coeff {
    Coeff::one()
}
