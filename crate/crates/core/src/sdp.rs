//! Quadratic programs over ±1 variables: a low-rank vector relaxation solved
//! by block-coordinate ascent, and truncated Gaussian-projection rounding.
//!
//! The relaxation maximizes Σ a_ij ⟨v_i, v_j⟩ over unit vectors v_i ∈ R^r.
//! Each coordinate step replaces v_i by the normalized weighted sum of its
//! neighbours, which maximizes the objective in v_i with the rest fixed, so
//! the value never decreases.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::{to_f64, MultilinearPoly, Var};
use crate::rng;
use crate::sign::Sign;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("objective has no variables")]
    EmptyObjective,
    #[error("diagonal entry ({0}, {0}) is not allowed")]
    DiagonalEntry(usize),
    #[error("index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("factor has {found} vectors, objective has {expected} variables")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector {0} does not have unit norm")]
    NotUnit(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("monomial `{0}` is not bilinear")]
    NotBilinear(String),
    #[error("ascent decreased the objective at sweep {sweep}: {before} -> {after}")]
    NonMonotone { sweep: usize, before: f64, after: f64 },
}

/// Σ a_ij x_i x_j over unordered pairs i < j (0-based).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadraticObjective {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl QuadraticObjective {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: BTreeMap::new(),
        }
    }

    /// Adds `coeff` to a_ij. Order of `i` and `j` does not matter.
    pub fn add(&mut self, i: usize, j: usize, coeff: f64) -> Result<(), SdpError> {
        if i == j {
            return Err(SdpError::DiagonalEntry(i));
        }
        for index in [i, j] {
            if index >= self.n {
                return Err(SdpError::IndexOutOfRange { index, n: self.n });
            }
        }
        let key = (i.min(j), i.max(j));
        let slot = self.entries.entry(key).or_insert(0.0);
        *slot += coeff;
        if *slot == 0.0 {
            self.entries.remove(&key);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.entries
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Objective at a sign vector.
    pub fn value(&self, x: &[Sign]) -> f64 {
        self.entries
            .iter()
            .map(|(&(i, j), &a)| if x[i] == x[j] { a } else { -a })
            .sum()
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(i, j), &a) in &self.entries {
            adj[i].push((j, a));
            adj[j].push((i, a));
        }
        adj
    }

    /// `i j coeff` lines, 1-based.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (&(i, j), &a) in &self.entries {
            let _ = writeln!(out, "{} {} {}", i + 1, j + 1, a);
        }
        out
    }
}

/// Position of each polynomial variable in a flattened objective.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VarIndex {
    vars: Vec<Var>,
    pos: BTreeMap<Var, usize>,
}

impl VarIndex {
    pub fn from_vars(mut vars: Vec<Var>) -> Self {
        vars.sort();
        vars.dedup();
        let pos = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Self { vars, pos }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn position(&self, v: Var) -> Option<usize> {
        self.pos.get(&v).copied()
    }

    pub fn var(&self, i: usize) -> Var {
        self.vars[i]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Flattens a polynomial with only degree-2 terms into a quadratic objective.
pub fn from_bilinear_poly(p: &MultilinearPoly) -> Result<(QuadraticObjective, VarIndex), SdpError> {
    if let Some((m, _)) = p.terms().find(|(m, _)| m.degree() != 2) {
        return Err(SdpError::NotBilinear(if m.degree() == 0 {
            "1".into()
        } else {
            m.to_string()
        }));
    }
    let index = VarIndex::from_vars(p.terms().flat_map(|(m, _)| m.vars().to_vec()).collect());
    let mut q = QuadraticObjective::new(index.len());
    for (m, c) in p.terms() {
        let [a, b] = [m.vars()[0], m.vars()[1]];
        q.add(
            index.position(a).expect("indexed"),
            index.position(b).expect("indexed"),
            to_f64(c),
        )?;
    }
    Ok((q, index))
}

/// n unit vectors in R^rank, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFactor {
    rank: usize,
    data: Vec<f64>,
}

impl GramFactor {
    pub fn new(rank: usize, vectors: Vec<Vec<f64>>) -> Result<Self, SdpError> {
        let mut data = Vec::with_capacity(rank * vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if v.len() != rank || (norm - 1.0).abs() > 1e-9 {
                return Err(SdpError::NotUnit(i));
            }
            data.extend_from_slice(v);
        }
        Ok(Self { rank, data })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.data.len().checked_div(self.rank).unwrap_or(0)
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.rank..(i + 1) * self.rank]
    }

    fn vector_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.rank..(i + 1) * self.rank]
    }

    pub fn inner(&self, i: usize, j: usize) -> f64 {
        dot(self.vector(i), self.vector(j))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpConfig {
    /// Factor rank; `None` means max(2, min(n, ⌈√(2n)⌉ + 1)).
    pub rank: Option<usize>,
    pub max_sweeps: usize,
    /// Stop once a sweep improves the value by less than `tol·max(1, |value|)`.
    pub tol: f64,
    /// Truncation thresholds T; 0 means plain sign rounding.
    pub t_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            rank: None,
            max_sweeps: 2000,
            tol: 1e-10,
            t_grid: vec![0.0, 0.5, 1.0, (2.0 * 4f64.ln()).sqrt(), 2.0],
            trials: 64,
            seed: 0,
        }
    }
}

impl SdpConfig {
    pub fn validate(&self) -> Result<(), SdpError> {
        if matches!(self.rank, Some(r) if r < 2) {
            return Err(SdpError::InvalidConfig("rank must be at least 2".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(SdpError::InvalidConfig("tol must be positive".into()));
        }
        if self.trials == 0 {
            return Err(SdpError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(SdpError::InvalidConfig(
                "T grid must be nonempty, finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn rank_for(&self, n: usize) -> usize {
        self.rank.unwrap_or_else(|| {
            let heuristic = ((2.0 * n as f64).sqrt().ceil() as usize) + 1;
            heuristic.min(n).max(2)
        })
    }
}

/// Outcome of [`solve_relaxation`].
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub factor: GramFactor,
    pub value: f64,
    /// Value after the random start and after each sweep.
    pub history: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Set when every coefficient is zero; the factor is then arbitrary.
    pub zero_objective: bool,
}

pub fn relaxation_value(g: &GramFactor, q: &QuadraticObjective) -> Result<f64, SdpError> {
    if g.n() != q.n() {
        return Err(SdpError::DimensionMismatch {
            expected: q.n(),
            found: g.n(),
        });
    }
    Ok(q.entries.iter().map(|(&(i, j), &a)| a * g.inner(i, j)).sum())
}

fn random_unit(rng: &mut rng::Rng, r: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Block-coordinate ascent on unit vectors from a seeded random start.
pub fn solve_relaxation(q: &QuadraticObjective, cfg: &SdpConfig) -> Result<Relaxation, SdpError> {
    cfg.validate()?;
    let n = q.n();
    if n == 0 {
        return Err(SdpError::EmptyObjective);
    }
    let r = cfg.rank_for(n);
    let mut rng = rng::stream(cfg.seed, 0);
    let mut factor = GramFactor {
        rank: r,
        data: (0..n).flat_map(|_| random_unit(&mut rng, r)).collect(),
    };
    let mut value = relaxation_value(&factor, q)?;
    let mut history = vec![value];
    if q.is_zero() {
        return Ok(Relaxation {
            factor,
            value: 0.0,
            history,
            sweeps: 0,
            converged: true,
            zero_objective: true,
        });
    }

    let adj = q.adjacency();
    let mut g = vec![0.0; r];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        for (i, nbrs) in adj.iter().enumerate() {
            g.iter_mut().for_each(|x| *x = 0.0);
            for &(j, a) in nbrs {
                for (gk, vk) in g.iter_mut().zip(factor.vector(j)) {
                    *gk += a * vk;
                }
            }
            let norm = dot(&g, &g).sqrt();
            if norm > 1e-300 {
                for (vk, gk) in factor.vector_mut(i).iter_mut().zip(&g) {
                    *vk = gk / norm;
                }
            }
        }
        let next = relaxation_value(&factor, q)?;
        let scale = value.abs().max(1.0);
        if next < value - 1e-12 * scale {
            return Err(SdpError::NonMonotone {
                sweep: sweeps,
                before: value,
                after: next,
            });
        }
        history.push(next);
        let gain = next - value;
        value = next;
        if gain <= cfg.tol * value.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(Relaxation {
        factor,
        value,
        history,
        sweeps,
        converged,
        zero_objective: false,
    })
}

/// Best rounded sign vector found by [`cw_round`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    pub signs: Vec<Sign>,
    pub achieved: f64,
    /// Trial and threshold that produced the best candidate.
    pub trial: usize,
    pub threshold: f64,
}

/// Gaussian projection u_i = ⟨v_i, γ⟩, truncation y_i = clamp(u_i / T, −1, 1),
/// then x_i = +1 with probability (1 + y_i)/2. T = 0 takes the sign of u_i.
/// Every trial tries every T on the same γ; the best candidate by exact
/// objective value wins, earliest on ties.
pub fn cw_round(g: &GramFactor, q: &QuadraticObjective, cfg: &SdpConfig) -> Result<Rounding, SdpError> {
    cfg.validate()?;
    if g.n() != q.n() {
        return Err(SdpError::DimensionMismatch {
            expected: q.n(),
            found: g.n(),
        });
    }
    let n = q.n();
    let mut best: Option<Rounding> = None;
    let round_seed = rng::derive_seed(cfg.seed, 1);
    for trial in 0..cfg.trials {
        let mut rng = rng::stream(round_seed, trial as u64);
        let gamma: Vec<f64> = (0..g.rank()).map(|_| rng.sample(StandardNormal)).collect();
        let u: Vec<f64> = (0..n).map(|i| dot(g.vector(i), &gamma)).collect();
        for &t in &cfg.t_grid {
            let signs: Vec<Sign> = if t == 0.0 {
                u.iter().map(|&x| Sign::of(x)).collect()
            } else {
                u.iter()
                    .map(|&x| {
                        let y = (x / t).clamp(-1.0, 1.0);
                        if rng.random::<f64>() < (1.0 + y) / 2.0 {
                            Sign::Plus
                        } else {
                            Sign::Minus
                        }
                    })
                    .collect()
            };
            let achieved = q.value(&signs);
            if best.as_ref().is_none_or(|b| achieved > b.achieved) {
                best = Some(Rounding {
                    signs,
                    achieved,
                    trial,
                    threshold: t,
                });
            }
        }
    }
    Ok(best.expect("at least one trial and one threshold"))
}
