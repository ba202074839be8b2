//! The two-round rounding pipeline and the gap experiment driver.
//!
//! Round one replaces every product `x2_j·x3_k` of the cubic part by a fresh
//! pair variable, turning it into a bilinear form in block-1 and pair
//! variables. Its rounded block-1 signs are fixed, which leaves a bilinear
//! form in blocks 2 and 3 for round two.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::families::{generate, FamilyError, FamilySpec};
use crate::fourier::{
    degree_slice, eval_poly, instance_objective, lookup, to_f64, Block, Coeff, FourierError,
    Monomial, MultilinearPoly, Var,
};
use crate::instances::{evaluate, random_baseline, Assignment, Instance, InstanceError};
use crate::oracle::{self, brute_force, OracleError};
use crate::rng::derive_seed;
use crate::sdp::{cw_round, from_bilinear_poly, solve_relaxation, SdpConfig, SdpError};
use crate::sign::Sign;

/// Agreement required between recomputed values.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("monomial {0} is not of the form x1·x2·x3")]
    MalformedMonomial(String),
    #[error("no value for block-1 variable x1_{0}")]
    MissingAssignment(usize),
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

impl PipelineError {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, PipelineError::Sdp(SdpError::NonMonotone { .. }) | PipelineError::CrossCheck(_))
    }
}

/// Bilinear form `Σ c·x1_i·y_k` where pair variable `y_k` (1-based, block
/// [`Block::Pair`]) stands for `x2_j·x3_l` with `pairs[k-1] = (j, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearizedProgram {
    pub i2: MultilinearPoly,
    pub pairs: Vec<(usize, usize)>,
}

impl BilinearizedProgram {
    pub fn pair_var(&self, j: usize, l: usize) -> Option<Var> {
        self.pairs
            .iter()
            .position(|&p| p == (j, l))
            .map(|k| Var::new(Block::Pair, k + 1))
    }
}

fn split_cubic(m: &Monomial) -> Result<(usize, usize, usize), PipelineError> {
    let malformed = || PipelineError::MalformedMonomial(m.to_string());
    if m.degree() != 3 || !m.is_one_per_block() {
        return Err(malformed());
    }
    let idx = |b| m.var_in(b).map(|v| v.index).ok_or_else(malformed);
    Ok((idx(Block::First)?, idx(Block::Second)?, idx(Block::Third)?))
}

/// Pair ids are assigned in order of first appearance in `i3`'s monomial
/// order.
pub fn bilinearize(i3: &MultilinearPoly) -> Result<BilinearizedProgram, PipelineError> {
    let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut pairs = Vec::new();
    let mut i2 = MultilinearPoly::zero();
    for (m, c) in i3.terms() {
        let (i, j, l) = split_cubic(m)?;
        let k = *ids.entry((j, l)).or_insert_with(|| {
            pairs.push((j, l));
            pairs.len()
        });
        let mono = Monomial::new(vec![Var::new(Block::First, i), Var::new(Block::Pair, k)])
            .expect("distinct blocks");
        i2.add_term(mono, c.clone());
    }
    Ok(BilinearizedProgram { i2, pairs })
}

/// Substitutes block-1 values `f1` (0-based by index−1) into the cubic part.
pub fn condition(i3: &MultilinearPoly, f1: &[Sign]) -> Result<MultilinearPoly, PipelineError> {
    let mut out = MultilinearPoly::zero();
    for (m, c) in i3.terms() {
        let (i, j, l) = split_cubic(m)?;
        let s = *f1.get(i - 1).ok_or(PipelineError::MissingAssignment(i))?;
        let mono = Monomial::new(vec![Var::new(Block::Second, j), Var::new(Block::Third, l)])
            .expect("distinct blocks");
        let coeff = match s {
            Sign::Plus => c.clone(),
            Sign::Minus => -c.clone(),
        };
        out.add_term(mono, coeff);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub sdp: SdpConfig,
    /// Independent SDP seeds tried; the best final value is kept.
    pub seeds: usize,
    pub baseline_trials: usize,
    /// Run the exhaustive oracle when the instance has at most this many
    /// variables; 0 disables it.
    pub oracle_max_vars: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sdp: SdpConfig::default(),
            seeds: 5,
            baseline_trials: 10_000,
            oracle_max_vars: oracle::MAX_VARS,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.sdp.validate()?;
        if self.seeds == 0 {
            return Err(PipelineError::InvalidConfig("at least one seed is required".into()));
        }
        if self.baseline_trials == 0 {
            return Err(PipelineError::InvalidConfig("baseline trials must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one pipeline run with one SDP seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub sdp1: f64,
    pub achieved1: f64,
    pub sdp2: f64,
    pub achieved2: f64,
    #[serde(rename = "final")]
    pub final_value: f64,
    /// Fraction of pair variables agreeing with `x2_j·x3_l`; `None` when the
    /// cubic part is empty.
    pub consistency: Option<f64>,
    /// Number of block-1 variables set to +1.
    pub f1_plus: usize,
    #[serde(skip)]
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub id: String,
    pub n_vars: usize,
    pub n_cons: usize,
    pub baseline: f64,
    pub sdp1: f64,
    pub sdp2: f64,
    #[serde(rename = "final")]
    pub final_value: f64,
    pub opt: Option<f64>,
    /// `final − ½`.
    pub margin: f64,
    pub consistency: Option<f64>,
    pub seed: u64,
    pub ms: u64,
    pub achieved1: f64,
    pub achieved2: f64,
    pub f1_plus: usize,
    /// `final / opt` when the optimum is known and positive.
    pub ratio: Option<f64>,
    /// Cubic part at the returned assignment and at the oracle's optimum.
    pub i3_final: f64,
    pub i3_opt: Option<f64>,
    /// The cubic part vanished identically; the all-+1 assignment is used.
    pub degenerate: bool,
    pub seed_finals: Vec<f64>,
}

/// Solves and rounds a bilinear form; empty forms give all +1 and zeros.
fn solve_and_round(
    p: &MultilinearPoly,
    cfg: &SdpConfig,
) -> Result<(f64, f64, BTreeMap<Var, Sign>), PipelineError> {
    if p.is_empty() {
        return Ok((0.0, 0.0, BTreeMap::new()));
    }
    let (q, index) = from_bilinear_poly(p)?;
    let relax = solve_relaxation(&q, cfg)?;
    let round = cw_round(&relax.factor, &q, cfg)?;
    let values = index.vars().iter().copied().zip(round.signs).collect();
    Ok((relax.value, round.achieved, values))
}

fn run_seed(
    inst: &Instance,
    objective: &MultilinearPoly,
    i3: &MultilinearPoly,
    program: &BilinearizedProgram,
    sdp: &SdpConfig,
) -> Result<SeedRun, PipelineError> {
    let [m1, m2, m3] = inst.sizes();
    let (sdp1, achieved1, v1) = solve_and_round(&program.i2, sdp)?;
    let mut f1 = vec![Sign::Plus; m1];
    for (v, s) in &v1 {
        if v.block == Block::First {
            f1[v.index - 1] = *s;
        }
    }

    let conditioned = condition(i3, &f1)?;
    let (sdp2, achieved2, v2) = solve_and_round(&conditioned, sdp)?;
    let mut f2 = vec![Sign::Plus; m2];
    let mut f3 = vec![Sign::Plus; m3];
    for (v, s) in &v2 {
        match v.block {
            Block::Second => f2[v.index - 1] = *s,
            Block::Third => f3[v.index - 1] = *s,
            _ => {}
        }
    }

    let consistency = (!program.pairs.is_empty()).then(|| {
        let agree = program
            .pairs
            .iter()
            .enumerate()
            .filter(|(k, &(j, l))| {
                v1.get(&Var::new(Block::Pair, k + 1)).copied() == Some(f2[j - 1] * f3[l - 1])
            })
            .count();
        agree as f64 / program.pairs.len() as f64
    });

    let f1_plus = f1.iter().filter(|&&s| s == Sign::Plus).count();
    let assignment = Assignment::new([f1, f2, f3]);
    let final_value = evaluate(inst, &assignment)?;

    let full = to_f64(&objective.eval_exact_with(lookup(&assignment))?);
    if (full - final_value).abs() > CROSS_CHECK_TOL {
        return Err(PipelineError::CrossCheck(format!(
            "objective gives {full}, direct evaluation gives {final_value}"
        )));
    }
    let cubic = eval_poly(i3, &assignment)?;
    if (cubic - achieved2).abs() > CROSS_CHECK_TOL {
        return Err(PipelineError::CrossCheck(format!(
            "cubic part is {cubic} but round two achieved {achieved2}"
        )));
    }

    Ok(SeedRun {
        seed: sdp.seed,
        sdp1,
        achieved1,
        sdp2,
        achieved2,
        final_value,
        consistency,
        f1_plus,
        assignment,
    })
}

/// Runs both rounds for every configured seed and keeps the best final
/// value (earliest seed on ties).
pub fn two_round(inst: &Instance, cfg: &PipelineConfig) -> Result<(Assignment, PipelineReport), PipelineError> {
    cfg.validate()?;
    let start = Instant::now();
    let objective = instance_objective(inst);
    let i3 = degree_slice(&objective, 3);
    let degenerate = i3.is_empty();
    let program = bilinearize(&i3)?;

    let runs = (0..cfg.seeds)
        .map(|s| {
            let sdp = SdpConfig {
                seed: derive_seed(cfg.sdp.seed, s as u64),
                ..cfg.sdp.clone()
            };
            run_seed(inst, &objective, &i3, &program, &sdp)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let best = runs
        .iter()
        .fold(&runs[0], |b, r| if r.final_value > b.final_value { r } else { b });

    let only_odd_and_constant = objective.terms().all(|(m, _)| matches!(m.degree(), 0 | 3));
    if only_odd_and_constant {
        let c0 = to_f64(&objective.constant_term());
        if (best.final_value - (c0 + best.achieved2)).abs() > CROSS_CHECK_TOL {
            return Err(PipelineError::CrossCheck(format!(
                "final {} differs from constant {c0} plus round-two value {}",
                best.final_value, best.achieved2
            )));
        }
    }

    let baseline = random_baseline(inst, cfg.baseline_trials, cfg.sdp.seed)?;
    let (opt, i3_opt) = if inst.num_vars() <= cfg.oracle_max_vars {
        let o = brute_force(inst)?;
        if best.final_value > o.optimum + CROSS_CHECK_TOL {
            return Err(PipelineError::CrossCheck(format!(
                "pipeline value {} exceeds the optimum {}",
                best.final_value, o.optimum
            )));
        }
        (Some(o.optimum), Some(eval_poly(&i3, &o.assignment)?))
    } else {
        (None, None)
    };

    let report = PipelineReport {
        id: String::new(),
        n_vars: inst.num_vars(),
        n_cons: inst.constraints().len(),
        baseline,
        sdp1: best.sdp1,
        sdp2: best.sdp2,
        final_value: best.final_value,
        opt,
        margin: best.final_value - 0.5,
        consistency: best.consistency,
        seed: cfg.sdp.seed,
        ms: start.elapsed().as_millis() as u64,
        achieved1: best.achieved1,
        achieved2: best.achieved2,
        f1_plus: best.f1_plus,
        ratio: opt.filter(|&o| o > 0.0).map(|o| best.final_value / o),
        i3_final: eval_poly(&i3, &best.assignment)?,
        i3_opt,
        degenerate,
        seed_finals: runs.iter().map(|r| r.final_value).collect(),
    };
    Ok((best.assignment.clone(), report))
}

/// One row of a gap experiment: a report or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentRow {
    Ok(Box<PipelineReport>),
    Err { id: String, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub rows: usize,
    pub failed: usize,
    pub mean_final: Option<f64>,
    pub mean_opt: Option<f64>,
    pub mean_baseline: Option<f64>,
    pub mean_margin: Option<f64>,
    pub mean_ratio: Option<f64>,
    /// Mean value of the family's witness assignment, when it has one.
    pub mean_witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub family: FamilySpec,
    pub seed: u64,
    pub rows: Vec<ExperimentRow>,
    pub summary: ExperimentSummary,
}

/// Instance seed and SDP seed of experiment row `index`.
pub fn row_seeds(seed: u64, index: usize) -> (u64, u64) {
    (derive_seed(seed, 2 * index as u64), derive_seed(seed, 2 * index as u64 + 1))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Draws `spec.count` instances and runs the pipeline on each. Rows run in
/// parallel but are reported in order; a failing row is recorded and the
/// rest continue.
pub fn gap_experiment(spec: &FamilySpec, cfg: &PipelineConfig, seed: u64) -> Result<ExperimentReport, PipelineError> {
    cfg.validate()?;
    let results: Vec<(ExperimentRow, Option<f64>)> = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let (instance_seed, sdp_seed) = row_seeds(seed, i);
            let mut row_cfg = cfg.clone();
            row_cfg.sdp.seed = sdp_seed;
            let fallback_id = format!("{}-{i:03}", spec.family.name());
            let generated = match generate(spec, i, instance_seed) {
                Ok(g) => g,
                Err(e) => {
                    return (
                        ExperimentRow::Err {
                            id: fallback_id,
                            error: e.to_string(),
                        },
                        None,
                    )
                }
            };
            let witness = generated
                .witness
                .as_ref()
                .and_then(|w| evaluate(&generated.instance, w).ok());
            match two_round(&generated.instance, &row_cfg) {
                Ok((_, mut report)) => {
                    report.id = generated.id;
                    (ExperimentRow::Ok(Box::new(report)), witness)
                }
                Err(e) => (
                    ExperimentRow::Err {
                        id: generated.id,
                        error: e.to_string(),
                    },
                    witness,
                ),
            }
        })
        .collect();

    let reports: Vec<&PipelineReport> = results
        .iter()
        .filter_map(|(r, _)| match r {
            ExperimentRow::Ok(p) => Some(p.as_ref()),
            ExperimentRow::Err { .. } => None,
        })
        .collect();
    let summary = ExperimentSummary {
        rows: results.len(),
        failed: results.len() - reports.len(),
        mean_final: mean(reports.iter().map(|r| r.final_value)),
        mean_opt: mean(reports.iter().filter_map(|r| r.opt)),
        mean_baseline: mean(reports.iter().map(|r| r.baseline)),
        mean_margin: mean(reports.iter().map(|r| r.margin)),
        mean_ratio: mean(reports.iter().filter_map(|r| r.ratio)),
        mean_witness: mean(results.iter().filter_map(|(_, w)| *w)),
    };
    Ok(ExperimentReport {
        family: *spec,
        seed,
        rows: results.into_iter().map(|(r, _)| r).collect(),
        summary,
    })
}

/// Exact cubic coefficient sum, handy for diagnostics.
pub fn cubic_l1(inst: &Instance) -> Coeff {
    degree_slice(&instance_objective(inst), 3).l1_norm()
}
