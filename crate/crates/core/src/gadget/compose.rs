//! Composition of the 3-player dictatorship test with a Label-Cover instance.
//!
//! Block 1 holds folded points of U × G^R, blocks 2 and 3 hold folded points
//! of V × G^{dR}. For every edge the full test matrix z = (z⁽¹⁾, z⁽²⁾, z⁽³⁾)
//! is drawn from μ: each row t is an independent row sample, and the d
//! copies of row t fill the positions π⁻¹(t) of z⁽²⁾ and z⁽³⁾ in ascending
//! order. Each query becomes one C-constraint whose weight is its
//! probability, so every edge carries total weight 1.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::label_cover::{Edge, LabelCoverInstance, Labeling};
use super::test_dist::{advance, fold, noisy_distribution, row_distribution, NoisySampler};
use super::GadgetError;
use crate::distributions::{check_pairwise_independent, ground, Prob, TupleDistribution};
use crate::instances::{Assignment, Constraint, Instance, Literal, Predicate3};
use crate::rng;
use crate::sign::{point_code, point_from_code, Point, Sign};

/// Cap on the total number of instance variables.
pub const MAX_VARS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComposeMode {
    /// Exact μ probabilities; fails if the per-edge support exceeds the budget.
    Enumerate,
    /// Empirical frequencies of `per_edge_budget` draws per edge.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposeParams {
    pub eta: f64,
    pub per_edge_budget: usize,
    pub mode: ComposeMode,
    pub seed: u64,
}

impl Default for ComposeParams {
    fn default() -> Self {
        Self {
            eta: 0.0,
            per_edge_budget: 4096,
            mode: ComposeMode::Enumerate,
            seed: 0,
        }
    }
}

/// Variable numbering of a composed instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GadgetLayout {
    pub r: usize,
    pub d: usize,
    pub n_u: usize,
    pub n_v: usize,
}

impl GadgetLayout {
    pub fn of(lc: &LabelCoverInstance) -> Self {
        Self {
            r: lc.r(),
            d: lc.d(),
            n_u: lc.n_u(),
            n_v: lc.n_v(),
        }
    }

    /// Representatives per U-vertex: 2^{R−1}.
    pub fn reps_u(&self) -> usize {
        1 << (self.r - 1)
    }

    /// Representatives per V-vertex: 2^{dR−1}.
    pub fn reps_v(&self) -> usize {
        1 << (self.d * self.r - 1)
    }

    pub fn sizes(&self) -> [usize; 3] {
        let v = self.n_v * self.reps_v();
        [self.n_u * self.reps_u(), v, v]
    }

    /// 1-based block-1 index of `(u, rep)`; `rep` must start with +1.
    pub fn var_u(&self, u: usize, rep: &[Sign]) -> usize {
        u * self.reps_u() + point_code(rep) as usize + 1
    }

    pub fn var_v(&self, v: usize, rep: &[Sign]) -> usize {
        v * self.reps_v() + point_code(rep) as usize + 1
    }
}

type ConstraintKey = [(usize, Sign); 3];

struct EdgeContext<'a> {
    edge: &'a Edge,
    layout: GadgetLayout,
    /// π⁻¹(t) in ascending order, per row t.
    preimages: Vec<Vec<usize>>,
}

impl EdgeContext<'_> {
    /// Builds the constraint key for one full test matrix given its rows.
    fn key<'r, I: Iterator<Item = &'r Point>>(&self, rows: I) -> ConstraintKey {
        let d = self.layout.d;
        let dr = d * self.layout.r;
        let mut z1 = Vec::with_capacity(self.layout.r);
        let mut z2 = vec![Sign::Plus; dr];
        let mut z3 = vec![Sign::Plus; dr];
        for (t, row) in rows.enumerate() {
            z1.push(row[0]);
            for (k, &pos) in self.preimages[t].iter().enumerate() {
                z2[pos] = row[1 + k];
                z3[pos] = row[1 + d + k];
            }
        }
        let f1 = fold(&z1);
        let f2 = fold(&z2);
        let f3 = fold(&z3);
        [
            (self.layout.var_u(self.edge.u, &f1.rep), f1.sign),
            (self.layout.var_v(self.edge.v, &f2.rep), f2.sign),
            (self.layout.var_v(self.edge.v, &f3.rep), f3.sign),
        ]
    }
}

/// Composes the dictatorship test built from a balanced pairwise independent
/// φ over G³ with `lc`.
pub fn compose(
    lc: &LabelCoverInstance,
    phi: &TupleDistribution,
    params: &ComposeParams,
) -> Result<Instance, GadgetError> {
    if phi.arity() != 3 || !check_pairwise_independent(phi, 0.5, 0.0)?.holds {
        return Err(GadgetError::UnbalancedBase);
    }
    if params.per_edge_budget == 0 {
        return Err(GadgetError::InvalidParams("per-edge budget must be positive".into()));
    }
    let layout = GadgetLayout::of(lc);
    let sizes = layout.sizes();
    if sizes.iter().sum::<usize>() > MAX_VARS {
        return Err(GadgetError::CapExceeded(format!(
            "composed instance would have {} variables (cap {MAX_VARS})",
            sizes.iter().sum::<usize>()
        )));
    }
    let pred = Predicate3::from_tuples(ground(phi).iter().map(|z| [z[0], z[1], z[2]]));
    let row = row_distribution(phi, layout.d)?;

    let per_edge: Vec<BTreeMap<ConstraintKey, Prob>> = match params.mode {
        ComposeMode::Enumerate => {
            let row = noisy_distribution(&row, params.eta)?;
            let support = u32::try_from(layout.r)
                .ok()
                .and_then(|r| row.support_size().checked_pow(r))
                .unwrap_or(usize::MAX);
            if support > params.per_edge_budget {
                return Err(GadgetError::BudgetExceeded {
                    support,
                    budget: params.per_edge_budget,
                });
            }
            let rows: Vec<(&Point, &Prob)> = row.entries().collect();
            lc.edges()
                .par_iter()
                .map(|e| enumerate_edge(&context(e, layout), &rows))
                .collect()
        }
        ComposeMode::Sample => {
            let sampler = NoisySampler::new(&row, params.eta)?;
            lc.edges()
                .par_iter()
                .enumerate()
                .map(|(i, e)| {
                    sample_edge(
                        &context(e, layout),
                        &sampler,
                        params.per_edge_budget,
                        rng::derive_seed(params.seed, i as u64),
                    )
                })
                .collect()
        }
    };

    let mut merged: BTreeMap<ConstraintKey, Prob> = BTreeMap::new();
    for m in per_edge {
        for (k, w) in m {
            *merged.entry(k).or_insert_with(Prob::zero) += w;
        }
    }
    let mut constraints: Vec<Constraint> = merged
        .into_iter()
        .map(|(key, w)| {
            let lits = key.map(|(index, sign)| Literal::new(index, sign));
            Constraint::new(lits, w.to_f64().expect("weight in range"), pred)
        })
        .collect();
    constraints.sort_by(Constraint::canonical_cmp);
    Ok(Instance::new(sizes, constraints)?)
}

fn context(edge: &Edge, layout: GadgetLayout) -> EdgeContext<'_> {
    EdgeContext {
        edge,
        layout,
        preimages: (0..layout.r).map(|t| edge.preimage(t)).collect(),
    }
}

fn enumerate_edge(ctx: &EdgeContext<'_>, rows: &[(&Point, &Prob)]) -> BTreeMap<ConstraintKey, Prob> {
    let mut out = BTreeMap::new();
    let mut choice = vec![0usize; ctx.layout.r];
    loop {
        let key = ctx.key(choice.iter().map(|&c| rows[c].0));
        let p: Prob = choice.iter().map(|&c| rows[c].1).product();
        *out.entry(key).or_insert_with(Prob::zero) += p;
        if !advance(&mut choice, rows.len()) {
            break;
        }
    }
    out
}

fn sample_edge(
    ctx: &EdgeContext<'_>,
    sampler: &NoisySampler,
    budget: usize,
    seed: u64,
) -> BTreeMap<ConstraintKey, Prob> {
    let mut rng = rng::seeded(seed);
    let mut counts: BTreeMap<ConstraintKey, usize> = BTreeMap::new();
    for _ in 0..budget {
        let rows: Vec<Point> = (0..ctx.layout.r).map(|_| sampler.sample(&mut rng)).collect();
        *counts.entry(ctx.key(rows.iter())).or_default() += 1;
    }
    let total = Prob::from_integer(budget.into());
    counts
        .into_iter()
        .map(|(k, c)| (k, Prob::from_integer(c.into()) / &total))
        .collect()
}

/// Dictator assignment from the planted labeling of `lc`.
pub fn dictator_assignment(lc: &LabelCoverInstance, inst: &Instance) -> Result<Assignment, GadgetError> {
    let labeling = lc.labeling().ok_or(GadgetError::MissingLabeling)?;
    dictator_assignment_with(lc, labeling, inst)
}

/// Assigns each folded point the coordinate picked by the vertex's label:
/// f_u(x) = x_{A(u)} and f_v(y) = y_{A(v)} on representatives; literal signs
/// extend this to f(−x) = −f(x).
pub fn dictator_assignment_with(
    lc: &LabelCoverInstance,
    labeling: &Labeling,
    inst: &Instance,
) -> Result<Assignment, GadgetError> {
    lc.check_labeling(labeling)?;
    let layout = GadgetLayout::of(lc);
    if inst.sizes() != layout.sizes() {
        return Err(GadgetError::LayoutMismatch {
            expected: layout.sizes(),
            found: inst.sizes(),
        });
    }
    let dr = layout.d * layout.r;
    let b1: Vec<Sign> = (0..layout.n_u)
        .flat_map(|u| {
            (0..layout.reps_u() as u64).map(move |c| point_from_code(c, layout.r)[labeling.u[u]])
        })
        .collect();
    let bv: Vec<Sign> = (0..layout.n_v)
        .flat_map(|v| (0..layout.reps_v() as u64).map(move |c| point_from_code(c, dr)[labeling.v[v]]))
        .collect();
    Ok(Assignment::new([b1, bv.clone(), bv]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{g_m, uniform_over, xor_support};
    use crate::gadget::make_label_cover;
    use crate::instances::evaluate;

    fn c() -> TupleDistribution {
        uniform_over(&xor_support()).unwrap()
    }

    #[test]
    fn smallest_composition() {
        let lc = make_label_cover(1, 1, 1, 1, 1, 3).unwrap();
        let inst = compose(&lc, &c(), &ComposeParams::default()).unwrap();
        assert_eq!(inst.sizes(), [1, 1, 1]);
        assert_eq!(inst.constraints().len(), 4);
        assert!(inst.constraints().iter().all(|c| c.weight == 0.25));
        let a = dictator_assignment(&lc, &inst).unwrap();
        assert_eq!(evaluate(&inst, &a).unwrap(), 1.0);
    }

    #[test]
    fn enumerate_completeness_and_edge_weights() {
        let lc = make_label_cover(2, 2, 2, 2, 2, 11).unwrap();
        let inst = compose(&lc, &c(), &ComposeParams::default()).unwrap();
        assert_eq!(inst.sizes(), [4, 16, 16]);
        assert_eq!(inst.total_weight(), lc.edges().len() as f64);
        let a = dictator_assignment(&lc, &inst).unwrap();
        assert_eq!(evaluate(&inst, &a).unwrap(), 1.0);
    }

    #[test]
    fn noisy_dictator_stays_close() {
        let lc = make_label_cover(2, 2, 2, 2, 2, 4).unwrap();
        let params = ComposeParams {
            eta: 0.05,
            per_edge_budget: 10_000,
            mode: ComposeMode::Sample,
            seed: 8,
        };
        let inst = compose(&lc, &c(), &params).unwrap();
        let a = dictator_assignment(&lc, &inst).unwrap();
        let v = evaluate(&inst, &a).unwrap();
        assert!(v >= 1.0 - 3.0 * 0.05, "{v}");
        assert!(v < 1.0);

        let exact = compose(&lc, &c(), &ComposeParams { eta: 0.05, mode: ComposeMode::Enumerate, per_edge_budget: 1 << 20, seed: 0 }).unwrap();
        let ve = evaluate(&exact, &dictator_assignment(&lc, &exact).unwrap()).unwrap();
        // three relevant coordinates, each flipped with probability η/2
        assert!((ve - (1.0 - 0.025f64).powi(3) - 3.0 * 0.025 * 0.025 * 0.975).abs() < 1e-12, "{ve}");
    }

    #[test]
    fn budget_and_balance_errors() {
        let lc = make_label_cover(2, 2, 1, 1, 1, 0).unwrap();
        let tight = ComposeParams {
            per_edge_budget: 10,
            ..ComposeParams::default()
        };
        assert!(matches!(
            compose(&lc, &c(), &tight),
            Err(GadgetError::BudgetExceeded { support: 64, budget: 10 })
        ));
        let g3 = uniform_over(&g_m(3)).unwrap();
        assert_eq!(
            compose(&lc, &g3, &ComposeParams::default()),
            Err(GadgetError::UnbalancedBase)
        );
    }

    #[test]
    fn broken_labeling_loses_value() {
        let lc = make_label_cover(2, 1, 2, 2, 1, 6).unwrap();
        assert_eq!(lc.edges().len(), 2);
        let inst = compose(&lc, &c(), &ComposeParams::default()).unwrap();
        let mut bad = lc.labeling().unwrap().clone();
        bad.u[0] = 1 - bad.u[0];
        assert_eq!(lc.satisfied_edges(&bad), 1);
        let a = dictator_assignment_with(&lc, &bad, &inst).unwrap();
        assert!(evaluate(&inst, &a).unwrap() < 1.0);
    }

    #[test]
    fn dictator_respects_folding() {
        let lc = make_label_cover(2, 2, 1, 1, 1, 2).unwrap();
        let inst = compose(&lc, &c(), &ComposeParams::default()).unwrap();
        let a = dictator_assignment(&lc, &inst).unwrap();
        let layout = GadgetLayout::of(&lc);
        let label = lc.labeling().unwrap().v[0];
        for code in 0..16u64 {
            let y = point_from_code(code, 4);
            let f = fold(&y);
            let value = f.sign * a.block(1)[layout.var_v(0, &f.rep) - 1];
            assert_eq!(value, y[label]);
        }
    }

    #[test]
    fn missing_labeling_and_layout() {
        let lc = make_label_cover(1, 1, 1, 1, 1, 0).unwrap();
        let plain = LabelCoverInstance::new(1, 1, 1, 1, lc.edges().to_vec(), None).unwrap();
        let inst = compose(&plain, &c(), &ComposeParams::default()).unwrap();
        assert_eq!(dictator_assignment(&plain, &inst), Err(GadgetError::MissingLabeling));
        let other = make_label_cover(2, 1, 1, 1, 1, 0).unwrap();
        assert!(matches!(
            dictator_assignment(&other, &inst),
            Err(GadgetError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn sample_mode_is_deterministic() {
        let lc = make_label_cover(1, 2, 2, 2, 1, 1).unwrap();
        let params = ComposeParams {
            eta: 0.1,
            per_edge_budget: 500,
            mode: ComposeMode::Sample,
            seed: 99,
        };
        assert_eq!(compose(&lc, &c(), &params).unwrap(), compose(&lc, &c(), &params).unwrap());
    }
}
