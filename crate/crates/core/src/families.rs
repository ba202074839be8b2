//! Instance families for gap experiments.
//!
//! * `planted(ε)`: a hidden assignment satisfies every XOR constraint, then
//!   exactly round(ε·m) right-hand sides are flipped.
//! * `random-uniform`: uniformly random literals, all constraints C.
//! * `composed-gadget`: the dictatorship test composed with a random
//!   Label-Cover instance carrying a planted perfect labeling.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::distributions::{uniform_over, xor_support};
use crate::gadget::{
    compose, dictator_assignment, make_label_cover, ComposeMode, ComposeParams, GadgetError,
    LabelCoverInstance,
};
use crate::instances::{Assignment, Constraint, Instance, InstanceError, Literal, Predicate3};
use crate::rng::{self, Rng};
use crate::sign::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum Family {
    Planted {
        eps: f64,
    },
    RandomUniform,
    ComposedGadget {
        r: usize,
        d: usize,
        n_u: usize,
        n_v: usize,
        degree: usize,
        eta: f64,
        enumerate: bool,
        budget: usize,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Planted { .. } => "planted",
            Family::RandomUniform => "random-uniform",
            Family::ComposedGadget { .. } => "composed-gadget",
        }
    }
}

/// A family plus the instance shape and how many instances to draw. Sizes
/// and constraint counts are ignored by the gadget family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(flatten)]
    pub family: Family,
    pub sizes: [usize; 3],
    pub constraints: usize,
    pub count: usize,
}

/// One generated instance with whatever certificate the family provides.
#[derive(Debug, Clone)]
pub struct Generated {
    pub id: String,
    pub instance: Instance,
    /// Planted assignment or dictator assignment, when known.
    pub witness: Option<Assignment>,
    pub label_cover: Option<LabelCoverInstance>,
    /// Metadata lines for `c` comments.
    pub comments: Vec<String>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("invalid family parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

fn random_sign(rng: &mut Rng) -> Sign {
    if rng.random::<bool>() {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

fn check_shape(sizes: [usize; 3], m: usize) -> Result<(), FamilyError> {
    if sizes.contains(&0) || m == 0 {
        return Err(FamilyError::InvalidParams(
            "block sizes and constraint count must be positive".into(),
        ));
    }
    Ok(())
}

/// Planted XOR instance; returns the instance and the hidden assignment.
pub fn planted(
    sizes: [usize; 3],
    m: usize,
    eps: f64,
    seed: u64,
) -> Result<(Instance, Assignment), FamilyError> {
    check_shape(sizes, m)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(FamilyError::InvalidParams(format!("ε = {eps} is outside [0, 1]")));
    }
    let mut rng = rng::seeded(seed);
    let hidden = Assignment::uniform(sizes, &mut rng);
    let mut constraints: Vec<Constraint> = (0..m)
        .map(|_| {
            let idx = sizes.map(|n| rng.random_range(1..=n));
            let s1 = random_sign(&mut rng);
            let s2 = random_sign(&mut rng);
            let vals = [0, 1, 2].map(|b| hidden.block(b)[idx[b] - 1]);
            let s3 = s1 * vals[0] * s2 * vals[1] * vals[2];
            Constraint::xor([
                Literal::new(idx[0], s1),
                Literal::new(idx[1], s2),
                Literal::new(idx[2], s3),
            ])
        })
        .collect();
    let corrupt = (eps * m as f64).round() as usize;
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    for &i in &order[..corrupt] {
        constraints[i].pred = Predicate3::XOR_ODD;
    }
    Ok((Instance::new(sizes, constraints)?, hidden))
}

/// Uniformly random C-constraints.
pub fn random_uniform(sizes: [usize; 3], m: usize, seed: u64) -> Result<Instance, FamilyError> {
    check_shape(sizes, m)?;
    let mut rng = rng::seeded(seed);
    let constraints = (0..m)
        .map(|_| {
            let lits = [0, 1, 2].map(|b| Literal::new(rng.random_range(1..=sizes[b]), random_sign(&mut rng)));
            Constraint::xor(lits)
        })
        .collect();
    Ok(Instance::new(sizes, constraints)?)
}

/// Instance `index` of a family, drawn with its own seed.
pub fn generate(spec: &FamilySpec, index: usize, seed: u64) -> Result<Generated, FamilyError> {
    let id = format!("{}-{index:03}", spec.family.name());
    let mut comments = vec![
        format!("family {}", spec.family.name()),
        format!("seed {seed}"),
    ];
    match spec.family {
        Family::Planted { eps } => {
            let (instance, hidden) = planted(spec.sizes, spec.constraints, eps, seed)?;
            comments.push(format!("eps {eps}"));
            Ok(Generated {
                id,
                instance,
                witness: Some(hidden),
                label_cover: None,
                comments,
            })
        }
        Family::RandomUniform => Ok(Generated {
            id,
            instance: random_uniform(spec.sizes, spec.constraints, seed)?,
            witness: None,
            label_cover: None,
            comments,
        }),
        Family::ComposedGadget {
            r,
            d,
            n_u,
            n_v,
            degree,
            eta,
            enumerate,
            budget,
        } => {
            let lc = make_label_cover(r, d, n_u, n_v, degree, seed)?;
            let phi = uniform_over(&xor_support()).expect("C is nonempty");
            let params = ComposeParams {
                eta,
                per_edge_budget: budget,
                mode: if enumerate {
                    ComposeMode::Enumerate
                } else {
                    ComposeMode::Sample
                },
                seed: rng::derive_seed(seed, 1),
            };
            let instance = compose(&lc, &phi, &params)?;
            let witness = dictator_assignment(&lc, &instance)?;
            comments.push(format!("R {r} d {d} nU {n_u} nV {n_v} degree {degree} eta {eta}"));
            Ok(Generated {
                id,
                instance,
                witness: Some(witness),
                label_cover: Some(lc),
                comments,
            })
        }
    }
}
