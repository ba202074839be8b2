use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

use xorgap::distributions::{
    check_pairwise_independent, disguise, prob, DisguiseSpec, TupleDistribution,
};
use xorgap::fourier::{degree_slice, instance_objective, lookup, to_f64, Block, Var};
use xorgap::instances::{evaluate, Assignment, Constraint, Instance, Literal, Predicate3};
use xorgap::oracle::brute_force;
use xorgap::pipeline::{bilinearize, condition};
use xorgap::sdp::{solve_relaxation, QuadraticObjective, SdpConfig};
use xorgap::sign::{all_points, Point, Sign};

fn sign(b: bool) -> Sign {
    if b {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

fn instance(sizes: [usize; 3], max_cons: usize) -> impl Strategy<Value = Instance> {
    let lit = |n: usize| (1..=n, any::<bool>()).prop_map(|(i, s)| Literal::new(i, sign(s)));
    let cons = (lit(sizes[0]), lit(sizes[1]), lit(sizes[2]), any::<u8>(), 1u32..8)
        .prop_map(|(a, b, c, mask, w)| Constraint::new([a, b, c], f64::from(w) / 4.0, Predicate3(mask)));
    proptest::collection::vec(cons, 1..=max_cons).prop_map(move |cs| Instance::new(sizes, cs).unwrap())
}

fn xor_instance(sizes: [usize; 3], max_cons: usize) -> impl Strategy<Value = Instance> {
    instance(sizes, max_cons).prop_map(|inst| {
        let cs = inst
            .constraints()
            .iter()
            .map(|c| {
                let pred = if c.pred.mask().count_ones() % 2 == 0 {
                    Predicate3::XOR_EVEN
                } else {
                    Predicate3::XOR_ODD
                };
                Constraint::new(c.lits, c.weight, pred)
            })
            .collect();
        Instance::new(inst.sizes(), cs).unwrap()
    })
}

fn all_assignments(sizes: [usize; 3]) -> impl Iterator<Item = Assignment> {
    all_points(sizes.iter().sum()).map(move |p| Assignment::from_flat(sizes, &p))
}

/// I3 with x23_k := a2·a3 for the pair behind k.
fn bilinear_value(inst: &Instance, a: &Assignment) -> (BigRational, BigRational) {
    let i3 = degree_slice(&instance_objective(inst), 3);
    let b = bilinearize(&i3).unwrap();
    let direct = i3.eval_exact_with(lookup(a)).unwrap();
    let via = b
        .i2
        .eval_exact_with(|v: Var| match v.block {
            Block::Pair => {
                let (j, l) = b.pairs[v.index - 1];
                Some(a.block(1)[j - 1] * a.block(2)[l - 1])
            }
            _ => lookup(a)(v),
        })
        .unwrap();
    (direct, via)
}

#[test]
fn bilinearize_preserves_values_exhaustively_on_222() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..50 {
        let inst = instance([2, 2, 2], 8).new_tree(&mut runner).unwrap().current();
        for a in all_assignments([2, 2, 2]) {
            let (direct, via) = bilinear_value(&inst, &a);
            assert_eq!(direct, via);
        }
    }
}

#[test]
fn condition_commutes_with_evaluation_exhaustively_on_222() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..50 {
        let inst = instance([2, 2, 2], 8).new_tree(&mut runner).unwrap().current();
        let i3 = degree_slice(&instance_objective(&inst), 3);
        for f1 in all_points(2) {
            let c = condition(&i3, &f1).unwrap();
            for rest in all_points(4) {
                let a = Assignment::new([f1.clone(), rest[..2].to_vec(), rest[2..].to_vec()]);
                assert_eq!(
                    c.eval_exact_with(lookup(&a)).unwrap(),
                    i3.eval_exact_with(lookup(&a)).unwrap()
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bilinearize_and_condition_on_larger_instances(
        inst in instance([5, 6, 4], 40),
        bits in proptest::collection::vec(any::<bool>(), 15),
    ) {
        let a = Assignment::from_flat(inst.sizes(), &bits.iter().map(|&b| sign(b)).collect::<Vec<_>>());
        let (direct, via) = bilinear_value(&inst, &a);
        prop_assert_eq!(&direct, &via);
        let i3 = degree_slice(&instance_objective(&inst), 3);
        let c = condition(&i3, a.block(0)).unwrap();
        prop_assert_eq!(c.eval_exact_with(lookup(&a)).unwrap(), direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_matches_evaluate(inst in instance([2, 2, 2], 10)) {
        let obj = instance_objective(&inst);
        for a in all_assignments([2, 2, 2]) {
            let v = to_f64(&obj.eval_exact_with(lookup(&a)).unwrap());
            prop_assert!((v - evaluate(&inst, &a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_dominates_and_is_invariant(
        inst in instance([3, 3, 3], 20),
        factor in 1u32..50,
        block in 0usize..3,
    ) {
        let opt = brute_force(&inst).unwrap().optimum;
        for a in all_assignments([3, 3, 3]).step_by(7) {
            prop_assert!(evaluate(&inst, &a).unwrap() <= opt + 1e-12);
        }
        let scaled = inst.scaled(f64::from(factor) / 8.0).unwrap();
        prop_assert!((brute_force(&scaled).unwrap().optimum - opt).abs() < 1e-12);
        let flipped: Vec<Constraint> = inst
            .constraints()
            .iter()
            .map(|c| {
                let mut lits = c.lits;
                lits[block].sign = -lits[block].sign;
                Constraint::new(lits, c.weight, c.pred)
            })
            .collect();
        let flipped = Instance::new(inst.sizes(), flipped).unwrap();
        prop_assert!((brute_force(&flipped).unwrap().optimum - opt).abs() < 1e-12);
    }

    #[test]
    fn xor_optimum_is_at_least_one_half(inst in xor_instance([3, 2, 3], 16)) {
        prop_assert!(brute_force(&inst).unwrap().optimum >= 0.5 - 1e-12);
    }

    #[test]
    fn relaxation_dominates_sign_optimum(
        n in 2usize..=12,
        raw in proptest::collection::vec((0usize..12, 0usize..12, -4i32..=4), 1..30),
        seed in any::<u64>(),
    ) {
        let mut q = QuadraticObjective::new(n);
        for (i, j, a) in raw {
            let (i, j) = (i % n, j % n);
            if i != j && a != 0 {
                q.add(i, j, f64::from(a) / 2.0).unwrap();
            }
        }
        prop_assume!(!q.is_zero());
        let best = all_points(n).map(|x| q.value(&x)).fold(f64::NEG_INFINITY, f64::max);
        let relax = solve_relaxation(&q, &SdpConfig { seed, ..SdpConfig::default() }).unwrap();
        prop_assert!(relax.value >= best - 1e-6, "{} < {}", relax.value, best);
    }

    #[test]
    fn mixtures_agree_with_brute_force_marginals(
        w in 1i64..8,
        split in 1usize..7,
        gamma_num in 1i64..4,
    ) {
        let points: Vec<Point> = all_points(3).collect();
        let (left, right) = points.split_at(split);
        let comp = |set: &[Point]| {
            TupleDistribution::new(
                3,
                set.iter().map(|z| (z.clone(), prob(1, set.len() as i64))),
            )
            .unwrap()
        };
        let mix = disguise(&DisguiseSpec::new(vec![
            (prob(w, 8), comp(left)),
            (prob(8 - w, 8), comp(right)),
        ]))
        .unwrap();
        let gamma = prob(gamma_num, 4);
        let mut holds = true;
        for i in 0..3 {
            let m: BigRational = mix
                .entries()
                .filter(|(z, _)| z[i] == Sign::Plus)
                .map(|(_, p)| p.clone())
                .fold(BigRational::zero(), |a, b| a + b);
            holds &= m == gamma;
            for j in i + 1..3 {
                let pm: BigRational = mix
                    .entries()
                    .filter(|(z, _)| z[i] == Sign::Plus && z[j] == Sign::Plus)
                    .map(|(_, p)| p.clone())
                    .fold(BigRational::zero(), |a, b| a + b);
                holds &= pm == &gamma * &gamma;
            }
        }
        let verdict = check_pairwise_independent(&mix, gamma_num as f64 / 4.0, 0.0).unwrap();
        prop_assert_eq!(verdict.holds, holds);
    }
}
