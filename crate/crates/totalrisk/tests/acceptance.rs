//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Everything runs in exact rational arithmetic unless stated otherwise.

mod common;

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use common::*;
use totalrisk::compensator::{
    check_projection_martingale, check_supermartingale, project, stopped_bound,
    supermartingale_process, total_risk,
};
use totalrisk::convex::{
    convex_order_vs_exponential, CheckpointKind, OrderWitness,
};
use totalrisk::distribution::Distribution;
use totalrisk::exact::{rat, rat_int, Rat};
use totalrisk::montecarlo::{
    density_from_spec, discrete_risk_law, discretize_density, empirical_shortfall,
    horizon_for_tail, ks_statistic, sample_natural_risk, shortfall_gap,
};
use totalrisk::process::RawIncreasingProcess;
use totalrisk::scenarios::kesten::{kesten_check, KestenInstance};
use totalrisk::scenarios::pivotal::{
    all_edges_rule, majority_rule, smallest_k_rule, value_match_rule, verify_scenario2_chain,
    PivotalModel,
};
use totalrisk::tree::{survival_comb, FiltrationSpec, ProbTree, RandomTime};

#[test]
fn criterion_1_exhaustive_oracle_suite() {
    let started = Instant::now();

    let mut trees: Vec<(ProbTree<Rat>, usize)> = Vec::new(); // (tree, horizon)
    for depth in 1..=3usize {
        let limit = if depth == 3 { 40 } else { usize::MAX };
        let horizon = if depth == 3 { 3 } else { depth + 1 };
        for (i, shape) in shapes(depth, 3, limit).iter().enumerate() {
            for salt in 0..2 {
                trees.push((tree_of_shape(shape, 5 * i + salt), horizon));
            }
        }
    }

    let mut cases: Vec<(usize, FiltrationSpec, RandomTime)> = Vec::new();
    for (tree_idx, (tree, horizon)) in trees.iter().enumerate() {
        for filtration in all_filtrations(tree.depth(), *horizon) {
            for z in z_patterns(tree, *horizon, true) {
                cases.push((tree_idx, filtration.clone(), z));
            }
        }
    }
    assert!(
        cases.len() >= 10_000,
        "structured sample too small: {}",
        cases.len()
    );

    cases.par_iter().for_each(|(tree_idx, filtration, z)| {
        let tree = &trees[*tree_idx].0;
        let (_, law) = total_risk(tree, filtration, z, true).expect("total risk");
        assert_eq!(law.mean(), exact_one(), "mean(Y) must be exactly 1");
        let report = convex_order_vs_exponential(&law, &exact_zero(), &[]).expect("order check");
        assert!(
            report.holds,
            "convex order vs exponential failed: {report:?} (levels {:?})",
            filtration.levels()
        );
    });

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() <= 120,
        "oracle suite exceeded 2 minutes: {elapsed:?}"
    );
    println!(
        "acceptance criterion 1 (exhaustive oracle suite, {} cases in {:.1?}): PASS",
        cases.len(),
        elapsed
    );
}

#[test]
fn criterion_2_hand_derived_fixture() {
    let (tree, filtration, z) = survival_comb(&[rat(1, 2), rat(1, 2)]).unwrap();
    let (_, law) = total_risk(&tree, &filtration, &z, true).unwrap();
    assert_eq!(
        law.support(),
        &[(rat(1, 2), rat(1, 2)), (rat(3, 2), rat(1, 2))],
        "law must be exactly {{1/2: 1/2, 3/2: 1/2}}"
    );
    assert_eq!(law.shortfall(&rat(1, 2)), rat(1, 2));
    // 1/2 ≤ e^{−1/2}, certified
    let report = convex_order_vs_exponential(&law, &exact_zero(), &[rat(1, 2)]).unwrap();
    assert!(report.holds);

    let a = RawIncreasingProcess::indicator_of_time(&tree, &z, 2);
    let sb = stopped_bound(&tree, &filtration, &a, &rat_int(1), &exact_zero()).unwrap();
    assert_eq!(sb.rhs, rat(1, 4), "rhs must be exactly 1/4");
    assert_eq!(sb.terminal_shortfall, rat(1, 4), "E(Y−1)⁺ must be exactly 1/4");
    assert!(sb.rhs_matches_terminal);
    assert!(sb.holds, "1/4 ≤ e^{{-1}} must be certified");
    println!("acceptance criterion 2 (hand-derived two-point fixture): PASS");
}

#[test]
fn criterion_3_supermartingale_and_martingale_fleet() {
    let started = Instant::now();
    let instances: Vec<u64> = (0..1000).collect();
    instances.par_iter().for_each(|&i| {
        let mut rng = fleet_rng(0x5EED_3000 + i);
        let tree = random_tree(&mut rng, 4, 3);
        let horizon = rng.random_range(2..=4usize);
        let filtration = random_filtration(&mut rng, tree.depth(), horizon);
        let a = random_increasing_process(&mut rng, &tree, horizon);
        let m = supermartingale_process(&tree, &filtration, &a).unwrap();
        let sm = check_supermartingale(&tree, &filtration, &m, &exact_zero());
        assert!(sm.holds, "instance {i}: supermartingale margin < 0: {sm:?}");
        let pair = project(&tree, &filtration, &a).unwrap();
        let pm = check_projection_martingale(&tree, &filtration, &pair, &exact_zero());
        assert!(pm.holds, "instance {i}: martingale deviation ≠ 0: {pm:?}");
        assert_eq!(pm.worst_margin, 0.0, "instance {i}: deviation must be ≡ 0");
    });
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() <= 60, "fleet exceeded 1 minute: {elapsed:?}");
    println!(
        "acceptance criterion 3 (supermartingale + martingale on 1000 random instances in {:.1?}): PASS",
        elapsed
    );
}

#[test]
fn criterion_4_extreme_filtrations_give_unit_risk() {
    for i in 0..100u64 {
        let mut rng = fleet_rng(0x5EED_4000 + i);
        let tree = random_tree(&mut rng, 3, 3);
        let horizon = rng.random_range(2..=4usize);
        let z = random_time(&mut rng, &tree, horizon, 0);
        for filtration in [
            FiltrationSpec::trivial(horizon),
            FiltrationSpec::full(tree.depth(), horizon),
        ] {
            let (_, law) = total_risk(&tree, &filtration, &z, true).unwrap();
            assert_eq!(
                law.support(),
                &[(exact_one(), exact_one())],
                "instance {i}: Y must be the point mass at 1"
            );
        }
    }
    println!("acceptance criterion 4 (trivial and full filtrations give Y ≡ 1, 100 pairs): PASS");
}

#[test]
fn criterion_5_natural_filtration_monte_carlo() {
    let families = [
        serde_json::json!({"family": "exponential", "rate": 1.0}),
        serde_json::json!({"family": "uniform"}),
        serde_json::json!({"family": "weibull", "shape": 1.5, "scale": 1.0}),
    ];
    let lambdas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let n = 1_000_000usize;
    for spec in &families {
        let density = density_from_spec(spec).unwrap();
        for seed in 1..=5u64 {
            let started = Instant::now();
            let batch = sample_natural_risk(density.as_ref(), n, seed).unwrap();
            let mean = batch.mean();
            assert!(
                (mean - 1.0).abs() <= 0.004,
                "{} seed {seed}: mean {mean} outside 1 ± 0.004",
                batch.density
            );
            let ks = ks_statistic(&batch).unwrap();
            assert!(
                ks <= 0.00163,
                "{} seed {seed}: KS {ks} above 0.00163",
                batch.density
            );
            for point in empirical_shortfall(&batch, &lambdas) {
                assert!(
                    point.within_band(),
                    "{} seed {seed}: shortfall at λ={} exceeds e^(−λ) + half-width",
                    batch.density,
                    point.lambda
                );
            }
            let elapsed = started.elapsed();
            assert!(
                elapsed.as_secs() <= 30,
                "{} seed {seed}: batch exceeded 30 s: {elapsed:?}",
                batch.density
            );
        }
    }
    println!("acceptance criterion 5 (natural-filtration Monte Carlo, 15 batches of 10^6): PASS");
}

#[test]
fn criterion_6_discretization_convergence() {
    let density = density_from_spec(&serde_json::json!({"family": "exponential", "rate": 1.0}))
        .unwrap();
    let horizon = horizon_for_tail(density.as_ref());
    let meshes = [0.25, 0.0625, 0.015625, 0.00390625];
    let lambdas = [0.5, 1.0, 2.0];

    // dual route at the coarsest mesh: closed-form comb law == tree total risk
    let (tree, filtration, z) = discretize_density(density.as_ref(), meshes[0], horizon).unwrap();
    let (_, tree_law) = total_risk(&tree, &filtration, &z, true).unwrap();
    let closed = discrete_risk_law(density.as_ref(), meshes[0], horizon).unwrap();
    assert_eq!(tree_law.support().len(), closed.support().len());
    for (a, b) in tree_law.support().iter().zip(closed.support()) {
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-14);
    }

    let mut previous: Option<Vec<f64>> = None;
    let mut final_gaps = Vec::new();
    for &mesh in &meshes {
        let law = discrete_risk_law(density.as_ref(), mesh, horizon).unwrap();
        let gaps: Vec<f64> = lambdas.iter().map(|&l| shortfall_gap(&law, l)).collect();
        for (li, &gap) in gaps.iter().enumerate() {
            assert!(gap >= 0.0, "negative gap at mesh {mesh}, λ={}", lambdas[li]);
            if let Some(prev) = &previous {
                assert!(
                    gap <= prev[li] + 1e-12,
                    "gap not nonincreasing at mesh {mesh}, λ={}",
                    lambdas[li]
                );
            }
        }
        final_gaps = gaps.clone();
        previous = Some(gaps);
    }
    assert!(
        final_gaps.iter().all(|&g| g < 0.01),
        "final-mesh gaps not below 0.01: {final_gaps:?}"
    );
    println!("acceptance criterion 6 (discretization convergence over 4 meshes): PASS");
}

#[test]
fn criterion_7_pivotal_models() {
    let bernoulli = |m: usize, p: Rat| -> Vec<Vec<(Rat, Rat)>> {
        (0..m)
            .map(|_| {
                vec![
                    (rat_int(0), rat_int(1) - p.clone()),
                    (rat_int(1), p.clone()),
                ]
            })
            .collect()
    };
    let ternary = |m: usize| -> Vec<Vec<(Rat, Rat)>> {
        (0..m)
            .map(|_| {
                vec![
                    (rat_int(1), rat(1, 3)),
                    (rat_int(2), rat(1, 3)),
                    (rat_int(3), rat(1, 3)),
                ]
            })
            .collect()
    };
    let models = vec![
        PivotalModel::new(bernoulli(4, rat(1, 2)), 4, all_edges_rule(), None).unwrap(),
        PivotalModel::new(bernoulli(6, rat(1, 2)), 6, majority_rule(rat_int(1), 4), None).unwrap(),
        PivotalModel::new(ternary(5), 2, smallest_k_rule(2), None).unwrap(),
        PivotalModel::new(bernoulli(12, rat(1, 3)), 12, value_match_rule(rat_int(1)), None)
            .unwrap(),
    ];
    let grid = [rat_int(1), rat(3, 2), rat_int(2), rat_int(3)];
    for model in &models {
        let report = verify_scenario2_chain(model, &grid, &exact_zero()).unwrap();
        assert_eq!(
            report.cap_exceeded_probability, 0.0,
            "{}: fleet models keep |S| ≤ K surely",
            model.rule_name()
        );
        assert!(
            report.chain.holds,
            "{}: pointwise chain failed: {:?}",
            model.rule_name(),
            report.chain
        );
        for (j, order) in report.order_checks.iter().enumerate() {
            assert!(
                order.holds,
                "{}: Y_{} failed the exponential order check",
                model.rule_name(),
                j + 1
            );
        }
        for tail in &report.tail_checks {
            assert!(tail.holds, "{}: {:?}", model.rule_name(), tail);
        }
        assert!(report.holds);
    }
    println!(
        "acceptance criterion 7 (pivotal chains on {} exhaustively enumerated models): PASS",
        models.len()
    );
}

#[test]
fn criterion_8_kesten_fleet() {
    let t_choices = [rat_int(1), rat(3, 2), rat_int(2)];
    let r_choices = [rat(1, 2), rat_int(1), rat(3, 2), rat_int(2), rat_int(3), rat_int(4)];
    let instances: Vec<u64> = (0..500).collect();
    instances.par_iter().for_each(|&i| {
        let mut rng = fleet_rng(0x5EED_8000 + i);
        let tree = random_tree(&mut rng, 4, 3);
        let horizon = rng.random_range(2..=4usize);
        let filtration = random_filtration(&mut rng, tree.depth(), horizon);
        let rows = random_adapted_rows(&mut rng, &tree, &filtration);
        let t_threshold = t_choices[(i as usize) % t_choices.len()].clone();
        let r_threshold = r_choices[(i as usize) % r_choices.len()].clone();
        let instance = KestenInstance::from_leaf_rows(
            tree,
            filtration,
            &rows,
            r_threshold,
            t_threshold,
        )
        .unwrap();
        let report = kesten_check(&instance, &exact_zero()).unwrap();
        assert!(
            report.holds,
            "instance {i}: joint probability {} above e^(1−R/T) = {}",
            report.joint_probability, report.bound
        );
        assert!(report.rescaled_tail.holds, "instance {i}: rescaled route failed");
        assert!(report.routes_agree);
    });

    // trivial regimes
    let (tree, filtration, _) = survival_comb(&[rat(1, 2), rat(1, 2)]).unwrap();
    let rows = vec![vec![rat(1, 2), rat(1, 2)]; tree.leaf_count()];
    let vacuous = KestenInstance::from_leaf_rows(
        tree.clone(),
        filtration.clone(),
        &rows,
        rat(1, 2),
        rat_int(2),
    )
    .unwrap();
    let report = kesten_check(&vacuous, &exact_zero()).unwrap();
    assert!(report.bound >= 1.0 && report.holds, "R ≤ T is vacuous");
    let rows = vec![vec![rat_int(1), rat_int(1)]; tree.leaf_count()];
    let empty = KestenInstance::from_leaf_rows(tree, filtration, &rows, rat_int(3), rat_int(1))
        .unwrap();
    let report = kesten_check(&empty, &exact_zero()).unwrap();
    assert_eq!(report.joint_probability, rat_int(0), "event must be empty");
    assert!(report.holds);
    println!("acceptance criterion 8 (joint tail bound on 500 random instances + 2 regimes): PASS");
}

#[test]
fn criterion_9_negative_controls() {
    // heavy tail: rejected, deepest witness at ln 10, user grid λ = 5 flagged
    let heavy = Distribution::from_pairs(vec![
        (rat_int(0), rat(9, 10)),
        (rat_int(10), rat(1, 10)),
    ])
    .unwrap();
    let report = convex_order_vs_exponential(&heavy, &exact_zero(), &[rat_int(5)]).unwrap();
    assert!(!report.holds);
    match report.witness {
        Some(OrderWitness::Lambda { lambda }) => {
            assert!((lambda - 10f64.ln()).abs() < 1e-12)
        }
        other => panic!("unexpected witness {other:?}"),
    }
    let at_five = report
        .checkpoints
        .iter()
        .find(|c| c.kind == CheckpointKind::UserGrid && c.lambda == 5.0)
        .expect("user checkpoint at λ = 5");
    assert!(!at_five.ok, "λ = 5 must witness the violation");
    assert!((at_five.shortfall - 0.5).abs() < 1e-15);

    // wrong means: rejected either way; a mean below 1 keeps every shortfall
    // margin positive, so only the mean witness can flag it
    let low = Distribution::from_pairs(vec![(rat_int(0), rat(1, 2)), (rat_int(1), rat(1, 2))])
        .unwrap();
    let r = convex_order_vs_exponential(&low, &exact_zero(), &[]).unwrap();
    assert!(!r.holds && !r.mean_ok);
    assert!(matches!(r.witness, Some(OrderWitness::Mean { .. })));
    // a mean above 1 already breaks the λ = 0 margin (shortfall there is the mean)
    let high = Distribution::from_pairs(vec![(rat_int(1), rat(1, 2)), (rat_int(3), rat(1, 2))])
        .unwrap();
    let r = convex_order_vs_exponential(&high, &exact_zero(), &[]).unwrap();
    assert!(!r.holds && !r.mean_ok);
    assert!(matches!(r.witness, Some(OrderWitness::Lambda { lambda }) if lambda == 0.0));
    println!(
        "acceptance criterion 9 (negative controls; CLI exit codes covered by the cli crate's acceptance tests): PASS"
    );
}
