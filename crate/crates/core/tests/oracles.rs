//! Known-answer checks: closed forms, exhaustive enumerations and Monte Carlo bounds.

use num_traits::ToPrimitive;
use qrobust::boolfn::{BitFunction, BooleanFunction, SymmetricFunction};
use qrobust::harness::{run, ExperimentConfig};
use qrobust::noisysim::{NoisyOracleSet, OracleView, QueryLedger};
use qrobust::poly::{
    amplification_poly, expectation_enumerate, stretched_amplification, MultilinearPoly, Node, PolyExpr, UnivariatePoly,
};
use qrobust::qsearch::{grover_robust, run_backend, ContractFinder, RobustFindParams, RobustFinder, StatevectorFinder};
use qrobust::recover::{
    all_inputs, classical_direct_sum_repetitions, classical_parity_baseline, compute_function_robust, score_recovery,
    symmetric_robust, RecoverKnobs,
};
use qrobust::robustness::{
    boost_type1, certificate_robustify, check_type2_grid, check_type2_vertex, estimate_type1, exact_type1_failure,
    type1_to_type2, PerturbationSpec, Type1Options,
};
use qrobust::scalar::exp_neg_bounds;
use qrobust::{Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(a: i64, b: i64) -> Rational {
    Rational::from_ratio(a, b)
}

fn dictator() -> BooleanFunction {
    BooleanFunction::from_fn(1, |i| i == 1).unwrap()
}

fn random_multilinear(nv: usize, terms: usize, rng: &mut ChaCha8Rng) -> MultilinearPoly<f64> {
    let mut p = MultilinearPoly::zero(nv);
    for _ in 0..terms {
        let mask = rng.random_range(0..1u64 << nv);
        p.add_term(qrobust::poly::Monomial::from_mask(mask), rng.random_range(-1.0..1.0)).unwrap();
    }
    p
}

#[test]
fn stretched_amplification_at_two_fifths() {
    let h = stretched_amplification::<Rational>(49).unwrap();
    let v = h.eval(&[q(2, 5)]).unwrap();
    let (lo, _) = exp_neg_bounds(&q(49, 648));
    assert!(v <= lo, "{}", v.to_f64().unwrap());
}

#[test]
fn composition_matches_cross_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(167);
    let p = random_multilinear(3, 6, &mut rng);
    let inner: Vec<UnivariatePoly<f64>> =
        (0..3).map(|_| UnivariatePoly::new((0..4).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
    let args = inner.iter().map(|u| Node::Univariate { poly: u.clone(), arg: Box::new(Node::Var(0)) }).collect();
    let composed = PolyExpr::new(1, Node::Multilinear { poly: p.clone(), args });
    for _ in 0..100 {
        let z: f64 = rng.random();
        let vals: Vec<f64> = inner.iter().map(|u| u.eval(&z)).collect();
        let want = p.eval(&vals).unwrap();
        assert!((composed.eval(&[z]).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn copy_rows_flip_at_the_stated_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(227);
    let x = vec![true, false, true, false];
    let set = NoisyOracleSet::copies_with_m(x.clone(), 0.1, 1000, &mut rng).unwrap();
    for (i, &xi) in x.iter().enumerate() {
        let rate = set.bit_error(i);
        assert!((rate - 0.1).abs() <= 0.03, "row {i} (x={xi}) flip rate {rate}");
    }
}

#[test]
fn copy_rows_rarely_drift_past_twice_eps() {
    let mut rng = ChaCha8Rng::seed_from_u64(427);
    let x: Vec<bool> = (0..16).map(|i| i % 2 == 0).collect();
    let (mut bad, mut rows) = (0u32, 0u32);
    for _ in 0..1000 {
        let set = NoisyOracleSet::copies(x.clone(), 0.05, 1.0, &mut rng).unwrap();
        for i in 0..16 {
            bad += (set.bit_error(i) > 0.1) as u32;
            rows += 1;
        }
    }
    assert!((bad as f64 / rows as f64) <= 0.01 + 0.005, "{bad}/{rows}");
}

#[test]
fn grid_never_contradicts_vertex() {
    let mut rng = ChaCha8Rng::seed_from_u64(244);
    for _ in 0..50 {
        let n = rng.random_range(1..=4usize);
        let table: Vec<bool> = (0..1usize << n).map(|_| rng.random_bool(0.5)).collect();
        let f = BooleanFunction::from_table(n, table).unwrap();
        let p = random_multilinear(n, 5, &mut rng);
        let eps = rng.random_range(0.0..0.3);
        let vertex = check_type2_vertex(&p, &f, &eps, &(1.0 / 3.0)).unwrap();
        let grid = check_type2_grid(&PolyExpr::from_multilinear(p), &f, &eps, 4, &1e-9).unwrap();
        assert!(grid.max_error <= vertex.max_error + 1e-9);
        assert!(grid.passed || !vertex.passed);
    }
}

#[test]
fn amplified_dictator_is_robust_at_one_third() {
    let h = PolyExpr::from_univariate(amplification_poly::<f64>(25).unwrap());
    assert!(check_type2_grid(&h, &dictator(), &(1.0 / 3.0), 9, &1e-9).unwrap().passed);
}

#[test]
fn lifted_parity_fails_type1_at_point_three() {
    let f = BooleanFunction::named("parity", 2).unwrap();
    let p = qrobust::poly::exact_multilinear::<Rational>(&f).unwrap();
    // failure needs exactly one of the two bits flipped: 2 * 0.3 * 0.7
    assert_eq!(exact_type1_failure(&p, &f, 1, &q(3, 10)).unwrap(), q(21, 50));
    let mut rng = ChaCha8Rng::seed_from_u64(254);
    let noise = PerturbationSpec::new(0.3, 1).unwrap();
    let rep = estimate_type1(&PolyExpr::from_multilinear(p.to_f64()), &f, &noise, Type1Options::default(), &mut rng).unwrap();
    assert!(!rep.passed);
    assert!((rep.failure_rate.unwrap() - 0.42).abs() < 0.06);
}

#[test]
fn majority_vote_over_copies_is_type1_robust() {
    let m = 25;
    let mean = Node::mean((0..m).map(Node::Var).collect());
    let p = PolyExpr::new(m, Node::amplify(25, mean));
    let mut rng = ChaCha8Rng::seed_from_u64(255);
    let noise = PerturbationSpec::new(0.1, m).unwrap();
    assert!(estimate_type1(&p, &dictator(), &noise, Type1Options::default(), &mut rng).unwrap().passed);
}

#[test]
fn boosted_parity_meets_delta() {
    let f = BooleanFunction::named("parity", 2).unwrap();
    let p = PolyExpr::from_multilinear(qrobust::poly::exact_multilinear::<f64>(&f).unwrap());
    let noise = PerturbationSpec::new(0.05, 1).unwrap();
    let boosted = boost_type1(&p, 2, 0.05, &noise).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(264);
    let big = PerturbationSpec::new(0.05, boosted.m_prime).unwrap();
    let mut worst = 0.0f64;
    for xi in 0..4usize {
        let x = [xi & 1 == 1, xi & 2 == 2];
        let fx = f.eval_bits(&x) as u8 as f64;
        let mut fails = 0u32;
        let mut y = vec![0.0; 2 * boosted.m_prime];
        for _ in 0..2500 {
            for (i, &b) in x.iter().enumerate() {
                for j in 0..boosted.m_prime {
                    y[i * boosted.m_prime + j] = (b ^ rng.random_bool(big.epsilon)) as u8 as f64;
                }
            }
            fails += ((boosted.expr.eval(&y).unwrap() - fx).abs() > 1.0 / 3.0) as u32;
        }
        worst = worst.max(fails as f64 / 2500.0);
    }
    assert!(worst <= 0.05, "worst failure rate {worst}");
}

#[test]
fn type1_to_type2_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(281);
    for _ in 0..100 {
        let n = rng.random_range(1..=3usize);
        let m = rng.random_range(1..=12 / n);
        let p = random_multilinear(n * m, 6, &mut rng);
        let qz = type1_to_type2(&p, n, m).unwrap();
        let z: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        assert!((qz.eval(&z).unwrap() - expectation_enumerate(&p, m, &z).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn dictator_certificate_robustification() {
    let f = dictator();
    let p = PolyExpr::<f64>::var(1, 0).unwrap();
    let r = certificate_robustify(&p, &f, &0.0).unwrap();
    assert_eq!(r.certificate_complexity, 1);
    assert_eq!(r.k, 167);
    assert!(check_type2_grid(&r.expr, &f, &(1.0 / 3.0), 9, &1e-9).unwrap().passed);
}

#[test]
fn or2_degree_one_witness() {
    let f = BooleanFunction::named("or", 2).unwrap();
    let p = MultilinearPoly::from_terms(
        2,
        [
            (qrobust::poly::Monomial::one(), q(1, 3)),
            (qrobust::poly::Monomial::new(vec![0]).unwrap(), q(1, 3)),
            (qrobust::poly::Monomial::new(vec![1]).unwrap(), q(1, 3)),
        ],
    )
    .unwrap();
    assert_eq!(p.eval_index(3), q(1, 1));
    assert!(check_type2_vertex(&p, &f, &q(0, 1), &q(1, 3)).unwrap().passed);
}

#[test]
fn bernoulli_oracle_agreement_rate() {
    let set = NoisyOracleSet::bernoulli(vec![true, false], 0.1).unwrap();
    let view = OracleView::new(&set);
    let mut rng = ChaCha8Rng::seed_from_u64(419);
    let mut ledger = QueryLedger::new();
    let agree = (0..10_000).filter(|_| !view.invoke(1, &mut rng, &mut ledger).unwrap()).count();
    assert!((agree as f64 / 1e4 - 0.9).abs() <= 0.01);
    assert_eq!(ledger.total(), 10_000);
}

#[test]
fn contract_on_all_ones_and_within_bounds() {
    let set = NoisyOracleSet::bernoulli(vec![true; 32], 0.05).unwrap();
    let params = RobustFindParams::new(0.05, 0.5, 0.2, 0.2).unwrap();
    let s = run_backend(&ContractFinder::default(), &set, &params, 10_000, 488).unwrap();
    assert!(s.non_bot_ci.hi >= 0.8 && s.miss_bound_ok);

    let mut x = vec![false; 64];
    x[..5].iter_mut().for_each(|b| *b = true);
    let set = NoisyOracleSet::bernoulli(x, 0.05).unwrap();
    let params = RobustFindParams::new(0.05, 1.0 / 16.0, 0.1, 0.1).unwrap();
    let s = run_backend(&ContractFinder::default(), &set, &params, 100_000, 517).unwrap();
    assert!(s.miss_bound_ok && s.false_index_bound_ok, "{s:?}");
}

#[test]
fn grover_n4_single_iteration_is_certain() {
    let mut rng = ChaCha8Rng::seed_from_u64(506);
    let r = grover_robust(&[false, false, true, false], 0.0, 1, 100, &mut rng).unwrap();
    assert_eq!(r.iterations, 1);
    assert!((r.success_probability - 1.0).abs() < 1e-12);
}

#[test]
fn statevector_backend_correctness() {
    let mut x = vec![false; 8];
    x[5] = true;
    let set = NoisyOracleSet::bernoulli(x, 0.05).unwrap();
    let params = RobustFindParams::new(0.05, 1.0 / 8.0, 0.1, 0.1).unwrap();
    let finder = StatevectorFinder::new(None);
    assert_eq!(finder.name(), "statevector");
    let s = run_backend(&finder, &set, &params, 2000, 516).unwrap();
    assert!(s.correct_rate >= 0.9 - 0.02 && s.false_index_bound_ok, "{s:?}");
}

#[test]
fn noiseless_recovery_is_exact_with_flat_cost() {
    let finder = ContractFinder::default();
    let mut per_n = Vec::new();
    for n in [64usize, 256] {
        let mut cost = 0u64;
        for trial in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(trial);
            let x: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            let set = NoisyOracleSet::bernoulli(x.clone(), 0.0).unwrap();
            let r = all_inputs(&set, n, 0.0, &finder, &mut rng, &RecoverKnobs::default()).unwrap();
            assert_eq!(r.x_tilde, x);
            cost += r.ledger.total;
        }
        per_n.push(cost as f64 / (20.0 * n as f64));
    }
    assert!(per_n[1] / per_n[0] < 1.2, "{per_n:?}");
}

#[test]
fn small_target_conditions() {
    let finder = ContractFinder::default();
    let mut good = 0;
    for trial in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(577 + trial);
        let x: Vec<bool> = (0..256).map(|_| rng.random_bool(0.3)).collect();
        let set = NoisyOracleSet::bernoulli(x.clone(), 0.01).unwrap();
        let r = all_inputs(&set, 4, 0.01, &finder, &mut rng, &RecoverKnobs::default()).unwrap();
        assert!(r.used_fallback);
        good += score_recovery(&x, &r.x_tilde, 4).success() as u32;
    }
    assert!(good as f64 / 300.0 >= 0.6);
}

#[test]
fn function_and_symmetric_evaluation() {
    let finder = ContractFinder::default();
    let k = RecoverKnobs::default();
    let parity = BooleanFunction::named("parity", 12).unwrap();
    let or = SymmetricFunction::named("or", 64).unwrap();
    let maj = SymmetricFunction::named("majority", 101).unwrap();
    let (mut par_ok, mut or_ok, mut maj_ok) = (0, 0, 0);
    for trial in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(584 + trial);
        // full recovery decides any function, parity included
        let x: Vec<bool> = (0..12).map(|_| rng.random_bool(0.5)).collect();
        let set = NoisyOracleSet::bernoulli(x.clone(), 0.01).unwrap();
        let out = compute_function_robust(&parity, &set, 0.01, &finder, &mut rng, &k).unwrap();
        if out.recovery.x_tilde == x {
            assert_eq!(out.value, parity.eval_bits(&x));
        }
        par_ok += (out.value == parity.eval_bits(&x)) as u32;

        let mut x = vec![false; 64];
        x[rng.random_range(0..64)] = true;
        let set = NoisyOracleSet::bernoulli(x.clone(), 0.01).unwrap();
        or_ok += symmetric_robust(&or, &set, 0.01, 1.0 / 3.0, &finder, &mut rng, &k).unwrap().value as u32;

        let w = rng.random_range(0..=101);
        let x: Vec<bool> = (0..101).map(|i| i < w).collect();
        let set = NoisyOracleSet::bernoulli(x, 0.01).unwrap();
        maj_ok += (symmetric_robust(&maj, &set, 0.01, 1.0 / 3.0, &finder, &mut rng, &k).unwrap().value == (w >= 51)) as u32;
    }
    for (name, ok) in [("parity", par_ok), ("or", or_ok), ("majority", maj_ok)] {
        assert!(ok as f64 / 300.0 >= 2.0 / 3.0, "{name}: {ok}/300");
    }
}

#[test]
fn classical_direct_sum_schedule_grows_logarithmically() {
    let ns = [16usize, 64, 256, 1024, 4096];
    let r: Vec<usize> = ns.iter().map(|&n| classical_direct_sum_repetitions(n, 1.0 / 3.0, 2.0 / 3.0).unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] >= w[0]) && r[4] > r[0]);
    for (&n, &ri) in ns.iter().zip(&r) {
        let ratio = ri as f64 / (n as f64).ln();
        assert!((2.0..20.0).contains(&ratio), "n={n} r={ri}");
    }
}

#[test]
fn single_read_parity_is_a_coin_flip() {
    let mut good = 0;
    for trial in 0..2000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(613 + trial);
        let x: Vec<bool> = (0..64).map(|_| rng.random_bool(0.5)).collect();
        let truth = x.iter().fold(false, |a, &b| a ^ b);
        let set = NoisyOracleSet::bernoulli(x, 0.1).unwrap();
        good += (classical_parity_baseline(&set, 2.0 / 3.0, 0.5, Some(1), &mut rng).unwrap().value == truth) as u32;
    }
    let expected = (1.0 + 0.8f64.powi(64)) / 2.0;
    assert!((good as f64 / 2000.0 - expected).abs() < 0.05);
}

#[test]
fn recover_grid_reports_exponent_with_stderr() {
    let cfg = ExperimentConfig { n: vec![64, 256, 1024], trials: 10, seed: 666, ..Default::default() };
    let fit = run(&cfg, Some(2)).unwrap().fit_n.unwrap();
    assert!(fit.stderr.is_finite() && fit.stderr >= 0.0);
    assert!((0.9..1.1).contains(&fit.slope));
}
