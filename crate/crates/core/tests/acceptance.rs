//! End-to-end acceptance suite (plain binary, no test harness). Prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};

use num_traits::{One, ToPrimitive, Zero};
use qrobust::boolfn::{max_certificate_complexity, BooleanFunction, BitFunction};
use qrobust::harness::{run, ExperimentConfig, ExperimentKind, ExperimentReport, InputDist};
use qrobust::lp::{approx_degree, robust_degree_multilinear, SearchStatus};
use qrobust::noisysim::NoisyOracleSet;
use qrobust::poly::{
    amplification_poly, amplify_eval, exact_multilinear, expectation_enumerate, expectation_substitution, Monomial,
    MultilinearPoly, PolyExpr,
};
use qrobust::qsearch::{grover_robust, robustified_query, ContractFinder};
use qrobust::recover::{symmetric_robust, RecoverKnobs};
use qrobust::robustness::{check_type2_vertex, estimate_type1, type2_to_type1, PerturbationSpec, Type1Options};
use qrobust::scalar::exp_neg_bounds;
use qrobust::stats::wilson_ci;
use qrobust::{Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = (bool, String);

fn q(a: i64, b: i64) -> Rational {
    Rational::from_ratio(a, b)
}

fn recover_grid() -> ExperimentReport {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::Recover,
        n: vec![64, 256, 1024, 4096],
        eps: 0.01,
        trials: 300,
        seed: 20_241,
        ..Default::default()
    };
    run(&cfg, None).unwrap()
}

fn criterion_1(grid: &ExperimentReport) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in grid.points.iter().filter(|p| p.n <= 1024) {
        let ci = wilson_ci(p.totals.exact, p.totals.trials, 0.95).unwrap();
        let rate = p.totals.exact as f64 / p.totals.trials as f64;
        ok &= rate >= 2.0 / 3.0 && ci.lo >= 0.60;
        parts.push(format!("n={} exact {:.3} (CI lo {:.3})", p.n, rate, ci.lo));
    }
    (ok, parts.join(", "))
}

fn criterion_2(grid: &ExperimentReport) -> Verdict {
    let fit = grid.fit_n.as_ref().unwrap();
    let ok = (0.9..=1.1).contains(&fit.slope) && fit.r_squared >= 0.99;
    (ok, format!("cost exponent vs n {:.4}, R^2 {:.5}", fit.slope, fit.r_squared))
}

fn criterion_3() -> Verdict {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::Recover,
        n: vec![4096],
        t: vec![16, 64, 256, 1024],
        trials: 100,
        seed: 3,
        ..Default::default()
    };
    let rep = run(&cfg, None).unwrap();
    let fit = rep.fit_t.as_ref().unwrap();
    let rates: Vec<String> = rep.points.iter().map(|p| format!("{:.2}", p.success_rate)).collect();
    ((0.4..=0.6).contains(&fit.slope), format!("cost exponent vs t {:.4}; success rates [{}]", fit.slope, rates.join(", ")))
}

fn criterion_4(grid: &ExperimentReport) -> Verdict {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::Baseline,
        n: vec![64, 4096],
        eps: 0.1,
        trials: 300,
        seed: 4,
        ..Default::default()
    };
    let rep = run(&cfg, None).unwrap();
    let per_n = |r: &ExperimentReport, n: usize| {
        let p = r.points.iter().find(|p| p.n == n).unwrap();
        (p.mean_cost / n as f64, p.success_rate)
    };
    let (c64, s64) = per_n(&rep, 64);
    let (c4096, s4096) = per_n(&rep, 4096);
    let classical = c4096 / c64;
    let quantum = per_n(grid, 4096).0 / per_n(grid, 64).0;
    let ok = (1.6..=2.4).contains(&classical) && (0.85..=1.15).contains(&quantum) && s64 >= 2.0 / 3.0 && s4096 >= 2.0 / 3.0;
    (ok, format!("classical ratio {classical:.3} (success {s64:.3}, {s4096:.3}), quantum-model ratio {quantum:.3}"))
}

fn criterion_5() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [25usize, 49, 97] {
        let (lo, _) = exp_neg_bounds(&q(k as i64, 72));
        let low = amplify_eval::<Rational>(k, &q(1, 3));
        let high = amplify_eval::<Rational>(k, &q(2, 3));
        // the expanded power-basis form must agree exactly
        let h = amplification_poly::<Rational>(k).unwrap();
        let agree = h.eval(&q(1, 3)) == low && h.eval(&q(2, 3)) == high;
        // lo <= e^{-k/72}, so these imply the bounds
        let pass = agree && low <= lo && high >= Rational::one() - lo.clone();
        ok &= pass;
        parts.push(format!("k={k} h(1/3)={:.3e}", low.to_f64().unwrap()));
    }
    (ok, parts.join(", "))
}

fn criterion_6() -> Verdict {
    let third = q(1, 3);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 2..=4 {
        let f = BooleanFunction::named("parity", n).unwrap();
        let r = approx_degree(&f, &third).unwrap();
        let below = r.levels.iter().find(|l| l.degree == n - 1).map(|l| !l.feasible && l.certificate_verified);
        ok &= r.status == SearchStatus::Found && r.degree == Some(n) && below == Some(true) && r.infeasible_below;
        parts.push(format!("parity_{n}: {:?}", r.degree));
    }
    let or2 = BooleanFunction::named("or", 2).unwrap();
    let r = approx_degree(&or2, &third).unwrap();
    let w = r.witness.clone().unwrap();
    let verified = (0..4usize).all(|i| {
        let bits = [i & 1 == 1, i & 2 == 2];
        let v = w.eval_bits(&bits);
        let fx = if or2.value(i) { Rational::one() } else { Rational::zero() };
        let d = v - fx;
        d.clone() * d <= third.clone() * third.clone()
    });
    ok &= r.degree == Some(1) && verified;
    parts.push(format!("or_2: {:?} (witness re-verified: {verified})", r.degree));
    (ok, parts.join(", "))
}

fn criterion_7() -> Verdict {
    let f = BooleanFunction::named("parity", 2).unwrap();
    let p = exact_multilinear::<Rational>(&f).unwrap();
    let rep = check_type2_vertex(&p, &f, &q(1, 3), &q(1, 3)).unwrap();
    let wz = rep.witness.as_ref().map(|w| w.z.clone());
    let shown: Vec<String> = wz.iter().flatten().map(|v| v.to_string()).collect();
    let exact_fail = !rep.passed && rep.worst_violation == q(1, 9) && wz == Some(vec![q(1, 3), q(1, 3)]);
    let mut ok = exact_fail;
    let mut checked = 0;
    let cases = [("parity", 2, q(1, 4)), ("or", 2, q(1, 10)), ("and", 2, q(1, 4)), ("majority", 3, q(1, 10)), ("parity", 3, q(1, 10))];
    let total = cases.len();
    for (name, n, eps) in cases {
        let g = BooleanFunction::named(name, n).unwrap();
        let r = robust_degree_multilinear(&g, &eps, &q(1, 3), None).unwrap();
        match &r.witness {
            Some(w) => {
                ok &= check_type2_vertex(w, &g, &eps, &q(1, 3)).unwrap().passed;
                checked += 1;
            }
            None => ok = false,
        }
    }
    (ok, format!("parity_2 violation {} at z=({}); {checked}/{total} LP witnesses pass", rep.worst_violation, shown.join(", ")))
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["or", "majority", "parity"] {
        let f = BooleanFunction::named(name, 3).unwrap();
        let c = max_certificate_complexity(&f).unwrap();
        let delta = 1.0 / (10.0 * c as f64);
        let p = exact_multilinear::<f64>(&f).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let xi = rng.random_range(0..8usize);
            let z: Vec<f64> = (0..3)
                .map(|b| {
                    let xb = ((xi >> b) & 1) as f64;
                    let dz = rng.random_range(0.0..=delta);
                    if xb == 1.0 { 1.0 - dz } else { dz }
                })
                .collect();
            let fx = if f.value(xi) { 1.0 } else { 0.0 };
            worst = worst.max((p.eval(&z).unwrap() - fx).abs());
        }
        ok &= worst <= 0.1 + 1e-9;
        if name == "or" {
            let corner = p.eval(&[delta; 3]).unwrap();
            let analytic = 1.0 - (29.0f64 / 30.0).powi(3);
            ok &= (corner - analytic).abs() <= 1e-6 && (worst - analytic).abs() <= 0.01;
            parts.push(format!("or_3 corner {corner:.6} vs {analytic:.6}"));
        }
        parts.push(format!("{name}_3 C={c} max err {worst:.5}"));
    }
    (ok, parts.join(", "))
}

fn criterion_9() -> Verdict {
    let mut x = vec![false; 8];
    x[3] = true;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let closed = (5.0 * (1.0f64 / 8.0).sqrt().asin()).sin().powi(2);
    let clean = grover_robust(&x, 0.0, 1, 1, &mut rng).unwrap();
    let noisy = grover_robust(&x, 0.05, 9, 10_000, &mut rng).unwrap();
    let dists: Vec<f64> = [1, 5, 9, 13].iter().map(|&r| robustified_query(&x, 0.05, r, 1).unwrap().full).collect();
    let mono = dists.windows(2).all(|w| w[1] < w[0]);
    let gap = (noisy.empirical_success() - clean.success_probability).abs();
    let ok = (clean.success_probability - closed).abs() <= 1e-6 && gap <= 0.05 && mono;
    (ok, format!("noiseless {:.6} vs {closed:.6}; noisy empirical {:.4}; distances {dists:.4?}", clean.success_probability, noisy.empirical_success()))
}

fn criterion_10() -> Verdict {
    let ns = vec![64, 128, 256, 512, 1024, 2048, 4096];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, lo, hi) in [("or", 0.4, 0.6), ("majority", 0.9, 1.1)] {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Symmetric,
            n: ns.clone(),
            trials: 300,
            function: name.into(),
            input: InputDist::RandomWeight,
            seed: 10,
            ..Default::default()
        };
        let rep = run(&cfg, None).unwrap();
        let fit = rep.fit_n.as_ref().unwrap();
        let min_rate = rep.points.iter().map(|p| p.success_rate).fold(1.0, f64::min);
        ok &= (lo..=hi).contains(&fit.slope) && min_rate >= 2.0 / 3.0;
        parts.push(format!("{name} exponent {:.4} min success {min_rate:.3}", fit.slope));
    }
    // the hardest OR inputs: all zeros and a single one
    let or = qrobust::boolfn::SymmetricFunction::named("or", 4096).unwrap();
    let finder = ContractFinder::default();
    let mut good = 0;
    for trial in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let mut x = vec![false; 4096];
        if trial % 2 == 1 {
            x[rng.random_range(0..4096)] = true;
        }
        let set = NoisyOracleSet::bernoulli(x.clone(), 0.01).unwrap();
        let out = symmetric_robust(&or, &set, 0.01, 1.0 / 3.0, &finder, &mut rng, &RecoverKnobs::default()).unwrap();
        good += (out.value == or.eval_bits(&x)) as u32;
    }
    ok &= good as f64 / 300.0 >= 2.0 / 3.0;
    parts.push(format!("or weight<=1 success {:.3}", good as f64 / 300.0));
    (ok, parts.join("; "))
}

fn criterion_11() -> Verdict {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::DirectSum,
        n: vec![16, 64, 256],
        trials: 300,
        function: "or".into(),
        inner_arity: 4,
        inner_cost: 2,
        inner_error: 1.0 / 3.0,
        seed: 11,
        ..Default::default()
    };
    let rep = run(&cfg, None).unwrap();
    let per: Vec<f64> = rep.points.iter().map(|p| p.mean_cost / (p.n as f64 * 2.0)).collect();
    let (mn, mx) = per.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let min_rate = rep.points.iter().map(|p| p.success_rate).fold(1.0, f64::min);
    let spread = mx / mn - 1.0;
    (spread <= 0.25 && min_rate >= 2.0 / 3.0, format!("cost/(nT) spread {:.1}%, min all-correct rate {min_rate:.3}", 100.0 * spread))
}

fn criterion_12() -> Verdict {
    // parity_2 has no multilinear 1/3-robust polynomial at eps = 1/3, so the certified witness is taken at eps = 1/4
    let f = BooleanFunction::named("parity", 2).unwrap();
    let eps = q(1, 4);
    let r = robust_degree_multilinear(&f, &eps, &q(1, 3), None).unwrap();
    let w = r.witness.unwrap();
    let (p1, m) = type2_to_type1(&PolyExpr::from_multilinear(w.to_f64()), 0.25, 2).unwrap();
    let noise = PerturbationSpec::new(0.125, m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let opts = Type1Options { trials: 2000, ..Type1Options::default() };
    let rep = estimate_type1(&p1, &f, &noise, opts, &mut rng).unwrap();
    let upper = rep.failure_ci_upper.unwrap();
    let conv_ok = rep.passed && upper < 1.0 / 3.0;

    let mut instances = 0;
    let mut exact_ok = true;
    for _ in 0..300 {
        let n = rng.random_range(1..=4usize);
        let m = rng.random_range(1..=12 / n);
        let nv = n * m;
        let terms: Vec<(Monomial, Rational)> = (0..rng.random_range(1..=8))
            .map(|_| (Monomial::from_mask(rng.random_range(0..1u64 << nv)), q(rng.random_range(-9..=9), rng.random_range(1..=7))))
            .collect();
        let p = MultilinearPoly::from_terms(nv, terms).unwrap();
        let z: Vec<Rational> = (0..n).map(|_| q(rng.random_range(0..=6), 6)).collect();
        exact_ok &= expectation_substitution(&p, m, &z).unwrap() == expectation_enumerate(&p, m, &z).unwrap();
        instances += 1;
    }
    (conv_ok && exact_ok, format!("m={m}, failure CI upper {upper:.4}; {instances} exact expectation instances agree: {exact_ok}"))
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        (false, format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn main() {
    let grid = recover_grid();
    let results = [
        guarded(|| criterion_1(&grid)),
        guarded(|| criterion_2(&grid)),
        guarded(criterion_3),
        guarded(|| criterion_4(&grid)),
        guarded(criterion_5),
        guarded(criterion_6),
        guarded(criterion_7),
        guarded(criterion_8),
        guarded(criterion_9),
        guarded(criterion_10),
        guarded(criterion_11),
        guarded(criterion_12),
    ];
    for (i, (pass, detail)) in results.iter().enumerate() {
        println!("criterion {}: {} {detail}", i + 1, if *pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.0).map(|(i, _)| i + 1).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
