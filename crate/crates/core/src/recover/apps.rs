//! Algorithms on top of input recovery, plus the classical repetition baselines.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{all_inputs, all_inputs_on, RecoverKnobs, RecoveryResult};
use crate::boolfn::{BitFunction, SymmetricFunction};
use crate::error::{invalid, Error, Result};
use crate::noisysim::{LedgerCounts, NoisyOracleSet, OracleView, QueryLedger};
use crate::qsearch::RobustFinder;
use crate::stats::binomial_majority_error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionOutput {
    pub value: bool,
    pub recovery: RecoveryResult,
}

/// Recovers the whole input (`t = n`) and evaluates `f` on it.
pub fn compute_function_robust(
    f: &dyn BitFunction,
    oracles: &NoisyOracleSet,
    eps: f64,
    finder: &dyn RobustFinder,
    rng: &mut dyn RngCore,
    knobs: &RecoverKnobs,
) -> Result<FunctionOutput> {
    if f.arity() != oracles.n() {
        return Err(Error::DimensionMismatch { expected: oracles.n(), got: f.arity() });
    }
    let recovery = all_inputs(oracles, oracles.n(), eps, finder, rng, knobs)?;
    Ok(FunctionOutput { value: f.eval_bits(&recovery.x_tilde), recovery })
}

/// `(t_ones, t_zeros) = (ceil((n - G)/2), n - ceil((n + G - 2)/2))`, both at least 1.
pub fn symmetric_targets(n: usize, gamma: usize) -> (usize, usize) {
    let t_ones = (n - gamma).div_ceil(2).max(1);
    let t_zeros = n.saturating_sub((n + gamma).saturating_sub(2).div_ceil(2)).max(1);
    (t_ones.min(n), t_zeros.min(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricBranch {
    /// Fewer than `t_ones` ones found, so they are all of them.
    OnesExhausted,
    /// Fewer than `t_zeros` zeros found, so they are all of them.
    ZerosExhausted,
    /// The weight lies where `f` is constant.
    Middle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricOutput {
    pub value: bool,
    pub branch: SymmetricBranch,
    pub gamma: usize,
    pub t_ones: usize,
    pub t_zeros: usize,
    pub ones_found: usize,
    pub zeros_found: Option<usize>,
    pub ledger: LedgerCounts,
}

/// Evaluates a non-constant symmetric function from a bounded number of found ones and zeros.
///
/// `confidence` is the total failure budget; each of the two searches gets half of it.
#[allow(clippy::too_many_arguments)]
pub fn symmetric_robust(
    f: &SymmetricFunction,
    oracles: &NoisyOracleSet,
    eps: f64,
    confidence: f64,
    finder: &dyn RobustFinder,
    rng: &mut dyn RngCore,
    knobs: &RecoverKnobs,
) -> Result<SymmetricOutput> {
    let n = oracles.n();
    if f.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.n() });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return invalid("confidence must lie in (0, 1)");
    }
    let gamma = f.gamma()?;
    let (t_ones, t_zeros) = symmetric_targets(n, gamma);
    // default searches fail with probability 1/3; scale gamma and delta to hit confidence/2
    let knobs = RecoverKnobs { confidence_scale: knobs.confidence_scale * 1.5 * confidence, ..*knobs };

    let ones = all_inputs(oracles, t_ones, eps, finder, rng, &knobs)?;
    let mut ledger = ones.ledger.clone();
    let a = ones.weight();
    let mut out = SymmetricOutput {
        value: false,
        branch: SymmetricBranch::OnesExhausted,
        gamma,
        t_ones,
        t_zeros,
        ones_found: a,
        zeros_found: None,
        ledger: LedgerCounts::default(),
    };
    if a < t_ones {
        out.value = f.value_at_weight(a);
    } else {
        let zeros = all_inputs_on(&mut OracleView::negated(oracles), t_zeros, eps, finder, rng, &knobs)?;
        ledger.merge(&zeros.ledger);
        let z = zeros.weight();
        out.zeros_found = Some(z);
        if z < t_zeros {
            out.branch = SymmetricBranch::ZerosExhausted;
            out.value = f.value_at_weight(n - z);
        } else {
            out.branch = SymmetricBranch::Middle;
            out.value = f.value_at_weight(t_ones);
        }
    }
    out.ledger = ledger;
    Ok(out)
}

/// A bounded-error subroutine for `g`: `cost` queries per run, wrong with probability `error`.
#[derive(Clone, Copy)]
pub struct InnerRoutine<'a> {
    pub g: &'a dyn BitFunction,
    pub cost: u64,
    pub error: f64,
}

/// Smallest odd `k` whose majority vote over `k` runs errs with probability at most `target`,
/// together with that exact error.
pub fn wrap_repetitions(error: f64, target: f64) -> Result<(usize, f64)> {
    if !(0.0..0.5).contains(&error) || !(target > 0.0 && target < 0.5) {
        return invalid("need 0 <= error < 1/2 and 0 < target < 1/2");
    }
    let mut k = 1;
    loop {
        let e = binomial_majority_error(k, error);
        if e <= target {
            return Ok((k, e));
        }
        k += 2;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectSumResult {
    pub outputs: Vec<bool>,
    pub truth: Vec<bool>,
    pub all_correct: bool,
    /// Runs of the inner routine per wrapped invocation.
    pub k: usize,
    pub wrapped_error: f64,
    pub ledger: LedgerCounts,
}

/// Computes `g` on every instance by recovering the vector of (noisy) `g` values.
///
/// The inner routine is wrapped by a `k`-fold majority so its error is at most `wrap_target`;
/// each wrapped call is charged `k * cost` inner queries.
pub fn direct_sum(
    inner: InnerRoutine<'_>,
    instances: &[Vec<bool>],
    wrap_target: f64,
    finder: &dyn RobustFinder,
    rng: &mut dyn RngCore,
    knobs: &RecoverKnobs,
) -> Result<DirectSumResult> {
    if let Some(bad) = instances.iter().find(|x| x.len() != inner.g.arity()) {
        return Err(Error::DimensionMismatch { expected: inner.g.arity(), got: bad.len() });
    }
    let (k, wrapped_error) = wrap_repetitions(inner.error, wrap_target)?;
    let truth: Vec<bool> = instances.iter().map(|x| inner.g.eval_bits(x)).collect();
    let set = NoisyOracleSet::bernoulli(truth.clone(), wrapped_error)?.with_unit_cost(k as u64 * inner.cost.max(1));
    let rec = all_inputs(&set, truth.len(), wrapped_error, finder, rng, knobs)?;
    Ok(DirectSumResult {
        all_correct: rec.x_tilde == truth,
        outputs: rec.x_tilde,
        truth,
        k,
        wrapped_error,
        ledger: rec.ledger,
    })
}

/// Per-instance repetitions for the classical direct sum: smallest odd `r` with
/// `n * err_r <= 1 - target` (union bound).
pub fn classical_direct_sum_repetitions(n: usize, error: f64, target: f64) -> Result<usize> {
    let budget = (1.0 - target) / n as f64;
    Ok(wrap_repetitions(error, budget.min(0.49))?.0)
}

/// `ceil(c ln(3n / (1 - target)) / (1/2 - eps)^2)` reads per bit.
pub fn classical_parity_repetitions(n: usize, eps: f64, target: f64, c: f64) -> Result<usize> {
    if !(0.0..0.5).contains(&eps) || !(target > 0.0 && target < 1.0) || n == 0 {
        return invalid("need n >= 1, 0 <= eps < 1/2 and 0 < target < 1");
    }
    let r = c * (3.0 * n as f64 / (1.0 - target)).ln() / (0.5 - eps).powi(2);
    Ok((r.ceil() as usize).max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub value: bool,
    pub r: usize,
    pub ledger: LedgerCounts,
}

/// Parity by reading every bit `r` times and taking majorities (ties broken by a fair coin).
pub fn classical_parity_baseline(
    oracles: &NoisyOracleSet,
    target: f64,
    c: f64,
    r_override: Option<usize>,
    rng: &mut dyn RngCore,
) -> Result<BaselineResult> {
    let n = oracles.n();
    let r = match r_override {
        Some(0) => return invalid("repetitions must be at least 1"),
        Some(r) => r,
        None => classical_parity_repetitions(n, oracles.eps_bound(), target, c)?,
    };
    let view = OracleView::new(oracles);
    let mut ledger = QueryLedger::new();
    ledger.set_phase("baseline");
    let mut value = false;
    for i in 0..n {
        let mut ones = 0;
        for _ in 0..r {
            ones += view.invoke(i, rng, &mut ledger)? as usize;
        }
        let bit = match (2 * ones).cmp(&r) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => rng.random_bool(0.5),
        };
        value ^= bit;
    }
    Ok(BaselineResult { value, r, ledger: ledger.snapshot_and_reset() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::BooleanFunction;
    use crate::qsearch::ContractFinder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_target_examples() {
        // OR: gamma = n - 1
        assert_eq!(symmetric_targets(64, 63), (1, 1));
        // majority, odd n
        assert_eq!(symmetric_targets(9, 0), (5, 5));
        // threshold_{n/2}, even n
        assert_eq!(symmetric_targets(64, 1), (32, 32));
    }

    #[test]
    fn baseline_repetitions() {
        let r64 = classical_parity_repetitions(64, 0.1, 2.0 / 3.0, 0.5).unwrap();
        let r4096 = classical_parity_repetitions(4096, 0.1, 2.0 / 3.0, 0.5).unwrap();
        assert_eq!((r64, r4096), (20, 33));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![true, false, true, true];
        let set = NoisyOracleSet::bernoulli(x, 0.0).unwrap();
        let b = classical_parity_baseline(&set, 2.0 / 3.0, 0.5, Some(1), &mut rng).unwrap();
        assert!(b.value);
        assert_eq!(b.ledger.total, 4);
    }

    #[test]
    fn wrapping_meets_target() {
        let (k, e) = wrap_repetitions(1.0 / 3.0, 0.01).unwrap();
        assert!(k % 2 == 1 && e <= 0.01);
        assert!(binomial_majority_error(k - 2, 1.0 / 3.0) > 0.01);
        assert_eq!(wrap_repetitions(0.0, 0.01).unwrap(), (1, 0.0));
    }

    #[test]
    fn noiseless_symmetric_and_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let finder = ContractFinder::default();
        let k = RecoverKnobs::default();
        let maj = SymmetricFunction::named("majority", 33).unwrap();
        for w in [0usize, 10, 16, 17, 25, 33] {
            let x: Vec<bool> = (0..33).map(|i| i < w).collect();
            let set = NoisyOracleSet::bernoulli(x, 0.0).unwrap();
            let out = symmetric_robust(&maj, &set, 0.0, 1.0 / 3.0, &finder, &mut rng, &k).unwrap();
            assert_eq!(out.value, w >= 17, "weight {w}");
        }
        let or4 = BooleanFunction::named("or", 4).unwrap();
        let inst: Vec<Vec<bool>> = (0..16).map(|i| (0..4).map(|b| (i >> b) & 1 == 1).collect()).collect();
        let inner = InnerRoutine { g: &or4, cost: 2, error: 0.0 };
        let r = direct_sum(inner, &inst, 0.01, &finder, &mut rng, &k).unwrap();
        assert!(r.all_correct);
        assert_eq!(r.truth.iter().filter(|&&b| b).count(), 15);
    }
}
