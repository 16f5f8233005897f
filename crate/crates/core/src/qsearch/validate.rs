//! Side-by-side check of the two search backends on one fixed instance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ContractFinder, RobustFindParams, RobustFinder, StatevectorFinder};
use crate::error::{invalid, Result};
use crate::noisysim::{NoisyOracleSet, OracleView, QueryLedger};
use crate::stats::{wilson_ci, Interval};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendStats {
    pub backend: String,
    pub calls: u64,
    pub returned: u64,
    pub correct: u64,
    pub non_bot_rate: f64,
    pub non_bot_ci: Interval,
    /// Fraction of returned indices that are ones of `x` (1 when nothing was returned).
    pub correct_rate: f64,
    pub correct_ci: Option<Interval>,
    pub total_cost: u64,
    /// The two search guarantees, judged against the 95% intervals.
    pub miss_bound_ok: bool,
    pub false_index_bound_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub n: usize,
    pub weight: usize,
    pub params: RobustFindParams,
    pub contract: BackendStats,
    pub statevector: BackendStats,
}

impl CrossValidationReport {
    pub fn all_ok(&self) -> bool {
        [&self.contract, &self.statevector].iter().all(|b| b.miss_bound_ok && b.false_index_bound_ok)
    }
}

/// Runs `trials` independent searches with one backend on a fixed oracle set.
pub fn run_backend(
    finder: &dyn RobustFinder,
    set: &NoisyOracleSet,
    params: &RobustFindParams,
    trials: u64,
    seed: u64,
) -> Result<BackendStats> {
    let view = OracleView::new(set);
    let x = set.ground_truth();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledger = QueryLedger::new();
    let (mut returned, mut correct) = (0u64, 0u64);
    for _ in 0..trials {
        if let Some(i) = finder.find(&view, params, &mut rng, &mut ledger)?.index {
            returned += 1;
            correct += x[i] as u64;
        }
    }
    let weight = x.iter().filter(|&&b| b).count();
    let non_bot_ci = wilson_ci(returned, trials, 0.95)?;
    let correct_ci = if returned > 0 { Some(wilson_ci(correct, returned, 0.95)?) } else { None };
    let above = weight as f64 >= params.beta * x.len() as f64;
    Ok(BackendStats {
        backend: finder.name().into(),
        calls: trials,
        returned,
        correct,
        non_bot_rate: returned as f64 / trials as f64,
        non_bot_ci,
        correct_rate: if returned > 0 { correct as f64 / returned as f64 } else { 1.0 },
        correct_ci,
        total_cost: ledger.total(),
        miss_bound_ok: !above || non_bot_ci.hi >= 1.0 - params.delta,
        false_index_bound_ok: correct_ci.is_none_or(|ci| ci.hi >= 1.0 - params.gamma),
    })
}

/// Runs both backends `trials` times on `x` (the first `weight` bits set) with
/// Bernoulli noise `eps`.
pub fn cross_validate_backends(
    n: usize,
    weight: usize,
    eps: f64,
    params: &RobustFindParams,
    trials: u64,
    seed: u64,
) -> Result<CrossValidationReport> {
    if weight > n {
        return invalid("weight exceeds n");
    }
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let x: Vec<bool> = (0..n).map(|i| i < weight).collect();
    let set = NoisyOracleSet::bernoulli(x, eps)?;
    let contract = run_backend(&ContractFinder::default(), &set, params, trials, seed)?;
    let statevector = run_backend(&StatevectorFinder::new(None), &set, params, trials, seed ^ 0x5eed)?;
    Ok(CrossValidationReport { n, weight, params: *params, contract, statevector })
}
