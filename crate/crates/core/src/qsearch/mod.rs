//! Robust search: the contract model with its closed-form cost, and a small
//! statevector backend (Grover over majority-robustified noisy queries).

mod statevector;
mod validate;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noisysim::{OracleView, QueryLedger};

pub use statevector::{
    grover_robust, majority_error, robustified_query, GroverReport, QueryDistance, StateVector, StatevectorFinder,
    MAX_STATEVECTOR_QUBITS,
};
pub use validate::{cross_validate_backends, run_backend, BackendStats, CrossValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustFindParams {
    pub eps: f64,
    /// Weight threshold as a fraction of `n`.
    pub beta: f64,
    /// Bound on returning an index that is not a 1 of the effective input.
    pub gamma: f64,
    /// Bound on returning nothing when the weight is at least `beta * n`.
    pub delta: f64,
}

impl RobustFindParams {
    pub fn new(eps: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let p = Self { eps, beta, gamma, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.eps) {
            return invalid(format!("eps must lie in [0, 1/2), got {}", self.eps));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return invalid(format!("beta must lie in (0, 1], got {}", self.beta));
        }
        for (name, v) in [("gamma", self.gamma), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustFindOutcome {
    /// `None` is the "no index" answer.
    pub index: Option<usize>,
    pub cost_charged: u64,
}

/// A robust search backend. `cost` returns the deterministic charge per call, if there is one.
pub trait RobustFinder: Send + Sync {
    fn find(
        &self,
        view: &OracleView<'_>,
        params: &RobustFindParams,
        rng: &mut dyn RngCore,
        ledger: &mut QueryLedger,
    ) -> Result<RobustFindOutcome>;

    fn cost(&self, params: &RobustFindParams, unit_cost: u64) -> Option<u64>;

    fn name(&self) -> &'static str;
}

/// Below-threshold behaviour of the contract model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SubThreshold {
    /// Return an index with probability `(1 - delta) * |w| / (beta n)`.
    #[default]
    Interpolating,
    /// Always return nothing below the threshold.
    Adversarial,
}

/// `ceil(C / (1/2 - eps)^2 * sqrt(1/beta) * ln(1/(gamma delta)))`, at least 1.
pub fn contract_cost(params: &RobustFindParams, c: f64) -> u64 {
    let raw = c / (0.5 - params.eps).powi(2) * (1.0 / params.beta).sqrt() * (1.0 / (params.gamma * params.delta)).ln();
    (raw.ceil() as u64).max(1)
}

/// Consumes the search guarantees as a contract instead of simulating a circuit.
///
/// Let `W` be the weight of the effective input. An index is returned with
/// probability `1 - delta` when `W >= beta n`, with the interpolated (or zero)
/// probability below, and with probability `gamma` when `W = 0`. A returned index is
/// a uniform 1 of the effective input with probability `1 - gamma`; otherwise it is a
/// uniform in-support 0 whose oracle is noisy (falling back to a 1, or to no index).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractFinder {
    pub cost_c: f64,
    pub mode: SubThreshold,
}

impl Default for ContractFinder {
    fn default() -> Self {
        Self { cost_c: 1.0, mode: SubThreshold::Interpolating }
    }
}

impl ContractFinder {
    pub fn adversarial() -> Self {
        Self { mode: SubThreshold::Adversarial, ..Self::default() }
    }
}

impl RobustFinder for ContractFinder {
    fn find(
        &self,
        view: &OracleView<'_>,
        params: &RobustFindParams,
        rng: &mut dyn RngCore,
        ledger: &mut QueryLedger,
    ) -> Result<RobustFindOutcome> {
        params.validate()?;
        let cost = contract_cost(params, self.cost_c) * view.base().unit_cost();
        ledger.charge_search(cost);
        let w = view.effective_weight();
        let threshold = params.beta * view.n() as f64;
        let p_return = if w == 0 {
            params.gamma
        } else if w as f64 >= threshold {
            1.0 - params.delta
        } else {
            match self.mode {
                SubThreshold::Interpolating => (1.0 - params.delta) * (w as f64 / threshold),
                SubThreshold::Adversarial => 0.0,
            }
        };
        let outcome = |index| Ok(RobustFindOutcome { index, cost_charged: cost });
        if !rng.random_bool(p_return.clamp(0.0, 1.0)) {
            return outcome(None);
        }
        let wrong = w == 0 || rng.random_bool(params.gamma);
        let index = if wrong {
            view.noisy_zeros().sample(rng).or_else(|| view.ones().sample(rng))
        } else {
            view.ones().sample(rng)
        };
        outcome(index)
    }

    fn cost(&self, params: &RobustFindParams, unit_cost: u64) -> Option<u64> {
        Some(contract_cost(params, self.cost_c) * unit_cost)
    }

    fn name(&self) -> &'static str {
        "contract"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noisysim::NoisyOracleSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cost_formula_value() {
        let p = RobustFindParams::new(0.01, 0.01, 0.01, 0.01).unwrap();
        let raw = 1.0 / 0.49f64.powi(2) * 10.0 * 1e4f64.ln();
        assert!(raw > 383.5 && raw < 384.0);
        assert_eq!(contract_cost(&p, 1.0), 384);
        assert!(RobustFindParams::new(0.5, 0.1, 0.1, 0.1).is_err());
        assert!(RobustFindParams::new(0.1, 0.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn noiseless_contract_never_errs() {
        let set = NoisyOracleSet::bernoulli(vec![false, true, false, false], 0.0).unwrap();
        let view = OracleView::new(&set);
        let p = RobustFindParams::new(0.0, 0.25, 0.1, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ledger = QueryLedger::new();
        let f = ContractFinder::default();
        for _ in 0..1000 {
            let o = f.find(&view, &p, &mut rng, &mut ledger).unwrap();
            assert!(o.index.is_none() || o.index == Some(1));
        }
        assert_eq!(ledger.total(), 1000 * f.cost(&p, 1).unwrap());
    }
}
