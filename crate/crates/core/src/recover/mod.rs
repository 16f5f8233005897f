//! Full-input recovery from noisy oracles and the algorithms built on it.
//!
//! `all_inputs` runs three parts against a [`RobustFinder`]:
//! 1. `ceil(3t/2)` searches on `A(x~)` at threshold `t/(100n)`; the flipped indices form `S`
//!    (replaced by `[n]` when `|S| < 5t/4`).
//! 2. From `x~ = 0`, rounds `k = 1..ceil(log2(log2(t)^2))` of `ceil(3t/2^k)` searches on
//!    `A^S(x~)` at threshold fraction `beta/2^k`.
//! 3. Searches at thresholds `m/n` for `m = max(1, floor(t/log2(t)^2))` down to 1 with
//!    `gamma = delta = 1/(20t)`.
//!
//! Targets `t <= t0` use `t` plain searches instead (`small_t_fallback`).

mod apps;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noisysim::{LedgerCounts, NoisyOracleSet, OracleView, QueryLedger};
use crate::qsearch::{RobustFindParams, RobustFinder};

pub use apps::{
    classical_direct_sum_repetitions, classical_parity_baseline, classical_parity_repetitions, compute_function_robust,
    direct_sum, symmetric_robust, symmetric_targets, wrap_repetitions, BaselineResult, DirectSumResult, FunctionOutput,
    InnerRoutine, SymmetricBranch, SymmetricOutput,
};

/// Constants of the recovery algorithm, all overridable from configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoverKnobs {
    /// `beta = t / (beta_div * n)` in parts 1 and 2.
    pub beta_div: f64,
    /// `gamma = delta` for the searches of parts 1 and 2.
    pub search_error: f64,
    /// `gamma = delta = 1/(part3_div * t)` in part 3 and the fallback.
    pub part3_div: f64,
    /// Part 1 makes `ceil(part1_calls * t)` searches.
    pub part1_calls: f64,
    /// `S` falls back to `[n]` when `|S| < support_min * t`.
    pub support_min: f64,
    /// Targets up to `t0` use the fallback.
    pub t0: usize,
    /// Multiplies every `gamma` and `delta` (used to tighten sub-calls).
    pub confidence_scale: f64,
    /// Permit `eps > 1/100` with the constants unchanged.
    pub allow_large_eps: bool,
}

impl Default for RecoverKnobs {
    fn default() -> Self {
        Self {
            beta_div: 100.0,
            search_error: 0.01,
            part3_div: 20.0,
            part1_calls: 1.5,
            support_min: 1.25,
            t0: 8,
            confidence_scale: 1.0,
            allow_large_eps: false,
        }
    }
}

/// Intermediate state kept for scoring the part postconditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTrace {
    pub support: Vec<bool>,
    pub after_part2: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_tilde: Vec<bool>,
    pub ledger: LedgerCounts,
    pub used_fallback: bool,
    pub trace: Option<RecoveryTrace>,
}

impl RecoveryResult {
    pub fn weight(&self) -> usize {
        self.x_tilde.iter().filter(|&&b| b).count()
    }
}

/// Harness-side verdict on a recovery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryScore {
    /// `x~_i = 1` implies `x_i = 1`.
    pub sound: bool,
    /// `|x~| >= min(t, |x|)`.
    pub enough: bool,
    pub exact: bool,
}

impl RecoveryScore {
    pub fn success(&self) -> bool {
        self.sound && self.enough
    }
}

pub fn score_recovery(x: &[bool], x_tilde: &[bool], t: usize) -> RecoveryScore {
    let sound = x.iter().zip(x_tilde).all(|(&a, &b)| !b || a);
    let wx = x.iter().filter(|&&b| b).count();
    let wt = x_tilde.iter().filter(|&&b| b).count();
    RecoveryScore { sound, enough: wt >= t.min(wx), exact: x == x_tilde }
}

fn log2_sq(t: usize) -> f64 {
    (t as f64).log2().powi(2)
}

/// Number of part-2 rounds, `ceil(log2(log2(t)^2))`.
pub fn part2_rounds(t: usize) -> usize {
    let l = log2_sq(t);
    if l <= 1.0 {
        0
    } else {
        l.log2().ceil() as usize
    }
}

/// First part-3 threshold count, `max(1, floor(t / log2(t)^2))`.
pub fn part3_start(t: usize) -> usize {
    let l = log2_sq(t);
    if l <= 0.0 {
        return 1;
    }
    ((t as f64 / l).floor() as usize).max(1)
}

/// Every search call the algorithm makes, as `(phase, params, repetitions)`; independent of outcomes.
pub fn call_schedule(n: usize, t: usize, eps: f64, knobs: &RecoverKnobs) -> Result<Vec<(&'static str, RobustFindParams, usize)>> {
    check_inputs(n, t, eps, knobs)?;
    let s = knobs.confidence_scale;
    let tf = t as f64;
    let nf = n as f64;
    let mut calls = Vec::new();
    if t <= knobs.t0 {
        let g = s / (knobs.part3_div * tf);
        calls.push(("fallback", RobustFindParams::new(eps, 1.0 / (2.0 * nf), g, g)?, t));
        return Ok(calls);
    }
    let beta = tf / (knobs.beta_div * nf);
    let g = knobs.search_error * s;
    calls.push(("part1", RobustFindParams::new(eps, beta, g, g)?, (knobs.part1_calls * tf).ceil() as usize));
    for k in 1..=part2_rounds(t) {
        let scale = 2f64.powi(k as i32);
        let tk = (3.0 * tf / scale).ceil() as usize;
        calls.push(("part2", RobustFindParams::new(eps, beta / scale, g, g)?, tk));
    }
    let g3 = s / (knobs.part3_div * tf);
    for m in (1..=part3_start(t)).rev() {
        calls.push(("part3", RobustFindParams::new(eps, m as f64 / nf, g3, g3)?, 1));
    }
    Ok(calls)
}

/// Closed-form total charge, when the finder's cost is deterministic.
pub fn predicted_cost(
    n: usize,
    t: usize,
    eps: f64,
    finder: &dyn RobustFinder,
    knobs: &RecoverKnobs,
    unit_cost: u64,
) -> Result<Option<u64>> {
    let mut total = 0u64;
    for (_, p, reps) in call_schedule(n, t, eps, knobs)? {
        match finder.cost(&p, unit_cost) {
            Some(c) => total += c * reps as u64,
            None => return Ok(None),
        }
    }
    Ok(Some(total))
}

fn check_inputs(n: usize, t: usize, eps: f64, knobs: &RecoverKnobs) -> Result<()> {
    if t == 0 || t > n {
        return invalid(format!("target t must satisfy 1 <= t <= n = {n}, got {t}"));
    }
    if eps > 0.01 && !knobs.allow_large_eps {
        return invalid(format!("eps = {eps} exceeds 1/100; set allow_large_eps to run with the same constants"));
    }
    if !(0.0..0.5).contains(&eps) {
        return invalid("eps must lie in [0, 1/2)");
    }
    Ok(())
}

fn search(
    view: &mut OracleView<'_>,
    finder: &dyn RobustFinder,
    params: &RobustFindParams,
    rng: &mut dyn RngCore,
    ledger: &mut QueryLedger,
) -> Result<()> {
    if let Some(i) = finder.find(view, params, rng, ledger)?.index {
        view.flip(i);
    }
    Ok(())
}

/// Recovers `min(t, |x|)` ones of the hidden input (or of its negation).
pub(crate) fn all_inputs_on(
    view: &mut OracleView<'_>,
    t: usize,
    eps: f64,
    finder: &dyn RobustFinder,
    rng: &mut dyn RngCore,
    knobs: &RecoverKnobs,
) -> Result<RecoveryResult> {
    let n = view.n();
    let schedule = call_schedule(n, t, eps, knobs)?;
    let mut ledger = QueryLedger::new();
    if t <= knobs.t0 {
        ledger.set_phase("fallback");
        let (_, p, reps) = &schedule[0];
        for _ in 0..*reps {
            search(view, finder, p, rng, &mut ledger)?;
        }
        return Ok(RecoveryResult { x_tilde: view.flip_mask().to_vec(), ledger: ledger.snapshot_and_reset(), used_fallback: true, trace: None });
    }
    let mut support = None;
    let mut after_part2 = None;
    for (phase, p, reps) in &schedule {
        if *phase == "part2" && support.is_none() {
            let mut s: Vec<bool> = view.flip_mask().to_vec();
            if (s.iter().filter(|&&b| b).count() as f64) < knobs.support_min * t as f64 {
                s = vec![true; n];
            }
            view.clear_flips();
            view.set_support(s.clone())?;
            support = Some(s);
        }
        if *phase == "part3" && after_part2.is_none() {
            after_part2 = Some(view.flip_mask().to_vec());
        }
        ledger.set_phase(phase);
        for _ in 0..*reps {
            search(view, finder, p, rng, &mut ledger)?;
        }
    }
    let trace = RecoveryTrace {
        support: support.unwrap_or_else(|| vec![true; n]),
        after_part2: after_part2.unwrap_or_else(|| view.flip_mask().to_vec()),
    };
    Ok(RecoveryResult { x_tilde: view.flip_mask().to_vec(), ledger: ledger.snapshot_and_reset(), used_fallback: false, trace: Some(trace) })
}

pub fn all_inputs(
    oracles: &NoisyOracleSet,
    t: usize,
    eps: f64,
    finder: &dyn RobustFinder,
    rng: &mut dyn RngCore,
    knobs: &RecoverKnobs,
) -> Result<RecoveryResult> {
    all_inputs_on(&mut OracleView::new(oracles), t, eps, finder, rng, knobs)
}

/// `t` plain searches with `beta = 1/(2n)` and `gamma = delta = 1/(20t)`.
pub fn small_t_fallback(
    oracles: &NoisyOracleSet,
    t: usize,
    eps: f64,
    finder: &dyn RobustFinder,
    rng: &mut dyn RngCore,
    knobs: &RecoverKnobs,
) -> Result<RecoveryResult> {
    let knobs = RecoverKnobs { t0: t.max(knobs.t0), ..*knobs };
    all_inputs(oracles, t, eps, finder, rng, &knobs)
}
