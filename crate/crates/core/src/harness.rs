//! Seeded, parallel experiment runner: TOML config in, per-trial CSV and JSON summary out.
//!
//! Trial `j` of grid point `p` draws everything from ChaCha8 seeded with the master seed
//! on stream `(p << 32) | j`, so results do not depend on the worker count.

use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolfn::{BooleanFunction, SymmetricFunction};
use crate::error::{invalid, Error, Result};
use crate::noisysim::NoisyOracleSet;
use crate::qsearch::{ContractFinder, RobustFinder, StatevectorFinder};
use crate::recover::{
    all_inputs, classical_parity_baseline, direct_sum, score_recovery, symmetric_robust, InnerRoutine, RecoverKnobs,
};
use crate::stats::{fit_exponent, wilson_ci, ExponentFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Recover,
    Symmetric,
    Baseline,
    DirectSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Contract,
    /// Contract model that never answers below the weight threshold.
    Adversarial,
    Statevector,
}

impl Backend {
    pub fn finder(&self, r: Option<usize>) -> Box<dyn RobustFinder> {
        match self {
            Backend::Contract => Box::new(ContractFinder::default()),
            Backend::Adversarial => Box::new(ContractFinder::adversarial()),
            Backend::Statevector => Box::new(StatevectorFinder::new(r)),
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contract" => Ok(Backend::Contract),
            "adversarial" => Ok(Backend::Adversarial),
            "statevector" => Ok(Backend::Statevector),
            _ => Err(Error::InvalidArgument(format!("unknown backend {s:?}"))),
        }
    }
}

/// How hidden inputs are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputDist {
    /// Independent bits, each 1 with probability `density`.
    #[default]
    Bernoulli,
    /// Uniform weight in `0..=n`, then a uniform input of that weight.
    RandomWeight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: Vec<usize>,
    /// Targets; empty means `t = n`.
    pub t: Vec<usize>,
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
    pub backend: Backend,
    pub statevector_r: Option<usize>,
    pub input: InputDist,
    pub density: f64,
    /// Function name for symmetric (`or`, `and`, `majority`, `threshold_k`, `parity`) and direct-sum runs.
    pub function: String,
    pub confidence: f64,
    /// Baseline success target and constant.
    pub target: f64,
    pub baseline_c: f64,
    pub baseline_r: Option<usize>,
    /// Direct sum: arity of `g`, cost and error of its routine, wrapped error target.
    pub inner_arity: usize,
    pub inner_cost: u64,
    pub inner_error: f64,
    pub wrap_target: f64,
    pub knobs: RecoverKnobs,
    /// Thresholds checked by `ExperimentReport::failures`.
    pub min_success: f64,
    pub slope_range: Option<(f64, f64)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Recover,
            n: vec![64],
            t: Vec::new(),
            eps: 0.01,
            trials: 100,
            seed: 0,
            backend: Backend::Contract,
            statevector_r: None,
            input: InputDist::Bernoulli,
            density: 0.5,
            function: "or".into(),
            confidence: 1.0 / 3.0,
            target: 2.0 / 3.0,
            baseline_c: 0.5,
            baseline_r: None,
            inner_arity: 4,
            inner_cost: 2,
            inner_error: 1.0 / 3.0,
            wrap_target: 0.01,
            knobs: RecoverKnobs::default(),
            min_success: 2.0 / 3.0,
            slope_range: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Grid points `(n, t)` in run order.
    pub fn points(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &n in &self.n {
            if self.t.is_empty() {
                out.push((n, n));
            } else {
                out.extend(self.t.iter().map(|&t| (n, t)));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.trials == 0 {
            return invalid("config needs at least one n and one trial");
        }
        if self.points().iter().any(|&(n, t)| n == 0 || t == 0 || t > n) {
            return invalid("every grid point needs 1 <= t <= n");
        }
        if !(0.0..=1.0).contains(&self.density) {
            return invalid("density must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Resolves a symmetric family name; even-`n` majority means `threshold_{n/2}`.
pub fn symmetric_by_name(name: &str, n: usize) -> Result<SymmetricFunction> {
    if name == "majority" && n % 2 == 0 {
        return SymmetricFunction::named(&format!("threshold_{}", n / 2), n);
    }
    SymmetricFunction::named(name, n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub n: usize,
    pub t: usize,
    pub success: bool,
    pub exact: bool,
    pub cost: u64,
    pub real: u64,
    pub forced: u64,
    /// Recovery only: support and part-2 postconditions (`None` when not applicable).
    pub part1_ok: Option<bool>,
    pub part2_ok: Option<bool>,
}

/// Mergeable per-point totals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Accumulator {
    pub trials: u64,
    pub successes: u64,
    pub exact: u64,
    pub cost_sum: u128,
    pub cost_min: u64,
    pub cost_max: u64,
    pub part1_ok: u64,
    pub part2_ok: u64,
}

impl Accumulator {
    pub fn of(r: &TrialRecord) -> Self {
        Self {
            trials: 1,
            successes: r.success as u64,
            exact: r.exact as u64,
            cost_sum: r.cost as u128,
            cost_min: r.cost,
            cost_max: r.cost,
            part1_ok: r.part1_ok.unwrap_or(true) as u64,
            part2_ok: r.part2_ok.unwrap_or(true) as u64,
        }
    }

    /// Associative and commutative; the empty accumulator is the identity.
    pub fn merge(self, o: Self) -> Self {
        if self.trials == 0 {
            return o;
        }
        if o.trials == 0 {
            return self;
        }
        Self {
            trials: self.trials + o.trials,
            successes: self.successes + o.successes,
            exact: self.exact + o.exact,
            cost_sum: self.cost_sum + o.cost_sum,
            cost_min: self.cost_min.min(o.cost_min),
            cost_max: self.cost_max.max(o.cost_max),
            part1_ok: self.part1_ok + o.part1_ok,
            part2_ok: self.part2_ok + o.part2_ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub n: usize,
    pub t: usize,
    pub totals: Accumulator,
    pub success_rate: f64,
    pub success_ci: (f64, f64),
    pub mean_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub points: Vec<PointSummary>,
    /// Fit of `ln(mean cost)` against `ln n` (at least three `n`, one target rule).
    pub fit_n: Option<ExponentFit>,
    /// Fit of `ln(mean cost)` against `ln t` (one `n`, at least three `t`).
    pub fit_t: Option<ExponentFit>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl ExperimentReport {
    /// Threshold violations, empty when all checks pass.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for p in &self.points {
            if p.success_rate < self.config.min_success {
                out.push(format!("n={} t={}: success rate {:.4} below {:.4}", p.n, p.t, p.success_rate, self.config.min_success));
            }
        }
        if let Some((lo, hi)) = self.config.slope_range {
            match self.fit_n.as_ref().or(self.fit_t.as_ref()) {
                Some(f) if f.slope >= lo && f.slope <= hi => {}
                Some(f) => out.push(format!("fitted exponent {:.4} outside [{lo}, {hi}]", f.slope)),
                None => out.push("no exponent fit available for slope check".into()),
            }
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("point,trial,n,t,eps,success,exact,cost,real,forced,part1_ok,part2_ok\n");
        let opt = |v: Option<bool>| v.map(|b| b.to_string()).unwrap_or_default();
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.point, r.trial, r.n, r.t, self.config.eps, r.success, r.exact, r.cost, r.real, r.forced,
                opt(r.part1_ok), opt(r.part2_ok)
            ));
        }
        s
    }

    pub fn summary_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Writes `trials.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trials.csv"), self.csv())?;
        let json = self.summary_json().map_err(std::io::Error::other)?;
        fs::write(dir.join("summary.json"), json)
    }
}

/// The generator for trial `trial` of point `point`.
pub fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

fn draw_input(cfg: &ExperimentConfig, n: usize, rng: &mut dyn RngCore) -> Vec<bool> {
    match cfg.input {
        InputDist::Bernoulli => (0..n).map(|_| rng.random_bool(cfg.density)).collect(),
        InputDist::RandomWeight => {
            let w = rng.random_range(0..=n);
            let mut idx: Vec<usize> = (0..n).collect();
            // partial Fisher-Yates for the first w positions
            for i in 0..w {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            let mut x = vec![false; n];
            idx[..w].iter().for_each(|&i| x[i] = true);
            x
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, finder: &dyn RobustFinder, point: usize, trial: usize, n: usize, t: usize) -> Result<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, point, trial);
    let mut rec =
        TrialRecord { point, trial, n, t, success: false, exact: false, cost: 0, real: 0, forced: 0, part1_ok: None, part2_ok: None };
    match cfg.kind {
        ExperimentKind::Recover => {
            let x = draw_input(cfg, n, &mut rng);
            let set = NoisyOracleSet::bernoulli(x.clone(), cfg.eps)?;
            let r = all_inputs(&set, t, cfg.eps, finder, &mut rng, &cfg.knobs)?;
            let score = score_recovery(&x, &r.x_tilde, t);
            rec.success = score.success();
            rec.exact = score.exact;
            if let Some(tr) = &r.trace {
                let xs: Vec<bool> = x.iter().zip(&tr.support).map(|(&a, &s)| a && s).collect();
                let ws = xs.iter().filter(|&&b| b).count();
                let wx = x.iter().filter(|&&b| b).count();
                let full = tr.support.iter().all(|&b| b);
                rec.part1_ok = Some(ws >= t.min(wx) && (full || ws as f64 <= 1.5 * t as f64));
                let diff = xs.iter().zip(&tr.after_part2).filter(|(a, b)| a != b).count();
                rec.part2_ok = Some(diff as f64 <= t as f64 / (t as f64).log2().powi(2));
            }
            fill_ledger(&mut rec, &r.ledger);
        }
        ExperimentKind::Symmetric => {
            let f = symmetric_by_name(&cfg.function, n)?;
            let x = draw_input(cfg, n, &mut rng);
            let set = NoisyOracleSet::bernoulli(x.clone(), cfg.eps)?;
            let out = symmetric_robust(&f, &set, cfg.eps, cfg.confidence, finder, &mut rng, &cfg.knobs)?;
            rec.success = out.value == f.value_at_weight(x.iter().filter(|&&b| b).count());
            rec.exact = rec.success;
            fill_ledger(&mut rec, &out.ledger);
        }
        ExperimentKind::Baseline => {
            let x = draw_input(cfg, n, &mut rng);
            let truth = x.iter().fold(false, |a, &b| a ^ b);
            let set = NoisyOracleSet::bernoulli(x, cfg.eps)?;
            let b = classical_parity_baseline(&set, cfg.target, cfg.baseline_c, cfg.baseline_r, &mut rng)?;
            rec.success = b.value == truth;
            rec.exact = rec.success;
            fill_ledger(&mut rec, &b.ledger);
        }
        ExperimentKind::DirectSum => {
            let g = BooleanFunction::named(&cfg.function, cfg.inner_arity)?;
            let instances: Vec<Vec<bool>> = (0..n).map(|_| draw_input(cfg, cfg.inner_arity, &mut rng)).collect();
            let inner = InnerRoutine { g: &g, cost: cfg.inner_cost, error: cfg.inner_error };
            let r = direct_sum(inner, &instances, cfg.wrap_target, finder, &mut rng, &cfg.knobs)?;
            rec.success = r.all_correct;
            rec.exact = r.all_correct;
            fill_ledger(&mut rec, &r.ledger);
        }
    }
    Ok(rec)
}

fn fill_ledger(rec: &mut TrialRecord, l: &crate::noisysim::LedgerCounts) {
    rec.cost = l.total;
    rec.real = l.real;
    rec.forced = l.forced;
}

/// Runs every trial of every grid point on `workers` threads (`None`: rayon's default).
pub fn run(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let points = cfg.points();
    let finder = cfg.backend.finder(cfg.statevector_r);
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..cfg.trials).map(move |j| (p, j))).collect();
    let work = || -> Result<Vec<TrialRecord>> {
        jobs.par_iter()
            .map(|&(p, j)| run_trial(cfg, finder.as_ref(), p, j, points[p].0, points[p].1))
            .collect()
    };
    let records = match workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut totals = vec![Accumulator::default(); points.len()];
    for r in &records {
        totals[r.point] = totals[r.point].merge(Accumulator::of(r));
    }
    let mut summaries = Vec::with_capacity(points.len());
    for (&(n, t), acc) in points.iter().zip(&totals) {
        let ci = wilson_ci(acc.successes, acc.trials, 0.95)?;
        summaries.push(PointSummary {
            n,
            t,
            totals: *acc,
            success_rate: acc.successes as f64 / acc.trials as f64,
            success_ci: (ci.lo, ci.hi),
            mean_cost: acc.cost_sum as f64 / acc.trials as f64,
        });
    }
    let fit = |pairs: Vec<(f64, f64)>| -> Result<Option<ExponentFit>> {
        if pairs.len() < 3 || pairs.iter().any(|p| p.1 <= 0.0) {
            return Ok(None);
        }
        fit_exponent(&pairs).map(Some)
    };
    let fit_n = if cfg.n.len() >= 3 && cfg.t.len() <= 1 {
        fit(summaries.iter().map(|s| (s.n as f64, s.mean_cost)).collect())?
    } else {
        None
    };
    let fit_t = if cfg.n.len() == 1 && cfg.t.len() >= 3 {
        fit(summaries.iter().map(|s| (s.t as f64, s.mean_cost)).collect())?
    } else {
        None
    };
    Ok(ExperimentReport { config: cfg.clone(), points: summaries, fit_n, fit_t, records })
}
