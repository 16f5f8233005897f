//! Noisy oracle sets, the flipped/restricted views algorithms run against, and
//! the query ledger.
//!
//! The hidden input is reachable through [`NoisyOracleSet::ground_truth`] for
//! scoring and for the contract search model; recovery code never calls it.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Fixed `n x m` matrix of perturbed copies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyMatrix {
    rows: Vec<Vec<bool>>,
}

impl CopyMatrix {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let m = rows.first().map(Vec::len).unwrap_or(0);
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return invalid("copy matrix rows must be non-empty and of equal length");
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i][j]
    }

    /// Fraction of ones in row `i`.
    pub fn row_mean(&self, i: usize) -> f64 {
        self.rows[i].iter().filter(|&&b| b).count() as f64 / self.m() as f64
    }

    /// One hex string per row, 4 copies per digit, lowest copy first.
    pub fn to_hex_rows(&self) -> String {
        let mut s = String::new();
        for row in &self.rows {
            for c in row.chunks(4) {
                let v = c.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
                s.push(std::char::from_digit(v, 16).unwrap());
            }
            s.push('\n');
        }
        s
    }

    pub fn from_hex_rows(m: usize, text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut row = Vec::with_capacity(m);
            for ch in line.chars() {
                let v = ch.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit {ch:?}")))?;
                for b in 0..4 {
                    if row.len() < m {
                        row.push(v >> b & 1 == 1);
                    }
                }
            }
            if row.len() != m || line.len() != m.div_ceil(4) {
                return Err(Error::Parse(format!("row {line:?} does not hold {m} copies")));
            }
            rows.push(row);
        }
        Self::new(rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleMode {
    /// Each invocation of `A_i` errs independently with probability exactly `eps_i`.
    Bernoulli,
    /// Each invocation reads `y_{i,J}` for a fresh uniform `J`.
    Copies(CopyMatrix),
}

/// Default constant in `m = ceil(c ln(100 n) / eps^2)`.
pub const COPIES_M_C: f64 = 1.0;

/// A family of noisy subroutines `A_1..A_n` around a hidden input.
#[derive(Clone, Debug)]
pub struct NoisyOracleSet {
    hidden_x: Vec<bool>,
    eps: Vec<f64>,
    eps_bound: f64,
    mode: OracleMode,
    unit_cost: u64,
}

impl NoisyOracleSet {
    pub fn bernoulli(x: Vec<bool>, eps: f64) -> Result<Self> {
        let n = x.len();
        Self::heterogeneous(x, vec![eps; n], eps)
    }

    /// Per-bit error rates `eps_i <= eps_bound`.
    pub fn heterogeneous(x: Vec<bool>, eps: Vec<f64>, eps_bound: f64) -> Result<Self> {
        if x.is_empty() {
            return invalid("oracle set needs at least one bit");
        }
        if eps.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: eps.len() });
        }
        if !(0.0..0.5).contains(&eps_bound) || eps.iter().any(|&e| !(0.0..=eps_bound).contains(&e)) {
            return invalid("error rates must satisfy 0 <= eps_i <= eps < 1/2");
        }
        Ok(Self { hidden_x: x, eps, eps_bound, mode: OracleMode::Bernoulli, unit_cost: 1 })
    }

    /// Multiple-noisy-copies model with `m = ceil(c ln(100n) / eps^2)`.
    pub fn copies<R: Rng + ?Sized>(x: Vec<bool>, eps: f64, c: f64, rng: &mut R) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.25) {
            return invalid(format!("copies model needs 0 < eps < 1/4, got {eps}"));
        }
        let m = ((c * (100.0 * x.len() as f64).ln() / (eps * eps)).ceil() as usize).max(1);
        Self::copies_with_m(x, eps, m, rng)
    }

    /// Copies model with an explicit `m`; the resulting set is nominally `2 eps`-close.
    pub fn copies_with_m<R: Rng + ?Sized>(x: Vec<bool>, eps: f64, m: usize, rng: &mut R) -> Result<Self> {
        if x.is_empty() || m == 0 || !(0.0..0.25).contains(&eps) {
            return invalid("copies model needs n, m >= 1 and 0 <= eps < 1/4");
        }
        let rows: Vec<Vec<bool>> = x.iter().map(|&xi| (0..m).map(|_| xi ^ rng.random_bool(eps)).collect()).collect();
        Self::from_matrix(x, CopyMatrix::new(rows)?, 2.0 * eps)
    }

    pub fn from_matrix(x: Vec<bool>, matrix: CopyMatrix, eps_bound: f64) -> Result<Self> {
        if matrix.n() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: matrix.n() });
        }
        let eps = (0..x.len()).map(|i| (matrix.row_mean(i) - if x[i] { 1.0 } else { 0.0 }).abs()).collect();
        Ok(Self { hidden_x: x, eps, eps_bound, mode: OracleMode::Copies(matrix), unit_cost: 1 })
    }

    /// Each invocation is charged `unit_cost` ledger units (inner queries per call).
    pub fn with_unit_cost(mut self, unit_cost: u64) -> Self {
        self.unit_cost = unit_cost.max(1);
        self
    }

    pub fn n(&self) -> usize {
        self.hidden_x.len()
    }

    pub fn eps_bound(&self) -> f64 {
        self.eps_bound
    }

    /// Actual error rate of `A_i` (for copies mode, the row's disagreement fraction).
    pub fn bit_error(&self, i: usize) -> f64 {
        self.eps[i]
    }

    pub fn unit_cost(&self) -> u64 {
        self.unit_cost
    }

    pub fn mode(&self) -> &OracleMode {
        &self.mode
    }

    /// The hidden input. Scoring and the contract search model only.
    pub fn ground_truth(&self) -> &[bool] {
        &self.hidden_x
    }

    /// One run of `A_i`, without accounting.
    fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> bool {
        match &self.mode {
            OracleMode::Bernoulli => self.hidden_x[i] ^ (self.eps[i] > 0.0 && rng.random_bool(self.eps[i])),
            OracleMode::Copies(y) => y.get(i, rng.random_range(0..y.m())),
        }
    }
}

/// Ledger snapshot: totals plus per-phase counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerCounts {
    pub total: u64,
    pub by_phase: BTreeMap<String, u64>,
    /// Direct invocations that ran the base oracle.
    pub real: u64,
    /// Direct invocations answered 0 outside the support.
    pub forced: u64,
    pub search_calls: u64,
}

impl LedgerCounts {
    pub fn phase(&self, label: &str) -> u64 {
        self.by_phase.get(label).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &LedgerCounts) {
        self.total += other.total;
        self.real += other.real;
        self.forced += other.forced;
        self.search_calls += other.search_calls;
        for (k, v) in &other.by_phase {
            *self.by_phase.entry(k.clone()).or_default() += v;
        }
    }
}

/// Counts invocations of the `A_i`, split by the current phase label.
#[derive(Clone, Debug, Default)]
pub struct QueryLedger {
    counts: LedgerCounts,
    phase: String,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self { counts: LedgerCounts::default(), phase: "main".into() }
    }

    pub fn set_phase(&mut self, label: &str) {
        self.phase = label.to_string();
    }

    pub fn current_phase(&self) -> &str {
        &self.phase
    }

    pub fn charge(&mut self, cost: u64) {
        self.counts.total += cost;
        *self.counts.by_phase.entry(self.phase.clone()).or_default() += cost;
    }

    pub(crate) fn charge_search(&mut self, cost: u64) {
        self.counts.search_calls += 1;
        self.charge(cost);
    }

    pub fn total(&self) -> u64 {
        self.counts.total
    }

    pub fn counts(&self) -> &LedgerCounts {
        &self.counts
    }

    /// Returns the counts and zeroes them; the phase label is kept.
    pub fn snapshot_and_reset(&mut self) -> LedgerCounts {
        std::mem::take(&mut self.counts)
    }
}

/// Vector-backed set over `0..n` with O(1) insert, remove and uniform sampling.
#[derive(Clone, Debug)]
pub(crate) struct IndexSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl IndexSet {
    const ABSENT: usize = usize::MAX;

    fn new(n: usize) -> Self {
        Self { items: Vec::new(), pos: vec![Self::ABSENT; n] }
    }

    fn insert(&mut self, i: usize) {
        if self.pos[i] == Self::ABSENT {
            self.pos[i] = self.items.len();
            self.items.push(i);
        }
    }

    fn remove(&mut self, i: usize) {
        let p = self.pos[i];
        if p != Self::ABSENT {
            let last = self.items.pop().unwrap();
            if last != i {
                self.items[p] = last;
                self.pos[last] = p;
            }
            self.pos[i] = Self::ABSENT;
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.items.len()
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        (!self.items.is_empty()).then(|| self.items[rng.random_range(0..self.items.len())])
    }
}

/// `A^S(x~)`: answers flipped by `x~`, forced to 0 outside the support `S`,
/// optionally negated (to search for zeros of `x`).
#[derive(Clone, Debug)]
pub struct OracleView<'a> {
    base: &'a NoisyOracleSet,
    negate: bool,
    flip: Vec<bool>,
    support: Vec<bool>,
    support_size: usize,
    // in-support indices with w_i = 1, and in-support zeros of w whose oracle is noisy
    ones: IndexSet,
    noisy_zeros: IndexSet,
}

impl<'a> OracleView<'a> {
    pub fn new(base: &'a NoisyOracleSet) -> Self {
        Self::build(base, false)
    }

    /// View of `not x`, so that searching for ones finds zeros of `x`.
    pub fn negated(base: &'a NoisyOracleSet) -> Self {
        Self::build(base, true)
    }

    fn build(base: &'a NoisyOracleSet, negate: bool) -> Self {
        let n = base.n();
        let mut v = Self {
            base,
            negate,
            flip: vec![false; n],
            support: vec![true; n],
            support_size: n,
            ones: IndexSet::new(n),
            noisy_zeros: IndexSet::new(n),
        };
        v.rebuild();
        v
    }

    fn classify(&mut self, i: usize) {
        self.ones.remove(i);
        self.noisy_zeros.remove(i);
        if !self.support[i] {
            return;
        }
        if self.base.hidden_x[i] ^ self.negate ^ self.flip[i] {
            self.ones.insert(i);
        } else if self.base.eps[i] > 0.0 {
            self.noisy_zeros.insert(i);
        }
    }

    fn rebuild(&mut self) {
        for i in 0..self.n() {
            self.classify(i);
        }
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn base(&self) -> &NoisyOracleSet {
        self.base
    }

    pub fn flip_mask(&self) -> &[bool] {
        &self.flip
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }

    /// Toggles `x~_i`.
    pub fn flip(&mut self, i: usize) {
        self.flip[i] = !self.flip[i];
        self.classify(i);
    }

    pub fn clear_flips(&mut self) {
        self.flip.iter_mut().for_each(|b| *b = false);
        self.rebuild();
    }

    pub fn set_support(&mut self, support: Vec<bool>) -> Result<()> {
        if support.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: support.len() });
        }
        self.support_size = support.iter().filter(|&&b| b).count();
        self.support = support;
        self.rebuild();
        Ok(())
    }

    /// One invocation of the view's `i`-th subroutine, charged to the ledger.
    pub fn invoke<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, ledger: &mut QueryLedger) -> Result<bool> {
        if i >= self.n() {
            return invalid(format!("oracle index {i} out of range 0..{}", self.n()));
        }
        ledger.charge(self.base.unit_cost);
        if !self.support[i] {
            ledger.counts.forced += 1;
            return Ok(false);
        }
        ledger.counts.real += 1;
        Ok(self.base.sample(i, rng) ^ self.negate ^ self.flip[i])
    }

    /// Hamming weight of the effective input `w`. Contract model only.
    pub(crate) fn effective_weight(&self) -> usize {
        self.ones.len()
    }

    pub(crate) fn ones(&self) -> &IndexSet {
        &self.ones
    }

    pub(crate) fn noisy_zeros(&self) -> &IndexSet {
        &self.noisy_zeros
    }

    /// The effective input `w = ((x or not x) xor x~) restricted to S`. Scoring only.
    pub fn effective_input(&self) -> Vec<bool> {
        (0..self.n()).map(|i| self.support[i] && (self.base.hidden_x[i] ^ self.negate ^ self.flip[i])).collect()
    }
}
