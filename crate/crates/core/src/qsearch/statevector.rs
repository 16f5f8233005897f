//! Dense statevector simulation of Grover search over robustified noisy queries.
//!
//! Qubit layout: index bits first (little-endian), then the output qubit, then
//! `r` ancillas. A noisy query for bit `i` rotates an ancilla from `|0>` to
//! `sqrt(1-eps_i)|w_i> + sqrt(eps_i)|not w_i>`; the garbage registers of the
//! noisy subroutines are fixed to a trivial reference state, so amplitudes stay real.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{RobustFindOutcome, RobustFindParams, RobustFinder};
use crate::error::{invalid, Error, Result};
use crate::noisysim::{OracleView, QueryLedger};
use crate::stats::binomial_majority_error;

pub const MAX_STATEVECTOR_QUBITS: usize = 22;
const MAX_INDEX_BITS: usize = 16;

#[derive(Clone, Debug)]
pub struct StateVector {
    amps: Vec<Complex64>,
    index_qubits: usize,
    ancillas: usize,
}

impl StateVector {
    fn check_size(index_qubits: usize, ancillas: usize) -> Result<()> {
        let q = index_qubits + 1 + ancillas;
        if q > MAX_STATEVECTOR_QUBITS {
            return Err(Error::SizeLimit(format!("{q} qubits exceed the statevector budget of {MAX_STATEVECTOR_QUBITS}")));
        }
        Ok(())
    }

    /// `|i>|b>|0^r>` for a basis index `i` and output bit `b`.
    pub fn basis(index_qubits: usize, ancillas: usize, i: usize, b: bool) -> Result<Self> {
        Self::check_size(index_qubits, ancillas)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (index_qubits + 1 + ancillas)];
        amps[i | (b as usize) << index_qubits] = Complex64::new(1.0, 0.0);
        Ok(Self { amps, index_qubits, ancillas })
    }

    /// Uniform superposition over indices, output in `|->`, ancillas zero.
    pub fn grover_start(index_qubits: usize, ancillas: usize) -> Result<Self> {
        Self::check_size(index_qubits, ancillas)?;
        let n = 1usize << index_qubits;
        let a = 1.0 / ((2 * n) as f64).sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (index_qubits + 1 + ancillas)];
        for i in 0..n {
            amps[i] = Complex64::new(a, 0.0);
            amps[i | n] = Complex64::new(-a, 0.0);
        }
        Ok(Self { amps, index_qubits, ancillas })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    fn index_mask(&self) -> usize {
        (1 << self.index_qubits) - 1
    }

    fn output_bit(&self) -> usize {
        1 << self.index_qubits
    }

    /// Rotates ancilla `a` by `sign * alpha[index]`.
    fn rotate_ancilla(&mut self, a: usize, table: &[(f64, f64)], sign: f64) {
        let bit = 1 << (self.index_qubits + 1 + a);
        let mask = self.index_mask();
        for k in 0..self.amps.len() {
            if k & bit != 0 {
                continue;
            }
            let (c, s) = table[k & mask];
            let s = sign * s;
            let (a0, a1) = (self.amps[k], self.amps[k | bit]);
            self.amps[k] = a0 * c - a1 * s;
            self.amps[k | bit] = a0 * s + a1 * c;
        }
    }

    /// `R^{(r)}`, majority of the ancillas XOR-ed into the output, then the inverse rotations.
    pub fn apply_robust_query(&mut self, alphas: &[f64]) {
        let table: Vec<(f64, f64)> = alphas.iter().map(|a| (a.cos(), a.sin())).collect();
        for a in 0..self.ancillas {
            self.rotate_ancilla(a, &table, 1.0);
        }
        let out = self.output_bit();
        let shift = self.index_qubits + 1;
        let r = self.ancillas as u32;
        for k in 0..self.amps.len() {
            if k & out == 0 && (k >> shift).count_ones() * 2 > r {
                self.amps.swap(k, k | out);
            }
        }
        for a in 0..self.ancillas {
            self.rotate_ancilla(a, &table, -1.0);
        }
    }

    /// Inversion about the mean on the index register.
    pub fn diffuse_index(&mut self) {
        let n = 1usize << self.index_qubits;
        for base in (0..self.amps.len()).step_by(n) {
            let mean = self.amps[base..base + n].iter().sum::<Complex64>() / n as f64;
            for a in &mut self.amps[base..base + n] {
                *a = mean * 2.0 - *a;
            }
        }
    }

    /// Probability of measuring each index.
    pub fn index_distribution(&self) -> Vec<f64> {
        let mask = self.index_mask();
        let mut p = vec![0.0; mask + 1];
        for (k, a) in self.amps.iter().enumerate() {
            p[k & mask] += a.norm_sqr();
        }
        p
    }
}

/// Rotation angle so the ancilla reads `w` with probability `1 - eps`.
fn query_angle(w: bool, eps: f64) -> f64 {
    let theta = eps.sqrt().asin();
    if w {
        FRAC_PI_2 - theta
    } else {
        theta
    }
}

/// `Pr[majority of r independent eps-noisy reads is wrong]`.
pub fn majority_error(r: usize, eps: f64) -> f64 {
    binomial_majority_error(r, eps)
}

/// Operator-norm distance between the ideal query and its robustified version,
/// restricted to inputs with all ancillas zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryDistance {
    /// `max_i ||(U - U~)|.>|0^r>||` over the whole output space; equals `2 sqrt(P_bad)`.
    pub full: f64,
    /// The part landing on nonzero ancilla states; equals `2 sqrt(P_bad (1 - P_bad))`.
    pub leakage: f64,
    pub r: usize,
    pub eps: f64,
    /// Target `1/(100 T)` for a query budget `T`.
    pub target: f64,
    pub meets_target: bool,
    pub norm_error: f64,
}

fn largest_singular_value(v0: &[Complex64], v1: &[Complex64]) -> f64 {
    let a: f64 = v0.iter().map(Complex64::norm_sqr).sum();
    let d: f64 = v1.iter().map(Complex64::norm_sqr).sum();
    let b: Complex64 = v0.iter().zip(v1).map(|(x, y)| x.conj() * y).sum();
    let lam = (a + d) / 2.0 + (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
    lam.max(0.0).sqrt()
}

/// Builds `U~_x` for each distinct bit value and reports its distance to `U_x`.
pub fn robustified_query(x: &[bool], eps: f64, r: usize, t_budget: usize) -> Result<QueryDistance> {
    let n = x.len();
    if n == 0 || n > MAX_INDEX_BITS {
        return invalid(format!("statevector backend supports 1 <= n <= {MAX_INDEX_BITS}, got {n}"));
    }
    if r == 0 || r % 2 == 0 {
        return invalid(format!("majority needs an odd number of copies, got {r}"));
    }
    if !(0.0..0.5).contains(&eps) {
        return invalid("eps must lie in [0, 1/2)");
    }
    let index_qubits = n.next_power_of_two().trailing_zeros() as usize;
    StateVector::check_size(index_qubits, r)?;
    let mut full = 0.0f64;
    let mut leakage = 0.0f64;
    let mut norm_error = 0.0f64;
    for xi in [false, true] {
        if !x.contains(&xi) {
            continue;
        }
        let alpha = [query_angle(xi, eps)];
        let mut cols = Vec::new();
        for b in [false, true] {
            let mut s = StateVector::basis(0, r, 0, b)?;
            s.apply_robust_query(&alpha);
            norm_error = norm_error.max((s.norm_sqr() - 1.0).abs());
            let mut d = s.amps.clone();
            d[(b ^ xi) as usize] -= Complex64::new(1.0, 0.0);
            cols.push(d);
        }
        full = full.max(largest_singular_value(&cols[0], &cols[1]));
        let leak: Vec<Vec<Complex64>> =
            cols.iter().map(|c| c.iter().enumerate().map(|(k, v)| if k >> 1 == 0 { Complex64::new(0.0, 0.0) } else { *v }).collect()).collect();
        leakage = leakage.max(largest_singular_value(&leak[0], &leak[1]));
    }
    let target = 1.0 / (100.0 * t_budget.max(1) as f64);
    Ok(QueryDistance { full, leakage, r, eps, target, meets_target: full <= target, norm_error })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroverReport {
    pub n: usize,
    pub weight: usize,
    pub iterations: usize,
    pub distribution: Vec<f64>,
    /// Exact probability that the measured index is a 1 of `x`.
    pub success_probability: f64,
    pub shots: u64,
    pub successes: u64,
    pub histogram: Vec<u64>,
    pub max_norm_error: f64,
    /// Set when `x` has no ones; the distribution is then uniform.
    pub empty_input: bool,
}

impl GroverReport {
    pub fn empirical_success(&self) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.successes as f64 / self.shots as f64
        }
    }

    /// `index,probability,count` rows.
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("index,probability,count\n");
        for (i, (p, c)) in self.distribution.iter().zip(&self.histogram).enumerate() {
            s.push_str(&format!("{i},{p},{c}\n"));
        }
        s
    }
}

fn sample_index<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
    let total: f64 = dist.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &p) in dist.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    dist.len() - 1
}

/// Grover with `floor(pi/4 sqrt(n/|x|))` iterations of the robustified query.
pub fn grover_robust<R: Rng + ?Sized>(x: &[bool], eps: f64, r: usize, shots: u64, rng: &mut R) -> Result<GroverReport> {
    let n = x.len();
    if !n.is_power_of_two() || !(2..=MAX_INDEX_BITS).contains(&n) {
        return invalid(format!("grover_robust needs n a power of two in [2, {MAX_INDEX_BITS}], got {n}"));
    }
    if r == 0 || r % 2 == 0 {
        return invalid(format!("majority needs an odd number of copies, got {r}"));
    }
    let weight = x.iter().filter(|&&b| b).count();
    let index_qubits = n.trailing_zeros() as usize;
    let mut s = StateVector::grover_start(index_qubits, r)?;
    let mut max_norm_error = (s.norm_sqr() - 1.0).abs();
    let iterations = if weight == 0 {
        0
    } else {
        (std::f64::consts::FRAC_PI_4 * (n as f64 / weight as f64).sqrt()).floor() as usize
    };
    let alphas: Vec<f64> = x.iter().map(|&b| query_angle(b, eps)).collect();
    for _ in 0..iterations {
        s.apply_robust_query(&alphas);
        s.diffuse_index();
        max_norm_error = max_norm_error.max((s.norm_sqr() - 1.0).abs());
    }
    let distribution = s.index_distribution();
    let success_probability = distribution.iter().zip(x).filter(|(_, &b)| b).map(|(p, _)| p).sum();
    let mut histogram = vec![0u64; n];
    let mut successes = 0;
    for _ in 0..shots {
        let i = sample_index(&distribution, rng);
        histogram[i] += 1;
        successes += x[i] as u64;
    }
    Ok(GroverReport {
        n,
        weight,
        iterations,
        distribution,
        success_probability,
        shots,
        successes,
        histogram,
        max_norm_error,
        empty_input: weight == 0,
    })
}

type TableKey = (Vec<bool>, Vec<u64>, usize, usize);

/// Search backend for `n <= 16`: Grover with a random iteration count in `0..M`
/// (`M ~ sqrt(1/beta)`), measure, then confirm the candidate with a classical majority
/// of `V` direct invocations; up to `L = ceil(ln(1/delta) / ln(4/3))` attempts.
///
/// Each robustified query is charged `2r` invocations (rotation and uncomputation).
#[derive(Debug, Default)]
pub struct StatevectorFinder {
    /// Fixed number of majority copies; chosen from the query budget when `None`.
    pub r: Option<usize>,
    cache: Mutex<HashMap<TableKey, Arc<Vec<Vec<f64>>>>>,
}

impl StatevectorFinder {
    pub fn new(r: Option<usize>) -> Self {
        Self { r, cache: Mutex::default() }
    }

    fn iteration_choices(n: usize, padded: usize, beta: f64) -> usize {
        (padded as f64 / (beta * n as f64)).sqrt().ceil() as usize + 1
    }

    /// Smallest odd `r` with `2 sqrt(P_bad) <= 1/(100 M)`, capped by the memory budget.
    pub fn auto_r(eps: f64, m: usize, index_qubits: usize) -> usize {
        let mut cap = MAX_STATEVECTOR_QUBITS - 1 - index_qubits;
        cap = cap.min(15);
        if cap % 2 == 0 {
            cap -= 1;
        }
        let target = 1.0 / (100.0 * m as f64);
        (1..=cap).step_by(2).find(|&r| 2.0 * majority_error(r, eps).sqrt() <= target).unwrap_or(cap)
    }

    fn attempts(delta: f64) -> usize {
        ((1.0 / delta).ln() / (4.0f64 / 3.0).ln()).ceil().max(1.0) as usize
    }

    fn verification_reads(eps: f64, attempts: usize, gamma: f64) -> usize {
        (1..).step_by(2).find(|&v| attempts as f64 * majority_error(v, eps) <= gamma / 2.0).unwrap()
    }

    fn table(&self, w: Vec<bool>, eps: &[f64], r: usize, m: usize) -> Result<Arc<Vec<Vec<f64>>>> {
        let key = (w, eps.iter().map(|e| e.to_bits()).collect(), r, m);
        if let Some(t) = self.cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(t));
        }
        let index_qubits = key.0.len().trailing_zeros() as usize;
        let alphas: Vec<f64> = key.0.iter().zip(eps).map(|(&b, &e)| query_angle(b, e)).collect();
        let mut s = StateVector::grover_start(index_qubits, r)?;
        let mut dists = Vec::with_capacity(m);
        for j in 0..m {
            if j > 0 {
                s.apply_robust_query(&alphas);
                s.diffuse_index();
            }
            dists.push(s.index_distribution());
        }
        let t = Arc::new(dists);
        self.cache.lock().unwrap().insert(key, Arc::clone(&t));
        Ok(t)
    }
}

impl RobustFinder for StatevectorFinder {
    fn find(
        &self,
        view: &OracleView<'_>,
        params: &RobustFindParams,
        rng: &mut dyn RngCore,
        ledger: &mut QueryLedger,
    ) -> Result<RobustFindOutcome> {
        params.validate()?;
        let n = view.n();
        if n > MAX_INDEX_BITS {
            return Err(Error::SizeLimit(format!("statevector backend supports n <= {MAX_INDEX_BITS}, got {n}")));
        }
        let padded = n.next_power_of_two();
        let index_qubits = padded.trailing_zeros() as usize;
        let m = Self::iteration_choices(n, padded, params.beta);
        let r = self.r.unwrap_or_else(|| Self::auto_r(params.eps, m, index_qubits));
        let mut w = view.effective_input();
        w.resize(padded, false);
        let eps: Vec<f64> = (0..padded)
            .map(|i| if i < n && view.support()[i] { view.base().bit_error(i) } else { 0.0 })
            .collect();
        let table = self.table(w, &eps, r, m)?;
        let attempts = Self::attempts(params.delta);
        let reads = Self::verification_reads(params.eps, attempts, params.gamma);
        let unit = view.base().unit_cost();
        let before = ledger.total();
        let mut grover_cost = 0u64;
        let mut found = None;
        for _ in 0..attempts {
            let j = rng.random_range(0..m);
            grover_cost += (j * 2 * r) as u64 * unit;
            let i = sample_index(&table[j], rng);
            if i >= n {
                continue;
            }
            let mut ones = 0;
            for _ in 0..reads {
                ones += view.invoke(i, rng, ledger)? as usize;
            }
            if 2 * ones > reads {
                found = Some(i);
                break;
            }
        }
        ledger.charge_search(grover_cost);
        Ok(RobustFindOutcome { index: found, cost_charged: ledger.total() - before })
    }

    fn cost(&self, _params: &RobustFindParams, _unit_cost: u64) -> Option<u64> {
        None
    }

    fn name(&self) -> &'static str {
        "statevector"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_grover_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in [4usize, 8, 16] {
            for w in [1usize, 2] {
                let x: Vec<bool> = (0..n).map(|i| i < w).collect();
                let rep = grover_robust(&x, 0.0, 1, 0, &mut rng).unwrap();
                let theta = (w as f64 / n as f64).sqrt().asin();
                let want = ((2 * rep.iterations + 1) as f64 * theta).sin().powi(2);
                assert!((rep.success_probability - want).abs() < 1e-6, "n={n} w={w}");
                assert!(rep.max_norm_error < 1e-10);
            }
        }
    }

    #[test]
    fn single_copy_distance_closed_form() {
        let d = robustified_query(&[true, false], 0.05, 1, 1).unwrap();
        assert!((d.leakage - 2.0 * (0.05f64 * 0.95).sqrt()).abs() < 1e-9);
        assert!((d.full - 2.0 * 0.05f64.sqrt()).abs() < 1e-9);
        let exact = robustified_query(&[true, false], 0.0, 3, 1).unwrap();
        assert!(exact.full < 1e-12);
    }
}
