//! Type-1 and type-2 robustness: checks, boosting, conversions between the two
//! notions and certificate-based robustification.
//!
//! Variable layout for copy-structured polynomials: `y_{i,j}` is variable `i*m + j`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolfn::{index_to_bits, max_certificate_complexity, BitFunction, BooleanFunction};
use crate::error::{invalid, Error, Result};
use crate::poly::{BlockValue, BoostParams, ExpectedNode, MultilinearPoly, Node, PolyExpr};
use crate::scalar::Scalar;
use crate::stats::wilson_ci;

/// Arity cap for exhaustive type-2 checks (`4^n` evaluations).
pub const MAX_TYPE2_ARITY: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub m: usize,
}

impl PerturbationSpec {
    pub fn new(epsilon: f64, m: usize) -> Result<Self> {
        let s = Self { epsilon, m };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return invalid(format!("epsilon must lie in [0, 1/2), got {}", self.epsilon));
        }
        if self.m == 0 {
            return invalid("need at least one copy per bit");
        }
        Ok(())
    }
}

/// Draws an `n x m` matrix whose entries equal `x_i` independently with probability `1 - epsilon`.
pub fn sample_perturbation<R: Rng + ?Sized>(x: &[bool], noise: &PerturbationSpec, rng: &mut R) -> Vec<Vec<bool>> {
    x.iter()
        .map(|&xi| (0..noise.m).map(|_| xi ^ rng.random_bool(noise.epsilon)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness<S> {
    pub x: Vec<bool>,
    /// The real point (type-2) or the flattened Boolean sample (type-1).
    pub z: Vec<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessReport<S> {
    pub passed: bool,
    /// `max(0, max_error - bound)`.
    pub worst_violation: S,
    /// Largest `|p(z) - f(x)|` seen.
    pub max_error: S,
    pub witness: Option<Witness<S>>,
    pub trials_or_points: u64,
    /// Set when PASS is statistical or sampled evidence rather than an exact decision.
    pub evidence_only: bool,
    /// Type-1 only: worst empirical failure rate and its 95% Wilson upper bound.
    pub failure_rate: Option<f64>,
    pub failure_ci_upper: Option<f64>,
    /// Type-1 only: whether every sampled Boolean value lay in `[-1/3, 4/3]`.
    pub range_ok: Option<bool>,
}

impl<S: Scalar> RobustnessReport<S> {
    fn empty(evidence_only: bool) -> Self {
        Self {
            passed: true,
            worst_violation: S::zero(),
            max_error: S::zero(),
            witness: None,
            trials_or_points: 0,
            evidence_only,
            failure_rate: None,
            failure_ci_upper: None,
            range_ok: None,
        }
    }

    fn observe(&mut self, err: S, x: &[bool], z: impl FnOnce() -> Vec<S>) {
        if self.witness.is_none() || err > self.max_error {
            self.max_error = err;
            self.witness = Some(Witness { x: x.to_vec(), z: z() });
        }
    }

    fn finish(mut self, bound: &S, tolerance: &S) -> Self {
        let over = self.max_error.clone() - bound.clone();
        self.worst_violation = if over > S::zero() { over.clone() } else { S::zero() };
        self.passed = over <= tolerance.clone();
        self
    }

    /// Plain `key = value` record, one field per line.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("verdict = {}\n", if self.passed { "PASS" } else { "FAIL" }));
        s.push_str(&format!("evidence_only = {}\n", self.evidence_only));
        s.push_str(&format!("worst_violation = {}\n", self.worst_violation));
        s.push_str(&format!("max_error = {}\n", self.max_error));
        s.push_str(&format!("trials_or_points = {}\n", self.trials_or_points));
        if let Some(w) = &self.witness {
            let x: String = w.x.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let z: Vec<String> = w.z.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("witness_x = {x}\n"));
            s.push_str(&format!("witness_z = [{}]\n", z.join(", ")));
        }
        if let Some(r) = self.failure_rate {
            s.push_str(&format!("failure_rate = {r}\n"));
        }
        if let Some(u) = self.failure_ci_upper {
            s.push_str(&format!("failure_ci_upper = {u}\n"));
        }
        if let Some(r) = self.range_ok {
            s.push_str(&format!("range_ok = {r}\n"));
        }
        s
    }
}

fn bit<S: Scalar>(b: bool) -> S {
    if b {
        S::one()
    } else {
        S::zero()
    }
}

fn check_arity(pn: usize, f: &BooleanFunction) -> Result<()> {
    if pn != f.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), got: pn });
    }
    if f.n() > MAX_TYPE2_ARITY {
        return Err(Error::SizeLimit(format!("type-2 check arity {} > {MAX_TYPE2_ARITY}", f.n())));
    }
    Ok(())
}

/// Exact type-2 check of a multilinear polynomial over the boxes
/// `z_i in [0, eps]` (when `x_i = 0`) or `[1 - eps, 1]` (when `x_i = 1`).
///
/// A multilinear polynomial is affine in each coordinate, so its extremes over a
/// box sit at the box vertices.
pub fn check_type2_vertex<S: Scalar>(
    p: &MultilinearPoly<S>,
    f: &BooleanFunction,
    eps: &S,
    bound: &S,
) -> Result<RobustnessReport<S>> {
    let n = f.n();
    check_arity(p.nvars(), f)?;
    let mut rep = RobustnessReport::empty(false);
    let one_minus = S::one() - eps.clone();
    let mut z = vec![S::zero(); n];
    for xi in 0..1usize << n {
        let x = index_to_bits(xi, n);
        let fx: S = bit(f.value(xi));
        for v in 0..1usize << n {
            for i in 0..n {
                let at_edge = v >> i & 1 == 1;
                z[i] = match (x[i], at_edge) {
                    (false, false) => S::zero(),
                    (false, true) => eps.clone(),
                    (true, false) => one_minus.clone(),
                    (true, true) => S::one(),
                };
            }
            let err = (p.eval_unchecked(&z) - fx.clone()).abs();
            rep.observe(err, &x, || z.clone());
            rep.trials_or_points += 1;
        }
    }
    Ok(rep.finish(bound, &S::zero()))
}

/// Grid search over the same boxes for arbitrary expressions (evidence only).
pub fn check_type2_grid<S: Scalar>(
    p: &PolyExpr<S>,
    f: &BooleanFunction,
    eps: &S,
    points_per_box: usize,
    tolerance: &S,
) -> Result<RobustnessReport<S>> {
    if points_per_box < 2 {
        return invalid("grid needs at least 2 points per box");
    }
    let n = f.n();
    check_arity(p.nvars(), f)?;
    let total = (points_per_box as u64).checked_pow(n as u32).filter(|&t| t <= 1 << 26);
    let Some(total) = total else {
        return Err(Error::SizeLimit(format!("{points_per_box}^{n} grid points per box")));
    };
    let steps: Vec<S> = (0..points_per_box)
        .map(|j| eps.clone() * S::from_ratio(j as i64, (points_per_box - 1) as i64))
        .collect();
    let mut rep = RobustnessReport::empty(true);
    let mut z = vec![S::zero(); n];
    for xi in 0..1usize << n {
        let x = index_to_bits(xi, n);
        let fx: S = bit(f.value(xi));
        for g in 0..total {
            let mut rest = g;
            for i in 0..n {
                let off = steps[(rest % points_per_box as u64) as usize].clone();
                rest /= points_per_box as u64;
                z[i] = if x[i] { S::one() - off } else { off };
            }
            let err = (p.eval(&z)? - fx.clone()).abs();
            rep.observe(err, &x, || z.clone());
            rep.trials_or_points += 1;
        }
    }
    Ok(rep.finish(&S::from_ratio(1, 3), tolerance))
}

/// Options for [`estimate_type1`].
#[derive(Clone, Copy, Debug)]
pub struct Type1Options {
    pub trials: u64,
    /// Inputs to test when `n > 12` (sampled uniformly); all inputs otherwise.
    pub x_sample: usize,
    pub level: f64,
}

impl Default for Type1Options {
    fn default() -> Self {
        Self { trials: 1000, x_sample: 256, level: 0.95 }
    }
}

/// Monte Carlo estimate of `Pr[|p(y) - f(x)| > 1/3]` for each tested `x`.
///
/// PASS requires every 95% upper confidence bound below 1/3 and every sampled
/// Boolean value of `p` inside `[-1/3, 4/3]`. Always statistical evidence.
pub fn estimate_type1(
    p: &PolyExpr<f64>,
    f: &dyn BitFunction,
    noise: &PerturbationSpec,
    opts: Type1Options,
    rng: &mut dyn RngCore,
) -> Result<RobustnessReport<f64>> {
    noise.validate()?;
    if opts.trials < 100 {
        return invalid("type-1 estimation needs at least 100 trials per input");
    }
    let n = f.arity();
    if p.nvars() != n * noise.m {
        return Err(Error::DimensionMismatch { expected: n * noise.m, got: p.nvars() });
    }
    let xs: Vec<Vec<bool>> = if n <= 12 {
        (0..1usize << n).map(|i| index_to_bits(i, n)).collect()
    } else {
        (0..opts.x_sample).map(|_| (0..n).map(|_| rng.random_bool(0.5)).collect()).collect()
    };
    let seeds: Vec<u64> = xs.iter().map(|_| rng.next_u64()).collect();
    struct PerX {
        failures: u64,
        worst_err: f64,
        worst_y: Vec<f64>,
        range_ok: bool,
    }
    let per_x: Vec<Result<PerX>> = xs
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(x, &seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fx = if f.eval_bits(x) { 1.0 } else { 0.0 };
            let mut out = PerX { failures: 0, worst_err: -1.0, worst_y: Vec::new(), range_ok: true };
            let mut y = vec![0.0; n * noise.m];
            for _ in 0..opts.trials {
                for (i, &xi) in x.iter().enumerate() {
                    for j in 0..noise.m {
                        y[i * noise.m + j] = bit::<f64>(xi ^ rng.random_bool(noise.epsilon));
                    }
                }
                let v = p.eval(&y)?;
                let err = (v - fx).abs();
                if err > 1.0 / 3.0 {
                    out.failures += 1;
                }
                if err > out.worst_err {
                    out.worst_err = err;
                    out.worst_y = y.clone();
                }
                if !(-1.0 / 3.0 - 1e-12..=4.0 / 3.0 + 1e-12).contains(&v) {
                    out.range_ok = false;
                }
                // an independent uniform Boolean point for the range condition
                for yv in y.iter_mut() {
                    *yv = bit(rng.random_bool(0.5));
                }
                let u = p.eval(&y)?;
                if !(-1.0 / 3.0 - 1e-12..=4.0 / 3.0 + 1e-12).contains(&u) {
                    out.range_ok = false;
                }
            }
            Ok(out)
        })
        .collect();
    let mut rep = RobustnessReport::<f64>::empty(true);
    let mut worst_rate = 0.0f64;
    let mut worst_upper = 0.0f64;
    let mut range_ok = true;
    for (x, r) in xs.iter().zip(per_x) {
        let r = r?;
        let rate = r.failures as f64 / opts.trials as f64;
        let upper = wilson_ci(r.failures, opts.trials, opts.level)?.hi;
        worst_rate = worst_rate.max(rate);
        worst_upper = worst_upper.max(upper);
        range_ok &= r.range_ok;
        let wy = r.worst_y;
        rep.observe(r.worst_err, x, || wy);
        rep.trials_or_points += opts.trials;
    }
    rep.max_error = rep.max_error.max(0.0);
    rep.worst_violation = (rep.max_error - 1.0 / 3.0).max(0.0);
    rep.failure_rate = Some(worst_rate);
    rep.failure_ci_upper = Some(worst_upper);
    rep.range_ok = Some(range_ok);
    rep.passed = worst_upper < 1.0 / 3.0 && range_ok;
    Ok(rep)
}

/// Exact failure probability `Pr[|p(y) - f(x)| > 1/3]` by enumerating all `2^(nm)` samples (`nm <= 20`).
pub fn exact_type1_failure<S: Scalar>(p: &MultilinearPoly<S>, f: &BooleanFunction, m: usize, eps: &S) -> Result<S> {
    let n = f.n();
    let nv = n * m;
    if p.nvars() != nv {
        return Err(Error::DimensionMismatch { expected: nv, got: p.nvars() });
    }
    if nv > 20 {
        return Err(Error::SizeLimit(format!("enumeration over {nv} bits")));
    }
    let third = S::from_ratio(1, 3);
    let mut worst = S::zero();
    for xi in 0..1usize << n {
        let fx: S = bit(f.value(xi));
        let mut fail = S::zero();
        for v in 0..1u64 << nv {
            let mut pr = S::one();
            for var in 0..nv {
                let xb = xi >> (var / m) & 1 == 1;
                let yb = v >> var & 1 == 1;
                pr = pr * if xb == yb { S::one() - eps.clone() } else { eps.clone() };
            }
            if (p.eval_index(v) - fx.clone()).abs() > third {
                fail = fail + pr;
            }
        }
        worst = S::max_of(worst, fail);
    }
    Ok(worst)
}

/// Result of [`boost_type1`]: the boosted polynomial over `n * m_prime` variables.
#[derive(Clone, Debug)]
pub struct Boosted<S> {
    pub expr: PolyExpr<S>,
    pub params: BoostParams,
    pub m_prime: usize,
    pub degree: usize,
}

/// `q(y) = h_k( (1/r) sum_b h_k0( sigma(p(y_b)) ) )` over `r` fresh copy-blocks.
pub fn boost_type1<S: Scalar>(p: &PolyExpr<S>, d: usize, delta: f64, noise: &PerturbationSpec) -> Result<Boosted<S>> {
    boost_type1_with(p, d, noise.m, BoostParams::for_delta(delta)?)
}

pub fn boost_type1_with<S: Scalar>(p: &PolyExpr<S>, d: usize, m: usize, params: BoostParams) -> Result<Boosted<S>> {
    params.validate()?;
    if m == 0 || p.nvars() % m != 0 {
        return invalid(format!("{} variables do not split into rows of {m} copies", p.nvars()));
    }
    let n = p.nvars() / m;
    let mp = params.r * m;
    let mut blocks = Vec::with_capacity(params.r);
    for b in 0..params.r {
        let inner: Vec<PolyExpr<S>> =
            (0..n * m).map(|v| PolyExpr::var(n * mp, (v / m) * mp + b * m + v % m)).collect::<Result<_>>()?;
        let mut node = p.substitute(&inner)?.root().clone();
        if params.stretch {
            node = Node::stretch(node);
        }
        if params.k0 > 1 {
            node = Node::amplify(params.k0, node);
        }
        blocks.push(node);
    }
    let mut node = if blocks.len() == 1 { blocks.pop().unwrap() } else { Node::mean(blocks) };
    if params.k > 1 {
        node = Node::amplify(params.k, node);
    }
    Ok(Boosted { expr: PolyExpr::try_new(n * mp, node)?, params, m_prime: mp, degree: params.k * params.k0 * d })
}

/// Default constant in `m = ceil(c ln(3n) / (1/2 - eps)^2)`.
pub const TYPE2_TO_TYPE1_C: f64 = 2.0;

pub fn type2_to_type1_copies(eps: f64, n: usize, c: f64) -> Result<usize> {
    if !(0.0..0.5).contains(&eps) || n == 0 {
        return invalid("need 0 <= eps < 1/2 and n >= 1");
    }
    let m = (c * (3.0 * n as f64).ln() / (0.5 - eps).powi(2)).ceil();
    Ok((m as usize).max(1))
}

/// Applies `q` to the per-row copy averages; returns the expression and `m`.
pub fn type2_to_type1<S: Scalar>(q: &PolyExpr<S>, eps: f64, n: usize) -> Result<(PolyExpr<S>, usize)> {
    let m = type2_to_type1_copies(eps, n, TYPE2_TO_TYPE1_C)?;
    Ok((type2_to_type1_with(q, m)?, m))
}

pub fn type2_to_type1_with<S: Scalar>(q: &PolyExpr<S>, m: usize) -> Result<PolyExpr<S>> {
    let n = q.nvars();
    let avgs: Vec<PolyExpr<S>> = (0..n)
        .map(|i| PolyExpr::try_new(n * m, Node::mean((0..m).map(|j| Node::Var(i * m + j)).collect())))
        .collect::<Result<_>>()?;
    q.substitute(&avgs)
}

/// `q(z) = p(y)` with every `y_{i,j}` replaced by `z_i`, i.e. `E[p(y)]`.
pub fn type1_to_type2<S: Scalar>(p: &MultilinearPoly<S>, n: usize, m: usize) -> Result<PolyExpr<S>> {
    if m == 0 || p.nvars() != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, got: p.nvars() });
    }
    let args = (0..n * m).map(|v| Node::Var(v / m)).collect();
    PolyExpr::try_new(n, Node::Multilinear { poly: p.clone(), args })
}

/// `E[B(y)]` for the boosted version `B` of a block polynomial, as a function of the means.
pub fn type1_to_type2_boosted<S: Scalar>(
    block: BlockValue<S>,
    n: usize,
    m: usize,
    params: BoostParams,
) -> Result<PolyExpr<S>> {
    let node = ExpectedNode { n, m, block, boost: params, args: (0..n).map(Node::Var).collect() };
    PolyExpr::try_new(n, Node::Expected(Box::new(node)))
}

#[derive(Clone, Debug)]
pub struct Robustified<S> {
    pub expr: PolyExpr<S>,
    /// Amplification degree applied to every coordinate.
    pub k: usize,
    pub certificate_complexity: usize,
    pub degree: usize,
}

/// Smallest odd `k` with `k >= 72 ln(10 c)`, so that `e^(-k/72) <= 1/(10c)`.
pub fn certificate_amplification_degree(c: usize) -> usize {
    let k = (72.0 * (10.0 * c.max(1) as f64).ln()).ceil() as usize;
    k | 1
}

/// `6 eps / 5 + 1/10`.
pub fn certificate_error_bound(eps_approx: f64) -> f64 {
    1.2 * eps_approx + 0.1
}

/// Replaces every `z_i` by `h_k(z_i)` with `k` chosen from the certificate complexity of `f`.
pub fn certificate_robustify<S: Scalar>(p: &PolyExpr<S>, f: &BooleanFunction, eps_approx: &S) -> Result<Robustified<S>> {
    let n = f.n();
    if p.nvars() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.nvars() });
    }
    for xi in 0..1usize << n {
        let err = (p.eval_bits(&index_to_bits(xi, n))? - bit::<S>(f.value(xi))).abs();
        if err > eps_approx.clone() + S::tolerance() {
            return Err(Error::NotApproximating { max_error: err.to_f64_lossy(), input: xi });
        }
    }
    let c = max_certificate_complexity(f)?;
    let k = certificate_amplification_degree(c);
    let inner: Vec<PolyExpr<S>> = (0..n).map(|i| PolyExpr::new(n, Node::amplify(k, Node::Var(i)))).collect();
    let expr = p.substitute(&inner)?;
    Ok(Robustified { degree: p.degree() * k, expr, k, certificate_complexity: c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::exact_multilinear;
    use crate::Rational;

    fn q(a: i64, b: i64) -> Rational {
        Rational::from_ratio(a, b)
    }

    #[test]
    fn parity2_vertex_fails_by_one_ninth() {
        let f = BooleanFunction::named("parity", 2).unwrap();
        let p: MultilinearPoly<Rational> = exact_multilinear(&f).unwrap();
        let rep = check_type2_vertex(&p, &f, &q(1, 3), &q(1, 3)).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.worst_violation, q(1, 9));
        let w = rep.witness.unwrap();
        assert_eq!(w.x, vec![false, false]);
        assert_eq!(w.z, vec![q(1, 3), q(1, 3)]);
    }

    #[test]
    fn constant_half_and_identity() {
        let f = BooleanFunction::named("or", 2).unwrap();
        let half = MultilinearPoly::constant(2, q(1, 2));
        let rep = check_type2_vertex(&half, &f, &q(1, 3), &q(1, 3)).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.worst_violation, q(1, 6));
        let dict = BooleanFunction::from_fn(1, |i| i == 1).unwrap();
        let id = MultilinearPoly::var(1, 0).unwrap();
        let rep = check_type2_vertex(&id, &dict, &q(1, 3), &q(1, 3)).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.worst_violation, q(0, 1));
    }

    #[test]
    fn certificate_degree() {
        assert_eq!(certificate_amplification_degree(1), 167);
        assert_eq!(certificate_amplification_degree(3) % 2, 1);
        assert!((-(certificate_amplification_degree(3) as f64) / 72.0).exp() <= 1.0 / 30.0);
    }

    #[test]
    fn boost_identity_is_p() {
        let f = BooleanFunction::named("parity", 2).unwrap();
        let p = PolyExpr::from_multilinear(exact_multilinear::<Rational>(&f).unwrap());
        let b = boost_type1_with(&p, 2, 1, BoostParams::identity()).unwrap();
        assert_eq!(b.expr, p);
        assert_eq!(b.m_prime, 1);
        let b = boost_type1_with(&p, 2, 1, BoostParams { k0: 3, k: 25, r: 9, stretch: true }).unwrap();
        assert_eq!(b.degree, 150);
        assert_eq!(b.expr.degree(), 150);
        assert_eq!(b.m_prime, 9);
    }
}
