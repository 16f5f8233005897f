//! Multilinear and univariate polynomials, composition trees and the
//! amplification polynomial `h_k`.
//!
//! Text format: one term per line, `coeff * x3*x7`, variables 0-based,
//! constant term written as a bare coefficient.

mod expr;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::boolfn::BooleanFunction;
use crate::error::{invalid, Error, Result};
use crate::scalar::{parse_rational, Scalar};

pub use expr::{BlockValue, BoostParams, ExpectedNode, Node, PolyExpr};

/// Cap on terms when a composed expression is expanded eagerly.
pub const MAX_EXPANDED_TERMS: usize = 1 << 16;
/// Largest arity accepted by [`exact_multilinear`].
pub const MAX_EXACT_ARITY: usize = 20;

/// Strictly increasing list of variable indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial(Vec<usize>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn new(mut vars: Vec<usize>) -> Result<Self> {
        vars.sort_unstable();
        if vars.windows(2).any(|w| w[0] == w[1]) {
            return invalid("repeated variable in a multilinear monomial");
        }
        Ok(Monomial(vars))
    }

    pub fn from_mask(mask: u64) -> Self {
        Monomial((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn mask(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |acc, &v| (v < 64).then(|| acc | 1 << v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilinearPoly<S> {
    nvars: usize,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> MultilinearPoly<S> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(), c).expect("constant term is always in range");
        p
    }

    pub fn var(nvars: usize, i: usize) -> Result<Self> {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial(vec![i]), S::one())?;
        Ok(p)
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, S)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            p.add_term(m, c)?;
        }
        Ok(p)
    }

    /// Adds `c * m`, dropping the term if the coefficient cancels.
    pub fn add_term(&mut self, m: Monomial, c: S) -> Result<()> {
        if let Some(&v) = m.vars().last() {
            if v >= self.nvars {
                return invalid(format!("variable x{v} out of range for {} variables", self.nvars));
            }
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                if !c.is_zero() {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
        Ok(())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> S {
        self.terms.get(m).cloned().unwrap_or_else(S::zero)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, z: &[S]) -> Result<S> {
        if z.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: z.len() });
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &[S]) -> S {
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &v in m.vars() {
                t = t * z[v].clone();
            }
            acc = acc + t;
        }
        acc
    }

    /// Value at a Boolean point given as bits.
    pub fn eval_bits(&self, x: &[bool]) -> S {
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            if m.vars().iter().all(|&v| x[v]) {
                acc = acc + c.clone();
            }
        }
        acc
    }

    /// Value at a Boolean point given as a little-endian index (`nvars <= 64`).
    pub fn eval_index(&self, idx: u64) -> S {
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let mask = m.mask().expect("index evaluation needs nvars <= 64");
            if idx & mask == mask {
                acc = acc + c.clone();
            }
        }
        acc
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> MultilinearPoly<T> {
        let mut out = MultilinearPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c)).expect("same variable range");
        }
        out
    }

    pub fn to_f64(&self) -> MultilinearPoly<f64> {
        self.map(|c| c.to_f64_lossy())
    }

    /// Renames variable `v` to `rename(v)` in a space of `nvars` variables.
    pub fn relabel(&self, nvars: usize, rename: impl Fn(usize) -> usize) -> Result<Self> {
        let mut out = Self::zero(nvars);
        for (m, c) in &self.terms {
            out.add_term(Monomial::new(m.vars().iter().map(|&v| rename(v)).collect())?, c.clone())?;
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if self.terms.is_empty() {
            s.push_str("0\n");
        }
        for (m, c) in &self.terms {
            if m.degree() == 0 {
                s.push_str(&format!("{c}\n"));
            } else {
                let vars: Vec<String> = m.vars().iter().map(|v| format!("x{v}")).collect();
                s.push_str(&format!("{c} * {}\n", vars.join("*")));
            }
        }
        s
    }
}

impl MultilinearPoly<BigRational> {
    /// Parses the one-term-per-line text format with rational or decimal coefficients.
    pub fn parse_text(nvars: usize, text: &str) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}: {line:?}", lineno + 1));
            let (coeff, vars) = match line.split_once('*') {
                Some((c, rest)) => (c.trim(), Some(rest)),
                None => (line, None),
            };
            let c = parse_rational(coeff).ok_or_else(|| bad("bad coefficient"))?;
            let mut idx = Vec::new();
            if let Some(rest) = vars {
                for v in rest.split('*') {
                    let v = v.trim().strip_prefix('x').ok_or_else(|| bad("expected x<index>"))?;
                    idx.push(v.parse::<usize>().map_err(|_| bad("bad variable index"))?);
                }
            }
            p.add_term(Monomial::new(idx)?, c)?;
        }
        Ok(p)
    }
}

impl<S: Scalar> fmt::Display for MultilinearPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Dense univariate polynomial, coefficients low to high.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivariatePoly<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> UnivariatePoly<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &S) -> S {
        self.coeffs.iter().rev().fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> UnivariatePoly<T> {
        UnivariatePoly::new(self.coeffs.iter().map(f).collect())
    }
}

/// `h_k(x) = sum_{i > k/2} C(k,i) x^i (1-x)^(k-i)` expanded to coefficient form.
///
/// The coefficient form loses precision in `f64` for large `k`; use
/// [`amplify_eval`] (or an `Amplify` node) for evaluation.
pub fn amplification_poly<S: Scalar>(k: usize) -> Result<UnivariatePoly<S>> {
    check_odd(k)?;
    let mut coeffs = vec![S::zero(); k + 1];
    for i in k / 2 + 1..=k {
        let ci = S::binomial(k, i);
        for j in 0..=k - i {
            let t = ci.clone() * S::binomial(k - i, j);
            if j % 2 == 0 {
                coeffs[i + j] = coeffs[i + j].clone() + t;
            } else {
                coeffs[i + j] = coeffs[i + j].clone() - t;
            }
        }
    }
    Ok(UnivariatePoly::new(coeffs))
}

/// Evaluates `h_k(x)` in Bernstein form.
pub fn amplify_eval<S: Scalar>(k: usize, x: &S) -> S {
    let y = S::one() - x.clone();
    let mut acc = S::zero();
    for i in k / 2 + 1..=k {
        acc = acc + S::binomial(k, i) * x.powi(i) * y.powi(k - i);
    }
    acc
}

pub(crate) fn check_odd(k: usize) -> Result<()> {
    if k == 0 || k % 2 == 0 {
        return invalid(format!("amplification degree must be odd and positive, got {k}"));
    }
    Ok(())
}

/// The stretch map `sigma(x) = (5x + 2) / 9`, sending `[-2/5, 7/5]` onto `[0, 1]`.
pub fn stretch<S: Scalar>(x: &S) -> S {
    (S::of_usize(5) * x.clone() + S::of_usize(2)) / S::of_usize(9)
}

/// `h_k(sigma(x))` as a one-variable expression.
///
/// The margin around 1/2 shrinks from 1/6 to 1/18 under `sigma`, so the
/// Chernoff exponent drops to `k/648` at the edges of `[-2/5, 2/5]`.
pub fn stretched_amplification<S: Scalar>(k: usize) -> Result<PolyExpr<S>> {
    check_odd(k)?;
    Ok(PolyExpr::new(1, Node::amplify(k, Node::stretch(Node::Var(0)))))
}

/// Unique multilinear polynomial agreeing with `f` on `{0,1}^n` (Moebius inversion).
pub fn exact_multilinear<S: Scalar>(f: &BooleanFunction) -> Result<MultilinearPoly<S>> {
    let n = f.n();
    if n > MAX_EXACT_ARITY {
        return Err(Error::SizeLimit(format!("exact multilinear arity {n} > {MAX_EXACT_ARITY}")));
    }
    let mut a: Vec<i64> = f.table().iter().map(|&b| b as i64).collect();
    for bit in 0..n {
        for s in 0..a.len() {
            if s >> bit & 1 == 1 {
                a[s] -= a[s ^ (1 << bit)];
            }
        }
    }
    let mut p = MultilinearPoly::zero(n);
    for (s, &c) in a.iter().enumerate() {
        if c != 0 {
            p.add_term(Monomial::from_mask(s as u64), S::from_ratio(c, 1))?;
        }
    }
    Ok(p)
}

/// Replaces each `y_{i,j}` (variable `i*m + j`) by `z_i` and evaluates.
///
/// Because `p` is multilinear this is `E[p(y)]` for independent bits with means `z_i`.
pub fn expectation_substitution<S: Scalar>(p: &MultilinearPoly<S>, m: usize, z: &[S]) -> Result<S> {
    let n = z.len();
    if m == 0 || p.nvars() != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, got: p.nvars() });
    }
    let y: Vec<S> = (0..n * m).map(|v| z[v / m].clone()).collect();
    Ok(p.eval_unchecked(&y))
}

/// Brute-force `sum_v Pr[y = v] p(v)` over all `2^(nm)` Boolean `v` (`nm <= 20`).
pub fn expectation_enumerate<S: Scalar>(p: &MultilinearPoly<S>, m: usize, z: &[S]) -> Result<S> {
    let nv = p.nvars();
    if m == 0 || nv != z.len() * m {
        return Err(Error::DimensionMismatch { expected: z.len() * m, got: nv });
    }
    if nv > 20 {
        return Err(Error::SizeLimit(format!("enumeration over {nv} variables")));
    }
    let mut acc = S::zero();
    for v in 0..1u64 << nv {
        let mut pr = S::one();
        for var in 0..nv {
            let zi = z[var / m].clone();
            pr = pr * if v >> var & 1 == 1 { zi } else { S::one() - zi };
        }
        acc = acc + pr * p.eval_index(v);
    }
    Ok(acc)
}
