use serde::{Deserialize, Serialize};

use super::{amplify_eval, check_odd, stretch, Monomial, MultilinearPoly, UnivariatePoly, MAX_EXPANDED_TERMS};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Composition tree node. Leaves are variables or constants.
#[derive(Clone, Debug, PartialEq)]
pub enum Node<S> {
    Var(usize),
    Const(S),
    /// A multilinear polynomial whose `j`-th variable is the `j`-th argument.
    Multilinear { poly: MultilinearPoly<S>, args: Vec<Node<S>> },
    Univariate { poly: UnivariatePoly<S>, arg: Box<Node<S>> },
    /// `h_k(arg)`, kept symbolic so it can be evaluated in Bernstein form.
    Amplify { k: usize, arg: Box<Node<S>> },
    /// `scale * arg + shift`.
    Affine { scale: S, shift: S, arg: Box<Node<S>> },
    /// Expectation of a copy-structured polynomial under independent bits.
    Expected(Box<ExpectedNode<S>>),
}

/// Parameters of the boosting construction
/// `q(y) = h_k( (1/r) sum_b h_k0( sigma(p(y_b)) ) )`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoostParams {
    pub k0: usize,
    pub k: usize,
    pub r: usize,
    /// Apply `sigma(x) = (5x+2)/9` before the inner amplification.
    pub stretch: bool,
}

impl BoostParams {
    pub fn identity() -> Self {
        Self { k0: 1, k: 1, r: 1, stretch: false }
    }

    /// Default constants: `k0 = 3`, `r = ceil(2 ln(1/delta))`, `k = 2 ceil(36 ln(1/delta)) + 1`.
    pub fn for_delta(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0 / 3.0) {
            return invalid(format!("boost target delta must lie in (0, 1/3], got {delta}"));
        }
        let l = (1.0 / delta).ln();
        Ok(Self { k0: 3, k: 2 * (36.0 * l).ceil() as usize + 1, r: (2.0 * l).ceil() as usize, stretch: true })
    }

    pub fn validate(&self) -> Result<()> {
        check_odd(self.k0)?;
        check_odd(self.k)?;
        if self.r == 0 {
            return invalid("boost needs at least one block");
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.k0 == 1 && self.k == 1 && self.r == 1 && !self.stretch
    }
}

/// The value one copy-block computes from its `n*m` bits.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockValue<S> {
    /// Multilinear in the block bits, variable `i*m + j` is copy `j` of bit `i`.
    Multilinear(MultilinearPoly<S>),
    /// `q(ybar_1, ..., ybar_n)` with `ybar_i` the average of row `i`.
    Averaged(PolyExpr<S>),
}

/// `E[B(y)]` where `y_{i,j}` are independent with mean `args[i]` and `B` is the
/// boosted block polynomial. Equals the multilinearization of `B` evaluated at the means.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedNode<S> {
    pub n: usize,
    pub m: usize,
    pub block: BlockValue<S>,
    pub boost: BoostParams,
    pub args: Vec<Node<S>>,
}

const MAX_BLOCK_OUTCOMES: usize = 1 << 22;

impl<S: Scalar> Node<S> {
    pub fn amplify(k: usize, arg: Node<S>) -> Self {
        Node::Amplify { k, arg: Box::new(arg) }
    }

    pub fn affine(scale: S, shift: S, arg: Node<S>) -> Self {
        Node::Affine { scale, shift, arg: Box::new(arg) }
    }

    pub fn stretch(arg: Node<S>) -> Self {
        Self::affine(S::from_ratio(5, 9), S::from_ratio(2, 9), arg)
    }

    /// Arithmetic mean of the children.
    pub fn mean(args: Vec<Node<S>>) -> Self {
        let r = args.len();
        let w = S::from_ratio(1, r as i64);
        let poly = MultilinearPoly::from_terms(r, (0..r).map(|j| (Monomial(vec![j]), w.clone())))
            .expect("indices are in range");
        Node::Multilinear { poly, args }
    }

    pub fn degree(&self) -> usize {
        match self {
            Node::Var(_) => 1,
            Node::Const(_) => 0,
            Node::Multilinear { poly, args } => {
                let d: Vec<usize> = args.iter().map(Node::degree).collect();
                poly.terms().map(|(m, _)| m.vars().iter().map(|&v| d[v]).sum()).max().unwrap_or(0)
            }
            Node::Univariate { poly, arg } => poly.degree() * arg.degree(),
            Node::Amplify { k, arg } => k * arg.degree(),
            Node::Affine { arg, .. } => arg.degree(),
            Node::Expected(e) => {
                let base = match &e.block {
                    BlockValue::Multilinear(p) => p.degree(),
                    BlockValue::Averaged(q) => q.degree(),
                };
                let inner = e.args.iter().map(Node::degree).max().unwrap_or(0);
                base * e.boost.k0 * e.boost.k * inner
            }
        }
    }

    pub fn eval(&self, z: &[S]) -> Result<S> {
        Ok(match self {
            Node::Var(i) => z[*i].clone(),
            Node::Const(c) => c.clone(),
            Node::Multilinear { poly, args } => {
                let vals = args.iter().map(|a| a.eval(z)).collect::<Result<Vec<_>>>()?;
                poly.eval_unchecked(&vals)
            }
            Node::Univariate { poly, arg } => poly.eval(&arg.eval(z)?),
            Node::Amplify { k, arg } => amplify_eval(*k, &arg.eval(z)?),
            Node::Affine { scale, shift, arg } => scale.clone() * arg.eval(z)? + shift.clone(),
            Node::Expected(e) => {
                let vals = e.args.iter().map(|a| a.eval(z)).collect::<Result<Vec<_>>>()?;
                e.expectation(&vals)?
            }
        })
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(i) => Some(*i),
            Node::Const(_) => None,
            Node::Multilinear { args, .. } => args.iter().filter_map(Node::max_var).max(),
            Node::Univariate { arg, .. } | Node::Amplify { arg, .. } | Node::Affine { arg, .. } => arg.max_var(),
            Node::Expected(e) => e.args.iter().filter_map(Node::max_var).max(),
        }
    }

    fn check_shape(&self) -> Result<()> {
        match self {
            Node::Var(_) | Node::Const(_) => Ok(()),
            Node::Multilinear { poly, args } => {
                if poly.nvars() != args.len() {
                    return Err(Error::DimensionMismatch { expected: poly.nvars(), got: args.len() });
                }
                args.iter().try_for_each(Node::check_shape)
            }
            Node::Univariate { arg, .. } | Node::Affine { arg, .. } => arg.check_shape(),
            Node::Amplify { k, arg } => {
                check_odd(*k)?;
                arg.check_shape()
            }
            Node::Expected(e) => {
                e.boost.validate()?;
                if e.args.len() != e.n {
                    return Err(Error::DimensionMismatch { expected: e.n, got: e.args.len() });
                }
                let want = match &e.block {
                    BlockValue::Multilinear(p) => (p.nvars(), e.n * e.m),
                    BlockValue::Averaged(q) => (q.nvars(), e.n),
                };
                if want.0 != want.1 {
                    return Err(Error::DimensionMismatch { expected: want.1, got: want.0 });
                }
                e.args.iter().try_for_each(Node::check_shape)
            }
        }
    }

    fn substitute(&self, inner: &[Node<S>]) -> Node<S> {
        match self {
            Node::Var(i) => inner[*i].clone(),
            Node::Const(c) => Node::Const(c.clone()),
            Node::Multilinear { poly, args } => {
                Node::Multilinear { poly: poly.clone(), args: args.iter().map(|a| a.substitute(inner)).collect() }
            }
            Node::Univariate { poly, arg } => Node::Univariate { poly: poly.clone(), arg: Box::new(arg.substitute(inner)) },
            Node::Amplify { k, arg } => Node::Amplify { k: *k, arg: Box::new(arg.substitute(inner)) },
            Node::Affine { scale, shift, arg } => {
                Node::Affine { scale: scale.clone(), shift: shift.clone(), arg: Box::new(arg.substitute(inner)) }
            }
            Node::Expected(e) => Node::Expected(Box::new(ExpectedNode {
                args: e.args.iter().map(|a| a.substitute(inner)).collect(),
                ..(**e).clone()
            })),
        }
    }

    pub fn map<T: Scalar>(&self, f: &impl Fn(&S) -> T) -> Node<T> {
        match self {
            Node::Var(i) => Node::Var(*i),
            Node::Const(c) => Node::Const(f(c)),
            Node::Multilinear { poly, args } => {
                Node::Multilinear { poly: poly.map(f), args: args.iter().map(|a| a.map(f)).collect() }
            }
            Node::Univariate { poly, arg } => Node::Univariate { poly: poly.map(f), arg: Box::new(arg.map(f)) },
            Node::Amplify { k, arg } => Node::Amplify { k: *k, arg: Box::new(arg.map(f)) },
            Node::Affine { scale, shift, arg } => Node::Affine { scale: f(scale), shift: f(shift), arg: Box::new(arg.map(f)) },
            Node::Expected(e) => Node::Expected(Box::new(ExpectedNode {
                n: e.n,
                m: e.m,
                block: match &e.block {
                    BlockValue::Multilinear(p) => BlockValue::Multilinear(p.map(f)),
                    BlockValue::Averaged(q) => BlockValue::Averaged(q.map(f)),
                },
                boost: e.boost,
                args: e.args.iter().map(|a| a.map(f)).collect(),
            })),
        }
    }
}

impl<S: Scalar> ExpectedNode<S> {
    /// Outcome distribution `(probability, value)` of one block.
    fn block_distribution(&self, z: &[S]) -> Result<Vec<(S, S)>> {
        let (n, m) = (self.n, self.m);
        match &self.block {
            BlockValue::Multilinear(p) => {
                let nv = n * m;
                if nv > 22 {
                    return Err(Error::SizeLimit(format!("block enumeration over {nv} bits")));
                }
                let mut out = Vec::with_capacity(1 << nv);
                for v in 0..1u64 << nv {
                    let mut pr = S::one();
                    for var in 0..nv {
                        let zi = z[var / m].clone();
                        pr = pr * if v >> var & 1 == 1 { zi } else { S::one() - zi };
                    }
                    out.push((pr, p.eval_index(v)));
                }
                Ok(out)
            }
            BlockValue::Averaged(q) => {
                let count = (m + 1).checked_pow(n as u32).filter(|&c| c <= MAX_BLOCK_OUTCOMES);
                let Some(count) = count else {
                    return Err(Error::SizeLimit(format!("(m+1)^n count vectors with m={m}, n={n}")));
                };
                // per-row binomial weights
                let rows: Vec<Vec<S>> = z
                    .iter()
                    .map(|zi| {
                        let w = S::one() - zi.clone();
                        (0..=m).map(|c| S::binomial(m, c) * zi.powi(c) * w.powi(m - c)).collect()
                    })
                    .collect();
                let mut out = Vec::with_capacity(count);
                let mut c = vec![0usize; n];
                let mf = S::of_usize(m);
                loop {
                    let pr = c.iter().enumerate().fold(S::one(), |acc, (i, &ci)| acc * rows[i][ci].clone());
                    let pt: Vec<S> = c.iter().map(|&ci| S::of_usize(ci) / mf.clone()).collect();
                    out.push((pr, q.eval(&pt)?));
                    let mut i = 0;
                    while i < n && c[i] == m {
                        c[i] = 0;
                        i += 1;
                    }
                    if i == n {
                        break;
                    }
                    c[i] += 1;
                }
                Ok(out)
            }
        }
    }

    pub fn expectation(&self, z: &[S]) -> Result<S> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: z.len() });
        }
        let b = self.boost;
        if b.is_identity() {
            if let BlockValue::Multilinear(p) = &self.block {
                return super::expectation_substitution(p, self.m, z);
            }
        }
        let dist: Vec<(S, S)> = self
            .block_distribution(z)?
            .into_iter()
            .map(|(pr, v)| {
                let v = if b.stretch { stretch(&v) } else { v };
                (pr, amplify_eval(b.k0, &v))
            })
            .collect();
        if b.k == 1 && b.r == 1 {
            return Ok(dist.into_iter().fold(S::zero(), |acc, (pr, u)| acc + pr * u));
        }
        // A coin with bias mean_b(u_b) is a uniform block choice followed by a u_b-coin, so
        // h_k(mean u) is a majority over k coins spread multinomially across the blocks.
        let k = b.k;
        let mut g = vec![vec![S::zero(); k + 1]; k + 1];
        for (pr, u) in &dist {
            let w = S::one() - u.clone();
            for c in 0..=k {
                for h in 0..=c {
                    let t = pr.clone() * S::binomial(c, h) * u.powi(h) * w.powi(c - h);
                    g[c][h] = g[c][h].clone() + t;
                }
            }
        }
        let mut dp = vec![vec![S::zero(); k + 1]; k + 1];
        dp[0][0] = S::one();
        for blk in 0..b.r {
            let left = b.r - blk;
            let p = S::from_ratio(1, left as i64);
            let q = S::one() - p.clone();
            let mut next = vec![vec![S::zero(); k + 1]; k + 1];
            for a in 0..=k {
                for h in 0..=a {
                    if dp[a][h].is_zero() {
                        continue;
                    }
                    let rem = k - a;
                    let cs: Vec<usize> = if left == 1 { vec![rem] } else { (0..=rem).collect() };
                    for c in cs {
                        let pc = if left == 1 {
                            S::one()
                        } else {
                            S::binomial(rem, c) * p.powi(c) * q.powi(rem - c)
                        };
                        let base = dp[a][h].clone() * pc;
                        for hh in 0..=c {
                            next[a + c][h + hh] = next[a + c][h + hh].clone() + base.clone() * g[c][hh].clone();
                        }
                    }
                }
            }
            dp = next;
        }
        Ok((k / 2 + 1..=k).fold(S::zero(), |acc, h| acc + dp[k][h].clone()))
    }
}

/// A composition tree over a fixed number of input variables.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyExpr<S> {
    nvars: usize,
    root: Node<S>,
}

impl<S: Scalar> PolyExpr<S> {
    pub fn new(nvars: usize, root: Node<S>) -> Self {
        Self::try_new(nvars, root).expect("malformed polynomial expression")
    }

    pub fn try_new(nvars: usize, root: Node<S>) -> Result<Self> {
        if let Some(v) = root.max_var() {
            if v >= nvars {
                return invalid(format!("expression uses x{v} but declares {nvars} variables"));
            }
        }
        root.check_shape()?;
        Ok(Self { nvars, root })
    }

    pub fn var(nvars: usize, i: usize) -> Result<Self> {
        Self::try_new(nvars, Node::Var(i))
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        Self { nvars, root: Node::Const(c) }
    }

    pub fn from_multilinear(p: MultilinearPoly<S>) -> Self {
        let n = p.nvars();
        Self { nvars: n, root: Node::Multilinear { poly: p, args: (0..n).map(Node::Var).collect() } }
    }

    pub fn from_univariate(p: UnivariatePoly<S>) -> Self {
        Self { nvars: 1, root: Node::Univariate { poly: p, arg: Box::new(Node::Var(0)) } }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn root(&self) -> &Node<S> {
        &self.root
    }

    pub fn degree(&self) -> usize {
        self.root.degree()
    }

    pub fn eval(&self, z: &[S]) -> Result<S> {
        if z.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: z.len() });
        }
        self.root.eval(z)
    }

    /// Value at a Boolean point.
    pub fn eval_bits(&self, x: &[bool]) -> Result<S> {
        let z: Vec<S> = x.iter().map(|&b| if b { S::one() } else { S::zero() }).collect();
        self.eval(&z)
    }

    /// Plugs `inner[i]` in for variable `i`; all inner expressions must share one arity.
    pub fn substitute(&self, inner: &[PolyExpr<S>]) -> Result<PolyExpr<S>> {
        if inner.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: inner.len() });
        }
        let nv = inner.first().map(|e| e.nvars).unwrap_or(0);
        if let Some(bad) = inner.iter().find(|e| e.nvars != nv) {
            return Err(Error::DimensionMismatch { expected: nv, got: bad.nvars });
        }
        let nodes: Vec<Node<S>> = inner.iter().map(|e| e.root.clone()).collect();
        Ok(PolyExpr { nvars: nv, root: self.root.substitute(&nodes) })
    }

    pub fn map<T: Scalar>(&self, f: &impl Fn(&S) -> T) -> PolyExpr<T> {
        PolyExpr { nvars: self.nvars, root: self.root.map(f) }
    }

    pub fn to_f64(&self) -> PolyExpr<f64> {
        self.map(&|c: &S| c.to_f64_lossy())
    }

    /// The multilinear polynomial agreeing with this expression on `{0,1}^nvars`.
    pub fn multilinearize(&self) -> Result<MultilinearPoly<S>> {
        let n = self.nvars;
        if n > 16 {
            return Err(Error::SizeLimit(format!("multilinearization over {n} variables")));
        }
        let mut a = Vec::with_capacity(1 << n);
        for idx in 0..1usize << n {
            let x: Vec<bool> = (0..n).map(|i| idx >> i & 1 == 1).collect();
            a.push(self.eval_bits(&x)?);
        }
        for bit in 0..n {
            for s in 0..a.len() {
                if s >> bit & 1 == 1 {
                    a[s] = a[s].clone() - a[s ^ (1 << bit)].clone();
                }
            }
        }
        let terms: Vec<_> = a
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(s, c)| (Monomial::from_mask(s as u64), c))
            .collect();
        if terms.len() > MAX_EXPANDED_TERMS {
            return Err(Error::SizeLimit(format!("{} terms after expansion", terms.len())));
        }
        MultilinearPoly::from_terms(n, terms)
    }
}
