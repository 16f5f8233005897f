//! Scalar abstraction shared by the polynomial, robustness and LP code.
//!
//! Identity checks run over exact rationals; Monte Carlo paths run over `f64`.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Ordered field used for polynomial coefficients and LP pivoting.
pub trait Scalar:
    Clone + Num + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// True for types whose arithmetic never rounds.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Comparison slack used by pivoting and verdict checks (zero when exact).
    fn tolerance() -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn of_usize(v: usize) -> Self {
        Self::from_ratio(v as i64, 1)
    }

    fn binomial(n: usize, k: usize) -> Self {
        if k > n {
            return Self::zero();
        }
        let k = k.min(n - k);
        let mut acc = Self::one();
        for j in 1..=k {
            acc = acc * Self::of_usize(n - k + j) / Self::of_usize(j);
        }
        acc
    }

    fn powi(&self, e: usize) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }
    fn tolerance() -> Self {
        1e-5
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn tolerance() -> Self {
        BigRational::zero()
    }
    fn binomial(n: usize, k: usize) -> Self {
        if k > n {
            return Self::zero();
        }
        let k = k.min(n - k);
        let mut acc = BigInt::one();
        for j in 1..=k {
            acc = acc * BigInt::from(n - k + j) / BigInt::from(j);
        }
        BigRational::from_integer(acc)
    }
}

/// Parses `"1/3"`, `"0.25"` or `"2"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    if let Ok(i) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(i));
    }
    // decimal literal, converted digit-exactly
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.')?;
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// Exact rational bounds `(lo, hi)` with `lo <= exp(-a) <= hi` for rational `0 <= a <= 4`.
pub fn exp_neg_bounds(a: &BigRational) -> (BigRational, BigRational) {
    assert!(!a.is_negative() && *a <= BigRational::from_integer(4.into()));
    // Taylor partial sum of e^a; remainder <= a^(N+1)/(N+1)! * e^a with e^a < 64.
    let terms = 60usize;
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    for j in 0..=terms {
        if j > 0 {
            term = term * a.clone() / BigRational::from_integer(BigInt::from(j));
        }
        sum += term.clone();
    }
    let next = term * a.clone() / BigRational::from_integer(BigInt::from(terms + 1));
    let upper_exp = sum.clone() + next * BigRational::from_integer(64.into());
    let lower_exp = sum;
    (upper_exp.recip(), lower_exp.recip())
}
