//! Boolean functions as truth tables, certificate complexity and the
//! symmetric-function gap parameter.
//!
//! Index convention: bit `i` of a table index is `x_i` (little-endian).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest arity accepted for a materialized truth table.
pub const MAX_TABLE_ARITY: usize = 24;
/// Largest arity for exhaustive certificate search.
pub const MAX_CERTIFICATE_ARITY: usize = 20;

/// Anything that maps an `n`-bit input to a bit.
pub trait BitFunction: Send + Sync {
    fn arity(&self) -> usize;
    fn eval_bits(&self, x: &[bool]) -> bool;
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanFunction {
    n: usize,
    table: Vec<bool>,
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BooleanFunction(n={}, table={})", self.n, self.to_hex())
    }
}

impl BooleanFunction {
    pub fn from_table(n: usize, table: Vec<bool>) -> Result<Self> {
        if n == 0 {
            return invalid("arity must be at least 1");
        }
        if n > MAX_TABLE_ARITY {
            return Err(Error::SizeLimit(format!("truth table arity {n} > {MAX_TABLE_ARITY}")));
        }
        if table.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, got: table.len() });
        }
        Ok(Self { n, table })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        if n == 0 || n > MAX_TABLE_ARITY {
            return invalid(format!("arity {n} out of range"));
        }
        Self::from_table(n, (0..1usize << n).map(f).collect())
    }

    /// Named families: `parity`, `or`, `and`, `majority`, `threshold_k`, `constant_b`.
    pub fn named(name: &str, n: usize) -> Result<Self> {
        let sym = SymmetricFunction::named(name, n)?;
        sym.to_table()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn value(&self, index: usize) -> bool {
        self.table[index]
    }

    pub fn is_constant(&self) -> bool {
        self.table.iter().all(|&b| b == self.table[0])
    }

    /// Value profile by Hamming weight, if the function is symmetric.
    pub fn weight_profile(&self) -> Option<Vec<bool>> {
        let mut profile: Vec<Option<bool>> = vec![None; self.n + 1];
        for (idx, &v) in self.table.iter().enumerate() {
            let w = idx.count_ones() as usize;
            match profile[w] {
                None => profile[w] = Some(v),
                Some(p) if p != v => return None,
                _ => {}
            }
        }
        Some(profile.into_iter().map(|p| p.unwrap_or(false)).collect())
    }

    pub fn to_symmetric(&self) -> Result<SymmetricFunction> {
        let profile = self.weight_profile().ok_or(Error::NotSymmetric)?;
        Ok(SymmetricFunction { n: self.n, profile })
    }

    /// Truth table packed into hex, 4 table entries per digit, lowest index first.
    pub fn to_hex(&self) -> String {
        self.table
            .chunks(4)
            .map(|c| {
                let v = c.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
                std::char::from_digit(v, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        if n == 0 || n > MAX_TABLE_ARITY {
            return invalid(format!("arity {n} out of range"));
        }
        let len = 1usize << n;
        let digits = len.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::Parse(format!("expected {digits} hex digits, got {}", hex.len())));
        }
        let mut table = Vec::with_capacity(len);
        for ch in hex.chars() {
            let v = ch.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit {ch:?}")))?;
            for i in 0..4 {
                if table.len() < len {
                    table.push((v >> i) & 1 == 1);
                }
            }
        }
        Self::from_table(n, table)
    }
}

impl BitFunction for BooleanFunction {
    fn arity(&self) -> usize {
        self.n
    }
    fn eval_bits(&self, x: &[bool]) -> bool {
        self.table[bits_to_index(x)]
    }
}

/// A symmetric function stored by its value on each Hamming weight; usable at any `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricFunction {
    n: usize,
    profile: Vec<bool>,
}

impl SymmetricFunction {
    pub fn from_profile(profile: Vec<bool>) -> Result<Self> {
        if profile.len() < 2 {
            return invalid("profile needs n+1 >= 2 entries");
        }
        Ok(Self { n: profile.len() - 1, profile })
    }

    pub fn named(name: &str, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("arity must be at least 1");
        }
        let profile: Vec<bool> = match name {
            "parity" => (0..=n).map(|w| w % 2 == 1).collect(),
            "or" => (0..=n).map(|w| w > 0).collect(),
            "and" => (0..=n).map(|w| w == n).collect(),
            "majority" => {
                if n % 2 == 0 {
                    return invalid(format!("majority needs odd arity, got {n}"));
                }
                (0..=n).map(|w| 2 * w > n).collect()
            }
            _ => {
                if let Some(k) = name.strip_prefix("threshold_") {
                    let k: usize = k.parse().map_err(|_| Error::UnknownFunction(name.into()))?;
                    if k > n {
                        return invalid(format!("threshold {k} exceeds arity {n}"));
                    }
                    (0..=n).map(|w| w >= k).collect()
                } else if let Some(b) = name.strip_prefix("constant_") {
                    let b = match b {
                        "0" => false,
                        "1" => true,
                        _ => return Err(Error::UnknownFunction(name.into())),
                    };
                    vec![b; n + 1]
                } else {
                    return Err(Error::UnknownFunction(name.into()));
                }
            }
        };
        Ok(Self { n, profile })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn profile(&self) -> &[bool] {
        &self.profile
    }

    pub fn value_at_weight(&self, w: usize) -> bool {
        self.profile[w]
    }

    pub fn to_table(&self) -> Result<BooleanFunction> {
        BooleanFunction::from_fn(self.n, |idx| self.profile[idx.count_ones() as usize])
    }

    /// `min |2k - n + 1|` over weights `k` where the value changes between `k` and `k+1`.
    pub fn gamma(&self) -> Result<usize> {
        let n = self.n as i64;
        (0..self.n)
            .filter(|&k| self.profile[k] != self.profile[k + 1])
            .map(|k| (2 * k as i64 - n + 1).unsigned_abs() as usize)
            .min()
            .ok_or(Error::ConstantFunction)
    }
}

impl BitFunction for SymmetricFunction {
    fn arity(&self) -> usize {
        self.n
    }
    fn eval_bits(&self, x: &[bool]) -> bool {
        self.profile[x.iter().filter(|&&b| b).count()]
    }
}

/// Gap parameter of a symmetric truth table.
pub fn gamma(f: &BooleanFunction) -> Result<usize> {
    if f.is_constant() {
        return Err(Error::ConstantFunction);
    }
    f.to_symmetric()?.gamma()
}

/// Partial assignment forcing the function value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub assignment: BTreeMap<usize, bool>,
    pub value: bool,
}

impl Certificate {
    pub fn size(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_consistent(&self, idx: usize) -> bool {
        self.assignment.iter().all(|(&i, &b)| ((idx >> i) & 1 == 1) == b)
    }

    /// Exhaustive check that every consistent input evaluates to `value`.
    pub fn verify(&self, f: &BooleanFunction) -> bool {
        (0..1usize << f.n()).filter(|&idx| self.is_consistent(idx)).all(|idx| f.value(idx) == self.value)
    }
}

/// Minimum certificate size for `f` at input `x` (given as a table index), with a witness.
///
/// A set `S` certifies `x` iff it meets every difference `y ^ x` with `f(y) != f(x)`;
/// an OR-zeta transform over the complement lattice decides this for all `S` at once.
pub fn certificate_complexity(f: &BooleanFunction, x: usize) -> Result<(usize, Certificate)> {
    let n = f.n();
    if n > MAX_CERTIFICATE_ARITY {
        return Err(Error::SizeLimit(format!("certificate search arity {n} > {MAX_CERTIFICATE_ARITY}")));
    }
    if x >> n != 0 {
        return Err(Error::DimensionMismatch { expected: n, got: usize::BITS as usize - x.leading_zeros() as usize });
    }
    let full = (1usize << n) - 1;
    let fx = f.value(x);
    // bad_below[m]: some bad difference D with D subset of m
    let mut bad_below: Vec<bool> = (0..=full).map(|d| f.value(d ^ x) != fx).collect();
    for bit in 0..n {
        for m in 0..=full {
            if m >> bit & 1 == 1 && bad_below[m ^ (1 << bit)] {
                bad_below[m] = true;
            }
        }
    }
    let mut masks: Vec<usize> = (0..=full).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let s = masks
        .into_iter()
        .find(|&s| !bad_below[full & !s])
        .expect("the full set always certifies");
    let assignment = (0..n).filter(|i| s >> i & 1 == 1).map(|i| (i, x >> i & 1 == 1)).collect();
    let cert = Certificate { assignment, value: fx };
    Ok((cert.size(), cert))
}

/// Certificate complexity `C(f) = max_x C_x(f)`.
pub fn max_certificate_complexity(f: &BooleanFunction) -> Result<usize> {
    let mut best = 0;
    for x in 0..1usize << f.n() {
        best = best.max(certificate_complexity(f, x)?.0);
    }
    Ok(best)
}

pub fn bits_to_index(x: &[bool]) -> usize {
    x.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
}

pub fn index_to_bits(idx: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| idx >> i & 1 == 1).collect()
}

/// Parses a bit string written `x_0 x_1 ...` (e.g. `"100"` sets `x_0`).
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("bad bit {c:?}"))),
        })
        .collect()
}
