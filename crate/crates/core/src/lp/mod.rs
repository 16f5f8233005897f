//! Linear-programming degree searches over multilinear polynomials.
//!
//! Robust-degree results are upper bounds on the true robust degree: the
//! search space is restricted to multilinear polynomials, which makes the
//! vertex constraint set exact and finite.

mod simplex;

pub use simplex::{lp_feasibility, lp_feasibility_auto, satisfies, verify_farkas, LpOutcome, EXACT_CONSTRAINT_LIMIT, FLOAT_TOLERANCE};

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::boolfn::{index_to_bits, BooleanFunction};
use crate::error::{invalid, Error, Result};
use crate::poly::{Monomial, MultilinearPoly};
use crate::robustness::check_type2_vertex;
use crate::scalar::Scalar;
use crate::Rational;

/// Arity caps for the two searches.
pub const MAX_APPROX_ARITY: usize = 8;
pub const MAX_ROBUST_ARITY: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchStatus {
    /// Minimal feasible degree found.
    Found,
    /// No multilinear polynomial of any degree works.
    Infeasible,
    /// Every degree up to the cap was infeasible; higher degrees were not tried.
    Inconclusive { d_max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelVerdict {
    pub degree: usize,
    pub feasible: bool,
    /// Max-margin value `t` at this degree (as text, exact when the solve was exact).
    pub margin: String,
    /// Infeasible levels carry a Farkas certificate that was re-checked.
    pub certificate_verified: bool,
    pub constraints: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeSearchResult {
    pub status: SearchStatus,
    pub degree: Option<usize>,
    pub witness: Option<MultilinearPoly<Rational>>,
    /// True when `degree - 1` was tested and shown infeasible.
    pub infeasible_below: bool,
    pub levels: Vec<LevelVerdict>,
    pub constraints_checked: usize,
    /// False if any level fell back to floating point.
    pub exact: bool,
    /// Robust searches over multilinear polynomials only bound the robust degree from above.
    pub upper_bound_only: bool,
}

fn monomials_up_to(n: usize, d: usize) -> Vec<u64> {
    let mut v: Vec<u64> = (0..1u64 << n).filter(|m| m.count_ones() as usize <= d).collect();
    v.sort_by_key(|m| (m.count_ones(), *m));
    v
}

/// Adds the two rows `|sum_j c_j mono_j(z) - target| <= err`.
fn push_two_sided(a: &mut Vec<Vec<Rational>>, b: &mut Vec<Rational>, row: Vec<Rational>, target: &Rational, err: &Rational) {
    b.push(err.clone() - target.clone());
    a.push(row.iter().map(|v| -v.clone()).collect());
    b.push(err.clone() + target.clone());
    a.push(row);
}

fn witness_poly(n: usize, monos: &[u64], coeffs: &[Rational]) -> MultilinearPoly<Rational> {
    let terms = monos.iter().zip(coeffs).map(|(&m, c)| (Monomial::from_mask(m), c.clone()));
    MultilinearPoly::from_terms(n, terms).expect("monomials are in range")
}

struct Search<'a> {
    n: usize,
    d_max: usize,
    build: &'a dyn Fn(&[u64]) -> (Vec<Vec<Rational>>, Vec<Rational>),
    verify: &'a dyn Fn(&MultilinearPoly<Rational>) -> Result<bool>,
    upper_bound_only: bool,
}

impl Search<'_> {
    fn run(&self) -> Result<DegreeSearchResult> {
        let mut levels = Vec::new();
        let mut checked = 0;
        let mut exact = true;
        for d in 0..=self.d_max.min(self.n) {
            let monos = monomials_up_to(self.n, d);
            let (a, b) = (self.build)(&monos);
            checked += a.len();
            let out = lp_feasibility_auto(&a, &b)?;
            exact &= out.exact;
            let tol = if out.exact { Rational::from_ratio(0, 1) } else { Rational::from_float(FLOAT_TOLERANCE).unwrap() };
            let certificate_verified = match &out.farkas {
                Some(y) => verify_farkas(&a, &b, y, &tol),
                None => false,
            };
            levels.push(LevelVerdict {
                degree: d,
                feasible: out.feasible,
                margin: out.margin.to_string(),
                certificate_verified,
                constraints: a.len(),
            });
            if out.feasible {
                let p = witness_poly(self.n, &monos, &out.witness);
                if !satisfies(&a, &b, &out.witness, &tol) || !(self.verify)(&p)? {
                    return Err(Error::Solver(format!("witness at degree {d} failed re-verification")));
                }
                return Ok(DegreeSearchResult {
                    status: SearchStatus::Found,
                    degree: Some(d),
                    witness: Some(p),
                    infeasible_below: d > 0,
                    levels,
                    constraints_checked: checked,
                    exact,
                    upper_bound_only: self.upper_bound_only,
                });
            }
        }
        let status = if self.d_max >= self.n { SearchStatus::Infeasible } else { SearchStatus::Inconclusive { d_max: self.d_max } };
        Ok(DegreeSearchResult {
            status,
            degree: None,
            witness: None,
            infeasible_below: true,
            levels,
            constraints_checked: checked,
            exact,
            upper_bound_only: self.upper_bound_only,
        })
    }
}

/// Smallest `d` admitting a multilinear `p` of degree `d` with `|p(x) - f(x)| <= err` on `{0,1}^n`.
pub fn approx_degree(f: &BooleanFunction, err: &Rational) -> Result<DegreeSearchResult> {
    let n = f.n();
    if n > MAX_APPROX_ARITY {
        return Err(Error::SizeLimit(format!("approximate degree arity {n} > {MAX_APPROX_ARITY}")));
    }
    if err.is_negative() {
        return invalid("error bound must be non-negative");
    }
    let build = |monos: &[u64]| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for xi in 0..1u64 << n {
            let row = monos.iter().map(|&m| Rational::from_ratio((xi & m == m) as i64, 1)).collect();
            let fx = Rational::from_ratio(f.value(xi as usize) as i64, 1);
            push_two_sided(&mut a, &mut b, row, &fx, err);
        }
        (a, b)
    };
    let verify = |p: &MultilinearPoly<Rational>| {
        Ok((0..1usize << n).all(|xi| {
            let v = p.eval_bits(&index_to_bits(xi, n));
            (v - Rational::from_ratio(f.value(xi) as i64, 1)).abs() <= *err
        }))
    };
    Search { n, d_max: n, build: &build, verify: &verify, upper_bound_only: false }.run()
}

/// Smallest `d` admitting a multilinear type-2 robust `p` of degree `d`, searched up to `d_max`.
///
/// Constraints range over every `x` and every vertex of its box, which is exact for
/// multilinear `p`. The witness is re-checked with the vertex check.
pub fn robust_degree_multilinear(
    f: &BooleanFunction,
    epsilon: &Rational,
    err: &Rational,
    d_max: Option<usize>,
) -> Result<DegreeSearchResult> {
    let n = f.n();
    if n > MAX_ROBUST_ARITY {
        return Err(Error::SizeLimit(format!("robust degree arity {n} > {MAX_ROBUST_ARITY}")));
    }
    let half = Rational::from_ratio(1, 2);
    if epsilon.is_negative() || *epsilon >= half {
        return invalid("epsilon must lie in [0, 1/2)");
    }
    let one = Rational::from_ratio(1, 1);
    let build = |monos: &[u64]| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for xi in 0..1usize << n {
            let fx = Rational::from_ratio(f.value(xi) as i64, 1);
            for v in 0..1usize << n {
                let z: Vec<Rational> = (0..n)
                    .map(|i| match (xi >> i & 1 == 1, v >> i & 1 == 1) {
                        (false, false) => Rational::from_ratio(0, 1),
                        (false, true) => epsilon.clone(),
                        (true, false) => one.clone() - epsilon.clone(),
                        (true, true) => one.clone(),
                    })
                    .collect();
                let row = monos
                    .iter()
                    .map(|&m| (0..n).filter(|i| m >> i & 1 == 1).fold(one.clone(), |acc, i| acc * z[i].clone()))
                    .collect();
                push_two_sided(&mut a, &mut b, row, &fx, err);
            }
        }
        (a, b)
    };
    let verify = |p: &MultilinearPoly<Rational>| Ok(check_type2_vertex(p, f, epsilon, err)?.passed);
    Search { n, d_max: d_max.unwrap_or(n), build: &build, verify: &verify, upper_bound_only: true }.run()
}

impl DegreeSearchResult {
    /// `key = value` record followed by the witness in the polynomial text format.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let status = match &self.status {
            SearchStatus::Found => "found".to_string(),
            SearchStatus::Infeasible => "infeasible".to_string(),
            SearchStatus::Inconclusive { d_max } => format!("inconclusive (searched up to {d_max})"),
        };
        s.push_str(&format!("status = {status}\n"));
        match self.degree {
            Some(d) => s.push_str(&format!("degree = {d}\n")),
            None => s.push_str("degree = none\n"),
        }
        s.push_str(&format!("upper_bound_only = {}\n", self.upper_bound_only));
        s.push_str(&format!("infeasible_below = {}\n", self.infeasible_below));
        s.push_str(&format!("constraints_checked = {}\n", self.constraints_checked));
        s.push_str(&format!("exact = {}\n", self.exact));
        for l in &self.levels {
            s.push_str(&format!(
                "level d={} feasible={} margin={} certificate_verified={} constraints={}\n",
                l.degree, l.feasible, l.margin, l.certificate_verified, l.constraints
            ));
        }
        if let Some(w) = &self.witness {
            s.push_str("witness:\n");
            s.push_str(&w.to_text());
        }
        s
    }
}
