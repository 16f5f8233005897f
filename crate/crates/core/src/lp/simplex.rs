//! Dense two-phase simplex with Bland's rule, generic over the scalar type.
//!
//! Feasibility of `A c <= b` (free `c`) is decided through the max-margin problem
//! `max t  s.t.  A c + t <= b, t <= 1`, solved via its dual
//! `min b.y + y0  s.t.  A^T y = 0, sum(y) + y0 = 1, y, y0 >= 0`.
//! The dual is always feasible and bounded, the primal optimum is read off the
//! simplex multipliers, and an infeasible system yields a Farkas vector `y`.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Systems with at least this many constraints are solved in `f64`.
pub const EXACT_CONSTRAINT_LIMIT: usize = 10_000;
/// Slack used by the floating-point fallback.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

const MAX_PIVOTS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome<S> {
    pub feasible: bool,
    /// Optimal margin `t`; the system is feasible iff `t >= 0`.
    pub margin: S,
    /// Max-margin point `c` (always present, satisfies `A c <= b - t`).
    pub witness: Vec<S>,
    /// For infeasible systems: `y >= 0` with `A^T y = 0` and `b.y < 0`.
    pub farkas: Option<Vec<S>>,
    pub pivots: usize,
    pub exact: bool,
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    // reduced costs and current objective value
    d: Vec<S>,
    obj: S,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn price(&mut self, cost: &[S]) {
        self.d = cost.to_vec();
        self.obj = S::zero();
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = cost[bv].clone();
            if cb.is_zero() {
                continue;
            }
            for (dj, a) in self.d.iter_mut().zip(&self.rows[i]) {
                *dj = dj.clone() - cb.clone() * a.clone();
            }
            self.obj = self.obj.clone() + cb * self.rhs[i].clone();
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for a in self.rows[r].iter_mut() {
            *a = a.clone() / p.clone();
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for (a, pa) in self.rows[i].iter_mut().zip(&prow) {
                if !pa.is_zero() {
                    *a = a.clone() - f.clone() * pa.clone();
                }
            }
            self.rhs[i] = self.rhs[i].clone() - f * prhs.clone();
        }
        let f = self.d[c].clone();
        if !f.is_zero() {
            for (dj, pa) in self.d.iter_mut().zip(&prow) {
                if !pa.is_zero() {
                    *dj = dj.clone() - f.clone() * pa.clone();
                }
            }
            self.obj = self.obj.clone() + f * prhs;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimizes the priced objective over columns accepted by `enterable`.
    fn optimize(&mut self, enterable: impl Fn(usize) -> bool) -> Result<()> {
        let tol = S::tolerance();
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Solver("pivot limit exceeded".into()));
            }
            let Some(c) = (0..self.d.len()).find(|&j| enterable(j) && self.d[j] < -tol.clone()) else {
                return Ok(());
            };
            let mut best: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if *a > tol {
                    let ratio = self.rhs[i].clone() / a.clone();
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else {
                return Err(Error::Solver("unbounded direction in a bounded problem".into()));
            };
            self.pivot(r, c);
        }
    }
}

/// Decides feasibility of `A c <= b` over free `c`.
pub fn lp_feasibility<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Result<LpOutcome<S>> {
    let m = a.len();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: b.len() });
    }
    let nc = a.first().map(Vec::len).unwrap_or(0);
    if let Some(row) = a.iter().find(|r| r.len() != nc) {
        return Err(Error::DimensionMismatch { expected: nc, got: row.len() });
    }
    let tol = S::tolerance();
    if m == 0 {
        return Ok(LpOutcome {
            feasible: true,
            margin: S::one(),
            witness: vec![S::zero(); nc],
            farkas: None,
            pivots: 0,
            exact: S::EXACT,
        });
    }
    // dual columns: y_0..y_{m-1}, y0 (index m), artificials m+1..m+1+nrows
    let nrows = nc + 1;
    let nstruct = m + 1;
    let ncols = nstruct + nrows;
    let mut rows = vec![vec![S::zero(); ncols]; nrows];
    for (i, arow) in a.iter().enumerate() {
        for (j, v) in arow.iter().enumerate() {
            rows[j][i] = v.clone();
        }
        rows[nc][i] = S::one();
    }
    rows[nc][m] = S::one();
    for (r, row) in rows.iter_mut().enumerate() {
        row[nstruct + r] = S::one();
    }
    let mut rhs = vec![S::zero(); nrows];
    rhs[nc] = S::one();
    let mut tab = Tableau { rows, rhs, basis: (nstruct..ncols).collect(), d: Vec::new(), obj: S::zero(), pivots: 0 };

    let phase1: Vec<S> = (0..ncols).map(|j| if j >= nstruct { S::one() } else { S::zero() }).collect();
    tab.price(&phase1);
    tab.optimize(|_| true)?;
    if tab.obj > tol {
        return Err(Error::Solver("dual phase 1 did not reach zero".into()));
    }
    // drive zero-level artificials out of the basis where possible
    for r in 0..nrows {
        if tab.basis[r] >= nstruct {
            if let Some(c) = (0..nstruct).find(|&j| tab.rows[r][j].abs() > tol) {
                tab.pivot(r, c);
            }
        }
    }
    let mut phase2: Vec<S> = b.to_vec();
    phase2.push(S::one());
    phase2.extend(std::iter::repeat_with(S::zero).take(nrows));
    tab.price(&phase2);
    tab.optimize(|j| j < nstruct)?;

    // multipliers: reduced cost of artificial r is -pi_r
    let pi: Vec<S> = (0..nrows).map(|r| -tab.d[nstruct + r].clone()).collect();
    let margin = pi[nc].clone();
    let witness = pi[..nc].to_vec();
    let feasible = margin >= -tol;
    let farkas = (!feasible).then(|| {
        let mut y = vec![S::zero(); m];
        for (r, &bv) in tab.basis.iter().enumerate() {
            if bv < m {
                y[bv] = tab.rhs[r].clone();
            }
        }
        y
    });
    Ok(LpOutcome { feasible, margin, witness, farkas, pivots: tab.pivots, exact: S::EXACT })
}

/// Exact rational solve below [`EXACT_CONSTRAINT_LIMIT`] constraints, `f64` above.
pub fn lp_feasibility_auto(a: &[Vec<BigRational>], b: &[BigRational]) -> Result<LpOutcome<BigRational>> {
    if a.len() < EXACT_CONSTRAINT_LIMIT {
        return lp_feasibility(a, b);
    }
    let af: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(Scalar::to_f64_lossy).collect()).collect();
    let bf: Vec<f64> = b.iter().map(Scalar::to_f64_lossy).collect();
    let out = lp_feasibility(&af, &bf)?;
    let back = |v: &f64| BigRational::from_float(*v).unwrap_or_default();
    Ok(LpOutcome {
        feasible: out.feasible,
        margin: back(&out.margin),
        witness: out.witness.iter().map(back).collect(),
        farkas: out.farkas.map(|y| y.iter().map(back).collect()),
        pivots: out.pivots,
        exact: false,
    })
}

/// Checks `A c <= b + tol` row by row.
pub fn satisfies<S: Scalar>(a: &[Vec<S>], b: &[S], c: &[S], tol: &S) -> bool {
    a.iter().zip(b).all(|(row, bi)| {
        let lhs = row.iter().zip(c).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
        lhs <= bi.clone() + tol.clone()
    })
}

/// Checks a Farkas certificate: `y >= 0`, `A^T y = 0`, `b.y < 0`.
pub fn verify_farkas<S: Scalar>(a: &[Vec<S>], b: &[S], y: &[S], tol: &S) -> bool {
    if y.len() != a.len() || y.iter().any(|v| *v < -tol.clone()) {
        return false;
    }
    let nc = a.first().map(Vec::len).unwrap_or(0);
    for j in 0..nc {
        let s = a.iter().zip(y).fold(S::zero(), |acc, (row, yi)| acc + row[j].clone() * yi.clone());
        if s.abs() > tol.clone() {
            return false;
        }
    }
    let by = b.iter().zip(y).fold(S::zero(), |acc, (bi, yi)| acc + bi.clone() * yi.clone());
    by < -tol.clone()
}
