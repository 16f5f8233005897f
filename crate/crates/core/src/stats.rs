//! Confidence intervals, log-log fits and binomial tails.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
    pub fn center(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }
}

/// Wilson score interval at two-sided confidence `level` (e.g. 0.95).
pub fn wilson_ci(successes: u64, trials: u64, level: f64) -> Result<Interval> {
    if trials == 0 {
        return invalid("wilson_ci needs at least one trial");
    }
    if successes > trials {
        return invalid("successes exceed trials");
    }
    if !(0.0..1.0).contains(&level) {
        return invalid("confidence level must lie in [0,1)");
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the endpoints are exact at the boundary counts; avoid rounding past them
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok(Interval { lo, hi })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ln cost` against `ln size`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return invalid("exponent fit needs at least 3 points");
    }
    if points.iter().any(|&(s, c)| !(s > 0.0 && c > 0.0)) {
        return invalid("exponent fit needs positive sizes and costs");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON {
        return invalid("all sizes are equal");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot <= f64::EPSILON { 1.0 } else { 1.0 - ss_res / ss_tot };
    let stderr = if points.len() > 2 { (ss_res / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(ExponentFit { slope, intercept, stderr, r_squared })
}

/// `Pr[Binomial(k, p) > k/2]`, computed in log space.
pub fn binomial_majority_error(k: usize, p: f64) -> f64 {
    binomial_upper_tail(k, p, k / 2 + 1)
}

/// `Pr[Binomial(k, p) >= from]`.
pub fn binomial_upper_tail(k: usize, p: f64, from: usize) -> f64 {
    if from > k {
        return 0.0;
    }
    if from == 0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    (from..=k)
        .map(|j| (ln_choose(k, j) + j as f64 * ln_p + (k - j) as f64 * ln_q).exp())
        .sum::<f64>()
        .min(1.0)
}

pub fn ln_choose(n: usize, k: usize) -> f64 {
    statrs::function::factorial::ln_binomial(n as u64, k as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_examples() {
        let a = wilson_ci(0, 10, 0.95).unwrap();
        assert!(a.contains(0.0) && a.hi < 0.35);
        let b = wilson_ci(10, 10, 0.95).unwrap();
        assert!(b.contains(1.0));
        assert!((b.lo - (1.0 - a.hi)).abs() < 1e-12);
        let c = wilson_ci(5, 10, 0.95).unwrap();
        assert!((c.center() - 0.5).abs() < 1e-12);
        assert!(wilson_ci(0, 0, 0.95).is_err());
    }

    #[test]
    fn synthetic_fits() {
        let lin: Vec<_> = [64.0, 256.0, 1024.0].iter().map(|&n| (n, 7.0 * n)).collect();
        let f = fit_exponent(&lin).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let sq: Vec<_> = [4.0, 16.0, 64.0, 256.0].iter().map(|&n: &f64| (n, 3.0 * n.sqrt())).collect();
        assert!((fit_exponent(&sq).unwrap().slope - 0.5).abs() < 1e-9);
        assert!(fit_exponent(&[(2.0, 1.0), (2.0, 3.0), (2.0, 5.0)]).is_err());
    }

    #[test]
    fn binomial_tails() {
        // 3 coins at p=0.1: 3*0.01*0.9 + 0.001
        assert!((binomial_majority_error(3, 0.1) - 0.028).abs() < 1e-12);
        assert_eq!(binomial_upper_tail(5, 0.3, 0), 1.0);
    }
}
