//! Kolmogorov–Smirnov and chi-square goodness-of-fit tests at the 1% level.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::stats::ecdf::{sup_norm_distance, EmpiricalCdf};

/// Asymptotic 1% critical value of `sqrt(m)·D_m`.
pub const KS_1PCT: f64 = 1.628;

/// Smallest sample accepted by the one-sample tests.
pub const KS_MIN_SAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsOutcome<T> {
    pub statistic: T,
    pub critical: T,
    pub pass: bool,
}

impl<T: Scalar> KsOutcome<T> {
    fn new(statistic: T, critical: T) -> Self {
        Self { statistic, critical, pass: statistic <= critical }
    }
}

pub fn ks_critical_1pct<T: Scalar>(m: usize) -> T {
    T::lit(KS_1PCT / (m as f64).sqrt())
}

/// One-sample statistic `sup_r |F_m(r) − F(r)|` for a continuous `cdf`.
///
/// Samples equal to `+∞` stand for observations censored beyond `horizon`;
/// with a horizon the supremum is taken over `r < horizon` only.
pub fn ks_statistic<T: Scalar>(samples: &[T], cdf: impl Fn(T) -> T, horizon: Option<T>) -> T {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in KS sample"));
    let n = T::from_count(xs.len());
    let mut d = T::zero();
    for (i, &x) in xs.iter().enumerate() {
        if let Some(h) = horizon {
            if x >= h {
                // gap just below the horizon
                d = d.max((cdf(h) - T::from_count(i) / n).abs());
                return d;
            }
        }
        let f = cdf(x);
        d = d.max(f - T::from_count(i) / n).max(T::from_count(i + 1) / n - f);
    }
    d
}

fn exp1_cdf<T: Scalar>(t: T) -> T {
    if t <= T::zero() {
        T::zero()
    } else {
        -(-t).exp_m1()
    }
}

/// One-sample KS test of `samples` against Exp(1).
pub fn ks_exp1<T: Scalar>(samples: &[T]) -> Result<KsOutcome<T>> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(invalid(format!("KS test needs at least {KS_MIN_SAMPLES} samples")));
    }
    if samples.iter().any(|x| !(*x > T::zero())) {
        return Err(invalid("Exp(1) KS test needs positive samples"));
    }
    let d = ks_statistic(samples, exp1_cdf, None);
    Ok(KsOutcome::new(d, ks_critical_1pct(samples.len())))
}

/// KS test against Exp(1) when times beyond `horizon` are unobserved (`None`).
///
/// The supremum runs over `[0, horizon)`; the full-line critical value is
/// kept, which makes the test conservative.
pub fn ks_exp1_censored<T: Scalar>(times: &[Option<T>], horizon: T) -> Result<KsOutcome<T>> {
    if times.len() < KS_MIN_SAMPLES {
        return Err(invalid(format!("KS test needs at least {KS_MIN_SAMPLES} samples")));
    }
    let xs: Vec<T> = times
        .iter()
        .map(|t| match t {
            Some(t) if *t < horizon => *t,
            _ => T::infinity(),
        })
        .collect();
    if xs.iter().any(|x| !(*x >= T::zero())) {
        return Err(invalid("crossing times must be non-negative"));
    }
    let d = ks_statistic(&xs, exp1_cdf, Some(horizon));
    Ok(KsOutcome::new(d, ks_critical_1pct(times.len())))
}

/// Two-sample KS test at the 1% level.
pub fn ks_two_sample<T: Scalar>(a: &[T], b: &[T]) -> Result<KsOutcome<T>> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("two-sample KS needs non-empty samples"));
    }
    let d = sup_norm_distance(&EmpiricalCdf::new(a.to_vec())?, &EmpiricalCdf::new(b.to_vec())?);
    let (n, m) = (a.len() as f64, b.len() as f64);
    Ok(KsOutcome::new(d, T::lit(KS_1PCT * ((n + m) / (n * m)).sqrt())))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub pass: bool,
}

/// Pearson chi-square test of positive integer data against Geometric(p) on
/// {1, 2, …}. Cells are `{1}, {2}, …, {K−1}, {K, K+1, …}` with `K` chosen so
/// that every expected count is at least 5.
pub fn chi_square_geometric(data: &[u64], p: f64) -> Result<ChiSquareOutcome> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("geometric parameter must lie in (0, 1)"));
    }
    if data.contains(&0) {
        return Err(invalid("geometric data must be positive"));
    }
    let n = data.len() as f64;
    let q = 1.0 - p;
    // last open cell starts at k_tail: need n·q^{k_tail−1} >= 5 and the
    // point cells before it each >= 5
    let mut k_tail = 1u64;
    while n * p * q.powi(k_tail as i32 - 1) >= 5.0 && n * q.powi(k_tail as i32) >= 5.0 {
        k_tail += 1;
    }
    if k_tail < 2 {
        return Err(invalid("too few observations for a chi-square test"));
    }
    let cells = k_tail as usize;
    let mut observed = vec![0f64; cells];
    for &k in data {
        observed[(k.min(k_tail) - 1) as usize] += 1.0;
    }
    let mut stat = 0.0;
    for (i, obs) in observed.iter().enumerate() {
        let k = i as i32 + 1;
        let expected = if i + 1 == cells { n * q.powi(k - 1) } else { n * p * q.powi(k - 1) };
        stat += (obs - expected) * (obs - expected) / expected;
    }
    let dof = cells - 1;
    let critical = ChiSquared::new(dof as f64).expect("positive dof").inverse_cdf(0.99);
    Ok(ChiSquareOutcome { statistic: stat, dof, critical, pass: stat <= critical })
}
