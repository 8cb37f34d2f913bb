//! Empirical c.d.f.s, goodness-of-fit tests and closed-form bounds.

mod bounds;
mod ecdf;
mod geom;
mod ks;

pub use bounds::{bound_formulas, c3, delta_schedule, second_moment_c, BoundInputs, BoundReport};
pub use ecdf::{sup_norm_distance, sup_norm_distance_to, EmpiricalCdf};
pub use geom::{legendre_expansion_ref, GeomParams};
pub use ks::{
    chi_square_geometric, ks_critical_1pct, ks_exp1, ks_exp1_censored, ks_statistic,
    ks_two_sample, ChiSquareOutcome, KsOutcome, KS_1PCT,
};

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Median of a non-empty sample (average of the two middle points for even sizes).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation sample quantile (type 7).
pub fn quantile(xs: &[f64], prob: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of an empty sample");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
