//! Level-crossing probabilities for Brownian paths and bridges.

use crate::error::{invalid, Result};
use crate::rng::RngStream;
use crate::scalar::{normal_cdf, Scalar};

/// Probability that a Brownian bridge (volatility `sigma`) from `x` to `y`
/// over `dt` goes below the line joining `a0` (start) and `a1` (end).
///
/// Subtracting the line leaves a bridge from `x − a0` to `y − a1` against the
/// level 0, whence `exp(−2(x − a0)(y − a1)/(σ²dt))`.
#[inline]
pub fn linear_bridge_crossing_prob<T: Scalar>(sigma: T, x: T, y: T, a0: T, a1: T, dt: T) -> T {
    let (u, w) = (x - a0, y - a1);
    if u <= T::zero() || w <= T::zero() {
        return T::one();
    }
    (-(u + u) * w / (sigma * sigma * dt)).exp()
}

/// `P(τ ≤ s·dt | bridge)` for the bridge from height `u > 0` to `w` above a
/// line, with total variance `var = σ²·dt`, at time fraction `s ∈ [0, 1]`.
///
/// The joint law of `(τ ≤ s, X_s)` follows from the reflection principle and
/// the Gaussian posterior of `X_s` given both endpoints.
pub fn bridge_crossing_cdf(u: f64, w: f64, var: f64, s: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return if w <= 0.0 { 1.0 } else { (-2.0 * u * w / var).exp() };
    }
    let sd = (s * (1.0 - s) * var).sqrt();
    let direct_mean = u + s * (w - u);
    let reflected_mean = -u + s * (w + u);
    let below = normal_cdf(-direct_mean / sd);
    // φ(w + u)/φ(w − u) · P(reflected bridge at s ≥ 0), in log space
    let log_ratio = -2.0 * u * w / var;
    let reflected = (log_ratio + log_normal_cdf(reflected_mean / sd)).exp();
    (below + reflected).clamp(0.0, 1.0)
}

fn log_normal_cdf(z: f64) -> f64 {
    if z > -30.0 {
        normal_cdf(z).ln()
    } else {
        // Mills-ratio asymptotics
        let z2 = z * z;
        -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / z2).ln()
    }
}

/// Samples the first time the bridge goes below the line, conditional on a
/// crossing within the step; returns a time fraction in `[0, 1]`.
///
/// `p_total` is `bridge_crossing_cdf(u, w, var, 1)`; the target quantile is
/// inverted by bisection.
pub fn sample_bridge_crossing_time(u: f64, w: f64, var: f64, stream: &mut RngStream) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let target = stream.open01::<f64>() * bridge_crossing_cdf(u, w, var, 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..52 {
        let mid = 0.5 * (lo + hi);
        if bridge_crossing_cdf(u, w, var, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact `Q_x(τ_y ≤ t)` for Brownian motion with drift `b` and volatility
/// `sigma`, where `τ_y = inf{s ≥ 0 : X_s < y}` (Bachelier–Lévy formula).
pub fn crossing_prob_exact_bm<T: Scalar>(x: T, y: T, t: T, drift: T, sigma: T) -> Result<T> {
    if x < y {
        return Err(invalid("crossing probability needs x >= y"));
    }
    if t < T::zero() || !(sigma > T::zero()) {
        return Err(invalid("crossing probability needs t >= 0 and sigma > 0"));
    }
    if x == y {
        return Ok(T::one());
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let (z, nu, t) = (((x - y) / sigma).as_f64(), (drift / sigma).as_f64(), t.as_f64());
    let st = t.sqrt();
    let direct = normal_cdf((-z - nu * t) / st);
    let reflected = (-2.0 * nu * z + log_normal_cdf((-z + nu * t) / st)).exp();
    Ok(T::lit((direct + reflected).min(1.0)))
}
