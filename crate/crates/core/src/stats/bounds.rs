//! Explicit non-asymptotic bounds and population thresholds for the γ-BMP,
//! the stochastic barriers and the favorable events.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs<T> {
    /// Initial particle count of the γ-BMP.
    pub n: u64,
    /// Population size of the N-BMP.
    pub big_n: u64,
    pub eta: T,
    pub delta: T,
    pub alpha: T,
    pub beta: T,
    pub t: T,
    pub horizon: T,
}

impl<T: Scalar> BoundInputs<T> {
    pub fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        let open_half = |v: T| v > T::zero() && v < half;
        if !open_half(self.alpha) || !open_half(self.beta) {
            return Err(invalid("alpha and beta must lie in (0, 1/2)"));
        }
        if !open_half(self.delta) {
            return Err(invalid("delta must lie in (0, 1/2)"));
        }
        if !(self.eta > T::zero()) {
            return Err(invalid("eta must be positive"));
        }
        if !(self.t >= T::zero() && self.t <= self.horizon) {
            return Err(invalid("need 0 <= t <= T"));
        }
        Ok(())
    }
}

/// `δ = N^{−β}/2`.
pub fn delta_schedule<T: Scalar>(big_n: u64, beta: T) -> T {
    T::lit(big_n as f64).powf(-beta) / T::lit(2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    /// `C(t) = 2e^{2t} − e^t`, the second moment of the BMP population.
    pub c_t: T,
    /// `c₃ = −ln(1 − e^{−T})`.
    pub c3: T,
    pub n0: T,
    pub n1: T,
    pub n2_plus: T,
    pub n2_minus: T,
    pub rhs_gbmp: T,
    pub rhs_stobar: T,
    pub rhs_smallevents_plus: T,
}

pub fn second_moment_c<T: Scalar>(t: T) -> T {
    T::lit(2.0) * (t + t).exp() - t.exp()
}

pub fn c3<T: Scalar>(horizon: T) -> T {
    -(-(-horizon).exp()).ln_1p()
}

pub fn bound_formulas<T: Scalar>(inp: &BoundInputs<T>) -> Result<BoundReport<T>> {
    inp.validate()?;
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (eta, delta, alpha, big_t) = (inp.eta, inp.delta, inp.alpha, inp.horizon);
    let n = T::lit(inp.n as f64);
    let big_n = T::lit(inp.big_n as f64);

    let c_t = second_moment_c(inp.t);
    let c_big_t = second_moment_c(big_t);
    let c3 = c3(big_t);
    let e_t = big_t.exp();
    let eta2 = eta * eta;

    let n0 = (T::lit(8.0) * c_t / eta2).max(two);
    let n1 = ((two / eta + one) / (one - delta))
        .max((T::lit(32.0) * c_big_t / eta2 * (T::lit(1.5) + delta) + one) / (one - delta));
    let n2_plus = (T::lit(32.0) * (one + delta).powi(2) * c_big_t / (delta * delta) + one)
        .max(T::lit(3.0) / (one + delta));
    let n2_minus = (T::lit(32.0) * (one - delta).powi(2) * c_big_t / (delta * delta) + one)
        .max(T::lit(4.0) / (one - delta));

    let rhs_gbmp = T::lit(16.0) * n * n * (-n.powf(one - two * alpha) * eta2 / T::lit(32.0)).exp()
        + T::lit(32.0) * e_t * n * n * (-c3 * n.powf(alpha)).exp();

    let slack = half - delta;
    let rhs_stobar = T::lit(256.0)
        * big_n
        * big_n
        * (-eta2 * slack.powf(T::lit(3.0) - two * alpha) * big_n.powf(one - two * alpha)
            / T::lit(128.0))
        .exp()
        + T::lit(512.0) * big_n * big_n * (-c3 * slack.powf(alpha) * big_n.powf(alpha)).exp();

    let n_alpha = big_n.powf(alpha);
    let inner = (-c3 * (big_n * delta / two + one)).exp()
        + T::lit(36.0)
            * big_n
            * big_n
            * (-delta * delta * big_n.powf(one - two * alpha)
                / (T::lit(128.0) * (one + delta).powi(2)))
            .exp()
        + T::lit(72.0) * e_t * big_n * big_n * (-c3 * n_alpha).exp();
    let rhs_smallevents_plus = T::lit(3.0) * big_n * (-c3 * n_alpha).exp()
        + T::lit(3.0) * big_n.powf(one + alpha) * inner;

    Ok(BoundReport { c_t, c3, n0, n1, n2_plus, n2_minus, rhs_gbmp, rhs_stobar, rhs_smallevents_plus })
}
