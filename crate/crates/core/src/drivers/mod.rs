//! One-dimensional Markov drivers with exact transition samplers.

mod crossing;
mod initial;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

pub use crossing::{
    bridge_crossing_cdf, crossing_prob_exact_bm, linear_bridge_crossing_prob,
    sample_bridge_crossing_time,
};
pub use initial::{sample_initial, InitialLaw, QuantileTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub enum DriverSpec<T> {
    BrownianWithDrift {
        drift: T,
        sigma: T,
    },
    OrnsteinUhlenbeck {
        theta: T,
        sigma: T,
        mean: T,
    },
    /// Drift plus compound Poisson jumps with sizes drawn from `jumps`.
    CompoundPoissonDrift {
        rate: T,
        jumps: InitialLaw<T>,
        drift: T,
    },
}

impl<T: Scalar> DriverSpec<T> {
    pub fn brownian(drift: T, sigma: T) -> Result<Self> {
        let d = Self::BrownianWithDrift { drift, sigma };
        d.validate()?;
        Ok(d)
    }

    pub fn ornstein_uhlenbeck(theta: T, sigma: T, mean: T) -> Result<Self> {
        let d = Self::OrnsteinUhlenbeck { theta, sigma, mean };
        d.validate()?;
        Ok(d)
    }

    pub fn compound_poisson(rate: T, jumps: InitialLaw<T>, drift: T) -> Result<Self> {
        let d = Self::CompoundPoissonDrift { rate, jumps, drift };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v.is_finite() && v > T::zero();
        match self {
            Self::BrownianWithDrift { drift, sigma } => {
                if !drift.is_finite() || !pos(*sigma) {
                    return Err(invalid("Brownian driver needs finite drift and sigma > 0"));
                }
            }
            Self::OrnsteinUhlenbeck { theta, sigma, mean } => {
                if !pos(*theta) || !pos(*sigma) || !mean.is_finite() {
                    return Err(invalid("OU driver needs theta > 0, sigma > 0, finite mean"));
                }
            }
            Self::CompoundPoissonDrift { rate, jumps, drift } => {
                if !(rate.is_finite() && *rate >= T::zero()) || !drift.is_finite() {
                    return Err(invalid("compound Poisson driver needs rate >= 0, finite drift"));
                }
                jumps.validate()?;
            }
        }
        Ok(())
    }

    /// Diffusion coefficient of the continuous-path variants.
    pub fn sigma(&self) -> Option<T> {
        match self {
            Self::BrownianWithDrift { sigma, .. } | Self::OrnsteinUhlenbeck { sigma, .. } => {
                Some(*sigma)
            }
            Self::CompoundPoissonDrift { .. } => None,
        }
    }

    pub fn has_continuous_paths(&self) -> bool {
        self.sigma().is_some()
    }

    /// Exact sample of `X_dt` given `X_0 = x`.
    pub fn sample_transition(&self, x: T, dt: T, stream: &mut RngStream) -> Result<T> {
        check_dt(dt)?;
        Ok(self.advance(x, dt, stream))
    }

    /// Order-preserving coupled step of two copies started at `x_low <= x_high`.
    ///
    /// Diffusions share their Gaussian innovation, the jump variant shares the
    /// whole increment; each coordinate is marginally an exact transition.
    pub fn coupled_transition(
        &self,
        x_low: T,
        x_high: T,
        dt: T,
        stream: &mut RngStream,
    ) -> Result<(T, T)> {
        check_dt(dt)?;
        if x_low > x_high {
            return Err(Error::Unordered { low: x_low.as_f64(), high: x_high.as_f64() });
        }
        Ok(self.advance_pair(x_low, x_high, dt, stream))
    }

    /// Unchecked transition used inside the simulators.
    #[inline]
    pub(crate) fn advance(&self, x: T, dt: T, stream: &mut RngStream) -> T {
        if dt <= T::zero() {
            return x;
        }
        match self {
            Self::BrownianWithDrift { drift, sigma } => {
                x + *drift * dt + *sigma * dt.sqrt() * stream.normal::<T>()
            }
            Self::OrnsteinUhlenbeck { theta, sigma, mean } => {
                let (a, sd) = ou_coefficients(*theta, *sigma, dt);
                *mean + (x - *mean) * a + sd * stream.normal::<T>()
            }
            Self::CompoundPoissonDrift { .. } => x + self.levy_increment(dt, stream),
        }
    }

    #[inline]
    pub(crate) fn advance_pair(&self, lo: T, hi: T, dt: T, stream: &mut RngStream) -> (T, T) {
        if dt <= T::zero() {
            return (lo, hi);
        }
        match self {
            Self::BrownianWithDrift { drift, sigma } => {
                let inc = *drift * dt + *sigma * dt.sqrt() * stream.normal::<T>();
                (lo + inc, hi + inc)
            }
            Self::OrnsteinUhlenbeck { theta, sigma, mean } => {
                let (a, sd) = ou_coefficients(*theta, *sigma, dt);
                let noise = sd * stream.normal::<T>();
                (*mean + (lo - *mean) * a + noise, *mean + (hi - *mean) * a + noise)
            }
            Self::CompoundPoissonDrift { .. } => {
                let inc = self.levy_increment(dt, stream);
                (lo + inc, hi + inc)
            }
        }
    }

    fn levy_increment(&self, dt: T, stream: &mut RngStream) -> T {
        let Self::CompoundPoissonDrift { rate, jumps, drift } = self else {
            unreachable!("levy increment on a diffusion")
        };
        let k = stream.poisson((*rate * dt).as_f64());
        let mut inc = *drift * dt;
        for _ in 0..k {
            inc = inc + jumps.sample(stream);
        }
        inc
    }

    /// Probability that the bridge from `x` to `y` over `dt` dips below the
    /// constant level `a`.
    ///
    /// Exact for Brownian motion with drift; for Ornstein–Uhlenbeck the same
    /// Brownian-bridge formula is used with σ, which is an approximation.
    pub fn bridge_crossing_prob(&self, x: T, y: T, a: T, dt: T) -> Result<T> {
        let sigma = self.sigma().ok_or(Error::JumpDriver)?;
        if !(dt > T::zero()) {
            return Err(invalid("bridge crossing needs dt > 0"));
        }
        Ok(linear_bridge_crossing_prob(sigma, x, y, a, a, dt))
    }

    /// True when [`Self::bridge_crossing_prob`] is only approximate.
    pub fn bridge_is_approximate(&self) -> bool {
        matches!(self, Self::OrnsteinUhlenbeck { .. })
    }

    /// Exact sample of `X_s` on the Ornstein–Uhlenbeck bridge from `x` (time 0)
    /// to `y` (time `dt`), for `0 < s < dt`. Other variants return `None`.
    pub fn ou_bridge_point(&self, x: T, y: T, s: T, dt: T, stream: &mut RngStream) -> Option<T> {
        let Self::OrnsteinUhlenbeck { theta, sigma, mean } = self else {
            return None;
        };
        let (a1, sd1) = ou_coefficients(*theta, *sigma, s);
        let (a2, sd2) = ou_coefficients(*theta, *sigma, dt - s);
        let (v1, v2) = (sd1 * sd1, sd2 * sd2);
        let (u, w) = (x - *mean, y - *mean);
        let precision = T::one() / v1 + a2 * a2 / v2;
        let m = (a1 * u / v1 + a2 * w / v2) / precision;
        Some(*mean + m + stream.normal::<T>() / precision.sqrt())
    }
}

/// Decay factor and innovation standard deviation of the exact OU step.
#[inline]
fn ou_coefficients<T: Scalar>(theta: T, sigma: T, dt: T) -> (T, T) {
    let a = (-theta * dt).exp();
    // 1 − e^{−2θdt} without cancellation for small steps
    let one_minus = -(-(theta + theta) * dt).exp_m1();
    (a, sigma * (one_minus / (theta + theta)).sqrt())
}

fn check_dt<T: Scalar>(dt: T) -> Result<()> {
    if dt < T::zero() || dt.is_nan() {
        return Err(Error::NegativeDuration(dt.as_f64()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm() -> DriverSpec<f64> {
        DriverSpec::brownian(-std::f64::consts::SQRT_2, 1.0).unwrap()
    }

    fn ou() -> DriverSpec<f64> {
        DriverSpec::ornstein_uhlenbeck(1.0, 1.0, 0.0).unwrap()
    }

    fn cp() -> DriverSpec<f64> {
        DriverSpec::compound_poisson(2.0, InitialLaw::Uniform { a: -1.0, b: 0.5 }, 0.3).unwrap()
    }

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn validation() {
        assert!(DriverSpec::brownian(0.0, 0.0).is_err());
        assert!(DriverSpec::ornstein_uhlenbeck(0.0, 1.0, 0.0).is_err());
        assert!(DriverSpec::compound_poisson(-1.0, InitialLaw::PointMass { x: 1.0 }, 0.0).is_err());
        assert!(DriverSpec::compound_poisson(0.0, InitialLaw::PointMass { x: 1.0 }, 0.0).is_ok());
    }

    #[test]
    fn zero_step_is_identity() {
        let mut s = RngStream::new(1, 1);
        for d in [bm(), ou(), cp()] {
            assert_eq!(d.sample_transition(0.7, 0.0, &mut s).unwrap(), 0.7);
            assert_eq!(d.coupled_transition(0.1, 0.7, 0.0, &mut s).unwrap(), (0.1, 0.7));
        }
    }

    #[test]
    fn negative_step_rejected() {
        let mut s = RngStream::new(1, 1);
        assert_eq!(bm().sample_transition(0.0, -1.0, &mut s), Err(Error::NegativeDuration(-1.0)));
        assert!(matches!(
            bm().coupled_transition(1.0, 0.0, 0.1, &mut s),
            Err(Error::Unordered { .. })
        ));
    }

    #[test]
    fn brownian_mean_after_unit_time() {
        let d = bm();
        let mut s = RngStream::new(2024, 0);
        let xs: Vec<f64> =
            (0..1_000_000).map(|_| d.sample_transition(0.0, 1.0, &mut s).unwrap()).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m + std::f64::consts::SQRT_2).abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn ou_mean_after_unit_time() {
        let d = ou();
        let mut s = RngStream::new(2025, 0);
        let xs: Vec<f64> =
            (0..1_000_000).map(|_| d.sample_transition(1.0, 1.0, &mut s).unwrap()).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - (-1.0f64).exp()).abs() <= 3.0 * se, "{m} ± {se}");
        // stationary-variance check on the same sample: (1 − e^{−2})/2
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0);
        assert!((v - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 5e-3);
    }

    #[test]
    fn compound_poisson_mean() {
        // E[X_1] = x + b + λ·E[J] = 0 + 0.3 + 2·(−0.25)
        let d = cp();
        let mut s = RngStream::new(7, 0);
        let xs: Vec<f64> =
            (0..200_000).map(|_| d.sample_transition(0.0, 1.0, &mut s).unwrap()).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - (0.3 - 0.5)).abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn coupled_step_coalesces_and_keeps_brownian_gap() {
        let mut s = RngStream::new(3, 3);
        for d in [bm(), ou(), cp()] {
            let (a, b) = d.coupled_transition(0.4, 0.4, 0.3, &mut s).unwrap();
            assert_eq!(a, b);
        }
        let d = bm();
        for _ in 0..1000 {
            let (a, b) = d.coupled_transition(-0.25, 1.5, 0.01, &mut s).unwrap();
            assert!(((b - a) - 1.75).abs() < 1e-12);
        }
    }

    #[test]
    fn ou_bridge_point_pins_endpoints() {
        let d = ou();
        let mut s = RngStream::new(1, 9);
        // Near the left end the bridge point stays near x.
        let pts: Vec<f64> =
            (0..20_000).map(|_| d.ou_bridge_point(2.0, -1.0, 1e-6, 1.0, &mut s).unwrap()).collect();
        let (m, _) = mean_and_se(&pts);
        assert!((m - 2.0).abs() < 1e-2);
        assert!(bm().ou_bridge_point(0.0, 0.0, 0.5, 1.0, &mut s).is_none());
    }

    #[test]
    fn bridge_probability_contract() {
        let d = bm();
        assert_eq!(d.bridge_crossing_prob(0.0, 3.0, 0.0, 1.0).unwrap(), 1.0);
        let p = DriverSpec::brownian(0.0, 1.0).unwrap().bridge_crossing_prob(1.0, 1.0, 0.0, 1.0);
        assert!((p.unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(cp().bridge_crossing_prob(1.0, 1.0, 0.0, 1.0), Err(Error::JumpDriver));
        assert!(ou().bridge_is_approximate() && !bm().bridge_is_approximate());
        let mut last = 1.0;
        for k in 0..12 {
            let dt = 0.5f64.powi(k);
            let p = d.bridge_crossing_prob(0.3, 0.2, 0.0, dt).unwrap();
            assert!(p < last);
            last = p;
        }
        assert!(last < 1e-100);
    }

    #[test]
    fn serde_tags() {
        let d: DriverSpec<f64> =
            serde_json::from_str(r#"{"kind":"brownian-with-drift","drift":-1.0,"sigma":1.0}"#)
                .unwrap();
        assert_eq!(d, DriverSpec::BrownianWithDrift { drift: -1.0, sigma: 1.0 });
        let back = serde_json::to_string(&cp()).unwrap();
        let again: DriverSpec<f64> = serde_json::from_str(&back).unwrap();
        assert_eq!(again, cp());
    }
}
