use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Initial law μ₀ of the particle positions (also reused as a jump-size law).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub enum InitialLaw<T> {
    PointMass { x: T },
    Uniform { a: T, b: T },
    /// Density μ²·x·e^{−μx} on x > 0: the quasi-stationary law of Brownian
    /// motion with drift −μ killed at 0.
    QsdDriftedBm { mu: T },
    ExplicitQuantile { table: QuantileTable<T> },
}

/// Piecewise-linear quantile function through `(u, x)` knots, u from 0 to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(T, T)>", into = "Vec<(T, T)>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct QuantileTable<T> {
    knots: Vec<(T, T)>,
}

impl<T: Scalar> QuantileTable<T> {
    pub fn new(knots: Vec<(T, T)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::QuantileTable("need at least two knots".into()));
        }
        if knots.iter().any(|(u, x)| !u.is_finite() || !x.is_finite()) {
            return Err(Error::QuantileTable("non-finite knot".into()));
        }
        if knots[0].0 != T::zero() || knots[knots.len() - 1].0 != T::one() {
            return Err(Error::QuantileTable("u must run from 0 to 1".into()));
        }
        for w in knots.windows(2) {
            if !(w[0].0 < w[1].0 && w[0].1 < w[1].1) {
                return Err(Error::QuantileTable(
                    "knots must be strictly increasing in both coordinates".into(),
                ));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn quantile(&self, u: T) -> T {
        let k = &self.knots;
        let i = k.partition_point(|(ku, _)| *ku <= u).clamp(1, k.len() - 1);
        let (u0, x0) = k[i - 1];
        let (u1, x1) = k[i];
        x0 + (x1 - x0) * ((u - u0) / (u1 - u0))
    }
}

impl<T: Scalar> TryFrom<Vec<(T, T)>> for QuantileTable<T> {
    type Error = Error;

    fn try_from(knots: Vec<(T, T)>) -> Result<Self> {
        Self::new(knots)
    }
}

impl<T> From<QuantileTable<T>> for Vec<(T, T)> {
    fn from(t: QuantileTable<T>) -> Self {
        t.knots
    }
}

impl<T: Scalar> InitialLaw<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PointMass { x } if !x.is_finite() => {
                Err(crate::error::invalid("point mass must be finite"))
            }
            Self::Uniform { a, b } if !(a.is_finite() && b.is_finite() && a < b) => {
                Err(crate::error::invalid("uniform law needs finite a < b"))
            }
            Self::QsdDriftedBm { mu } if !(mu.is_finite() && *mu > T::zero()) => {
                Err(crate::error::invalid("QSD drift magnitude must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, stream: &mut RngStream) -> T {
        match self {
            Self::PointMass { x } => *x,
            Self::Uniform { a, b } => *a + (*b - *a) * stream.open01::<T>(),
            Self::QsdDriftedBm { mu } => (stream.exp1::<T>() + stream.exp1::<T>()) / *mu,
            Self::ExplicitQuantile { table } => table.quantile(stream.open01()),
        }
    }

    /// Infimum of the support.
    pub fn support_min(&self) -> T {
        match self {
            Self::PointMass { x } => *x,
            Self::Uniform { a, .. } => *a,
            Self::QsdDriftedBm { .. } => T::zero(),
            Self::ExplicitQuantile { table } => table.knots()[0].1,
        }
    }

    /// Exact c.d.f., when it has a closed form.
    pub fn cdf(&self, r: T) -> T {
        match self {
            Self::PointMass { x } => {
                if r >= *x {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::Uniform { a, b } => ((r - *a) / (*b - *a)).max(T::zero()).min(T::one()),
            Self::QsdDriftedBm { mu } => {
                if r <= T::zero() {
                    T::zero()
                } else {
                    let z = *mu * r;
                    T::one() - (T::one() + z) * (-z).exp()
                }
            }
            Self::ExplicitQuantile { table } => {
                let k = table.knots();
                if r < k[0].1 {
                    return T::zero();
                }
                if r >= k[k.len() - 1].1 {
                    return T::one();
                }
                let i = k.partition_point(|(_, x)| *x <= r).clamp(1, k.len() - 1);
                let (u0, x0) = k[i - 1];
                let (u1, x1) = k[i];
                u0 + (u1 - u0) * ((r - x0) / (x1 - x0))
            }
        }
    }

    /// Mean of the law.
    pub fn mean(&self) -> T {
        let two = T::lit(2.0);
        match self {
            Self::PointMass { x } => *x,
            Self::Uniform { a, b } => (*a + *b) / two,
            Self::QsdDriftedBm { mu } => two / *mu,
            Self::ExplicitQuantile { table } => table
                .knots()
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / two)
                .fold(T::zero(), |acc, v| acc + v),
        }
    }
}

/// Public form of the `sample_initial` operation.
pub fn sample_initial<T: Scalar>(law: &InitialLaw<T>, stream: &mut RngStream) -> Result<T> {
    law.validate()?;
    Ok(law.sample(stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_is_exact() {
        let mut s = RngStream::new(1, 2);
        assert_eq!(sample_initial(&InitialLaw::PointMass { x: 2.5 }, &mut s).unwrap(), 2.5);
    }

    #[test]
    fn uniform_support() {
        let mut s = RngStream::new(1, 3);
        let law = InitialLaw::Uniform { a: 0.0, b: 1.0 };
        for _ in 0..10_000 {
            let x: f64 = law.sample(&mut s);
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn qsd_mean_within_three_se() {
        let mu = std::f64::consts::SQRT_2;
        let law = InitialLaw::QsdDriftedBm { mu };
        let mut s = RngStream::new(11, 0);
        let m = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..m {
            let x: f64 = law.sample(&mut s);
            assert!(x > 0.0);
            sum += x;
            sq += x * x;
        }
        let mean = sum / m as f64;
        let se = ((sq / m as f64 - mean * mean) / m as f64).sqrt();
        assert!((mean - 2.0 / mu).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn quantile_table_validation() {
        assert!(QuantileTable::new(vec![(0.0, 0.0), (1.0, 1.0)]).is_ok());
        assert!(QuantileTable::new(vec![(0.0, 0.0)]).is_err());
        assert!(QuantileTable::new(vec![(0.0, 0.0), (0.5, 0.0), (1.0, 1.0)]).is_err());
        assert!(QuantileTable::new(vec![(0.1, 0.0), (1.0, 1.0)]).is_err());
        assert!(QuantileTable::new(vec![(0.0, 1.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn quantile_table_interpolates_and_inverts_cdf() {
        let t = QuantileTable::new(vec![(0.0, -1.0), (0.5, 0.0), (1.0, 3.0)]).unwrap();
        assert_eq!(t.quantile(0.25), -0.5);
        assert_eq!(t.quantile(0.75), 1.5);
        let law = InitialLaw::ExplicitQuantile { table: t };
        assert_eq!(law.cdf(1.5), 0.75);
        assert_eq!(law.cdf(-2.0), 0.0);
        assert_eq!(law.cdf(3.0), 1.0);
        let mut s = RngStream::new(5, 5);
        for _ in 0..1000 {
            let x: f64 = law.sample(&mut s);
            assert!((-1.0..=3.0).contains(&x));
        }
    }

    #[test]
    fn serde_rejects_bad_table() {
        let ok: Result<InitialLaw<f64>, _> =
            serde_json::from_str(r#"{"law":"explicit-quantile","table":[[0,0],[1,2]]}"#);
        assert!(ok.is_ok());
        let bad: Result<InitialLaw<f64>, _> =
            serde_json::from_str(r#"{"law":"explicit-quantile","table":[[0,0],[1,-2]]}"#);
        assert!(bad.is_err());
    }
}
