//! Closed forms for the geometric law on {1, 2, …}: tails, truncated means,
//! the Cramér rate function and the lower-deviation bound it gives.

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeomParams<T> {
    p: T,
    q: T,
    c: T,
}

impl<T: Scalar> GeomParams<T> {
    pub fn new(p: T) -> Result<Self> {
        if !(p > T::zero() && p < T::one()) {
            return Err(invalid("geometric parameter must lie in (0, 1)"));
        }
        let q = T::one() - p;
        Ok(Self { p, q, c: -q.ln() })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn q(&self) -> T {
        self.q
    }

    /// `c = −ln q > 0`.
    pub fn c(&self) -> T {
        self.c
    }

    /// `P(G > K) = e^{−cK}` (for integer `K` this is `q^K`).
    pub fn tail(&self, k: T) -> T {
        (-self.c * k).exp()
    }

    /// `E(G·1{G > K})` in closed form, `q^K((K+1)p + q)/p`, together with
    /// the bound `(K+2)e^{−cK}/p`.
    pub fn truncated_mean(&self, k: u32) -> (T, T) {
        let kk = T::from_u32(k).expect("u32 converts");
        let qk = self.q.powi(k as i32);
        let exact = qk * ((kk + T::one()) * self.p + self.q) / self.p;
        let bound = (kk + T::lit(2.0)) * (-self.c * kk).exp() / self.p;
        (exact, bound)
    }

    /// Legendre transform `Λ*_p(x) = (x−1)·ln((x−1)/(xq)) − ln(px)`, `x > 1`.
    pub fn legendre(&self, x: T) -> Result<T> {
        if !(x > T::one()) {
            return Err(invalid("Legendre transform of the geometric law needs x > 1"));
        }
        let xm1 = x - T::one();
        Ok(xm1 * (xm1 / (x * self.q)).ln() - (self.p * x).ln())
    }

    /// `e^{−nΛ*_p(x)}`, bounding `P(mean of n geometrics < x)` for `1 < x < 1/p`.
    pub fn cramer_lower_tail_bound(&self, x: T, n: u64) -> Result<T> {
        if !(x > T::one() && x < T::one() / self.p) {
            return Err(invalid("lower-deviation bound needs 1 < x < 1/p"));
        }
        if n == 0 {
            return Ok(T::one());
        }
        let rate = self.legendre(x)?;
        Ok((-T::lit(n as f64) * rate).exp())
    }
}

/// Leading term `(1 − ln 2)τ/2` of `Λ*_{e^{−τ}}(1/(1 − τ/2))` as `τ → 0`.
pub fn legendre_expansion_ref<T: Scalar>(tau: T) -> T {
    (T::one() - T::LN_2()) * tau / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(p: f64) -> GeomParams<f64> {
        GeomParams::new(p).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(GeomParams::new(0.0f64).is_err());
        assert!(GeomParams::new(1.0f64).is_err());
        let gp = g(0.25);
        assert_eq!(gp.q(), 0.75);
        assert!(gp.c() > 0.0);
    }

    #[test]
    fn tail_values() {
        assert!((g(0.5).tail(3.0) - 0.125).abs() < 1e-15);
        assert!((g(0.3).tail(1e-12) - 1.0).abs() < 1e-12);
        for p in [0.1, 0.37, 0.9] {
            for k in [0.5, 2.0, 7.25] {
                assert!((g(p).tail(k) - (1.0 - p).powf(k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_mean_values() {
        assert!((g(0.5).truncated_mean(2).0 - 1.0).abs() < 1e-15);
        for p in [0.1, 0.5, 0.8] {
            assert!((g(p).truncated_mean(0).0 - 1.0 / p).abs() < 1e-12);
        }
        let (exact, bound) = g(0.3).truncated_mean(5);
        assert!(exact <= bound);
    }

    #[test]
    fn legendre_values() {
        for p in [0.1, 0.5, 0.9] {
            assert!(g(p).legendre(1.0 / p).unwrap().abs() < 1e-12);
        }
        let near_one = g(0.4).legendre(1.0 + 1e-8).unwrap();
        assert!((near_one + 0.4f64.ln()).abs() < 1e-6);
        assert!(g(0.4).legendre(1.0).is_err());
    }

    #[test]
    fn cramer_bound_basics() {
        let gp = g((-1.0f64).exp());
        assert_eq!(gp.cramer_lower_tail_bound(1.5, 0).unwrap(), 1.0);
        let mut last = 1.0;
        for n in 1..100 {
            let b = gp.cramer_lower_tail_bound(1.5, n).unwrap();
            assert!(b <= last);
            last = b;
        }
        assert!(gp.cramer_lower_tail_bound(3.0, 5).is_err());
    }

    #[test]
    fn expansion_reference() {
        assert!((legendre_expansion_ref(0.1f64) - 0.015_342_640_972_002_736).abs() < 1e-15);
        assert_eq!(legendre_expansion_ref(0.0f64), 0.0);
    }

    #[test]
    fn generic_over_f32() {
        let gp = GeomParams::new(0.5f32).unwrap();
        assert!((gp.tail(3.0) - 0.125).abs() < 1e-6);
        assert!(gp.legendre(2.0).unwrap().abs() < 1e-6);
    }
}
