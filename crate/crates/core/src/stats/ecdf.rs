use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Right-continuous empirical c.d.f. of a finite sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf<T> {
    sorted: Vec<T>,
}

impl<T: Scalar> EmpiricalCdf<T> {
    pub fn new(mut samples: Vec<T>) -> Result<Self> {
        if samples.iter().any(|x| x.is_nan()) {
            return Err(invalid("NaN in empirical c.d.f. sample"));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[T] {
        &self.sorted
    }

    /// Number of sample points `<= r`.
    #[inline]
    pub fn count_le(&self, r: T) -> usize {
        self.sorted.partition_point(|v| *v <= r)
    }

    /// Number of sample points `< r`.
    #[inline]
    pub fn count_lt(&self, r: T) -> usize {
        self.sorted.partition_point(|v| *v < r)
    }

    /// `F(r) = #{x_i <= r}/n`; the empty c.d.f. is identically 0.
    pub fn eval(&self, r: T) -> T {
        if self.sorted.is_empty() {
            return T::zero();
        }
        T::from_count(self.count_le(r)) / T::from_count(self.len())
    }

    /// `F(r−)`.
    pub fn left_limit(&self, r: T) -> T {
        if self.sorted.is_empty() {
            return T::zero();
        }
        T::from_count(self.count_lt(r)) / T::from_count(self.len())
    }
}

/// Exact `sup_r |F(r) − G(r)|` between two empirical c.d.f.s.
///
/// Both are step functions, so the supremum is attained at a jump of either;
/// left limits at a jump equal the value at the previous merged jump.
pub fn sup_norm_distance<T: Scalar>(f: &EmpiricalCdf<T>, g: &EmpiricalCdf<T>) -> T {
    let (a, b) = (f.sorted(), g.sorted());
    let (na, nb) = (T::from_count(a.len().max(1)), T::from_count(b.len().max(1)));
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = T::zero();
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= next {
            i += 1;
        }
        while j < b.len() && b[j] <= next {
            j += 1;
        }
        let fa = if a.is_empty() { T::zero() } else { T::from_count(i) / na };
        let gb = if b.is_empty() { T::zero() } else { T::from_count(j) / nb };
        best = best.max((fa - gb).abs());
    }
    best
}

/// `sup_r |F(r) − G(r)|` against a continuous c.d.f. `g`.
pub fn sup_norm_distance_to<T: Scalar>(f: &EmpiricalCdf<T>, g: impl Fn(T) -> T) -> T {
    let n = T::from_count(f.len().max(1));
    let mut best = T::zero();
    for (i, &x) in f.sorted().iter().enumerate() {
        let gx = g(x);
        let below = T::from_count(i) / n;
        let at = T::from_count(i + 1) / n;
        best = best.max((gx - below).abs()).max((at - gx).abs());
    }
    best
}
