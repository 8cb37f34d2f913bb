//! The moving boundary γ: representation, Monte Carlo inverse first-passage
//! solver, killed-path simulation and the conditional-law oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drivers::{
    linear_bridge_crossing_prob, sample_bridge_crossing_time, DriverSpec, InitialLaw,
};
use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::stats::EmpiricalCdf;

/// Behaviour of γ on `[0, t₁)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gamma0<T> {
    /// Constant level below the first grid time.
    Level(T),
    /// No killing before the first grid time (γ₀ = −∞).
    NoConstraint,
}

/// Piecewise-linear curve on a strictly increasing grid `0 < t₁ < … < t_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Boundary<T> {
    times: Vec<T>,
    values: Vec<T>,
    gamma0: Gamma0<T>,
    constant: bool,
}

impl<T: Scalar> Boundary<T> {
    pub fn new(times: Vec<T>, values: Vec<T>, gamma0: Gamma0<T>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(invalid("boundary needs matching, non-empty time and value grids"));
        }
        if !(times[0] > T::zero()) || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("boundary grid must satisfy 0 < t1 < ... < tM"));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("boundary grid and values must be finite"));
        }
        if let Gamma0::Level(v) = gamma0 {
            if !v.is_finite() {
                return Err(invalid("finite gamma0 expected; use NoConstraint for -inf"));
            }
        }
        let constant = values.iter().all(|v| *v == values[0])
            && matches!(gamma0, Gamma0::Level(v) if v == values[0]);
        Ok(Self { times, values, gamma0, constant })
    }

    /// `γ ≡ level` on `[0, horizon]`, stored on a grid of the given step.
    pub fn constant(level: T, horizon: T, step: T) -> Result<Self> {
        if !(step > T::zero()) || !(horizon >= step) {
            return Err(invalid("constant boundary needs 0 < step <= horizon"));
        }
        let times = uniform_grid(step, horizon);
        let values = vec![level; times.len()];
        Self::new(times, values, Gamma0::Level(level))
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn gamma0(&self) -> Gamma0<T> {
        self.gamma0
    }

    pub fn horizon(&self) -> T {
        self.times[self.times.len() - 1]
    }

    /// `γ_t`, or `None` where no constraint applies.
    pub fn eval(&self, t: T) -> Result<Option<T>> {
        if !(t >= T::zero() && t <= self.horizon()) {
            return Err(Error::OutOfDomain { t: t.as_f64(), horizon: self.horizon().as_f64() });
        }
        Ok(self.level(t))
    }

    /// Unchecked evaluation, clamped to the horizon on the right.
    #[inline]
    pub(crate) fn level(&self, t: T) -> Option<T> {
        if self.constant {
            return Some(self.values[0]);
        }
        if t < self.times[0] {
            return match self.gamma0 {
                Gamma0::Level(v) => Some(v),
                Gamma0::NoConstraint => None,
            };
        }
        let i = self.times.partition_point(|s| *s <= t);
        if i >= self.times.len() {
            return Some(self.values[self.values.len() - 1]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        if t == t0 {
            return Some(v0);
        }
        Some(v0 + (v1 - v0) * ((t - t0) / (t1 - t0)))
    }
}

/// `step, 2·step, …` up to `horizon` (inclusive up to rounding).
pub fn uniform_grid<T: Scalar>(step: T, horizon: T) -> Vec<T> {
    let k = (horizon / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    let mut v: Vec<T> = (1..=k).map(|i| step * T::from_count(i)).collect();
    match v.last_mut() {
        Some(last) if (*last - horizon).abs() <= step * T::lit(1e-9) => *last = horizon,
        _ => v.push(horizon),
    }
    v
}

/// How crossings are detected between check times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy<T> {
    /// Largest time between two crossing checks.
    pub dt_max: T,
    /// Kill with the Brownian-bridge crossing probability inside each step
    /// (continuous-path drivers only).
    pub bridge: bool,
    /// Ornstein–Uhlenbeck only: number of exact bridge sub-steps per step.
    pub ou_substeps: u32,
}

impl<T: Scalar> Default for StepPolicy<T> {
    fn default() -> Self {
        Self { dt_max: T::lit(0.01), bridge: true, ou_substeps: 1 }
    }
}

impl<T: Scalar> StepPolicy<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > T::zero()) {
            return Err(invalid("dt_max must be positive"));
        }
        if self.ou_substeps == 0 {
            return Err(invalid("ou_substeps must be at least 1"));
        }
        Ok(())
    }

    /// First point of the `dt_max` grid strictly after `t`.
    #[inline]
    pub(crate) fn next_grid(&self, t: T) -> T {
        let mut k = (t / self.dt_max).floor() + T::one();
        while k * self.dt_max <= t {
            k = k + T::one();
        }
        k * self.dt_max
    }
}

/// Crossing detection of one driver against one boundary.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Killer<'a, T> {
    pub boundary: &'a Boundary<T>,
    pub driver: &'a DriverSpec<T>,
    pub policy: StepPolicy<T>,
}

impl<T: Scalar> Killer<'_, T> {
    #[inline]
    pub fn alive_at(&self, t: T, x: T) -> bool {
        self.boundary.level(t).is_none_or(|b| x >= b)
    }

    /// Kill test for a step `(t0, x) → (t1, y)`; returns the crossing time.
    #[inline]
    pub fn step(&self, t0: T, x: T, t1: T, y: T, stream: &mut RngStream) -> Option<T> {
        let b1 = self.boundary.level(t1)?;
        let sigma = match self.driver.sigma() {
            Some(s) if self.policy.bridge => s,
            _ => return (y < b1).then_some(t1),
        };
        let a0 = self.boundary.level(t0).unwrap_or(b1);
        if self.policy.ou_substeps > 1 && self.driver.bridge_is_approximate() {
            return self.refined_step(sigma, t0, x, t1, y, stream);
        }
        bridge_kill(sigma, t0, x, a0, t1, y, b1, stream)
    }

    fn refined_step(&self, sigma: T, t0: T, x: T, t1: T, y: T, s: &mut RngStream) -> Option<T> {
        let k = self.policy.ou_substeps;
        let h = (t1 - t0) / T::lit(k as f64);
        let (mut ts, mut xs) = (t0, x);
        for i in 1..=k {
            let te = if i == k { t1 } else { t0 + h * T::lit(i as f64) };
            let ye = if i == k {
                y
            } else {
                self.driver.ou_bridge_point(xs, y, te - ts, t1 - ts, s).expect("OU driver")
            };
            let be = self.boundary.level(te)?;
            let a0 = self.boundary.level(ts).unwrap_or(be);
            if let Some(tau) = bridge_kill(sigma, ts, xs, a0, te, ye, be, s) {
                return Some(tau);
            }
            ts = te;
            xs = ye;
        }
        None
    }
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn bridge_kill<T: Scalar>(
    sigma: T,
    t0: T,
    x: T,
    a0: T,
    t1: T,
    y: T,
    a1: T,
    s: &mut RngStream,
) -> Option<T> {
    let (u, w) = (x - a0, y - a1);
    if u <= T::zero() {
        return Some(t0);
    }
    let dt = t1 - t0;
    if w >= T::zero() {
        let p = linear_bridge_crossing_prob(sigma, x, y, a0, a1, dt);
        if s.open01::<T>() >= p {
            return None;
        }
    }
    let var = (sigma * sigma * dt).as_f64();
    let frac = sample_bridge_crossing_time(u.as_f64(), w.as_f64(), var, s);
    Some(t0 + dt * T::lit(frac))
}

/// Output of [`solve_boundary_mc`].
#[derive(Clone, Debug)]
pub struct SolvedBoundary<T> {
    pub boundary: Boundary<T>,
    /// Paths never killed up to each grid time.
    pub survivors: Vec<usize>,
    pub paths: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Rank per-path bridge-corrected kill thresholds instead of endpoint
    /// positions (continuous-path drivers only).
    pub bridge: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { bridge: true }
    }
}

/// Monte Carlo inverse first-passage solver.
///
/// Simulates `m` paths on `grid` and, at each `t_k`, picks γ(t_k) as the
/// midpoint of two consecutive order statistics so that exactly
/// `round(m·e^{−t_k})` paths have survived. A path survives a step when its
/// kill threshold exceeds the level: with endpoint checks the threshold is the
/// endpoint; with bridge correction it is the largest level for which the
/// path passes both the endpoint check and the bridge test against its
/// uniform draw, in closed form because the bridge probability is monotone in
/// the level.
pub fn solve_boundary_mc<T: Scalar>(
    driver: &DriverSpec<T>,
    mu0: &InitialLaw<T>,
    grid: &[T],
    m: usize,
    opts: SolverOptions,
    stream: &RngStream,
) -> Result<SolvedBoundary<T>> {
    driver.validate()?;
    mu0.validate()?;
    if grid.is_empty() || !(grid[0] > T::zero()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("solver grid must satisfy 0 < t1 < ... < tM"));
    }
    if m == 0 {
        return Err(invalid("solver needs at least one path"));
    }
    let sigma = driver.sigma().filter(|_| opts.bridge);
    let mf = m as f64;

    let mut alive: Vec<(usize, T)> = (0..m)
        .into_par_iter()
        .map(|i| (i, mu0.sample(&mut stream.child(i as u64).child(0))))
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut survivors = Vec::with_capacity(grid.len());
    let mut t_prev = T::zero();
    let mut level_prev: Option<T> = None;

    for (k, &tk) in grid.iter().enumerate() {
        let dt = tk - t_prev;
        let step = (k + 1) as u64;
        let moved: Vec<(usize, T, T)> = alive
            .par_iter()
            .map(|&(i, x)| {
                let mut s = stream.child(i as u64).child(step);
                let y = driver.advance(x, dt, &mut s);
                let thr = match sigma {
                    None => y,
                    Some(sig) => {
                        let u: T = s.open01();
                        let h = -sig * sig * dt * u.ln() / T::lit(2.0);
                        match level_prev {
                            // level constant over the first step: smaller root of (x−g)(y−g) = h
                            None => {
                                let d = x - y;
                                ((x + y) - (d * d + T::lit(4.0) * h).sqrt()) / T::lit(2.0)
                            }
                            Some(a) if x > a => (y - h / (x - a)).min(y),
                            Some(_) => T::neg_infinity(),
                        }
                    }
                };
                (i, y, thr)
            })
            .collect();

        let target = (mf * (-tk.as_f64()).exp()).round() as usize;
        let have = moved.len();
        if target == 0 || target > have {
            return Err(Error::InfeasibleQuantile { t: tk.as_f64(), survivors: have, target });
        }
        let kill = have - target;
        let mut thr: Vec<T> = moved.iter().map(|m| m.2).collect();
        thr.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
        let gamma = if kill == 0 {
            let lowest = thr[0];
            match sigma {
                None => lowest,
                Some(_) => lowest - lowest.abs().max(T::one()) * T::epsilon(),
            }
        } else {
            let (lo, hi) = (thr[kill - 1], thr[kill]);
            if !(lo < hi) {
                return Err(Error::InfeasibleQuantile { t: tk.as_f64(), survivors: have, target });
            }
            (lo + hi) / T::lit(2.0)
        };
        alive = moved
            .into_iter()
            .filter(|&(_, y, th)| match sigma {
                None => y >= gamma,
                Some(_) => th > gamma,
            })
            .map(|(i, y, _)| (i, y))
            .collect();
        debug_assert_eq!(alive.len(), target);
        values.push(gamma);
        survivors.push(alive.len());
        level_prev = Some(gamma);
        t_prev = tk;
    }

    let horizon = grid[grid.len() - 1];
    let window = grid[0].max(horizon * T::lit(0.1));
    let near_zero_min = grid
        .iter()
        .zip(&values)
        .take_while(|(t, _)| **t <= window)
        .map(|(_, v)| *v)
        .fold(T::infinity(), T::min);
    let gamma0 = if mu0.support_min() >= near_zero_min {
        Gamma0::NoConstraint
    } else {
        Gamma0::Level(values[0])
    };
    Ok(SolvedBoundary { boundary: Boundary::new(grid.to_vec(), values, gamma0)?, survivors, paths: m })
}

/// A single killed path observed at increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome<T> {
    /// Crossing time, if the path was killed by `t_end`.
    pub death: Option<T>,
    /// Position at each observation time reached alive.
    pub observed: Vec<T>,
}

/// Simulates one path of `driver` from `x0` against `killer` up to `t_end`.
pub(crate) fn simulate_killed_path<T: Scalar>(
    killer: &Killer<'_, T>,
    x0: T,
    t_end: T,
    obs: &[T],
    stream: &mut RngStream,
) -> PathOutcome<T> {
    let mut out = PathOutcome { death: None, observed: Vec::with_capacity(obs.len()) };
    if !killer.alive_at(T::zero(), x0) {
        out.death = Some(T::zero());
        return out;
    }
    let (mut t, mut x) = (T::zero(), x0);
    let mut oi = 0;
    loop {
        while oi < obs.len() && obs[oi] <= t {
            out.observed.push(x);
            oi += 1;
        }
        if t >= t_end {
            return out;
        }
        let mut t1 = killer.policy.next_grid(t).min(t_end);
        if oi < obs.len() {
            t1 = t1.min(obs[oi]);
        }
        let y = killer.driver.advance(x, t1 - t, stream);
        if let Some(tau) = killer.step(t, x, t1, y, stream) {
            out.death = Some(tau);
            return out;
        }
        t = t1;
        x = y;
    }
}

fn killed_paths<T: Scalar>(
    boundary: &Boundary<T>,
    driver: &DriverSpec<T>,
    mu0: &InitialLaw<T>,
    t_end: T,
    obs: &[T],
    m: usize,
    policy: StepPolicy<T>,
    stream: &RngStream,
) -> Result<Vec<PathOutcome<T>>> {
    driver.validate()?;
    mu0.validate()?;
    policy.validate()?;
    if !(t_end >= T::zero() && t_end <= boundary.horizon()) {
        return Err(Error::OutOfDomain { t: t_end.as_f64(), horizon: boundary.horizon().as_f64() });
    }
    let killer = Killer { boundary, driver, policy };
    Ok((0..m)
        .into_par_iter()
        .map(|i| {
            let mut s = stream.child(i as u64);
            let x0 = mu0.sample(&mut s);
            simulate_killed_path(&killer, x0, t_end, obs, &mut s)
        })
        .collect())
}

/// Monte Carlo proportion with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub count: usize,
    pub trials: usize,
}

impl Estimate {
    pub fn proportion(count: usize, trials: usize) -> Self {
        let p = count as f64 / trials as f64;
        Self { value: p, se: (p * (1.0 - p) / trials as f64).sqrt(), count, trials }
    }
}

/// Fresh-path estimate of `Q_{μ₀}(τ_γ > t)`.
pub fn survival_probability<T: Scalar>(
    boundary: &Boundary<T>,
    driver: &DriverSpec<T>,
    mu0: &InitialLaw<T>,
    t: T,
    m: usize,
    policy: StepPolicy<T>,
    stream: &RngStream,
) -> Result<Estimate> {
    if m == 0 {
        return Err(invalid("need at least one path"));
    }
    let paths = killed_paths(boundary, driver, mu0, t, &[], m, policy, stream)?;
    Ok(Estimate::proportion(paths.iter().filter(|p| p.death.is_none()).count(), m))
}

/// Crossing times of `m` fresh paths, `None` for paths alive at the horizon.
pub fn crossing_times<T: Scalar>(
    boundary: &Boundary<T>,
    driver: &DriverSpec<T>,
    mu0: &InitialLaw<T>,
    m: usize,
    policy: StepPolicy<T>,
    stream: &RngStream,
) -> Result<Vec<Option<T>>> {
    let h = boundary.horizon();
    let paths = killed_paths(boundary, driver, mu0, h, &[], m, policy, stream)?;
    Ok(paths.into_iter().map(|p| p.death).collect())
}

/// Empirical law of `X_t` given `τ_γ > t`.
#[derive(Clone, Debug)]
pub struct OracleCdf<T> {
    pub time: T,
    pub cdf: EmpiricalCdf<T>,
    pub survivors: usize,
    pub paths: usize,
}

/// Monte Carlo reference for `e^t·U(·, t)`, the c.d.f. of the killed process
/// conditioned on survival, at each of the increasing `times`.
pub fn conditional_law_oracle<T: Scalar>(
    driver: &DriverSpec<T>,
    mu0: &InitialLaw<T>,
    boundary: &Boundary<T>,
    times: &[T],
    m: usize,
    min_survivors: usize,
    policy: StepPolicy<T>,
    stream: &RngStream,
) -> Result<Vec<OracleCdf<T>>> {
    if times.is_empty() || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("oracle times must be non-empty and increasing"));
    }
    let t_end = times[times.len() - 1];
    let paths = killed_paths(boundary, driver, mu0, t_end, times, m, policy, stream)?;
    times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let xs: Vec<T> = paths.iter().filter_map(|p| p.observed.get(j).copied()).collect();
            if xs.len() < min_survivors {
                return Err(Error::TooFewSurvivors { survivors: xs.len(), required: min_survivors });
            }
            Ok(OracleCdf { time: t, survivors: xs.len(), cdf: EmpiricalCdf::new(xs)?, paths: m })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qsd() -> (DriverSpec<f64>, InitialLaw<f64>) {
        let mu = std::f64::consts::SQRT_2;
        (DriverSpec::brownian(-mu, 1.0).unwrap(), InitialLaw::QsdDriftedBm { mu })
    }

    #[test]
    fn eval_contract() {
        let b = Boundary::new(vec![0.5, 1.0], vec![0.0, 1.0], Gamma0::NoConstraint).unwrap();
        assert_eq!(b.eval(0.5).unwrap(), Some(0.0));
        assert_eq!(b.eval(1.0).unwrap(), Some(1.0));
        assert_eq!(b.eval(0.75).unwrap(), Some(0.5));
        assert_eq!(b.eval(0.25).unwrap(), None);
        assert!(b.eval(1.5).is_err());
        assert!(b.eval(-0.1).is_err());
        let c = Boundary::new(vec![0.5, 1.0], vec![2.0, 1.0], Gamma0::Level(2.0)).unwrap();
        assert_eq!(c.eval(0.0).unwrap(), Some(2.0));
    }

    #[test]
    fn grid_validation() {
        assert!(Boundary::new(vec![0.0, 1.0], vec![0.0, 0.0], Gamma0::NoConstraint).is_err());
        assert!(Boundary::new(vec![0.5, 0.5], vec![0.0, 0.0], Gamma0::NoConstraint).is_err());
        assert!(Boundary::new(vec![0.5], vec![f64::NAN], Gamma0::NoConstraint).is_err());
        assert!(Boundary::<f64>::new(vec![], vec![], Gamma0::NoConstraint).is_err());
    }

    #[test]
    fn uniform_grid_hits_horizon() {
        let g = uniform_grid(0.01f64, 1.0);
        assert_eq!(g.len(), 100);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = uniform_grid(0.3f64, 1.0);
        assert_eq!(g, vec![0.3, 0.6, 0.8999999999999999, 1.0]);
    }

    #[test]
    fn next_grid_is_strictly_after() {
        let p = StepPolicy { dt_max: 0.1f64, bridge: true, ou_substeps: 1 };
        assert!(p.next_grid(0.0) > 0.0);
        let mut t = 0.0;
        for _ in 0..10 {
            let n = p.next_grid(t);
            assert!(n > t && n - t <= 0.1 + 1e-12);
            t = n;
        }
        assert!((t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_grid_point_survivor_count_is_exact() {
        let (d, mu0) = qsd();
        for bridge in [false, true] {
            let s = solve_boundary_mc(&d, &mu0, &[0.05], 5000, SolverOptions { bridge }, &RngStream::new(1, 1))
                .unwrap();
            assert_eq!(s.survivors, vec![(5000.0 * (-0.05f64).exp()).round() as usize]);
        }
    }

    #[test]
    fn standard_bm_from_zero_starts_below() {
        let d = DriverSpec::brownian(0.0, 1.0).unwrap();
        let s = solve_boundary_mc(
            &d,
            &InitialLaw::PointMass { x: 0.0 },
            &[0.01, 0.02],
            4000,
            SolverOptions::default(),
            &RngStream::new(2, 2),
        )
        .unwrap();
        assert!(s.boundary.values()[0] < 0.0);
        assert_eq!(s.boundary.gamma0(), Gamma0::NoConstraint);
    }

    #[test]
    fn atoms_are_reported_infeasible() {
        // deterministic paths: no way to kill a fraction of them
        let d = DriverSpec::compound_poisson(0.0, InitialLaw::PointMass { x: 1.0 }, -1.0).unwrap();
        let r = solve_boundary_mc(
            &d,
            &InitialLaw::PointMass { x: 0.0 },
            &[0.1],
            1000,
            SolverOptions::default(),
            &RngStream::new(3, 3),
        );
        assert!(matches!(r, Err(Error::InfeasibleQuantile { .. })));
    }

    #[test]
    fn nothing_killed_below_reach() {
        let (d, mu0) = qsd();
        let b = Boundary::new(vec![0.5, 1.0], vec![-1e9, -1e9], Gamma0::NoConstraint).unwrap();
        let e = survival_probability(&b, &d, &mu0, 1.0, 2000, StepPolicy::default(), &RngStream::new(4, 4))
            .unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn qsd_survival_at_one() {
        let (d, mu0) = qsd();
        let b = Boundary::constant(0.0, 1.0, 0.01).unwrap();
        let e = survival_probability(&b, &d, &mu0, 1.0, 100_000, StepPolicy::default(), &RngStream::new(5, 5))
            .unwrap();
        let target = (-1.0f64).exp();
        assert!((e.value - target).abs() <= 3.0 * e.se, "{e:?}");
    }

    #[test]
    fn oracle_is_a_cdf_above_the_boundary() {
        let (d, mu0) = qsd();
        let b = Boundary::constant(0.0, 1.0, 0.01).unwrap();
        let o = conditional_law_oracle(&d, &mu0, &b, &[0.5, 1.0], 20_000, 1000, StepPolicy::default(), &RngStream::new(6, 6))
            .unwrap();
        for oc in &o {
            assert_eq!(oc.cdf.eval(f64::INFINITY), 1.0);
            assert_eq!(oc.cdf.eval(-1e-12), 0.0);
        }
        assert!(o[0].survivors > o[1].survivors);
        let starved = conditional_law_oracle(&d, &mu0, &b, &[1.0], 100, 1000, StepPolicy::default(), &RngStream::new(6, 6));
        assert!(matches!(starved, Err(Error::TooFewSurvivors { .. })));
    }

    #[test]
    fn ou_refinement_kills_at_least_as_often() {
        // interior points can only reveal additional crossings in law
        let d = DriverSpec::ornstein_uhlenbeck(1.0, 1.0, 0.0).unwrap();
        let mu0 = InitialLaw::Uniform { a: 0.0, b: 2.0 };
        let b = Boundary::constant(0.0, 1.0, 0.1).unwrap();
        let coarse = StepPolicy { dt_max: 0.1, bridge: false, ou_substeps: 1 };
        let fine = StepPolicy { dt_max: 0.1, bridge: true, ou_substeps: 8 };
        let e1 = survival_probability(&b, &d, &mu0, 1.0, 20_000, coarse, &RngStream::new(8, 8)).unwrap();
        let e2 = survival_probability(&b, &d, &mu0, 1.0, 20_000, fine, &RngStream::new(8, 8)).unwrap();
        assert!(e2.value < e1.value);
    }
}
