//! Couplings between the N-BMP `X` and the stochastic barriers `X⁺` / `X⁻`:
//! γ-BMPs started from `⌈N(1+δ)⌉` / `⌊N(1−δ)⌋` particles.
//!
//! While coupled, every `X` particle (upper side) or every `X⁻` particle
//! (lower side) has a partner in the other system lying above it (upper) or
//! below it (lower). Paired particles move with the monotone pair step and
//! share one branching clock; newborns of a synchronized branching are paired.
//! Barrier killing is checked at step endpoints, so a killed barrier particle
//! always ends below the boundary and a new partner exists while the barrier
//! keeps the right size. When the barrier size leaves the favorable range the
//! pairing is dropped and both systems continue independently.

use serde::{Deserialize, Serialize};

use crate::boundary::{Boundary, StepPolicy};
use crate::drivers::{DriverSpec, InitialLaw};
use crate::error::{invalid, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }

    /// Initial barrier size: `⌈N(1+δ)⌉` or `⌊N(1−δ)⌋`.
    pub fn barrier_size(self, n: usize, delta: f64) -> usize {
        let nf = n as f64;
        match self {
            Side::Upper => (nf * (1.0 + delta)).ceil() as usize,
            Side::Lower => (nf * (1.0 - delta)).floor() as usize,
        }
    }
}

/// `x ≺ y`: for every `r`, `#{x ≥ r} ≤ #{y ≥ r}`.
pub fn check_dominance<T: Scalar>(x: &[T], y: &[T]) -> bool {
    if x.len() > y.len() {
        return false;
    }
    let desc = |v: &[T]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| b.partial_cmp(a).expect("no NaN"));
        v
    };
    let (xs, ys) = (desc(x), desc(y));
    xs.iter().zip(&ys).all(|(a, b)| a <= b)
}

/// Γ indicator on `[0, up_to]` from a size path `(t, size)` listing every change.
pub fn gamma_event_holds<T: Scalar>(sizes: &[(T, usize)], n: usize, side: Side, up_to: T) -> bool {
    sizes.iter().take_while(|(t, _)| *t <= up_to).all(|&(_, s)| match side {
        Side::Upper => s >= n,
        Side::Lower => s <= n,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledSnapshot<T> {
    pub time: T,
    pub nbmp: Vec<T>,
    /// Living barrier particles.
    pub barrier: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate<T> {
    pub time: T,
    pub side: Side,
    /// `X ≺ X⁺` (upper) or `X⁻ ≺ X` (lower) at this time.
    pub dominance_ok: bool,
    /// Γ held on `[0, time]`.
    pub gamma_ok: bool,
    pub decoupled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledRun<T> {
    pub side: Side,
    pub n: usize,
    pub barrier_initial: usize,
    pub snapshots: Vec<CoupledSnapshot<T>>,
    /// Barrier size `(t, size)` at time 0 and after every change.
    pub barrier_sizes: Vec<(T, usize)>,
    pub certificates: Vec<Certificate<T>>,
    pub decouple_time: Option<T>,
}

impl<T: Scalar> CoupledRun<T> {
    /// Dominance failures at observation times before decoupling.
    pub fn violations(&self) -> usize {
        self.certificates.iter().filter(|c| !c.decoupled && !c.dominance_ok).count()
    }

    pub fn gamma_holds(&self, up_to: T) -> bool {
        gamma_event_holds(&self.barrier_sizes, self.n, self.side, up_to)
    }
}

/// Dynamics shared by both sides of the coupling.
#[derive(Clone, Copy, Debug)]
pub struct CoupledSim<'a, T> {
    pub driver: &'a DriverSpec<T>,
    pub mu0: &'a InitialLaw<T>,
    pub boundary: &'a Boundary<T>,
    /// Only `dt_max` is used: barrier killing is checked at step endpoints.
    pub policy: StepPolicy<T>,
}

struct Bar<T> {
    x: T,
    stream: RngStream,
    alive: bool,
    partner: Option<usize>,
}

struct Coupled<'a, T> {
    sim: CoupledSim<'a, T>,
    side: Side,
    n: usize,
    x: Vec<T>,
    xs: Vec<RngStream>,
    x_partner: Vec<Option<usize>>,
    bar: Vec<Bar<T>>,
    alive: usize,
    sched: RngStream,
    t: T,
    events: u64,
    decoupled: bool,
    decouple_time: Option<T>,
    sizes: Vec<(T, usize)>,
}

impl<'a, T: Scalar> Coupled<'a, T> {
    fn new(sim: CoupledSim<'a, T>, side: Side, n: usize, nb: usize, stream: &RngStream) -> Self {
        let xroot = stream.child(0);
        let broot = stream.child(1);
        let mut xs: Vec<RngStream> = (0..n).map(|i| xroot.child(i as u64)).collect();
        let mut bs: Vec<RngStream> = (0..nb).map(|k| broot.child(k as u64)).collect();
        let (x, b): (Vec<T>, Vec<T>) = match side {
            Side::Upper => {
                let b: Vec<T> = bs.iter_mut().map(|s| sim.mu0.sample(s)).collect();
                (b[..n].to_vec(), b)
            }
            Side::Lower => {
                let x: Vec<T> = xs.iter_mut().map(|s| sim.mu0.sample(s)).collect();
                let b = x[..nb].to_vec();
                (x, b)
            }
        };
        let paired = n.min(nb);
        let x_partner = (0..n).map(|i| (i < paired).then_some(i)).collect();
        let bar = b
            .into_iter()
            .zip(bs)
            .enumerate()
            .map(|(k, (x, stream))| Bar { x, stream, alive: true, partner: (k < paired).then_some(k) })
            .collect();
        Self {
            sim,
            side,
            n,
            x,
            xs,
            x_partner,
            bar,
            alive: nb,
            sched: stream.child(2),
            t: T::zero(),
            events: 0,
            decoupled: false,
            decouple_time: None,
            sizes: vec![(T::zero(), nb)],
        }
    }

    fn gamma_violated(&self) -> bool {
        match self.side {
            Side::Upper => self.alive < self.n,
            Side::Lower => self.alive > self.n,
        }
    }

    fn decouple_if_needed(&mut self) {
        if self.decoupled || !self.gamma_violated() {
            return;
        }
        self.decoupled = true;
        self.decouple_time = Some(self.t);
        self.x_partner.iter_mut().for_each(|p| *p = None);
        self.bar.iter_mut().for_each(|b| b.partner = None);
    }

    fn record_size(&mut self) {
        match self.sizes.last_mut() {
            Some(last) if last.0 == self.t => last.1 = self.alive,
            _ => self.sizes.push((self.t, self.alive)),
        }
    }

    fn unpaired_barrier(&self) -> usize {
        self.bar.iter().filter(|b| b.alive && b.partner.is_none()).count()
    }

    fn rate(&self) -> T {
        T::from_count(self.n + self.unpaired_barrier())
    }

    /// Moves every particle from `self.t` to `t1`.
    fn advance(&mut self, t1: T) {
        let dt = t1 - self.t;
        let d = self.sim.driver;
        let mut moved = vec![false; self.n];
        for b in self.bar.iter_mut().filter(|b| b.alive) {
            match b.partner {
                Some(i) => {
                    let (xi, bx) = match self.side {
                        Side::Upper => d.advance_pair(self.x[i], b.x, dt, &mut b.stream),
                        Side::Lower => {
                            let (lo, hi) = d.advance_pair(b.x, self.x[i], dt, &mut b.stream);
                            (hi, lo)
                        }
                    };
                    self.x[i] = xi;
                    b.x = bx;
                    moved[i] = true;
                }
                None => b.x = d.advance(b.x, dt, &mut b.stream),
            }
        }
        for ((x, st), _) in self.x.iter_mut().zip(&mut self.xs).zip(&moved).filter(|(_, m)| !**m) {
            *x = d.advance(*x, dt, st);
        }
        self.t = t1;
    }

    /// Endpoint killing of barrier particles, with re-pairing on the upper side.
    fn kill(&mut self) -> bool {
        let Some(level) = self.sim.boundary.level(self.t) else {
            return false;
        };
        let mut orphans = Vec::new();
        let mut any = false;
        for b in self.bar.iter_mut().filter(|b| b.alive && b.x < level) {
            b.alive = false;
            any = true;
            if let Some(i) = b.partner.take() {
                self.x_partner[i] = None;
                if self.side == Side::Upper {
                    orphans.push(i);
                }
            }
        }
        if !any {
            return false;
        }
        self.alive = self.bar.iter().filter(|b| b.alive).count();
        self.record_size();
        self.decouple_if_needed();
        if !self.decoupled {
            orphans.sort_unstable();
            for i in orphans {
                let xi = self.x[i];
                let k = self
                    .bar
                    .iter()
                    .position(|b| b.alive && b.partner.is_none() && b.x >= xi)
                    .expect("a valid partner exists while the barrier holds N particles");
                self.bar[k].partner = Some(i);
                self.x_partner[i] = Some(k);
            }
        }
        true
    }

    fn spawn_barrier(&mut self, k: usize) -> usize {
        let s = self.bar[k].stream.child(self.events);
        self.bar.push(Bar { x: self.bar[k].x, stream: s, alive: true, partner: None });
        self.alive += 1;
        self.bar.len() - 1
    }

    /// One branching event; `h` indexes the clock holders.
    fn branch(&mut self, h: usize) {
        if h < self.n {
            self.branch_x(h);
        } else {
            let k = self
                .bar
                .iter()
                .enumerate()
                .filter(|(_, b)| b.alive && b.partner.is_none())
                .nth(h - self.n)
                .map(|(k, _)| k)
                .expect("holder index in range");
            self.spawn_barrier(k);
        }
        self.events += 1;
        self.record_size();
        self.decouple_if_needed();
    }

    fn branch_x(&mut self, i: usize) {
        let j = argmin(&self.x);
        let newborn = self.xs[i].child(self.events);
        let partner = self.x_partner[i];
        let q_new = partner.map(|q| self.spawn_barrier(q));
        let old = self.x_partner[j].take();
        if let Some(q) = old {
            self.bar[q].partner = None;
        }
        self.x[j] = self.x[i];
        self.xs[j] = newborn;
        if let Some(qn) = q_new {
            self.x_partner[j] = Some(qn);
            self.bar[qn].partner = Some(j);
        }
        // lower side: the barrier partner of the removed particle needs a new one
        if self.side == Side::Lower {
            if let Some(q) = old {
                if self.alive <= self.n {
                    let bq = self.bar[q].x;
                    let i2 = (0..self.n)
                        .find(|&p| self.x_partner[p].is_none() && self.x[p] >= bq)
                        .expect("an unpaired particle lies above while the barrier holds at most N");
                    self.x_partner[i2] = Some(q);
                    self.bar[q].partner = Some(i2);
                }
            }
        }
    }

    #[cfg(debug_assertions)]
    fn assert_pairing(&self) {
        if self.decoupled {
            return;
        }
        let mut seen = vec![false; self.bar.len()];
        for (i, p) in self.x_partner.iter().enumerate() {
            if let Some(k) = *p {
                let b = &self.bar[k];
                assert!(b.alive && b.partner == Some(i) && !seen[k], "pairing not injective");
                seen[k] = true;
                let ok = match self.side {
                    Side::Upper => self.x[i] <= b.x,
                    Side::Lower => b.x <= self.x[i],
                };
                assert!(ok, "pair order broken");
            } else {
                assert!(self.side == Side::Lower, "upper side leaves an X particle unpaired");
            }
        }
        if self.side == Side::Lower {
            assert!(self.bar.iter().all(|b| !b.alive || b.partner.is_some()), "unpaired lower barrier particle");
        }
    }

    #[cfg(not(debug_assertions))]
    fn assert_pairing(&self) {}

    fn snapshot(&self) -> CoupledSnapshot<T> {
        CoupledSnapshot {
            time: self.t,
            nbmp: self.x.clone(),
            barrier: self.bar.iter().filter(|b| b.alive).map(|b| b.x).collect(),
        }
    }
}

fn argmin<T: Scalar>(xs: &[T]) -> usize {
    let mut j = 0;
    for (k, x) in xs.iter().enumerate().skip(1) {
        if *x < xs[j] {
            j = k;
        }
    }
    j
}

/// Runs one coupled pair `(X, X⁺)` or `(X⁻, X)` up to `horizon`, certifying
/// dominance at each observation time.
///
/// Stream layout: `X` slots under `child(0)`, barrier particles under
/// `child(1)`, event clock under `child(2)`.
#[allow(clippy::too_many_arguments)]
pub fn run_coupled<T: Scalar>(
    sim: CoupledSim<'_, T>,
    n: usize,
    delta: f64,
    side: Side,
    horizon: T,
    obs: &[T],
    stream: &RngStream,
) -> Result<CoupledRun<T>> {
    sim.driver.validate()?;
    sim.mu0.validate()?;
    sim.policy.validate()?;
    if n < 2 {
        return Err(invalid("coupling needs N >= 2"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(invalid("delta must lie in (0, 1/2)"));
    }
    if !(horizon >= T::zero() && horizon <= sim.boundary.horizon()) {
        return Err(invalid("horizon must lie within the boundary grid"));
    }
    if obs.windows(2).any(|w| !(w[0] < w[1])) || obs.iter().any(|t| !(*t >= T::zero() && *t <= horizon)) {
        return Err(invalid("observation times must be increasing within [0, horizon]"));
    }
    let nb = side.barrier_size(n, delta);
    let mut c = Coupled::new(sim, side, n, nb, stream);
    c.kill();
    c.decouple_if_needed();

    let mut certificates = Vec::with_capacity(obs.len());
    let mut snapshots = Vec::with_capacity(obs.len());
    let mut rate = c.rate();
    let mut next_event = c.sched.exp1::<T>() / rate;
    let mut oi = 0;
    loop {
        c.assert_pairing();
        while oi < obs.len() && obs[oi] <= c.t {
            let s = c.snapshot();
            let dominance_ok = match side {
                Side::Upper => check_dominance(&s.nbmp, &s.barrier),
                Side::Lower => check_dominance(&s.barrier, &s.nbmp),
            };
            certificates.push(Certificate {
                time: c.t,
                side,
                dominance_ok,
                gamma_ok: gamma_event_holds(&c.sizes, n, side, c.t),
                decoupled: c.decoupled,
            });
            snapshots.push(s);
            oi += 1;
        }
        if c.t >= horizon {
            break;
        }
        let mut t1 = sim.policy.next_grid(c.t).min(horizon).min(next_event);
        if oi < obs.len() {
            t1 = t1.min(obs[oi]);
        }
        c.advance(t1);
        let killed = c.kill();
        if t1 == next_event {
            if killed {
                rate = c.rate();
            }
            let h = c.sched.index(rate.to_usize().expect("integer rate"));
            c.branch(h);
            rate = c.rate();
            next_event = c.t + c.sched.exp1::<T>() / rate;
        } else if killed {
            // holders changed: restart the memoryless clock
            rate = c.rate();
            next_event = c.t + c.sched.exp1::<T>() / rate;
        }
    }
    Ok(CoupledRun {
        side,
        n,
        barrier_initial: nb,
        snapshots,
        barrier_sizes: c.sizes,
        certificates,
        decouple_time: c.decouple_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_examples() {
        assert!(check_dominance(&[1.0, 2.0], &[0.0, 1.0, 2.0]));
        assert!(!check_dominance(&[3.0], &[2.0]));
        assert!(check_dominance::<f64>(&[], &[5.0]));
        assert!(check_dominance::<f64>(&[], &[]));
        assert!(!check_dominance(&[0.0, 0.0], &[5.0]));
    }

    #[test]
    fn gamma_examples() {
        let flat = [(0.0, 10), (0.5, 10)];
        assert!(gamma_event_holds(&flat, 10, Side::Upper, 1.0));
        assert!(gamma_event_holds(&flat, 10, Side::Lower, 1.0));
        let dip = [(0.0, 11), (0.3, 9), (0.4, 11)];
        assert!(!gamma_event_holds(&dip, 10, Side::Upper, 1.0));
        assert!(gamma_event_holds(&dip, 10, Side::Upper, 0.2));
        assert!(gamma_event_holds(&[(0.0, 8)], 10, Side::Lower, 1.0));
    }

    #[test]
    fn barrier_sizes() {
        assert_eq!(Side::Upper.barrier_size(200, 0.2), 240);
        assert_eq!(Side::Lower.barrier_size(200, 0.2), 160);
        assert_eq!(Side::Upper.barrier_size(10, 0.25), 13);
    }

    fn qsd() -> (DriverSpec<f64>, InitialLaw<f64>, Boundary<f64>) {
        let mu = std::f64::consts::SQRT_2;
        (
            DriverSpec::brownian(-mu, 1.0).unwrap(),
            InitialLaw::QsdDriftedBm { mu },
            Boundary::constant(0.0, 1.0, 0.01).unwrap(),
        )
    }

    #[test]
    fn initial_pairs_are_colocated() {
        let (d, mu0, b) = qsd();
        let sim = CoupledSim { driver: &d, mu0: &mu0, boundary: &b, policy: StepPolicy::default() };
        for side in [Side::Upper, Side::Lower] {
            let r = run_coupled(sim, 50, 0.2, side, 0.0, &[0.0], &RngStream::new(1, 1)).unwrap();
            let s = &r.snapshots[0];
            match side {
                Side::Upper => assert_eq!(&s.barrier[..50], &s.nbmp[..]),
                Side::Lower => assert_eq!(&s.nbmp[..40], &s.barrier[..]),
            }
            assert!(r.certificates[0].dominance_ok);
        }
    }

    #[test]
    fn no_violations_before_decoupling() {
        let (d, mu0, b) = qsd();
        let sim = CoupledSim { driver: &d, mu0: &mu0, boundary: &b, policy: StepPolicy::default() };
        let obs: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        for side in [Side::Upper, Side::Lower] {
            for rep in 0..5 {
                let r = run_coupled(sim, 60, 0.2, side, 1.0, &obs, &RngStream::new(2, rep)).unwrap();
                assert_eq!(r.violations(), 0);
                assert_eq!(r.certificates.len(), obs.len());
                if let Some(td) = r.decouple_time {
                    assert!(!r.gamma_holds(td));
                } else {
                    assert!(r.gamma_holds(1.0));
                }
            }
        }
    }

    #[test]
    fn tiny_upper_margin_decouples() {
        // one spare particle: the first kills break the favorable event
        let (d, mu0, b) = qsd();
        let sim = CoupledSim { driver: &d, mu0: &mu0, boundary: &b, policy: StepPolicy::default() };
        let r = run_coupled(sim, 100, 0.005, Side::Upper, 1.0, &[1.0], &RngStream::new(3, 3)).unwrap();
        let td = r.decouple_time.expect("decoupled");
        assert!(td > 0.0);
        assert!(r.certificates[0].decoupled && !r.certificates[0].gamma_ok);
        let before = r.barrier_sizes.iter().take_while(|(t, _)| *t < td).all(|&(_, s)| s >= 100);
        assert!(before);
    }
}
