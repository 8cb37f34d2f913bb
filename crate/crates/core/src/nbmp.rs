//! The N-BMP: `N` particles move independently; at rate `N` a uniformly chosen
//! particle branches and the lowest particle is removed at the same instant.

use crate::drivers::{DriverSpec, InitialLaw};
use crate::error::{invalid, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::stats::EmpiricalCdf;

/// Ordinal of the scheduler stream below the run stream.
const SCHEDULER: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct NbmpSnapshot<T> {
    pub time: T,
    pub positions: Vec<T>,
}

impl<T: Scalar> NbmpSnapshot<T> {
    pub fn min(&self) -> T {
        self.positions.iter().copied().fold(T::infinity(), T::min)
    }
}

/// One branching-selection event. The newborn occupies slot `removed`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchEvent<T> {
    pub time: T,
    pub branched: usize,
    pub removed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NbmpRun<T> {
    pub n: usize,
    pub snapshots: Vec<NbmpSnapshot<T>>,
    /// Empty unless events were requested.
    pub events: Vec<BranchEvent<T>>,
    pub event_count: usize,
}

/// Lowest position, ties to the lowest index.
#[inline]
fn argmin<T: Scalar>(xs: &[T]) -> usize {
    let mut j = 0;
    for (k, x) in xs.iter().enumerate().skip(1) {
        if *x < xs[j] {
            j = k;
        }
    }
    j
}

struct State<T> {
    x: Vec<T>,
    streams: Vec<RngStream>,
    sched: RngStream,
    t: T,
    next_event: T,
    count: usize,
}

impl<T: Scalar> State<T> {
    fn new(n: usize, mu0: &InitialLaw<T>, stream: &RngStream) -> Self {
        let mut streams: Vec<RngStream> = (0..n).map(|i| stream.child(i as u64)).collect();
        let x = streams.iter_mut().map(|s| mu0.sample(s)).collect();
        let mut sched = stream.child(SCHEDULER);
        let first = sched.exp1::<T>() / T::from_count(n);
        Self { x, streams, sched, t: T::zero(), next_event: first, count: 0 }
    }

    fn advance_to(&mut self, driver: &DriverSpec<T>, t: T) {
        let dt = t - self.t;
        for (x, s) in self.x.iter_mut().zip(&mut self.streams) {
            *x = driver.advance(*x, dt, s);
        }
        self.t = t;
    }

    fn branch(&mut self, i: usize, j: usize) {
        let newborn = self.streams[i].child(self.count as u64);
        self.x[j] = self.x[i];
        self.streams[j] = newborn;
        self.count += 1;
        let n = T::from_count(self.x.len());
        self.next_event = self.t + self.sched.exp1::<T>() / n;
    }
}

fn check_args<T: Scalar>(n: usize, driver: &DriverSpec<T>, mu0: &InitialLaw<T>, horizon: T, obs: &[T]) -> Result<()> {
    driver.validate()?;
    mu0.validate()?;
    if n == 0 {
        return Err(invalid("N-BMP needs N >= 1"));
    }
    if !(horizon >= T::zero()) {
        return Err(invalid("horizon must be non-negative"));
    }
    if obs.windows(2).any(|w| !(w[0] < w[1])) || obs.iter().any(|t| !(*t >= T::zero() && *t <= horizon)) {
        return Err(invalid("observation times must be increasing within [0, horizon]"));
    }
    Ok(())
}

/// Simulates the N-BMP to `horizon` and records all positions at `obs`.
///
/// Slot `i` starts with `stream.child(i)`; event times and branching indices
/// come from a separate scheduler stream; the newborn of the `k`-th event
/// takes `child(k)` of its parent's stream.
pub fn run_nbmp<T: Scalar>(
    n: usize,
    driver: &DriverSpec<T>,
    mu0: &InitialLaw<T>,
    horizon: T,
    obs: &[T],
    record_events: bool,
    stream: &RngStream,
) -> Result<NbmpRun<T>> {
    check_args(n, driver, mu0, horizon, obs)?;
    let mut st = State::new(n, mu0, stream);
    let mut snapshots = Vec::with_capacity(obs.len());
    let mut events = Vec::new();
    let mut oi = 0;
    loop {
        if oi < obs.len() && obs[oi] <= st.next_event {
            st.advance_to(driver, obs[oi]);
            snapshots.push(NbmpSnapshot { time: obs[oi], positions: st.x.clone() });
            oi += 1;
            continue;
        }
        if st.next_event > horizon {
            break;
        }
        let te = st.next_event;
        st.advance_to(driver, te);
        let i = st.sched.index(n);
        let j = argmin(&st.x);
        if record_events {
            events.push(BranchEvent { time: te, branched: i, removed: j });
        }
        st.branch(i, j);
    }
    Ok(NbmpRun { n, snapshots, events, event_count: st.count })
}

/// Re-simulates a run and checks every logged event: same time, same
/// branching index, and the removed slot held a minimum (lowest index among
/// ties). `obs` must be the observation grid of the original run, since
/// motion is split at observation times. Returns the index of the first
/// inconsistent event.
pub fn replay_check<T: Scalar>(
    n: usize,
    driver: &DriverSpec<T>,
    mu0: &InitialLaw<T>,
    obs: &[T],
    events: &[BranchEvent<T>],
    stream: &RngStream,
) -> std::result::Result<(), usize> {
    let mut st = State::new(n, mu0, stream);
    let mut oi = 0;
    for (k, ev) in events.iter().enumerate() {
        if ev.time != st.next_event || ev.branched >= n || ev.removed >= n {
            return Err(k);
        }
        while oi < obs.len() && obs[oi] <= ev.time {
            st.advance_to(driver, obs[oi]);
            oi += 1;
        }
        st.advance_to(driver, ev.time);
        if st.sched.index(n) != ev.branched {
            return Err(k);
        }
        let m = st.x[ev.removed];
        if st.x.iter().enumerate().any(|(q, x)| *x < m || (*x == m && q < ev.removed)) {
            return Err(k);
        }
        st.branch(ev.branched, ev.removed);
    }
    Ok(())
}

pub fn empirical_cdf<T: Scalar>(snapshot: &NbmpSnapshot<T>) -> Result<EmpiricalCdf<T>> {
    EmpiricalCdf::new(snapshot.positions.clone())
}

/// `(t, min_i X_i(t))` for each snapshot.
pub fn min_trajectory<T: Scalar>(snapshots: &[NbmpSnapshot<T>]) -> Vec<(T, T)> {
    snapshots.iter().map(|s| (s.time, s.min())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_two_sample;

    fn bm() -> DriverSpec<f64> {
        DriverSpec::brownian(0.0, 1.0).unwrap()
    }

    #[test]
    fn single_particle_moves_freely() {
        let d = bm();
        let mu0 = InitialLaw::PointMass { x: 0.0 };
        let xs: Vec<f64> = (0..4000)
            .map(|r| run_nbmp(1, &d, &mu0, 1.0, &[1.0], false, &RngStream::new(1, r)).unwrap().snapshots[0].positions[0])
            .collect();
        let mut s = RngStream::new(2, 0);
        let ys: Vec<f64> = (0..4000).map(|_| d.sample_transition(0.0, 1.0, &mut s).unwrap()).collect();
        assert!(ks_two_sample(&xs, &ys).unwrap().pass);
    }

    #[test]
    fn events_replay_and_remove_minima() {
        let d = bm();
        let mu0 = InitialLaw::Uniform { a: 0.0, b: 1.0 };
        let st = RngStream::new(7, 7);
        let run = run_nbmp(50, &d, &mu0, 2.0, &[1.0, 2.0], true, &st).unwrap();
        assert!(run.events.len() > 50);
        assert_eq!(run.events.len(), run.event_count);
        assert_eq!(replay_check(50, &d, &mu0, &[1.0, 2.0], &run.events, &st), Ok(()));
        let mut bad = run.events.clone();
        let k = bad.len() / 2;
        bad[k].removed = (bad[k].removed + 1) % 50;
        assert!(replay_check(50, &d, &mu0, &[1.0, 2.0], &bad, &st).is_err());
        assert!(run.events.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn selection_pushes_the_cloud_up() {
        let d = bm();
        let mu0 = InitialLaw::PointMass { x: 0.0 };
        let run = run_nbmp(200, &d, &mu0, 2.0, &[2.0], false, &RngStream::new(3, 3)).unwrap();
        let mean = run.snapshots[0].positions.iter().sum::<f64>() / 200.0;
        assert!(mean > 0.5, "{mean}");
        let mt = min_trajectory(&run.snapshots);
        assert_eq!(mt[0].1, run.snapshots[0].min());
    }

    #[test]
    fn argmin_ties_take_lowest_index() {
        assert_eq!(argmin(&[1.0, 0.0, 0.0, 2.0]), 1);
        assert_eq!(argmin(&[0.0]), 0);
    }

    #[test]
    fn observation_at_zero_is_initial_state() {
        let d = bm();
        let mu0 = InitialLaw::Uniform { a: 0.0, b: 1.0 };
        let st = RngStream::new(4, 4);
        let run = run_nbmp(10, &d, &mu0, 1.0, &[0.0], false, &st).unwrap();
        let direct: Vec<f64> = (0..10).map(|i| mu0.sample(&mut st.child(i))).collect();
        assert_eq!(run.snapshots[0].positions, direct);
        assert!(run_nbmp(0, &d, &mu0, 1.0, &[], false, &st).is_err());
    }
}
