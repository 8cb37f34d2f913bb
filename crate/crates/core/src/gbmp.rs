//! The γ-BMP: independent particles that branch at rate 1 and are killed when
//! they cross the boundary.

use rayon::prelude::*;

use crate::boundary::{simulate_killed_path, Boundary, Killer, StepPolicy};
use crate::drivers::{DriverSpec, InitialLaw};
use crate::error::{invalid, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// A particle seen at an observation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle<T> {
    pub position: T,
    /// Index of the initial ancestor.
    pub family: usize,
    /// Lineage key of the particle's random stream.
    pub lineage: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationSnapshot<T> {
    pub time: T,
    /// Grouped by family, families in increasing order.
    pub particles: Vec<Particle<T>>,
}

impl<T: Scalar> PopulationSnapshot<T> {
    pub fn total(&self) -> usize {
        self.particles.len()
    }

    pub fn positions(&self) -> Vec<T> {
        self.particles.iter().map(|p| p.position).collect()
    }

    /// Living descendants of `family` strictly above `r`.
    pub fn chi(&self, family: usize, r: T) -> usize {
        self.particles.iter().filter(|p| p.family == family && p.position > r).count()
    }

    /// `G^n(r, t)`: particles strictly above `r`, divided by `n`.
    pub fn empirical_g(&self, n: usize, r: T) -> T {
        let above = self.particles.iter().filter(|p| p.position > r).count();
        T::from_count(above) / T::from_count(n)
    }

    /// Per-family counts strictly above `r`, for `n` families.
    pub fn chi_all(&self, n: usize, r: T) -> Vec<usize> {
        let mut out = vec![0; n];
        for p in &self.particles {
            if p.position > r {
                out[p.family] += 1;
            }
        }
        out
    }
}

/// Birth and (optional) death of one particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lifetime<T> {
    pub birth: T,
    pub death: Option<T>,
    pub family: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbmpRun<T> {
    pub n: usize,
    pub horizon: T,
    pub snapshots: Vec<PopulationSnapshot<T>>,
    /// Empty unless lifetimes were requested.
    pub lifetimes: Vec<Lifetime<T>>,
}

impl<T: Scalar> GbmpRun<T> {
    /// Right-continuous population size path `(t, size)`, starting at `(0, n)`.
    /// Deaths at an instant are applied before births at the same instant.
    pub fn size_trajectory(&self) -> Vec<(T, usize)> {
        let mut ev: Vec<(T, u8)> = Vec::with_capacity(self.lifetimes.len() * 2);
        for l in &self.lifetimes {
            if l.birth > T::zero() {
                ev.push((l.birth, 1));
            }
            if let Some(d) = l.death {
                ev.push((d, 0));
            }
        }
        ev.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times").then(a.1.cmp(&b.1)));
        let mut size = self.n;
        let mut out = Vec::with_capacity(ev.len() + 1);
        out.push((T::zero(), size));
        for (t, kind) in ev {
            if kind == 0 {
                size -= 1;
            } else {
                size += 1;
            }
            match out.last_mut() {
                Some(last) if last.0 == t => last.1 = size,
                _ => out.push((t, size)),
            }
        }
        out
    }
}

/// Population size at time `t` from a size trajectory.
pub fn size_at<T: Scalar>(traj: &[(T, usize)], t: T) -> usize {
    let i = traj.partition_point(|(s, _)| *s <= t);
    traj[i.max(1) - 1].1
}

/// γ-BMP simulator. A missing boundary gives the free branching process.
#[derive(Clone, Copy, Debug)]
pub struct GbmpSim<'a, T> {
    pub driver: &'a DriverSpec<T>,
    pub mu0: &'a InitialLaw<T>,
    pub boundary: Option<&'a Boundary<T>>,
    pub policy: StepPolicy<T>,
}

struct Live<T> {
    x: T,
    t: T,
    stream: RngStream,
    next_branch: T,
    children: u64,
    birth: T,
}

struct FamilyOut<T> {
    observed: Vec<(usize, T, u64)>,
    lifetimes: Vec<Lifetime<T>>,
}

impl<'a, T: Scalar> GbmpSim<'a, T> {
    pub fn new(driver: &'a DriverSpec<T>, mu0: &'a InitialLaw<T>, boundary: Option<&'a Boundary<T>>) -> Self {
        Self { driver, mu0, boundary, policy: StepPolicy::default() }
    }

    pub fn with_policy(mut self, policy: StepPolicy<T>) -> Self {
        self.policy = policy;
        self
    }

    fn validate(&self, horizon: T, obs: &[T]) -> Result<()> {
        self.driver.validate()?;
        self.mu0.validate()?;
        self.policy.validate()?;
        if !(horizon >= T::zero()) {
            return Err(invalid("horizon must be non-negative"));
        }
        if let Some(b) = self.boundary {
            if horizon > b.horizon() {
                return Err(invalid("horizon beyond the boundary grid"));
            }
        }
        if obs.windows(2).any(|w| !(w[0] < w[1]))
            || obs.iter().any(|t| !(*t >= T::zero() && *t <= horizon))
        {
            return Err(invalid("observation times must be increasing within [0, horizon]"));
        }
        Ok(())
    }

    /// Runs `n` families to `horizon`, recording the population at `obs`.
    ///
    /// Family `i` uses `stream.child(i)`; its initial particle draws the
    /// starting position from `child(i).child(0)` and every newborn takes
    /// `child(k)` of its parent's stream for its `k`-th child.
    pub fn run(
        &self,
        n: usize,
        horizon: T,
        obs: &[T],
        record_lifetimes: bool,
        stream: &RngStream,
    ) -> Result<GbmpRun<T>> {
        self.validate(horizon, obs)?;
        let fams: Vec<FamilyOut<T>> = (0..n)
            .into_par_iter()
            .map(|i| self.family(i, horizon, obs, record_lifetimes, stream))
            .collect();
        let mut snapshots: Vec<PopulationSnapshot<T>> =
            obs.iter().map(|&t| PopulationSnapshot { time: t, particles: Vec::new() }).collect();
        let mut lifetimes = Vec::new();
        for (i, f) in fams.into_iter().enumerate() {
            for (j, x, key) in f.observed {
                snapshots[j].particles.push(Particle { position: x, family: i, lineage: key });
            }
            lifetimes.extend(f.lifetimes);
        }
        Ok(GbmpRun { n, horizon, snapshots, lifetimes })
    }

    fn family(&self, fam: usize, horizon: T, obs: &[T], lives: bool, stream: &RngStream) -> FamilyOut<T> {
        let mut out = FamilyOut { observed: Vec::new(), lifetimes: Vec::new() };
        let mut root = stream.child(fam as u64).child(0);
        let x0 = self.mu0.sample(&mut root);
        let killer = self.boundary.map(|b| Killer { boundary: b, driver: self.driver, policy: self.policy });
        if killer.is_some_and(|k| !k.alive_at(T::zero(), x0)) {
            if lives {
                out.lifetimes.push(Lifetime { birth: T::zero(), death: Some(T::zero()), family: fam });
            }
            return out;
        }
        let first = root.exp1::<T>();
        let mut stack = vec![Live { x: x0, t: T::zero(), stream: root, next_branch: first, children: 0, birth: T::zero() }];
        while let Some(mut p) = stack.pop() {
            let mut oi = obs.partition_point(|s| *s < p.t);
            let death = loop {
                while oi < obs.len() && obs[oi] <= p.t {
                    out.observed.push((oi, p.x, p.stream.key()));
                    oi += 1;
                }
                if p.t >= horizon {
                    break None;
                }
                if p.t == p.next_branch {
                    let mut cs = p.stream.child(p.children);
                    p.children += 1;
                    let nb = p.t + cs.exp1::<T>();
                    stack.push(Live { x: p.x, t: p.t, stream: cs, next_branch: nb, children: 0, birth: p.t });
                    p.next_branch = p.t + p.stream.exp1::<T>();
                }
                let mut t1 = self.policy.next_grid(p.t).min(horizon).min(p.next_branch);
                if oi < obs.len() {
                    t1 = t1.min(obs[oi]);
                }
                let y = self.driver.advance(p.x, t1 - p.t, &mut p.stream);
                if let Some(k) = &killer {
                    if let Some(tau) = k.step(p.t, p.x, t1, y, &mut p.stream) {
                        break Some(tau);
                    }
                }
                p.t = t1;
                p.x = y;
            };
            if lives {
                out.lifetimes.push(Lifetime { birth: p.birth, death, family: fam });
            }
        }
        out
    }
}

/// One comparison of the many-to-one identity
/// `E[χ(r, t)] = e^t · Q_{μ₀}(τ_γ > t, X_t > r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManyToOne<T> {
    pub t: T,
    pub r: T,
    /// Mean descendants above `r` per family, with its standard error.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `e^t` times the single-path estimate, with its standard error.
    pub rhs: f64,
    pub rhs_se: f64,
    /// `(lhs − rhs)` in combined standard errors (0 when both are exact).
    pub z: f64,
}

/// Many-to-one check on a grid of `(t, r)` points, reusing one γ-BMP run of
/// `families` single-ancestor families and one batch of `paths` killed paths.
pub fn many_to_one_grid<T: Scalar>(
    sim: &GbmpSim<'_, T>,
    points: &[(T, T)],
    families: usize,
    paths: usize,
    stream: &RngStream,
) -> Result<Vec<ManyToOne<T>>> {
    if points.is_empty() || families < 2 || paths == 0 {
        return Err(invalid("many-to-one check needs points, >= 2 families and >= 1 path"));
    }
    let mut times: Vec<T> = points.iter().map(|p| p.0).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    let horizon = times[times.len() - 1];
    let run = sim.run(families, horizon, &times, false, &stream.child(0))?;

    let path_stream = stream.child(1);
    let observed: Vec<Vec<T>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut s = path_stream.child(i as u64);
            let x0 = sim.mu0.sample(&mut s);
            match sim.boundary {
                Some(b) => {
                    let k = Killer { boundary: b, driver: sim.driver, policy: sim.policy };
                    simulate_killed_path(&k, x0, horizon, &times, &mut s).observed
                }
                None => free_path(sim, x0, &times, &mut s),
            }
        })
        .collect();

    points
        .iter()
        .map(|&(t, r)| {
            let j = times.iter().position(|s| *s == t).expect("time in grid");
            let counts = run.snapshots[j].chi_all(families, r);
            let f = families as f64;
            let lhs = counts.iter().sum::<usize>() as f64 / f;
            let var = counts.iter().map(|&c| (c as f64 - lhs).powi(2)).sum::<f64>() / (f - 1.0);
            let lhs_se = (var / f).sqrt();
            let hits = observed.iter().filter(|o| o.get(j).is_some_and(|x| *x > r)).count();
            let p = hits as f64 / paths as f64;
            let et = t.as_f64().exp();
            let rhs = et * p;
            let rhs_se = et * (p * (1.0 - p) / paths as f64).sqrt();
            let se = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
            let z = if se > 0.0 { (lhs - rhs) / se } else if lhs == rhs { 0.0 } else { f64::INFINITY };
            Ok(ManyToOne { t, r, lhs, lhs_se, rhs, rhs_se, z })
        })
        .collect()
}

/// Single-point version of [`many_to_one_grid`].
pub fn many_to_one_check<T: Scalar>(
    sim: &GbmpSim<'_, T>,
    t: T,
    r: T,
    families: usize,
    paths: usize,
    stream: &RngStream,
) -> Result<ManyToOne<T>> {
    Ok(many_to_one_grid(sim, &[(t, r)], families, paths, stream)?[0])
}

fn free_path<T: Scalar>(sim: &GbmpSim<'_, T>, x0: T, times: &[T], s: &mut RngStream) -> Vec<T> {
    let (mut t, mut x) = (T::zero(), x0);
    times
        .iter()
        .map(|&tj| {
            x = sim.driver.advance(x, tj - t, s);
            t = tj;
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm() -> DriverSpec<f64> {
        DriverSpec::brownian(0.0, 1.0).unwrap()
    }

    #[test]
    fn free_population_grows_like_exp_t() {
        let d = bm();
        let mu0 = InitialLaw::PointMass { x: 0.0 };
        let sim = GbmpSim::new(&d, &mu0, None);
        let run = sim.run(4000, 1.0, &[0.0, 1.0], true, &RngStream::new(1, 1)).unwrap();
        assert_eq!(run.snapshots[0].total(), 4000);
        let mean = run.snapshots[1].total() as f64 / 4000.0;
        // family sizes are geometric with mean e, variance e² − e
        let se = ((1f64.exp().powi(2) - 1f64.exp()) / 4000.0).sqrt();
        assert!((mean - 1f64.exp()).abs() < 4.0 * se, "{mean}");
        let traj = run.size_trajectory();
        assert_eq!(traj[0], (0.0, 4000));
        assert_eq!(size_at(&traj, 1.0), run.snapshots[1].total());
        assert!(traj.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn deterministic_and_thread_count_free() {
        let d = bm();
        let mu0 = InitialLaw::Uniform { a: 0.0, b: 1.0 };
        let b = Boundary::constant(0.0, 1.0, 0.01).unwrap();
        let sim = GbmpSim::new(&d, &mu0, Some(&b));
        let a = sim.run(50, 1.0, &[0.5, 1.0], true, &RngStream::new(9, 0)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| sim.run(50, 1.0, &[0.5, 1.0], true, &RngStream::new(9, 0)).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn killed_particles_are_above_the_boundary() {
        let d = bm();
        let mu0 = InitialLaw::Uniform { a: 0.0, b: 1.0 };
        let b = Boundary::new(vec![0.5, 1.0], vec![0.2, 0.6], crate::boundary::Gamma0::Level(0.0)).unwrap();
        let sim = GbmpSim::new(&d, &mu0, Some(&b));
        let run = sim.run(500, 1.0, &[0.25, 0.75, 1.0], true, &RngStream::new(3, 3)).unwrap();
        for s in &run.snapshots {
            let g = b.eval(s.time).unwrap().unwrap();
            assert!(s.particles.iter().all(|p| p.position >= g));
        }
        for l in &run.lifetimes {
            if let Some(d) = l.death {
                assert!(d >= l.birth);
            }
        }
        let traj = run.size_trajectory();
        assert_eq!(size_at(&traj, 1.0), run.snapshots[2].total());
    }

    #[test]
    fn chi_counts() {
        let s = PopulationSnapshot {
            time: 0.0,
            particles: vec![
                Particle { position: 1.0, family: 0, lineage: 0 },
                Particle { position: 2.0, family: 0, lineage: 1 },
                Particle { position: 3.0, family: 1, lineage: 2 },
            ],
        };
        assert_eq!(s.chi(0, 1.0), 1);
        assert_eq!(s.chi_all(3, 0.0), vec![2, 1, 0]);
        assert_eq!(s.empirical_g(3, 1.5), 2.0 / 3.0);
    }

    #[test]
    fn many_to_one_free_case() {
        let d = bm();
        let mu0 = InitialLaw::PointMass { x: 0.0 };
        let sim = GbmpSim::new(&d, &mu0, None);
        let r = many_to_one_grid(&sim, &[(0.5, 0.0), (1.0, -0.5)], 4000, 20_000, &RngStream::new(5, 5)).unwrap();
        for m in r {
            assert!(m.z.abs() < 4.0, "{m:?}");
        }
    }
}
