//! Dominance and pairing properties of the coupled N-BMP / γ-BMP runs.

use nbmp_core::boundary::{Boundary, StepPolicy};
use nbmp_core::coupling::{check_dominance, gamma_event_holds, run_coupled, CoupledSim, Side};
use nbmp_core::drivers::{DriverSpec, InitialLaw};
use nbmp_core::RngStream;
use proptest::prelude::*;

fn obs() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coupled_runs_never_violate_dominance(seed in any::<u64>(), n in 4usize..40, upper in any::<bool>()) {
        let d = DriverSpec::brownian(-std::f64::consts::SQRT_2, 1.0).unwrap();
        let mu0 = InitialLaw::QsdDriftedBm { mu: std::f64::consts::SQRT_2 };
        let b = Boundary::constant(0.0, 1.0, 0.01).unwrap();
        let sim = CoupledSim { driver: &d, mu0: &mu0, boundary: &b, policy: StepPolicy::default() };
        let side = if upper { Side::Upper } else { Side::Lower };
        let run = run_coupled(sim, n, 0.25, side, 1.0, &obs(), &RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(run.violations(), 0);
        prop_assert_eq!(run.snapshots.len(), obs().len());
        for s in &run.snapshots {
            prop_assert_eq!(s.nbmp.len(), n);
        }
        if let Some(t) = run.decouple_time {
            prop_assert!(run.certificates.iter().filter(|c| c.time >= t).all(|c| c.decoupled));
        }
    }

    #[test]
    fn dominance_is_reflexive_and_monotone(mut xs in prop::collection::vec(-5.0f64..5.0, 1..30), shift in 0.0f64..1.0) {
        prop_assert!(check_dominance(&xs, &xs));
        let ys: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        prop_assert!(check_dominance(&xs, &ys));
        xs.push(-100.0);
        prop_assert!(!check_dominance(&xs, &ys));
    }
}

#[test]
fn compound_poisson_coupling_keeps_dominance() {
    let d = DriverSpec::compound_poisson(2.0, InitialLaw::Uniform { a: -0.6, b: 0.2 }, 0.5).unwrap();
    let mu0 = InitialLaw::Uniform { a: 0.0, b: 2.0 };
    let b = Boundary::constant(0.0, 1.0, 0.05).unwrap();
    let sim = CoupledSim { driver: &d, mu0: &mu0, boundary: &b, policy: StepPolicy::default() };
    for side in [Side::Upper, Side::Lower] {
        for r in 0..10 {
            let run = run_coupled(sim, 30, 0.2, side, 1.0, &obs(), &RngStream::new(3, r)).unwrap();
            assert_eq!(run.violations(), 0, "{side:?} replica {r}");
        }
    }
}

#[test]
fn gamma_event_on_size_paths() {
    let path = [(0.0, 12), (0.3, 10), (0.6, 9)];
    assert!(gamma_event_holds(&path, 10, Side::Upper, 0.5));
    assert!(!gamma_event_holds(&path, 10, Side::Upper, 1.0));
    assert!(!gamma_event_holds(&path, 10, Side::Lower, 0.1));
    assert!(gamma_event_holds(&[(0.0, 8), (0.5, 10)], 10, Side::Lower, 1.0));
    assert_eq!(Side::Upper.barrier_size(200, 0.2), 240);
    assert_eq!(Side::Lower.barrier_size(200, 0.2), 160);
}

#[test]
fn single_precision_runs() {
    let d = DriverSpec::<f32>::brownian(-1.0, 1.0).unwrap();
    let mu0 = InitialLaw::QsdDriftedBm { mu: 1.0f32 };
    let b = Boundary::<f32>::constant(0.0, 1.0, 0.05).unwrap();
    let sim = CoupledSim { driver: &d, mu0: &mu0, boundary: &b, policy: StepPolicy::default() };
    let obs: Vec<f32> = (0..=10).map(|k| k as f32 / 10.0).collect();
    let run = run_coupled(sim, 20, 0.2, Side::Upper, 1.0f32, &obs, &RngStream::new(1, 0)).unwrap();
    assert_eq!(run.violations(), 0);
}
