use std::f64::consts::PI;

use billiard_core::experiment::trial_rng;
use billiard_core::fixtures::fh1;
use billiard_core::*;
use proptest::prelude::*;

fn random_joint(seed: u64, i: u64, lambda: f64, table: &BilliardTable) -> JointState {
    let mut rng = trial_rng(seed, i);
    let p1 = sample_state(table, &mut rng).unwrap();
    let p2 = sample_state(table, &mut rng).unwrap();
    JointState::new(p1, p2, lambda).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn minimum_distance_on_real_segments(seed in 0u64..1_000_000, lambda in 0.0..=1.0f64, k1 in 0usize..6, k2 in 0usize..6) {
        let table = fh1();
        let joint = random_joint(seed, 0, lambda, &table);
        let segs1 = flow_segments(&joint.p1, 3.0, &table).unwrap();
        let segs2 = flow_segments(&joint.p2, 3.0, &table).unwrap();
        let (s1, s2) = (&segs1[k1.min(segs1.len() - 1)], &segs2[k2.min(segs2.len() - 1)]);
        // particle 2's segment spans particle-1 times [start/λ, end/λ]
        let (a, b) = if lambda > 0.0 { (s2.start_time / lambda, s2.end_time() / lambda) } else { (0.0, f64::INFINITY) };
        let (lo, hi) = (s1.start_time.max(a), s1.end_time().min(b));
        prop_assume!(hi > lo);
        let (ts, ds) = relative_min_distance(s1, s2, lambda, (lo, hi)).unwrap();
        let at = |t: f64| torus_distance(&s1.position_at(t), &s2.position_at(lambda * t));
        prop_assert!((at(ts) - ds).abs() < 1e-12);
        for k in 0..=1000 {
            let t = lo + (hi - lo) * k as f64 / 1000.0;
            prop_assert!(ds <= at(t) + 1e-12);
        }
    }
}

#[test]
fn sweep_agrees_with_dense_sampling() {
    let table = fh1();
    for (i, lambda) in [0.0, 0.37, 1.0].into_iter().enumerate() {
        let mut visits = 0;
        for k in 0..100 {
            let joint = random_joint(20 + i as u64, k, lambda, &table);
            let a = dense_audit(&joint, 0.01, 0.05, 20.0, 1e-4, &table).unwrap();
            assert!(a.agrees(), "λ={lambda}, trial {k}: {a:?}");
            visits += a.sweep_visits;
        }
        assert!(visits > 0, "λ={lambda}: audit saw no visits");
    }
}

#[test]
fn events_satisfy_their_invariants() {
    let table = fh1();
    let (epsilon, xi) = (0.01, 0.05);
    for k in 0..200 {
        let joint = random_joint(21, k, 0.61, &table);
        let log = all_encounters(&joint, epsilon, xi, 50.0, &table).unwrap();
        let first = first_encounter(&joint, epsilon, xi, 50.0, &table).unwrap();
        let good: Vec<&EncounterEvent> = log.events.iter().filter(|e| e.good).collect();
        assert_eq!(first.event.as_ref(), good.first().copied(), "trial {k}");
        assert_eq!(first.first_any, log.events.first().map(|e| e.time));
        assert_eq!(first.skipped, log.events.iter().take_while(|e| !e.good).count());
        for e in &log.events {
            assert!((torus_distance(&e.pos1, &e.pos2) - e.distance).abs() < 1e-12);
            assert!(e.distance <= epsilon + 1e-12);
            assert!((0.0..=PI / 2.0).contains(&e.rel_angle_mod_pi));
            assert_eq!(e.good, e.boundary_clearance > xi && e.rel_angle_mod_pi > xi);
            assert!(e.exit_time >= e.time);
        }
        for w in log.events.windows(2) {
            assert!(w[1].time > w[0].exit_time);
        }
    }
}

#[test]
fn restarting_mid_orbit_reproduces_later_events() {
    let table = fh1();
    // short span: rounding differences grow exponentially along the orbit
    let (epsilon, xi, lambda, t0, horizon) = (0.04, 0.1, 0.37, 1.0, 4.0);
    let mut compared = 0;
    for k in 0..500 {
        let joint = random_joint(22, k, lambda, &table);
        let full = all_encounters(&joint, epsilon, xi, horizon, &table).unwrap();
        let later = JointState::new(
            flow(&joint.p1, t0, &table).unwrap(),
            flow(&joint.p2, lambda * t0, &table).unwrap(),
            lambda,
        )
        .unwrap();
        let tail = all_encounters(&later, epsilon, xi, horizon - t0, &table).unwrap();
        // visits straddling the restart are cut; compare the ones entered well after it
        let expect: Vec<f64> = full.events.iter().filter(|e| e.time > t0 + 1e-6).map(|e| e.time - t0).collect();
        let got: Vec<f64> = tail.events.iter().filter(|e| e.time > 1e-6).map(|e| e.time).collect();
        assert_eq!(expect.len(), got.len(), "trial {k}");
        for (a, b) in expect.iter().zip(&got) {
            // entry times of shallow visits amplify position rounding
            assert!((a - b).abs() < 1e-7, "trial {k}: {a} vs {b}");
        }
        compared += got.len();
    }
    assert!(compared > 0);
}

#[test]
fn doubling_speeds_halves_encounter_times() {
    let table = fh1();
    for k in 0..50 {
        let joint = random_joint(23, k, 0.37, &table);
        let slow = all_encounters(&joint, 0.01, 0.05, 40.0, &table).unwrap();
        let fast = billiard_core::encounter::all_encounters_at_speed(&joint, 2.0, 0.01, 0.05, 20.0, &table).unwrap();
        assert_eq!(slow.events.len(), fast.events.len());
        for (a, b) in slow.events.iter().zip(&fast.events) {
            assert_eq!(a.time / 2.0, b.time);
            assert_eq!(a.good, b.good);
        }
    }
}

#[test]
fn equal_speeds_are_symmetric() {
    let table = fh1();
    for k in 0..100 {
        let joint = random_joint(24, k, 1.0, &table);
        let swapped = JointState::new(joint.p2, joint.p1, 1.0).unwrap();
        let a = all_encounters(&joint, 0.01, 0.05, 30.0, &table).unwrap();
        let b = all_encounters(&swapped, 0.01, 0.05, 30.0, &table).unwrap();
        assert_eq!(a.events.len(), b.events.len(), "trial {k}");
        for (x, y) in a.events.iter().zip(&b.events) {
            assert!((x.time - y.time).abs() < 1e-10);
            assert!((x.exit_time - y.exit_time).abs() < 1e-10);
        }
    }
}
