//! Simulation against closed forms. Expected values are computed here by
//! direct arithmetic on the per-step survival probabilities, independent of
//! the analytic module.

use pbk_core::asynchronous::GroupSchedule;
use pbk_core::montecarlo::{estimate_certainty, SimMode, TrialConfig};
use pbk_core::protocol::{profiles_from_schedules, run_synchronous, ProcessId};
use pbk_core::{binomial_halfwidth, CheatSchedule, Seed};

fn single_cheater(n: usize, at: usize, eps: f64) -> Vec<CheatSchedule<f64>> {
    (0..n)
        .map(|i| {
            if i == at {
                CheatSchedule::constant_value(eps).unwrap()
            } else {
                CheatSchedule::honest()
            }
        })
        .collect()
}

fn within(emp: f64, expected: f64, trials: u64) -> bool {
    (emp - expected).abs() <= binomial_halfwidth(emp, trials, 3.0).max(0.005)
}

#[test]
fn two_process_matrix_matches_simulation() {
    // With only two processes a single wrong answer leaves no supermajority,
    // so the pair is observed among ten honest witnesses.
    let mut schedules = vec![CheatSchedule::honest(); 10];
    schedules.push(CheatSchedule::constant_value(0.3).unwrap());
    schedules.push(CheatSchedule::constant_value(0.3).unwrap());
    let profiles = profiles_from_schedules(schedules).unwrap();
    let trials = 100_000;
    let cfg = TrialConfig::new(SimMode::Synchronous, profiles, 2, trials, Seed::new(31)).unwrap();
    let est = estimate_certainty(&cfg).unwrap();
    let m = &est.matrices[0];
    let expected = 1.0 - 0.7f64 * 0.7;
    assert!((expected - 0.51).abs() < 1e-12);
    for obs in 0..12 {
        for tgt in 10..12 {
            assert!(
                within(m.frequency(obs, tgt), expected, trials),
                "{}",
                m.frequency(obs, tgt)
            );
        }
    }
    assert_eq!(est.no_supermajority_steps, 0);
}

#[test]
fn synchronous_detection_after_ten_days() {
    let trials = 100_000;
    let profiles = profiles_from_schedules(single_cheater(8, 7, 0.3)).unwrap();
    let cfg = TrialConfig::new(SimMode::Synchronous, profiles, 10, trials, Seed::new(5)).unwrap();
    let est = estimate_certainty(&cfg).unwrap();
    let expected = 1.0 - 0.7f64.powi(10);
    assert!((expected - 0.9718).abs() < 1e-4);
    let m = &est.matrices[0];
    assert!(
        (m.frequency(0, 7) - expected).abs() <= 0.005,
        "{}",
        m.frequency(0, 7)
    );
    assert!(m.is_column_homogeneous());
}

#[test]
fn asynchronous_detection_after_five_rounds() {
    let trials = 100_000;
    let profiles = profiles_from_schedules(single_cheater(6, 2, 0.3)).unwrap();
    let mode = SimMode::Asynchronous {
        group: GroupSchedule::round_robin(2),
    };
    let cfg = TrialConfig::new(mode, profiles, 5, trials, Seed::new(6)).unwrap();
    let est = estimate_certainty(&cfg).unwrap();
    let expected = 1.0 - 0.7f64.powi(5);
    assert!((expected - 0.8319).abs() < 1e-4);
    assert!((est.matrices[0].frequency(4, 2) - expected).abs() <= 0.005);
}

#[test]
fn asynchronous_rounds_match_synchronous_days() {
    let trials = 100_000;
    let checkpoints = vec![1, 2, 3, 5, 8];
    let sync = TrialConfig::new(
        SimMode::Synchronous,
        profiles_from_schedules(single_cheater(6, 0, 0.2)).unwrap(),
        8,
        trials,
        Seed::new(100),
    )
    .unwrap()
    .with_checkpoints(checkpoints.clone())
    .unwrap();
    let asynchronous = TrialConfig {
        mode: SimMode::Asynchronous {
            group: GroupSchedule::round_robin(2),
        },
        seed: Seed::new(200),
        ..sync.clone()
    };
    let a = estimate_certainty(&sync).unwrap();
    let b = estimate_certainty(&asynchronous).unwrap();
    for (ma, mb) in a.matrices.iter().zip(&b.matrices) {
        let (fa, fb) = (ma.frequency(1, 0), mb.frequency(1, 0));
        // difference of two independent estimates: sqrt(2) wider
        let hw = 2f64.sqrt() * binomial_halfwidth((fa + fb) / 2.0, trials, 3.0);
        assert!(
            (fa - fb).abs() <= hw.max(0.005),
            "d={} sync={fa} async={fb}",
            ma.step
        );
    }
}

#[test]
fn estimate_is_independent_of_execution_order() {
    let schedules = vec![
        CheatSchedule::honest(),
        CheatSchedule::constant_value(0.25).unwrap(),
        CheatSchedule::honest(),
        CheatSchedule::varying_values(&[0.1, 0.6], Default::default()).unwrap(),
        CheatSchedule::honest(),
    ];
    let profiles = profiles_from_schedules(schedules).unwrap();
    let trials = 400;
    let cfg = TrialConfig::new(
        SimMode::Synchronous,
        profiles.clone(),
        6,
        trials,
        Seed::new(9),
    )
    .unwrap()
    .with_checkpoints(vec![2, 6])
    .unwrap();
    let parallel = estimate_certainty(&cfg).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_certainty(&cfg).unwrap());
    assert_eq!(parallel, single);

    // Rebuild the counts by replaying trials one by one, newest first.
    let mut counts = vec![0u64; 25];
    for t in (0..trials).rev() {
        let trace = run_synchronous(&profiles, 6, cfg.seed.trial(t)).unwrap();
        for b in &trace.final_beliefs {
            for tgt in 1..=5 {
                if b.knew_by(ProcessId::new(tgt).unwrap(), 2) {
                    counts[b.observer.index() * 5 + tgt as usize - 1] += 1;
                }
            }
        }
    }
    let replay: Vec<u64> = parallel.matrices[0].rows().flatten().copied().collect();
    assert_eq!(replay, counts);
}

#[test]
fn empirical_columns_are_monotone_in_checkpoint() {
    let profiles = profiles_from_schedules(single_cheater(5, 1, 0.15)).unwrap();
    let cfg = TrialConfig::new(SimMode::Synchronous, profiles, 12, 2_000, Seed::new(4))
        .unwrap()
        .with_checkpoints(vec![1, 2, 4, 8, 12])
        .unwrap();
    let est = estimate_certainty(&cfg).unwrap();
    for w in est.matrices.windows(2) {
        for (a, b) in w[0].rows().flatten().zip(w[1].rows().flatten()) {
            assert!(a <= b);
        }
    }
}
