//! Closed-form detection certainties.
//!
//! A process that cheats independently with probability `eps` on each step
//! stays undetected for `d` steps with probability `(1 - eps)^d`, so every
//! observer knows it is Byzantine with certainty `1 - (1 - eps)^d`. With a
//! time-varying schedule the power becomes a product over the steps.

use crate::error::{Error, Result};
use crate::matrix::{CertaintyValue, IndicatorMatrix, KnowledgeMatrix};
use crate::scalar::Scalar;
use crate::schedule::{CheatProbability, CheatSchedule};

fn check_steps(d: u64) -> Result<()> {
    if d == 0 {
        Err(Error::ZeroSteps)
    } else {
        Ok(())
    }
}

fn pow_steps<T: Scalar>(base: T, d: u64) -> T {
    match i32::try_from(d) {
        Ok(exp) => base.powi(exp),
        Err(_) => base.powf(T::from_step(d)),
    }
}

/// Probability that a process following `schedule` has not cheated in any of
/// the first `d` steps.
pub fn survival<T: Scalar>(schedule: &CheatSchedule<T>, d: u64) -> Result<T> {
    check_steps(d)?;
    Ok(match schedule {
        CheatSchedule::Constant { probability } => pow_steps(probability.complement(), d),
        CheatSchedule::Varying { .. } => (1..=d)
            .map(|l| schedule.probability_at(l).complement())
            .fold(T::one(), |acc, q| acc * q),
    })
}

/// Certainty `1 - (1 - eps)^d` after `d` steps of constant cheating probability.
pub fn certainty_constant<T: Scalar>(
    eps: CheatProbability<T>,
    d: u64,
) -> Result<CertaintyValue<T>> {
    check_steps(d)?;
    Ok(CertaintyValue(T::one() - pow_steps(eps.complement(), d)))
}

/// Certainty `1 - prod_{l=1..d} (1 - eps(l))` for an arbitrary schedule.
///
/// A constant schedule goes through [`certainty_constant`], so both agree
/// bit for bit.
pub fn certainty_varying<T: Scalar>(
    schedule: &CheatSchedule<T>,
    d: u64,
) -> Result<CertaintyValue<T>> {
    match schedule {
        CheatSchedule::Constant { probability } => certainty_constant(*probability, d),
        CheatSchedule::Varying { .. } => Ok(CertaintyValue(T::one() - survival(schedule, d)?)),
    }
}

/// Dense who-knows-whom matrix after `d` steps. Every row is identical:
/// entry `(i, j)` is the certainty for target `j` regardless of observer.
pub fn knowledge_matrix<T: Scalar>(
    schedules: &[CheatSchedule<T>],
    d: u64,
) -> Result<KnowledgeMatrix<T>> {
    if schedules.is_empty() {
        return Err(Error::NoProcesses);
    }
    let column = schedules
        .iter()
        .map(|s| certainty_varying(s, d).map(CertaintyValue::value))
        .collect::<Result<Vec<_>>>()?;
    KnowledgeMatrix::from_fn(schedules.len(), |_, target| column[target])
}

/// Same matrix assembled as `sum_j certainty_j * I_j`.
pub fn knowledge_matrix_by_decomposition<T: Scalar>(
    schedules: &[CheatSchedule<T>],
    d: u64,
) -> Result<KnowledgeMatrix<T>> {
    let n = schedules.len();
    let mut m = KnowledgeMatrix::zeros(n)?;
    for (j, s) in schedules.iter().enumerate() {
        let c = certainty_varying(s, d)?;
        m.add_scaled_indicator(&IndicatorMatrix::new(n, j + 1)?, c.value())?;
    }
    Ok(m)
}

/// Indicator matrix `I_i`: `n x n`, column `i` (1-based) all ones.
pub fn indicator(n: usize, i: usize) -> Result<IndicatorMatrix> {
    IndicatorMatrix::new(n, i)
}

/// `k(m, i) - k(m, j) = (1 - eps_j)^d - (1 - eps_i)^d`, evaluated directly.
pub fn detection_gap<T: Scalar>(
    eps_i: CheatProbability<T>,
    eps_j: CheatProbability<T>,
    d: u64,
) -> Result<T> {
    check_steps(d)?;
    Ok(pow_steps(eps_j.complement(), d) - pow_steps(eps_i.complement(), d))
}

/// The same gap through the factorisation
/// `(eps_i - eps_j) * sum_{t=0}^{d-1} (1 - eps_i)^t (1 - eps_j)^(d-1-t)`.
pub fn detection_gap_factored<T: Scalar>(
    eps_i: CheatProbability<T>,
    eps_j: CheatProbability<T>,
    d: u64,
) -> Result<T> {
    check_steps(d)?;
    let a = eps_i.complement();
    let b = eps_j.complement();
    // Horner: S_{k+1} = b * S_k + a^k, with S_1 = 1.
    let mut sum = T::one();
    let mut a_pow = T::one();
    for _ in 1..d {
        a_pow = a_pow * a;
        sum = b * sum + a_pow;
    }
    Ok((eps_i.value() - eps_j.value()) * sum)
}

/// Gap for time-varying schedules: `prod (1 - eps_j(l)) - prod (1 - eps_i(l))`.
pub fn detection_gap_varying<T: Scalar>(
    sched_i: &CheatSchedule<T>,
    sched_j: &CheatSchedule<T>,
    d: u64,
) -> Result<T> {
    Ok(survival(sched_j, d)? - survival(sched_i, d)?)
}

/// Smallest `d` with `certainty_constant(eps, d) >= 1 - delta`, or `None` for
/// an honest process, which is never detected.
pub fn steps_until_confident<T: Scalar>(eps: CheatProbability<T>, delta: T) -> Option<u64> {
    if eps.is_honest() || delta <= T::zero() {
        return None;
    }
    if eps.value() == T::one() || delta >= T::one() {
        return Some(1);
    }
    let estimate = (delta.ln() / eps.complement().ln()).ceil().to_u64()?.max(1);
    // Correct for rounding in the logarithms at the boundary.
    let mut d = estimate.saturating_sub(1).max(1);
    while pow_steps(eps.complement(), d) > delta {
        d += 1;
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ExtensionPolicy;

    fn p(v: f64) -> CheatProbability<f64> {
        CheatProbability::new(v).unwrap()
    }

    fn varying(v: &[f64]) -> CheatSchedule<f64> {
        CheatSchedule::varying_values(v, ExtensionPolicy::Cycle).unwrap()
    }

    /// Enumerates all 2^d cheat/no-cheat paths and sums the probability of
    /// those with at least one cheat.
    fn brute_force_detection(schedule: &CheatSchedule<f64>, d: u32) -> f64 {
        (0u32..1 << d)
            .filter(|path| *path != 0)
            .map(|path| {
                (0..d)
                    .map(|l| {
                        let e = schedule.probability_at(l as u64 + 1).value();
                        if path & (1 << l) != 0 {
                            e
                        } else {
                            1.0 - e
                        }
                    })
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn constant_examples() {
        assert_eq!(certainty_constant(p(0.37), 1).unwrap().value(), 0.37);
        assert_eq!(certainty_constant(p(0.0), 1000).unwrap().value(), 0.0);
        assert_eq!(certainty_constant(p(0.5), 3).unwrap().value(), 0.875);
        assert_eq!(certainty_constant(p(1.0), 1).unwrap().value(), 1.0);
    }

    #[test]
    fn zero_steps_is_a_domain_error() {
        assert_eq!(certainty_constant(p(0.5), 0), Err(Error::ZeroSteps));
        assert_eq!(
            certainty_varying(&varying(&[0.5]), 0),
            Err(Error::ZeroSteps)
        );
        assert_eq!(detection_gap(p(0.5), p(0.2), 0), Err(Error::ZeroSteps));
        assert_eq!(knowledge_matrix::<f64>(&[], 1), Err(Error::NoProcesses));
    }

    #[test]
    fn varying_examples() {
        assert!(
            (certainty_varying(&varying(&[0.5, 0.5, 0.5]), 3)
                .unwrap()
                .value()
                - 0.875)
                .abs()
                < 1e-15
        );
        assert_eq!(
            certainty_varying(&varying(&[0.0, 1.0]), 2).unwrap().value(),
            1.0
        );

        let s = varying(&[0.2, 0.4]);
        let oracle = brute_force_detection(&s, 2);
        assert!((oracle - 0.52).abs() < 1e-12);
        assert!((certainty_varying(&s, 2).unwrap().value() - oracle).abs() < 1e-12);
    }

    #[test]
    fn varying_matches_path_enumeration_on_longer_horizons() {
        let s = varying(&[0.05, 0.3, 0.0, 0.9, 0.15]);
        for d in 1..=12 {
            let got = certainty_varying(&s, d).unwrap().value();
            assert!(
                (got - brute_force_detection(&s, d as u32)).abs() < 1e-12,
                "d = {d}"
            );
        }
    }

    #[test]
    fn matrix_examples() {
        let honest = vec![CheatSchedule::<f64>::honest(); 2];
        let m = knowledge_matrix(&honest, 5).unwrap();
        assert!(m.rows().all(|r| r.iter().all(|&v| v == 0.0)));

        let s = vec![
            CheatSchedule::honest(),
            CheatSchedule::constant(p(1.0)),
            CheatSchedule::honest(),
        ];
        let m = knowledge_matrix(&s, 1).unwrap();
        for row in m.rows() {
            assert_eq!(row, &[0.0, 1.0, 0.0]);
        }

        let s = vec![CheatSchedule::constant(p(0.3)); 2];
        let m = knowledge_matrix(&s, 2).unwrap();
        assert!(m.rows().flatten().all(|&v| (v - 0.51).abs() < 1e-12));
    }

    #[test]
    fn gap_examples() {
        assert_eq!(detection_gap(p(0.5), p(0.5), 7).unwrap(), 0.0);
        assert_eq!(detection_gap(p(0.5), p(0.25), 2).unwrap(), 0.3125);
        assert_eq!(detection_gap_factored(p(0.5), p(0.25), 2).unwrap(), 0.3125);
        assert!(detection_gap(p(0.1), p(0.9), 3).unwrap() < 0.0);
        assert!(detection_gap_factored(p(0.1), p(0.9), 3).unwrap() < 0.0);
    }

    #[test]
    fn varying_gap_examples() {
        let a = varying(&[0.3, 0.6, 0.1]);
        assert_eq!(detection_gap_varying(&a, &a, 9).unwrap(), 0.0);

        let hi = varying(&[0.4, 0.4]);
        let lo = varying(&[0.2, 0.2]);
        let oracle = brute_force_detection(&hi, 2) - brute_force_detection(&lo, 2);
        assert!((oracle - 0.28).abs() < 1e-12);
        assert!((detection_gap_varying(&hi, &lo, 2).unwrap() - 0.28).abs() < 1e-12);

        assert_eq!(
            detection_gap_varying(&varying(&[1.0]), &varying(&[0.0]), 1).unwrap(),
            1.0
        );
    }

    #[test]
    fn confidence_horizon() {
        assert_eq!(steps_until_confident(p(0.1), 1e-6), Some(132));
        assert_eq!(steps_until_confident(p(0.0), 1e-6), None);
        assert_eq!(steps_until_confident(p(1.0), 1e-6), Some(1));
        for eps in [0.1, 0.5, 0.9] {
            let d = steps_until_confident(p(eps), 1e-6).unwrap();
            let expected = (1e-6f64.ln() / (1.0 - eps).ln()).ceil() as u64;
            assert_eq!(d, expected);
            assert!(certainty_constant(p(eps), d).unwrap().value() >= 1.0 - 1e-6);
            assert!(certainty_constant(p(eps), d - 1).unwrap().value() < 1.0 - 1e-6 || d == 1);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let e = CheatProbability::new(0.5_f32).unwrap();
        assert_eq!(certainty_constant(e, 3).unwrap().value(), 0.875_f32);
    }
}
