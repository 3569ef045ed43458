//! Per-process cheating probabilities and their evolution over steps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability that a process gives a wrong answer on a single step.
///
/// Honest processes have exactly zero; any positive value marks the process
/// as Byzantine. Both extremes 0 and 1 are admitted.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct CheatProbability<T>(T);

impl<T: Scalar> CheatProbability<T> {
    pub fn new(value: T) -> Result<Self> {
        // NaN fails both comparisons and is rejected here.
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(Error::ProbabilityOutOfRange {
                value: value.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    pub fn honest() -> Self {
        Self(T::zero())
    }

    pub fn certain() -> Self {
        Self(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn is_honest(self) -> bool {
        self.0 == T::zero()
    }

    /// Probability of answering correctly on one step, `1 - value`.
    pub fn complement(self) -> T {
        T::one() - self.0
    }
}

/// How a [`CheatSchedule::Varying`] sequence is extended past its end.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionPolicy {
    /// Repeat the sequence from the start.
    #[default]
    Cycle,
    /// Keep using the final entry forever.
    HoldLast,
}

/// Cheating probability of one process as a function of the step index.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheatSchedule<T> {
    Constant {
        probability: CheatProbability<T>,
    },
    Varying {
        probabilities: Vec<CheatProbability<T>>,
        extension: ExtensionPolicy,
    },
}

impl<T: Scalar> CheatSchedule<T> {
    pub fn constant(probability: CheatProbability<T>) -> Self {
        Self::Constant { probability }
    }

    pub fn honest() -> Self {
        Self::constant(CheatProbability::honest())
    }

    /// Builds a constant schedule from a raw value, validating its range.
    pub fn constant_value(value: T) -> Result<Self> {
        CheatProbability::new(value).map(Self::constant)
    }

    pub fn varying(
        probabilities: Vec<CheatProbability<T>>,
        extension: ExtensionPolicy,
    ) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::EmptySchedule);
        }
        Ok(Self::Varying {
            probabilities,
            extension,
        })
    }

    /// Builds a varying schedule from raw values, validating each entry.
    pub fn varying_values(values: &[T], extension: ExtensionPolicy) -> Result<Self> {
        let probabilities = values
            .iter()
            .map(|&v| CheatProbability::new(v))
            .collect::<Result<Vec<_>>>()?;
        Self::varying(probabilities, extension)
    }

    /// Probability of cheating on `step`, counted from 1.
    ///
    /// # Panics
    ///
    /// Panics if `step` is 0.
    pub fn probability_at(&self, step: u64) -> CheatProbability<T> {
        assert!(step >= 1, "steps are counted from 1");
        match self {
            Self::Constant { probability } => *probability,
            Self::Varying {
                probabilities,
                extension,
            } => {
                let len = probabilities.len() as u64;
                let idx = match extension {
                    ExtensionPolicy::Cycle => (step - 1) % len,
                    ExtensionPolicy::HoldLast => (step - 1).min(len - 1),
                };
                probabilities[idx as usize]
            }
        }
    }

    /// True when the process never cheats on any step.
    pub fn is_honest(&self) -> bool {
        match self {
            Self::Constant { probability } => probability.is_honest(),
            Self::Varying { probabilities, .. } => probabilities.iter().all(|p| p.is_honest()),
        }
    }

    /// Number of steps after which the schedule repeats or stays flat.
    pub(crate) fn period(&self) -> usize {
        match self {
            Self::Constant { .. } => 1,
            Self::Varying { probabilities, .. } => probabilities.len(),
        }
    }
}
