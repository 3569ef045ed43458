//! Probabilistic Byzantine cheater detection.
//!
//! `n` processes answer binary questions; a Byzantine process answers wrongly
//! with some probability per step. Whenever more than two thirds agree, the
//! dissenters are exposed and gossiped to everyone. This crate provides:
//!
//! * [`analytic`]: closed-form certainty that a cheater is known after `d`
//!   steps, the who-knows-whom matrix, and detection-gap identities;
//! * [`protocol`]: the synchronous daily protocol;
//! * [`asynchronous`]: the group-scheduled variant where detection happens
//!   per completed round;
//! * [`montecarlo`]: trial orchestration comparing simulation with the closed
//!   forms.
//!
//! Analytic code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double precision case.

pub mod analytic;
pub mod asynchronous;
pub mod error;
pub mod matrix;
pub mod montecarlo;
pub mod protocol;
pub mod scalar;
pub mod schedule;
pub mod seed;
pub mod trace;

pub use analytic::{
    certainty_constant, certainty_varying, detection_gap, detection_gap_factored,
    detection_gap_varying, indicator, knowledge_matrix, knowledge_matrix_by_decomposition,
    steps_until_confident, survival,
};
pub use asynchronous::{run_asynchronous, GroupPolicy, GroupSchedule};
pub use error::{Error, Result};
pub use matrix::{CertaintyValue, IndicatorMatrix, KnowledgeMatrix};
pub use montecarlo::{
    binomial_halfwidth, compare_to_analytic, day_indexed_schedule_warning, estimate_certainty,
    ComparisonReport, EmpiricalMatrix, Estimate, SimMode, TrialConfig,
};
pub use protocol::{run_synchronous, AnswerMode, BeliefState, ProcessId, ProcessProfile};
pub use scalar::Scalar;
pub use schedule::{CheatProbability, CheatSchedule, ExtensionPolicy};
pub use seed::Seed;
pub use trace::SimulationTrace;

pub type CheatProbability64 = CheatProbability<f64>;
pub type CheatSchedule64 = CheatSchedule<f64>;
pub type CertaintyValue64 = CertaintyValue<f64>;
pub type KnowledgeMatrix64 = KnowledgeMatrix<f64>;
pub type ProcessProfile64 = ProcessProfile<f64>;
pub type TrialConfig64 = TrialConfig<f64>;
pub type SimulationTrace64 = SimulationTrace<f64>;

pub type CheatProbability32 = CheatProbability<f32>;
pub type CheatSchedule32 = CheatSchedule<f32>;
pub type KnowledgeMatrix32 = KnowledgeMatrix<f32>;
