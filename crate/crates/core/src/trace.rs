//! Serializable record of a single simulation run.

use serde::Serialize;

use crate::asynchronous::GroupPolicy;
use crate::protocol::{
    AnswerMode, AnswerVector, BeliefState, CommonAnswer, Detection, ProcessId, ProcessProfile,
};
use crate::scalar::Scalar;
use crate::schedule::CheatSchedule;
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TraceMode {
    Synchronous,
    Asynchronous {
        group_size: usize,
        policy: GroupPolicy,
    },
}

/// One detection opportunity: a day in the synchronous protocol, a completed
/// round in the asynchronous one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    /// Day or round index, counted from 1.
    pub step: u64,
    /// Day on which the answer vector was completed.
    pub day: u64,
    pub answers: AnswerVector,
    /// Processes that answered incorrectly.
    pub wrong: Vec<ProcessId>,
    pub outcome: CommonAnswer,
    pub no_supermajority: bool,
    pub detection: Detection,
    /// Targets that entered the shared belief state on this step.
    pub newly_known: Vec<ProcessId>,
    /// Observer/target pairs added by gossip on this step.
    pub deliveries: usize,
}

/// Per-day bookkeeping of the asynchronous protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DayRecord {
    pub day: u64,
    pub group: Vec<ProcessId>,
    pub answers_written: usize,
    pub completed_rounds: Vec<u64>,
    /// Questions still waiting for answers at the end of the day.
    pub open_questions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace<T> {
    #[serde(flatten)]
    pub mode: TraceMode,
    pub n: usize,
    /// Days simulated.
    pub horizon: u64,
    pub seed: Seed,
    pub answer_mode: AnswerMode,
    pub schedules: Vec<CheatSchedule<T>>,
    /// Processes observe their own deviations, so the diagonal of any
    /// matrix built from these beliefs is self-knowledge.
    pub diagonal_is_self_knowledge: bool,
    pub warnings: Vec<String>,
    pub no_supermajority_steps: u64,
    pub detections: u64,
    /// Deepest backlog of open questions at the end of any day.
    pub max_backlog: Option<usize>,
    pub steps: Vec<StepRecord>,
    pub days: Vec<DayRecord>,
    pub final_beliefs: Vec<BeliefState>,
}

impl<T: Scalar> SimulationTrace<T> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        mode: TraceMode,
        profiles: &[ProcessProfile<T>],
        horizon: u64,
        seed: Seed,
        answer_mode: AnswerMode,
        steps: Vec<StepRecord>,
        days: Vec<DayRecord>,
        final_beliefs: Vec<BeliefState>,
    ) -> Self {
        let no_supermajority_steps = steps.iter().filter(|s| s.no_supermajority).count() as u64;
        let detections = steps
            .iter()
            .filter_map(|s| s.detection.detected())
            .map(|d| d.len() as u64)
            .sum();
        let max_backlog = days.iter().map(|d| d.open_questions).max();
        Self {
            mode,
            n: profiles.len(),
            horizon,
            seed,
            answer_mode,
            schedules: profiles.iter().map(|p| p.schedule.clone()).collect(),
            diagonal_is_self_knowledge: true,
            warnings: crate::protocol::cheat_mass_warning(profiles)
                .into_iter()
                .collect(),
            no_supermajority_steps,
            detections,
            max_backlog,
            steps,
            days,
            final_beliefs,
        }
    }
}
