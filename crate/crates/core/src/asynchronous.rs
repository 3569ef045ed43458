//! Asynchronous cheater protocol.
//!
//! A new question is issued every day, but only a group of `k` processes
//! shows up. Each of them answers the day's question together with every
//! earlier question it has not answered yet. A question whose answers are
//! complete (all `n` processes) closes a *round*; detection and gossip run on
//! the completed answer vector, and statistics are indexed by round.

use std::collections::BTreeMap;

use rand::seq::index;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{
    cheat_seed, detect_and_check, draw_answer, fresh_beliefs, gossip_update, validate_profiles,
    AnswerMode, AnswerVector, BeliefState, CommonAnswer, ProcessId, ProcessProfile,
};
use crate::scalar::Scalar;
use crate::seed::{stream, Seed};
use crate::trace::{DayRecord, SimulationTrace, StepRecord, TraceMode};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupPolicy {
    /// Processes take turns by index, `k` at a time, wrapping around.
    #[default]
    RoundRobinByIndex,
    /// `k` distinct processes sampled uniformly each day.
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroupSchedule {
    pub k: usize,
    pub policy: GroupPolicy,
}

impl GroupSchedule {
    pub fn new(k: usize, policy: GroupPolicy) -> Self {
        Self { k, policy }
    }

    pub fn round_robin(k: usize) -> Self {
        Self::new(k, GroupPolicy::RoundRobinByIndex)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            Err(Error::GroupSize { k: self.k, n })
        } else {
            Ok(())
        }
    }
}

/// The processes that work on `day`, in index order.
pub fn select_group(
    day: u64,
    n: usize,
    sched: &GroupSchedule,
    seed: Seed,
) -> Result<Vec<ProcessId>> {
    sched.validate(n)?;
    let k = sched.k;
    let mut group: Vec<ProcessId> = match sched.policy {
        GroupPolicy::RoundRobinByIndex => {
            let start = ((day - 1) % n as u64) * k as u64;
            (0..k as u64)
                .map(|t| ProcessId::from_index(((start + t) % n as u64) as usize))
                .collect()
        }
        GroupPolicy::SeededRandom => {
            let mut rng = seed.derive_path(&[stream::GROUP, day]).rng();
            index::sample(&mut rng, n, k)
                .into_iter()
                .map(ProcessId::from_index)
                .collect()
        }
    };
    group.sort_unstable();
    Ok(group)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionEntry {
    pub question: u64,
    pub issue_day: u64,
    pub correct: u8,
    pub answers: BTreeMap<ProcessId, u8>,
    pub completion_day: Option<u64>,
}

/// Open questions and their partial answers. Questions are identified by
/// their issue day.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuestionLedger {
    n: usize,
    open: BTreeMap<u64, QuestionEntry>,
    completed: Vec<QuestionEntry>,
    next_round: u64,
}

impl QuestionLedger {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            open: BTreeMap::new(),
            completed: Vec::new(),
            next_round: 1,
        }
    }

    pub fn issue(&mut self, question: u64, day: u64, correct: u8) {
        let prev = self.open.insert(
            question,
            QuestionEntry {
                question,
                issue_day: day,
                correct,
                answers: BTreeMap::new(),
                completion_day: None,
            },
        );
        assert!(prev.is_none(), "question {question} issued twice");
    }

    /// Records one answer.
    ///
    /// # Panics
    ///
    /// Panics if the process already answered this question.
    pub fn record(&mut self, question: u64, process: ProcessId, answer: u8) {
        let entry = self.open.get_mut(&question).expect("question is open");
        let prev = entry.answers.insert(process, answer);
        assert!(
            prev.is_none(),
            "{process} answered question {question} twice"
        );
    }

    pub fn open_questions(&self) -> usize {
        self.open.len()
    }

    pub fn open(&self) -> impl Iterator<Item = &QuestionEntry> {
        self.open.values()
    }

    pub fn completed(&self) -> &[QuestionEntry] {
        &self.completed
    }

    /// Open questions `process` has not answered, in issue order.
    pub fn backlog(&self, process: ProcessId) -> Vec<(u64, u8)> {
        self.open
            .values()
            .filter(|q| !q.answers.contains_key(&process))
            .map(|q| (q.question, q.correct))
            .collect()
    }

    pub fn rounds_completed(&self) -> u64 {
        self.next_round - 1
    }
}

/// A completed round: the record's `step` is the round index.
pub type RoundEvent = StepRecord;

/// The group member `profile` answers every open question it has not yet
/// answered. Cheating follows the schedule at the current `day`. Returns the
/// number of answers written.
pub fn answer_backlog<T: Scalar>(
    profile: &ProcessProfile<T>,
    ledger: &mut QuestionLedger,
    day: u64,
    seed: Seed,
) -> usize {
    let backlog = ledger.backlog(profile.id);
    for &(question, correct) in &backlog {
        let answer = draw_answer(
            profile,
            day,
            correct,
            cheat_seed(seed, profile.id, &[question, day]),
        );
        ledger.record(question, profile.id, answer);
    }
    backlog.len()
}

/// Closes every question whose answers just became complete, in issue order,
/// detects cheaters on it and gossips the result at `day`.
pub fn completed_rounds(
    ledger: &mut QuestionLedger,
    day: u64,
    beliefs: &mut [BeliefState],
) -> Vec<RoundEvent> {
    let n = ledger.n;
    let ready: Vec<u64> = ledger
        .open
        .values()
        .filter(|q| q.answers.len() == n)
        .map(|q| q.question)
        .collect();
    let mut events = Vec::with_capacity(ready.len());
    for question in ready {
        let mut entry = ledger
            .open
            .remove(&question)
            .expect("ready question is open");
        assert!(
            ledger.open.keys().all(|&q| q > question),
            "rounds must complete in question-issue order"
        );
        entry.completion_day = Some(day);
        let round = ledger.next_round;
        ledger.next_round += 1;

        let answers = AnswerVector::new(
            question,
            entry.answers.values().copied().collect(),
            entry.correct,
        )
        .expect("ledger answers are binary");
        let (outcome, detection) = detect_and_check(&answers);
        let (newly_known, deliveries) = match detection.detected() {
            Some(set) => gossip_update(beliefs, set, round),
            None => (Vec::new(), 0),
        };
        events.push(StepRecord {
            step: round,
            day,
            wrong: answers.wrong().into_iter().collect(),
            answers,
            no_supermajority: outcome == CommonAnswer::NoSupermajority,
            outcome,
            detection,
            newly_known,
            deliveries,
        });
        ledger.completed.push(entry);
    }
    events
}

/// Day-by-day asynchronous protocol. Beliefs record the round index of the
/// first detection.
pub struct AsyncProtocol<'a, T> {
    profiles: &'a [ProcessProfile<T>],
    group: GroupSchedule,
    seed: Seed,
    mode: AnswerMode,
    day: u64,
    ledger: QuestionLedger,
    beliefs: Vec<BeliefState>,
}

impl<'a, T: Scalar> AsyncProtocol<'a, T> {
    pub fn new(
        profiles: &'a [ProcessProfile<T>],
        group: GroupSchedule,
        seed: Seed,
        mode: AnswerMode,
    ) -> Result<Self> {
        validate_profiles(profiles)?;
        group.validate(profiles.len())?;
        Ok(Self {
            profiles,
            group,
            seed,
            mode,
            day: 0,
            ledger: QuestionLedger::new(profiles.len()),
            beliefs: fresh_beliefs(profiles.len()),
        })
    }

    /// Runs one day: issue, select, answer backlogs, close rounds.
    pub fn advance_day(&mut self) -> (DayRecord, Vec<RoundEvent>) {
        self.day += 1;
        let day = self.day;
        self.ledger
            .issue(day, day, self.mode.correct_answer(self.seed, day));
        let group = select_group(day, self.profiles.len(), &self.group, self.seed)
            .expect("group size validated at construction");
        let answers_written = group
            .iter()
            .map(|id| answer_backlog(&self.profiles[id.index()], &mut self.ledger, day, self.seed))
            .sum();
        let events = completed_rounds(&mut self.ledger, day, &mut self.beliefs);
        let record = DayRecord {
            day,
            group,
            answers_written,
            completed_rounds: events.iter().map(|e| e.step).collect(),
            open_questions: self.ledger.open_questions(),
        };
        (record, events)
    }

    pub fn day(&self) -> u64 {
        self.day
    }

    pub fn rounds_completed(&self) -> u64 {
        self.ledger.rounds_completed()
    }

    pub fn ledger(&self) -> &QuestionLedger {
        &self.ledger
    }

    pub fn beliefs(&self) -> &[BeliefState] {
        &self.beliefs
    }

    pub fn into_beliefs(self) -> Vec<BeliefState> {
        self.beliefs
    }
}

pub fn run_asynchronous<T: Scalar>(
    profiles: &[ProcessProfile<T>],
    group: GroupSchedule,
    days: u64,
    seed: Seed,
) -> Result<SimulationTrace<T>> {
    run_asynchronous_with(profiles, group, days, seed, AnswerMode::Sampled)
}

pub fn run_asynchronous_with<T: Scalar>(
    profiles: &[ProcessProfile<T>],
    group: GroupSchedule,
    days: u64,
    seed: Seed,
    mode: AnswerMode,
) -> Result<SimulationTrace<T>> {
    if days == 0 {
        return Err(Error::ZeroSteps);
    }
    let mut proto = AsyncProtocol::new(profiles, group, seed, mode)?;
    let mut day_records = Vec::with_capacity(days as usize);
    let mut steps = Vec::new();
    for _ in 0..days {
        let (record, events) = proto.advance_day();
        day_records.push(record);
        steps.extend(events);
    }
    Ok(SimulationTrace::new(
        TraceMode::Asynchronous {
            group_size: group.k,
            policy: group.policy,
        },
        profiles,
        days,
        seed,
        mode,
        steps,
        day_records,
        proto.into_beliefs(),
    ))
}
