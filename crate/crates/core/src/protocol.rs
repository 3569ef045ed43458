//! Synchronous cheater protocol.
//!
//! Every day all `n` processes answer the same binary question. If strictly
//! more than two thirds agree, that answer is taken as the common answer and
//! every process that disagreed is detected. Detections are gossiped to all
//! processes within the same day.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedule::CheatSchedule;
use crate::seed::{stream, Seed};
use crate::trace::{SimulationTrace, StepRecord, TraceMode};

/// Identifier of a process, counted from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ProcessId(u32);

impl ProcessId {
    pub fn new(id: u32) -> Option<Self> {
        (id >= 1).then_some(Self(id))
    }

    /// Id of the process stored at 0-based `index`.
    pub fn from_index(index: usize) -> Self {
        Self(u32::try_from(index).expect("process index fits in u32") + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessProfile<T> {
    pub id: ProcessId,
    pub schedule: CheatSchedule<T>,
}

/// Assigns ids `1..=n` to the schedules in order.
pub fn profiles_from_schedules<T: Scalar>(
    schedules: impl IntoIterator<Item = CheatSchedule<T>>,
) -> Result<Vec<ProcessProfile<T>>> {
    let profiles: Vec<_> = schedules
        .into_iter()
        .enumerate()
        .map(|(i, schedule)| ProcessProfile {
            id: ProcessId::from_index(i),
            schedule,
        })
        .collect();
    if profiles.is_empty() {
        return Err(Error::NoProcesses);
    }
    Ok(profiles)
}

pub(crate) fn validate_profiles<T>(profiles: &[ProcessProfile<T>]) -> Result<()> {
    if profiles.is_empty() {
        return Err(Error::NoProcesses);
    }
    for (position, p) in profiles.iter().enumerate() {
        if p.id.index() != position {
            return Err(Error::ProcessIds {
                position,
                found: p.id.get(),
            });
        }
    }
    Ok(())
}

/// Answers of all `n` processes to one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnswerVector {
    pub question: u64,
    answers: Vec<u8>,
    pub correct: u8,
}

impl AnswerVector {
    pub fn new(question: u64, answers: Vec<u8>, correct: u8) -> Result<Self> {
        if let Some((position, &value)) = answers.iter().enumerate().find(|(_, &a)| a > 1) {
            return Err(Error::NotBinary { position, value });
        }
        if correct > 1 {
            return Err(Error::NotBinary {
                position: answers.len(),
                value: correct,
            });
        }
        if answers.is_empty() {
            return Err(Error::NoProcesses);
        }
        Ok(Self {
            question,
            answers,
            correct,
        })
    }

    pub fn answers(&self) -> &[u8] {
        &self.answers
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.answers.iter().filter(|&&a| a == 1).count()
    }

    /// Processes whose answer differs from the correct one.
    pub fn wrong(&self) -> BTreeSet<ProcessId> {
        self.answers
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != self.correct)
            .map(|(i, _)| ProcessId::from_index(i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommonAnswer {
    Supermajority(u8),
    NoSupermajority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    Detected(BTreeSet<ProcessId>),
    NoDetection,
}

impl Detection {
    pub fn detected(&self) -> Option<&BTreeSet<ProcessId>> {
        match self {
            Self::Detected(set) => Some(set),
            Self::NoDetection => None,
        }
    }
}

/// What one observer knows: each detected target with the step it was first
/// detected on. Entries are never removed or changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BeliefState {
    pub observer: ProcessId,
    known_cheaters: BTreeMap<ProcessId, u64>,
}

impl BeliefState {
    pub fn new(observer: ProcessId) -> Self {
        Self {
            observer,
            known_cheaters: BTreeMap::new(),
        }
    }

    /// Records `target` as detected at `step`; returns whether it was new.
    pub fn learn(&mut self, target: ProcessId, step: u64) -> bool {
        match self.known_cheaters.entry(target) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(step);
                true
            }
            std::collections::btree_map::Entry::Occupied(_) => false,
        }
    }

    pub fn first_detection(&self, target: ProcessId) -> Option<u64> {
        self.known_cheaters.get(&target).copied()
    }

    pub fn knows(&self, target: ProcessId) -> bool {
        self.known_cheaters.contains_key(&target)
    }

    /// Whether `target` had been detected by the end of `step`.
    pub fn knew_by(&self, target: ProcessId, step: u64) -> bool {
        self.first_detection(target).is_some_and(|s| s <= step)
    }

    pub fn known_cheaters(&self) -> &BTreeMap<ProcessId, u64> {
        &self.known_cheaters
    }

    pub fn len(&self) -> usize {
        self.known_cheaters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known_cheaters.is_empty()
    }
}

pub fn fresh_beliefs(n: usize) -> Vec<BeliefState> {
    (0..n)
        .map(|i| BeliefState::new(ProcessId::from_index(i)))
        .collect()
}

/// Bernoulli draw: does the process cheat on `step`?
pub fn cheats_this_step<T: Scalar, R: Rng + ?Sized>(
    profile: &ProcessProfile<T>,
    step: u64,
    rng: &mut R,
) -> bool {
    let p = profile.schedule.probability_at(step).value().to_f64_lossy();
    rng.random_bool(p)
}

pub(crate) fn cheat_seed(run: Seed, process: ProcessId, keys: &[u64]) -> Seed {
    run.derive_path(&[stream::CHEAT, u64::from(process.get())])
        .derive_path(keys)
}

pub(crate) fn draw_answer<T: Scalar>(
    profile: &ProcessProfile<T>,
    prob_step: u64,
    correct: u8,
    seed: Seed,
) -> u8 {
    if matches!(profile.schedule, CheatSchedule::Constant { probability } if probability.is_honest())
    {
        return correct;
    }
    if cheats_this_step(profile, prob_step, &mut seed.rng()) {
        1 - correct
    } else {
        correct
    }
}

/// Answers of every process on `step`. Each process draws from its own
/// stream keyed by `(seed, process, step)`.
pub fn draw_answers<T: Scalar>(
    profiles: &[ProcessProfile<T>],
    step: u64,
    correct: u8,
    seed: Seed,
) -> AnswerVector {
    let answers = profiles
        .iter()
        .map(|p| draw_answer(p, step, correct, cheat_seed(seed, p.id, &[step])))
        .collect();
    AnswerVector::new(step, answers, correct).expect("answers are binary and non-empty")
}

pub fn mean_answer(v: &AnswerVector) -> f64 {
    v.ones() as f64 / v.len() as f64
}

/// Supermajority on 1 iff mean > 2/3, on 0 iff mean < 1/3. Compared in
/// integers so the boundaries 1/3 and 2/3 are exact.
pub fn common_answer(v: &AnswerVector) -> CommonAnswer {
    let n = v.len();
    let ones = v.ones();
    if 3 * ones > 2 * n {
        CommonAnswer::Supermajority(1)
    } else if 3 * ones < n {
        CommonAnswer::Supermajority(0)
    } else {
        CommonAnswer::NoSupermajority
    }
}

/// Processes that disagree with the supermajority answer, i.e. those with
/// `|a_i - mean| > 2/3`.
pub fn detect_cheaters(v: &AnswerVector) -> Detection {
    match common_answer(v) {
        CommonAnswer::Supermajority(c) => Detection::Detected(
            v.answers()
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != c)
                .map(|(i, _)| ProcessId::from_index(i))
                .collect(),
        ),
        CommonAnswer::NoSupermajority => Detection::NoDetection,
    }
}

/// Broadcasts `detected` to every observer. Returns the targets that were new
/// to the observers (all observers share the same knowledge, so this is the
/// same for each) and the number of observer/target pairs added.
pub fn gossip_update(
    beliefs: &mut [BeliefState],
    detected: &BTreeSet<ProcessId>,
    step: u64,
) -> (Vec<ProcessId>, usize) {
    let mut newly_known = BTreeSet::new();
    let mut deliveries = 0;
    for b in beliefs.iter_mut() {
        for &target in detected {
            if b.learn(target, step) {
                newly_known.insert(target);
                deliveries += 1;
            }
        }
    }
    (newly_known.into_iter().collect(), deliveries)
}

/// Where the correct answer of each question comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerMode {
    /// Uniform over {0, 1}, drawn from the run seed per question.
    #[default]
    Sampled,
    Fixed(u8),
}

impl AnswerMode {
    pub(crate) fn correct_answer(self, seed: Seed, question: u64) -> u8 {
        match self {
            Self::Sampled => u8::from(
                seed.derive_path(&[stream::TRUTH, question])
                    .rng()
                    .random::<bool>(),
            ),
            Self::Fixed(a) => a & 1,
        }
    }
}

/// Detects on a completed answer vector and checks the soundness invariants.
pub(crate) fn detect_and_check(answers: &AnswerVector) -> (CommonAnswer, Detection) {
    let outcome = common_answer(answers);
    let detection = detect_cheaters(answers);
    let wrong = answers.wrong();
    if 3 * wrong.len() < answers.len() {
        assert_eq!(
            outcome,
            CommonAnswer::Supermajority(answers.correct),
            "fewer than n/3 wrong answers must leave a correct supermajority"
        );
        assert_eq!(detection.detected(), Some(&wrong));
    }
    (outcome, detection)
}

/// Warning text when the expected number of simultaneous wrong answers
/// reaches n/3 on some step, so supermajority detection may break down.
pub fn cheat_mass_warning<T: Scalar>(profiles: &[ProcessProfile<T>]) -> Option<String> {
    let n = profiles.len() as f64;
    let horizon = profiles
        .iter()
        .map(|p| p.schedule.period())
        .max()
        .unwrap_or(1)
        .min(10_000) as u64;
    (1..=horizon).find_map(|step| {
        let mass: f64 = profiles
            .iter()
            .map(|p| p.schedule.probability_at(step).value().to_f64_lossy())
            .sum();
        (mass >= n / 3.0).then(|| {
            format!(
                "expected wrong answers on step {step} is {mass:.3} >= n/3 = {:.3}; \
                 supermajority detection may fail",
                n / 3.0
            )
        })
    })
}

/// Step-by-step synchronous protocol.
pub struct SyncProtocol<'a, T> {
    profiles: &'a [ProcessProfile<T>],
    seed: Seed,
    mode: AnswerMode,
    day: u64,
    beliefs: Vec<BeliefState>,
}

impl<'a, T: Scalar> SyncProtocol<'a, T> {
    pub fn new(profiles: &'a [ProcessProfile<T>], seed: Seed, mode: AnswerMode) -> Result<Self> {
        validate_profiles(profiles)?;
        Ok(Self {
            profiles,
            seed,
            mode,
            day: 0,
            beliefs: fresh_beliefs(profiles.len()),
        })
    }

    /// Runs one day: draw, detect, gossip.
    pub fn step(&mut self) -> StepRecord {
        self.day += 1;
        let day = self.day;
        let correct = self.mode.correct_answer(self.seed, day);
        let answers = draw_answers(self.profiles, day, correct, self.seed);
        let (outcome, detection) = detect_and_check(&answers);
        let (newly_known, deliveries) = match detection.detected() {
            Some(set) => gossip_update(&mut self.beliefs, set, day),
            None => (Vec::new(), 0),
        };
        StepRecord {
            step: day,
            day,
            wrong: answers.wrong().into_iter().collect(),
            answers,
            no_supermajority: outcome == CommonAnswer::NoSupermajority,
            outcome,
            detection,
            newly_known,
            deliveries,
        }
    }

    pub fn day(&self) -> u64 {
        self.day
    }

    pub fn beliefs(&self) -> &[BeliefState] {
        &self.beliefs
    }

    pub fn into_beliefs(self) -> Vec<BeliefState> {
        self.beliefs
    }
}

pub fn run_synchronous<T: Scalar>(
    profiles: &[ProcessProfile<T>],
    days: u64,
    seed: Seed,
) -> Result<SimulationTrace<T>> {
    run_synchronous_with(profiles, days, seed, AnswerMode::Sampled)
}

pub fn run_synchronous_with<T: Scalar>(
    profiles: &[ProcessProfile<T>],
    days: u64,
    seed: Seed,
    mode: AnswerMode,
) -> Result<SimulationTrace<T>> {
    if days == 0 {
        return Err(Error::ZeroSteps);
    }
    let mut proto = SyncProtocol::new(profiles, seed, mode)?;
    let steps = (0..days).map(|_| proto.step()).collect();
    Ok(SimulationTrace::new(
        TraceMode::Synchronous,
        profiles,
        days,
        seed,
        mode,
        steps,
        Vec::new(),
        proto.into_beliefs(),
    ))
}
