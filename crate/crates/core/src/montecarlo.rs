//! Monte Carlo estimation of who-knows-whom matrices.
//!
//! Each trial runs one simulation with its own seed derived from the master
//! seed and the trial index. Per-trial counts are summed, so the result does
//! not depend on execution order or thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::certainty_varying;
use crate::asynchronous::{AsyncProtocol, GroupSchedule};
use crate::error::{Error, Result};
use crate::protocol::{validate_profiles, AnswerMode, BeliefState, ProcessProfile, SyncProtocol};
use crate::scalar::Scalar;
use crate::schedule::CheatSchedule;
use crate::seed::Seed;

/// Default absolute tolerance floor for comparisons.
pub const DEFAULT_TOLERANCE_FLOOR: f64 = 0.005;
/// Width of the binomial interval, in standard deviations.
pub const DEFAULT_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SimMode {
    Synchronous,
    Asynchronous { group: GroupSchedule },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialConfig<T> {
    pub mode: SimMode,
    pub profiles: Vec<ProcessProfile<T>>,
    /// Days (synchronous) or rounds (asynchronous) per trial.
    pub horizon: u64,
    pub trials: u64,
    pub seed: Seed,
    /// Sorted steps at which beliefs are sampled; each at most `horizon`.
    pub checkpoints: Vec<u64>,
    pub answer_mode: AnswerMode,
}

impl<T: Scalar> TrialConfig<T> {
    /// Config with a single checkpoint at the horizon.
    pub fn new(
        mode: SimMode,
        profiles: Vec<ProcessProfile<T>>,
        horizon: u64,
        trials: u64,
        seed: Seed,
    ) -> Result<Self> {
        let cfg = Self {
            mode,
            profiles,
            horizon,
            trials,
            seed,
            checkpoints: vec![horizon],
            answer_mode: AnswerMode::Sampled,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Result<Self> {
        self.checkpoints = checkpoints;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        validate_profiles(&self.profiles)?;
        if self.horizon == 0 {
            return Err(Error::ZeroSteps);
        }
        if self.trials == 0 {
            return Err(Error::ZeroTrials);
        }
        if let SimMode::Asynchronous { group } = &self.mode {
            group.validate(self.profiles.len())?;
        }
        if self.checkpoints.is_empty()
            || self.checkpoints[0] == 0
            || self.checkpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidCheckpoints);
        }
        if let Some(&last) = self.checkpoints.last() {
            if last > self.horizon {
                return Err(Error::CheckpointBeyondHorizon {
                    checkpoint: last,
                    horizon: self.horizon,
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.profiles.len()
    }

    pub fn schedules(&self) -> Vec<CheatSchedule<T>> {
        self.profiles.iter().map(|p| p.schedule.clone()).collect()
    }
}

/// Detection counts at one checkpoint: cell `(i, j)` counts trials in which
/// observer `i` knew target `j` by step `step`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalMatrix {
    pub n: usize,
    pub step: u64,
    pub trials: u64,
    counts: Vec<u64>,
}

impl EmpiricalMatrix {
    pub fn from_counts(n: usize, step: u64, trials: u64, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: counts.len(),
            });
        }
        assert!(counts.iter().all(|&c| c <= trials), "count exceeds trials");
        Ok(Self {
            n,
            step,
            trials,
            counts,
        })
    }

    /// Count at 0-based `(observer, target)`.
    pub fn count(&self, observer: usize, target: usize) -> u64 {
        self.counts[observer * self.n + target]
    }

    pub fn frequency(&self, observer: usize, target: usize) -> f64 {
        self.count(observer, target) as f64 / self.trials as f64
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.n)
    }

    pub fn is_column_homogeneous(&self) -> bool {
        let first = &self.counts[..self.n];
        self.rows().all(|r| r == first)
    }
}

/// Output of [`estimate_certainty`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Estimate {
    pub matrices: Vec<EmpiricalMatrix>,
    /// NoSupermajority steps within the horizon, summed over trials.
    pub no_supermajority_steps: u64,
}

impl Estimate {
    pub fn compare<T: Scalar>(
        &self,
        schedules: &[CheatSchedule<T>],
        tolerance_floor: f64,
    ) -> Result<Vec<ComparisonReport>> {
        self.matrices
            .iter()
            .map(|m| {
                let mut report = compare_to_analytic(m, schedules, tolerance_floor)?;
                report.no_supermajority_steps = self.no_supermajority_steps;
                Ok(report)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Tally {
    counts: Vec<u64>,
    no_supermajority: u64,
}

impl Tally {
    fn zero(len: usize) -> Self {
        Self {
            counts: vec![0; len],
            no_supermajority: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.no_supermajority += other.no_supermajority;
        self
    }
}

fn run_trial<T: Scalar>(cfg: &TrialConfig<T>, seed: Seed) -> (Vec<BeliefState>, u64) {
    match &cfg.mode {
        SimMode::Synchronous => {
            let mut proto =
                SyncProtocol::new(&cfg.profiles, seed, cfg.answer_mode).expect("validated config");
            let mut no_sup = 0;
            for _ in 0..cfg.horizon {
                no_sup += u64::from(proto.step().no_supermajority);
            }
            (proto.into_beliefs(), no_sup)
        }
        SimMode::Asynchronous { group } => {
            let mut proto = AsyncProtocol::new(&cfg.profiles, *group, seed, cfg.answer_mode)
                .expect("validated config");
            let mut no_sup = 0;
            while proto.rounds_completed() < cfg.horizon {
                let (_, events) = proto.advance_day();
                no_sup += events
                    .iter()
                    .filter(|e| e.step <= cfg.horizon && e.no_supermajority)
                    .count() as u64;
            }
            (proto.into_beliefs(), no_sup)
        }
    }
}

/// Runs `cfg.trials` independent simulations and counts, per checkpoint,
/// which observers knew which targets.
///
/// Beliefs keep the step of first detection, so a single run to the horizon
/// yields every checkpoint.
pub fn estimate_certainty<T: Scalar>(cfg: &TrialConfig<T>) -> Result<Estimate> {
    cfg.validate()?;
    let n = cfg.n();
    let cells = n * n;
    let len = cells * cfg.checkpoints.len();
    let tally = (0..cfg.trials)
        .into_par_iter()
        .fold(
            || Tally::zero(len),
            |mut acc, t| {
                let (beliefs, no_sup) = run_trial(cfg, cfg.seed.trial(t));
                for (c, &step) in cfg.checkpoints.iter().enumerate() {
                    for b in &beliefs {
                        for (&target, &first) in b.known_cheaters() {
                            if first <= step {
                                acc.counts[c * cells + b.observer.index() * n + target.index()] +=
                                    1;
                            }
                        }
                    }
                }
                acc.no_supermajority += no_sup;
                acc
            },
        )
        .reduce(|| Tally::zero(len), Tally::merge);

    let matrices = cfg
        .checkpoints
        .iter()
        .enumerate()
        .map(|(c, &step)| {
            EmpiricalMatrix::from_counts(
                n,
                step,
                cfg.trials,
                tally.counts[c * cells..(c + 1) * cells].to_vec(),
            )
        })
        .collect::<Result<_>>()?;
    Ok(Estimate {
        matrices,
        no_supermajority_steps: tally.no_supermajority,
    })
}

/// `sigmas * sqrt(p_hat (1 - p_hat) / trials)`.
pub fn binomial_halfwidth(p_hat: f64, trials: u64, sigmas: f64) -> f64 {
    assert!(trials >= 1, "at least one trial");
    sigmas * (p_hat * (1.0 - p_hat) / trials as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    /// 1-based process ids.
    pub observer: u32,
    pub target: u32,
    pub diagonal: bool,
    pub empirical: f64,
    pub analytic: f64,
    pub deviation: f64,
    pub half_width: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub step: u64,
    pub trials: u64,
    pub sigmas: f64,
    pub tolerance_floor: f64,
    /// Aggregates below cover off-diagonal cells only.
    pub max_deviation: f64,
    pub fail_count: usize,
    pub pass_rate: f64,
    pub diagonal_max_deviation: f64,
    pub diagonal_fail_count: usize,
    pub no_supermajority_steps: u64,
    pub cells: Vec<CellComparison>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.fail_count == 0
    }
}

/// Asynchronous draws use the schedule at the day an answer is written, while
/// the closed form is indexed by round. The two only agree when every
/// schedule is constant in time.
pub fn day_indexed_schedule_warning<T: Scalar>(config: &TrialConfig<T>) -> Option<String> {
    if !matches!(config.mode, SimMode::Asynchronous { .. }) {
        return None;
    }
    let varying: Vec<String> = config
        .profiles
        .iter()
        .filter(|p| match &p.schedule {
            CheatSchedule::Constant { .. } => false,
            CheatSchedule::Varying { probabilities, .. } => probabilities
                .iter()
                .any(|q| q.value() != probabilities[0].value()),
        })
        .map(|p| p.id.to_string())
        .collect();
    (!varying.is_empty()).then(|| {
        format!(
            "time-varying schedules ({}) draw by day in asynchronous mode; \
             the round-indexed closed form is not expected to match",
            varying.join(", ")
        )
    })
}

/// Compares every cell against `1 - prod (1 - eps_j(l))`. A cell passes when
/// its deviation is within `max(3 sigma, tolerance_floor)`.
pub fn compare_to_analytic<T: Scalar>(
    emp: &EmpiricalMatrix,
    schedules: &[CheatSchedule<T>],
    tolerance_floor: f64,
) -> Result<ComparisonReport> {
    if schedules.len() != emp.n {
        return Err(Error::DimensionMismatch {
            expected: emp.n,
            actual: schedules.len(),
        });
    }
    let analytic = schedules
        .iter()
        .map(|s| certainty_varying(s, emp.step).map(|c| c.value().to_f64_lossy()))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(emp.n * emp.n);
    for obs in 0..emp.n {
        for (tgt, &expected) in analytic.iter().enumerate() {
            let empirical = emp.frequency(obs, tgt);
            let deviation = (empirical - expected).abs();
            let half_width = binomial_halfwidth(empirical, emp.trials, DEFAULT_SIGMAS);
            let tolerance = half_width.max(tolerance_floor);
            cells.push(CellComparison {
                observer: obs as u32 + 1,
                target: tgt as u32 + 1,
                diagonal: obs == tgt,
                empirical,
                analytic: expected,
                deviation,
                half_width,
                tolerance,
                pass: deviation <= tolerance,
            });
        }
    }

    let (diag, off): (Vec<&CellComparison>, Vec<&CellComparison>) =
        cells.iter().partition(|c| c.diagonal);
    let max_dev = |v: &[&CellComparison]| v.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let fails = |v: &[&CellComparison]| v.iter().filter(|c| !c.pass).count();
    let fail_count = fails(&off);
    let pass_rate = if off.is_empty() {
        1.0
    } else {
        (off.len() - fail_count) as f64 / off.len() as f64
    };
    Ok(ComparisonReport {
        n: emp.n,
        step: emp.step,
        trials: emp.trials,
        sigmas: DEFAULT_SIGMAS,
        tolerance_floor,
        max_deviation: max_dev(&off),
        fail_count,
        pass_rate,
        diagonal_max_deviation: max_dev(&diag),
        diagonal_fail_count: fails(&diag),
        no_supermajority_steps: 0,
        cells,
    })
}
